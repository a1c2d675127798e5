//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(m + m*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
///
/// The input is symmetrized first, so small float drift away from
/// Hermiticity is harmless.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_apply(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigh(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    &scaled * vectors.adjoint()
}

/// `exp(t * h)` for Hermitian `h`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_apply(h, |x| (t * x).exp())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Removes the trace part: `m - tr(m)/d * I`.
pub fn traceless(m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    let shift = m.trace() / d as f64;
    let mut out = m.clone();
    for i in 0..d {
        out[(i, i)] -= shift;
    }
    out
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE-like), scaled.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    hermitian_part(&g).scale(scale)
}

/// Random traceless Hermitian matrix, so that `exp` of it has determinant one.
pub fn random_traceless_hermitian<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> CMatrix {
    traceless(&random_hermitian(d, scale, rng))
}

/// Shannon entropy in bits of a probability vector; entries below `1e-14`
/// contribute nothing.
pub fn shannon_bits(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 1e-14)
        .map(|&x| -x * x.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> f64 {
    shannon_bits(&[x, 1.0 - x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exp_of_traceless_has_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_traceless_hermitian(3, 0.7, &mut rng);
        let g = expm_hermitian(&h, 1.0);
        assert!((g.determinant() - ONE).norm() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(4, 1.0, &mut rng);
        let back = hermitian_apply(&h, |x| x);
        assert!((back - &h).norm() < 1e-12);
        let (vals, _) = hermitian_eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn entropy_conventions() {
        assert_eq!(shannon_bits(&[1.0, 0.0]), 0.0);
        assert!((shannon_bits(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.25) - 0.811_278_124_459_132_8).abs() < 1e-12);
    }
}
