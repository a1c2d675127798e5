//! Flattenings, marginals, entropies and flattening ranks.

use crate::bipartition::{full_mask, mask_parties, Bipartition, BipartitionDistribution};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::tensor::Tensor;

/// Default relative singular-value threshold for flattening ranks.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Positive semidefinite, trace-one Hermitian matrix (a marginal).
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-12), trace (1e-10) and eigenvalues (≥ -1e-10).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!("density operator must be square, got {}x{}", matrix.nrows(), matrix.ncols())));
        }
        if (&matrix - matrix.adjoint()).camax() > 1e-12 {
            return Err(Error::Parameter("density operator is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::Parameter(format!("density operator has trace {tr}")));
        }
        let rho = DensityOperator { matrix: linalg::hermitian_part(&matrix) };
        if rho.eigenvalues().iter().any(|&x| x < -1e-10) {
            return Err(Error::Parameter("density operator has a negative eigenvalue".into()));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        linalg::shannon_bits(&self.eigenvalues())
    }
}

/// Matrix from the legs in `side` (ascending) to the remaining legs
/// (ascending). `side` must be a nonempty proper subset of the legs.
pub fn flatten_side(t: &Tensor, side: u32) -> Result<CMatrix> {
    let k = t.parties();
    let full = full_mask(k);
    if side == 0 || side & !full != 0 || side == full {
        return Err(Error::Bipartition(format!("side mask {side:#b} is not a proper subset of {k} legs")));
    }
    let rows_legs = mask_parties(side);
    let cols_legs = mask_parties(full & !side);
    let order: Vec<usize> = rows_legs.iter().chain(&cols_legs).copied().collect();
    let rows: usize = rows_legs.iter().map(|&j| t.shape()[j]).product();
    Ok(t.permute_legs(&order)?.as_matrix(rows))
}

/// Flattening along the canonical side of `b`.
pub fn flatten(t: &Tensor, b: &Bipartition) -> Result<CMatrix> {
    check_parties(t, b)?;
    flatten_side(t, b.side())
}

/// Inverse of [`flatten_side`]: folds a `dim(side) x dim(rest)` matrix back
/// into a tensor of the given shape.
pub fn unflatten_side(m: &CMatrix, shape: &[usize], side: u32) -> Result<Tensor> {
    let k = shape.len();
    let rows_legs = mask_parties(side);
    let cols_legs = mask_parties(full_mask(k) & !side);
    let order: Vec<usize> = rows_legs.iter().chain(&cols_legs).copied().collect();
    let permuted_shape: Vec<usize> = order.iter().map(|&j| shape[j]).collect();
    let data: Vec<_> = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect();
    let permuted = Tensor::new(permuted_shape, data)?;
    let mut inverse = vec![0; k];
    for (pos, &leg) in order.iter().enumerate() {
        inverse[leg] = pos;
    }
    permuted.permute_legs(&inverse)
}

fn check_parties(t: &Tensor, b: &Bipartition) -> Result<()> {
    if t.parties() != b.parties() {
        return Err(Error::PartyMismatch { left: t.parties(), right: b.parties() });
    }
    Ok(())
}

/// `ψ_S ψ_S^* / ‖ψ‖²` for an arbitrary side mask.
pub fn marginal_side(t: &Tensor, side: u32) -> Result<DensityOperator> {
    t.require_nonzero()?;
    let m = flatten_side(t, side)?;
    let rho = (&m * m.adjoint()).unscale(t.norm_sqr());
    Ok(DensityOperator { matrix: linalg::hermitian_part(&rho) })
}

/// Marginal on the canonical side of `b`.
pub fn marginal(t: &Tensor, b: &Bipartition) -> Result<DensityOperator> {
    check_parties(t, b)?;
    marginal_side(t, b.side())
}

/// Marginal spectrum across `b`, computed on the smaller side (descending).
pub fn marginal_spectrum(t: &Tensor, b: &Bipartition) -> Result<Vec<f64>> {
    check_parties(t, b)?;
    Ok(marginal_side(t, b.smaller_side(t.shape()))?.eigenvalues())
}

/// `H_b(t)` in bits.
pub fn bipartition_entropy(t: &Tensor, b: &Bipartition) -> Result<f64> {
    Ok(linalg::shannon_bits(&marginal_spectrum(t, b)?))
}

/// `Σ_b θ_b H_b(t)` in bits.
pub fn weighted_entropy(t: &Tensor, theta: &BipartitionDistribution) -> Result<f64> {
    if t.parties() != theta.parties() {
        return Err(Error::PartyMismatch { left: t.parties(), right: theta.parties() });
    }
    t.require_nonzero()?;
    let mut h = 0.0;
    for (b, w) in theta.iter() {
        h += w * bipartition_entropy(t, b)?;
    }
    Ok(h)
}

/// Number of singular values of the flattening above `tol * σ_max`.
pub fn flattening_rank(t: &Tensor, b: &Bipartition, tol: f64) -> Result<usize> {
    check_parties(t, b)?;
    t.require_nonzero()?;
    let s = linalg::singular_values(&flatten(t, b)?);
    let cut = tol * s[0];
    Ok(s.iter().filter(|&&x| x > cut).count())
}
