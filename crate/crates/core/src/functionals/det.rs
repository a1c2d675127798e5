use super::options::Options;
use super::scaling::capacity;
use crate::bipartition::Bipartition;
use crate::error::{Error, Result};
use crate::linalg::shannon_bits;
use crate::marginal::flatten;
use crate::tensor::Tensor;

/// `|det t_{S|S̄}|² / cap(t)^{2d}` for a balanced bipartition with side dimension `d`.
pub fn c_psi_with(t: &Tensor, b: &Bipartition, opts: &Options) -> Result<f64> {
    let m = flatten(t, b)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Unbalanced { left: m.nrows(), right: m.ncols() });
    }
    let cap = capacity(t, opts)?;
    if !cap.semistable {
        return Err(Error::Unstable);
    }
    let d = m.nrows() as f64;
    let det_sq = m.determinant().norm_sqr();
    if det_sq == 0.0 {
        return Ok(0.0);
    }
    let denom = cap.capacity.powf(2.0 * d);
    if denom.is_normal() {
        Ok(det_sq / denom)
    } else {
        Ok((det_sq.ln() - 2.0 * d * cap.capacity.ln()).exp())
    }
}

pub fn c_psi(t: &Tensor, b: &Bipartition) -> Result<f64> {
    c_psi_with(t, b, &Options::default())
}

fn log_constraint(gamma: f64, k: f64) -> f64 {
    (k - 1.0) * (gamma / (k - 1.0)).ln() + (1.0 - gamma).ln()
}

/// Largest entropy (bits) of a `k`-outcome distribution whose product of
/// probabilities is at most `c`, with its maximizer.
///
/// For `c ≥ k^{-k}` the uniform distribution is feasible. Otherwise the
/// maximizer has `k - 1` equal entries `γ/(k-1)` and one entry `1 - γ`,
/// where `γ ∈ (1 - 1/k, 1)` solves the constraint with equality.
pub fn entropy_max_with_det(k: usize, c: f64) -> Result<(f64, Vec<f64>)> {
    if k < 2 {
        return Err(Error::Parameter(format!("k = {k} must be at least 2")));
    }
    if !(c > 0.0) {
        return Err(Error::Parameter(format!("c = {c} must be positive")));
    }
    let kf = k as f64;
    let threshold = kf.powi(-(k as i32));
    let uniform = if threshold > 0.0 { c >= threshold } else { c.ln() >= -kf * kf.ln() };
    if uniform {
        return Ok((kf.log2(), vec![1.0 / kf; k]));
    }
    let target = c.ln();
    let (mut lo, mut hi) = (1.0 - 1.0 / kf, 1.0);
    // the constraint is strictly decreasing in γ on this interval
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_constraint(mid, kf) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // hi always satisfies the constraint
    let gamma = hi;
    let mut p = vec![gamma / (kf - 1.0); k - 1];
    p.push(1.0 - gamma);
    Ok((shannon_bits(&p), p))
}

/// Independent grid-and-zoom search for [`entropy_max_with_det`], `k ≤ 4`.
///
/// The first `k - 2` coordinates are scanned on a grid; the last two split
/// the remaining mass as evenly as the product constraint allows (the
/// smaller root of a quadratic). The best cell is then refined on
/// successively finer grids. Returns the best entropy found.
pub fn entropy_max_with_det_oracle(k: usize, c: f64, grid: usize) -> Result<f64> {
    if !(2..=4).contains(&k) {
        return Err(Error::Parameter(format!("oracle supports 2 <= k <= 4, got {k}")));
    }
    if !(1..=200).contains(&grid) || !(c > 0.0) {
        return Err(Error::Parameter(format!("grid {grid} must be in 1..=200 and c = {c} positive")));
    }
    // entropy of (q, x, r - x) with x(r - x) ≤ c / Π q and x ≤ r - x
    let eval = |q: &[f64]| -> Option<f64> {
        let s: f64 = q.iter().sum();
        if q.iter().any(|&v| v <= 0.0) || s >= 1.0 {
            return None;
        }
        let r = 1.0 - s;
        let budget = c / q.iter().product::<f64>();
        let x = if r * r / 4.0 <= budget { r / 2.0 } else { (r - (r * r - 4.0 * budget).sqrt()) / 2.0 };
        let mut p = q.to_vec();
        p.push(x);
        p.push(r - x);
        Some(shannon_bits(&p))
    };
    let free = k - 2;
    if free == 0 {
        return Ok(eval(&[]).expect("two-outcome case"));
    }
    let mut center = vec![0.5; free];
    let mut width = 1.0;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..8 {
        let mut best_point = center.clone();
        let mut idx = vec![0usize; free];
        loop {
            let q: Vec<f64> =
                idx.iter().zip(&center).map(|(&i, &c0)| c0 - width / 2.0 + width * (i as f64 + 0.5) / grid as f64).collect();
            if let Some(h) = eval(&q) {
                if h > best {
                    best = h;
                    best_point = q;
                }
            }
            let mut j = 0;
            while j < free {
                idx[j] += 1;
                if idx[j] < grid {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == free {
                break;
            }
        }
        center = best_point;
        width *= 4.0 / grid as f64;
    }
    Ok(best)
}

/// Upper bound `S_d(c_ψ)` on the single-bipartition lower functional across
/// a balanced `b`. A vanishing determinant gives the `γ → 1` limit `log₂(d-1)`.
pub fn det_bound_with(t: &Tensor, b: &Bipartition, opts: &Options) -> Result<f64> {
    let c = c_psi_with(t, b, opts)?;
    let d = flatten(t, b)?.nrows();
    if c == 0.0 {
        return Ok(((d - 1) as f64).log2());
    }
    Ok(entropy_max_with_det(d, c)?.0)
}

pub fn det_bound(t: &Tensor, b: &Bipartition) -> Result<f64> {
    det_bound_with(t, b, &Options::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::linalg::binary_entropy;

    fn ab() -> Bipartition {
        "AB|CD".parse().unwrap()
    }

    #[test]
    fn closed_form_regimes() {
        let (v, p) = entropy_max_with_det(2, 0.25).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(p, vec![0.5, 0.5]);
        let (v, p) = entropy_max_with_det(4, 1.0 / 324.0).unwrap();
        assert!((v - 1.93).abs() < 0.01, "{v}");
        assert!((1.0 - p[3] - 0.876).abs() < 1e-3);
        let prod: f64 = p.iter().product();
        assert!((prod - 1.0 / 324.0).abs() < 1e-15);
        let (v, _) = entropy_max_with_det(4, 1e-300).unwrap();
        assert!((v - 3f64.log2()).abs() < 1e-6);
        assert!(entropy_max_with_det(4, 0.0).is_err());
        assert!(entropy_max_with_det(1, 0.1).is_err());
    }

    #[test]
    fn oracle_agrees_for_two_outcomes() {
        for c in [0.01, 0.1, 0.2] {
            // p(1-p) = c by hand
            let p = (1.0 - (1.0 - 4.0 * c as f64).sqrt()) / 2.0;
            let o = entropy_max_with_det_oracle(2, c, 10).unwrap();
            assert!((o - binary_entropy(p)).abs() < 1e-12);
            assert!((entropy_max_with_det(2, c).unwrap().0 - o).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_agrees_for_four_outcomes() {
        for c in [1e-4, 1e-3, 1.0 / 300.0] {
            let exact = entropy_max_with_det(4, c).unwrap().0;
            let o = entropy_max_with_det_oracle(4, c, 200).unwrap();
            assert!((exact - o).abs() < 1e-3 && o <= exact + 1e-12, "{exact} {o}");
        }
        assert!((entropy_max_with_det_oracle(3, 0.1, 50).unwrap() - 3f64.log2()).abs() < 1e-3);
    }

    #[test]
    fn c_psi_examples() {
        let c = c_psi(&corpus::s_p(0.5).unwrap(), &ab()).unwrap();
        assert!((c - 1.0 / 256.0).abs() < 1e-15);
        let c = c_psi(&corpus::s_p(1.0 / 3.0).unwrap(), &ab()).unwrap();
        assert!((c - 1.0 / 324.0).abs() < 1e-15);
        let g = 0.9;
        let c = c_psi(&corpus::q_gamma(g).unwrap(), &ab()).unwrap();
        assert!((c - (1.0 - g) * (g / 3.0f64).powi(3)).abs() < 1e-15);
        assert_eq!(c_psi(&corpus::w_state(4).unwrap(), &ab()).err(), Some(Error::Unstable));
        let a: Bipartition = "A|BCD".parse().unwrap();
        assert_eq!(c_psi(&corpus::s_p(0.5).unwrap(), &a).err(), Some(Error::Unbalanced { left: 2, right: 8 }));
    }

    #[test]
    fn det_bound_examples() {
        let sp = det_bound(&corpus::s_p(1.0 / 3.0).unwrap(), &ab()).unwrap();
        assert!(sp < 2.0 && (sp - 1.93).abs() < 0.01);
        let q = det_bound(&corpus::q_gamma(1.0).unwrap(), &ab()).unwrap();
        assert!((q - 3f64.log2()).abs() < 1e-12);
        assert_eq!(det_bound(&corpus::s_p(0.5).unwrap(), &ab()).unwrap(), 2.0);
    }
}
