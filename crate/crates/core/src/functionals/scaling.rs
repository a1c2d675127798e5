use serde::Serialize;

use super::lower::ScalingStatus;
use super::options::Options;
use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::marginal::marginal_side;
use crate::tensor::Tensor;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
/// Relative norm below which the orbit is taken to reach zero.
const INSTABILITY_FLOOR: f64 = 1e-12;

/// Per-party deviation of the singleton marginals from uniform.
#[derive(Clone, Debug)]
pub struct MomentMap {
    pub components: Vec<CMatrix>,
    /// Root-sum-square of the Frobenius norms.
    pub residual: f64,
}

/// `μ_j = ρ_j - I/d_j` for every party `j`.
pub fn moment_map(t: &Tensor) -> Result<MomentMap> {
    t.require_nonzero()?;
    let mut components = Vec::with_capacity(t.parties());
    for (j, &d) in t.shape().iter().enumerate() {
        let rho = marginal_side(t, 1 << j)?;
        let mut mu = rho.matrix().clone();
        for i in 0..d {
            mu[(i, i)] -= 1.0 / d as f64;
        }
        components.push(mu);
    }
    let residual = components.iter().map(linalg::frobenius_sq).sum::<f64>().sqrt();
    Ok(MomentMap { components, residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityReport {
    /// `inf ‖g·t‖` over determinant-one local maps; 0 when unstable.
    pub capacity: f64,
    #[serde(serialize_with = "super::serialize_matrices")]
    pub minimizing_maps: Vec<CMatrix>,
    pub moment_residual: f64,
    pub semistable: bool,
    pub iterations: usize,
    pub status: ScalingStatus,
    /// `‖g·t‖` at the last iterate (the collapse witness when unstable).
    pub final_norm: f64,
}

/// Minimizes `‖(g_1 ⊗ … ⊗ g_k) t‖` over determinant-one `g_j` by geodesic
/// descent along the moment map, with Armijo backtracking from the step
/// `1/(2 max_j d_j)`.
pub fn capacity(t: &Tensor, opts: &Options) -> Result<CapacityReport> {
    t.require_nonzero()?;
    let shape = t.shape().to_vec();
    let eta0 = 1.0 / (2.0 * *shape.iter().max().expect("nonempty shape") as f64);
    let norm0 = t.norm();
    let mut maps: Vec<CMatrix> = shape.iter().map(|&d| CMatrix::identity(d, d)).collect();
    let mut phi = t.clone();
    // log ‖φ‖²
    let mut f = 2.0 * norm0.ln();
    let mut iterations = 0;
    let status = loop {
        let mu = moment_map(&phi)?;
        if mu.residual < opts.tol {
            break ScalingStatus::Converged;
        }
        if f.exp().sqrt() < INSTABILITY_FLOOR * norm0 {
            break ScalingStatus::Collapsed;
        }
        if iterations >= opts.max_iters {
            break ScalingStatus::MaxIters;
        }
        iterations += 1;
        let slope = 2.0 * mu.residual * mu.residual;
        let mut eta = eta0;
        let mut moved = false;
        while eta > MIN_STEP {
            let step: Vec<CMatrix> = mu.components.iter().map(|m| linalg::expm_hermitian(m, -eta)).collect();
            let cand = phi.apply_local_maps(&step)?;
            let fc = 2.0 * cand.norm().ln();
            if fc <= f - ARMIJO * eta * slope {
                maps = maps.iter().zip(&step).map(|(a, s)| s * a).collect();
                phi = cand;
                f = fc;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            // the norm is flat to float precision here; fall back to the
            // residual as merit near the minimum
            let step: Vec<CMatrix> = mu.components.iter().map(|m| linalg::expm_hermitian(m, -eta0)).collect();
            let cand = phi.apply_local_maps(&step)?;
            if moment_map(&cand)?.residual >= mu.residual {
                break ScalingStatus::Converged;
            }
            maps = maps.iter().zip(&step).map(|(a, s)| s * a).collect();
            f = 2.0 * cand.norm().ln();
            phi = cand;
        }
    };
    let final_norm = phi.norm();
    let residual = moment_map(&phi)?.residual;
    let semistable = status != ScalingStatus::Collapsed;
    Ok(CapacityReport {
        capacity: if semistable { final_norm } else { 0.0 },
        minimizing_maps: maps,
        moment_residual: residual,
        semistable,
        iterations,
        status,
        final_norm,
    })
}
