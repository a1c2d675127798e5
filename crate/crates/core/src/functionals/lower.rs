use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::options::Options;
use crate::bipartition::BipartitionDistribution;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::marginal::{flatten_side, marginal_side, unflatten_side, weighted_entropy};
use crate::tensor::Tensor;

/// Log of the norm below which a determinant-one orbit point counts as
/// collapsed onto the null cone.
const COLLAPSE_LOG_NORM: f64 = -27.631_021_115_928_547; // ln(1e-12)

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const RESTART_SCALE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingStatus {
    Converged,
    MaxIters,
    Collapsed,
}

/// Outcome of the orbit ascent for the lower functional.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    /// Weighted entropy of the final orbit point, a lower bound on `E_θ`.
    pub achieved_entropy: f64,
    /// Determinant-one local maps `A_j`; the witness is `(A_1 ⊗ … ⊗ A_k) t`.
    #[serde(serialize_with = "super::serialize_matrices")]
    pub final_maps: Vec<CMatrix>,
    /// Norm of the Riemannian gradient at the final point.
    pub moment_residual: f64,
    pub iterations: usize,
    pub status: ScalingStatus,
    /// Entropy at the unscaled input.
    pub start_entropy: f64,
    /// Which start produced the result: 0 is the identity, `i > 0` random start `i`.
    pub start: usize,
}

impl ScalingReport {
    pub fn f_value(&self) -> f64 {
        self.achieved_entropy.exp2()
    }
}

/// `H_θ` of the normalized tensor.
pub fn lower_objective(t: &Tensor, theta: &BipartitionDistribution) -> Result<f64> {
    weighted_entropy(t, theta)
}

/// Riemannian gradient of `H_θ` at `t`: one traceless Hermitian matrix per
/// party, such that `d/dη H_θ(⊗exp(η X_j) t)|₀ = Σ_j tr(X_j G_j)` for
/// Hermitian `X_j`.
pub fn lower_gradient(t: &Tensor, theta: &BipartitionDistribution) -> Result<Vec<CMatrix>> {
    t.require_nonzero()?;
    if t.parties() != theta.parties() {
        return Err(Error::PartyMismatch { left: t.parties(), right: theta.parties() });
    }
    let phi = t.normalized()?;
    let shape = phi.shape().to_vec();
    // G = Σ_b θ_b (-(L⁺_b ⊗ I) φ - H_b φ), with L⁺ the pseudo-log of ρ_b
    let mut g = vec![linalg::ZERO; phi.len()];
    for (b, &w) in theta.iter() {
        let side = b.smaller_side(&shape);
        let rho = marginal_side(&phi, side)?;
        let (vals, vecs) = linalg::hermitian_eigh(rho.matrix());
        let h = linalg::shannon_bits(&vals);
        let mut scaled = vecs.clone();
        for (j, &v) in vals.iter().enumerate() {
            let l = if v > 1e-14 { v.log2() } else { 0.0 };
            scaled.column_mut(j).scale_mut(l);
        }
        let log_rho = &scaled * vecs.adjoint();
        let m = flatten_side(&phi, side)?;
        let lm = unflatten_side(&(log_rho * m), &shape, side)?;
        for ((gi, li), pi) in g.iter_mut().zip(lm.data()).zip(phi.data()) {
            *gi -= (li + pi * h) * w;
        }
    }
    let g = Tensor::new(shape, g)?;
    let mut grads = Vec::with_capacity(phi.parties());
    for j in 0..phi.parties() {
        let pj = flatten_side(&phi, 1 << j)?;
        let gj = flatten_side(&g, 1 << j)?;
        let k = pj * gj.adjoint();
        grads.push(linalg::traceless(&(&k + k.adjoint())));
    }
    Ok(grads)
}

fn grad_norm(g: &[CMatrix]) -> f64 {
    g.iter().map(linalg::frobenius_sq).sum::<f64>().sqrt()
}

fn exp_maps(g: &[CMatrix], eta: f64) -> Vec<CMatrix> {
    g.iter().map(|x| linalg::expm_hermitian(x, eta)).collect()
}

struct Ascent {
    entropy: f64,
    maps: Vec<CMatrix>,
    residual: f64,
    iterations: usize,
    status: ScalingStatus,
}

/// Gradient ascent from `(⊗ maps) t`; `maps` must have determinant one.
fn ascend(t: &Tensor, theta: &BipartitionDistribution, mut maps: Vec<CMatrix>, opts: &Options) -> Result<Ascent> {
    let start = t.apply_local_maps(&maps)?;
    let mut log_norm = (start.norm() / t.norm()).ln();
    let mut phi = start.normalized()?;
    let mut f = lower_objective(&phi, theta)?;
    let mut eta: f64 = 1.0;
    let mut iterations = 0;
    loop {
        let g = lower_gradient(&phi, theta)?;
        let gn = grad_norm(&g);
        if gn < opts.tol {
            return Ok(Ascent { entropy: f, maps, residual: gn, iterations, status: ScalingStatus::Converged });
        }
        if log_norm < COLLAPSE_LOG_NORM {
            return Ok(Ascent { entropy: f, maps, residual: gn, iterations, status: ScalingStatus::Collapsed });
        }
        if iterations >= opts.max_iters {
            return Ok(Ascent { entropy: f, maps, residual: gn, iterations, status: ScalingStatus::MaxIters });
        }
        iterations += 1;
        eta = (eta * 2.0).min(1e3);
        let mut accepted = false;
        while eta > MIN_STEP {
            let step = exp_maps(&g, eta);
            let cand = phi.apply_local_maps(&step)?;
            let cand_norm = cand.norm();
            let cand = cand.scaled(1.0 / cand_norm);
            let fc = lower_objective(&cand, theta)?;
            if fc >= f + ARMIJO * eta * gn * gn {
                maps = maps.iter().zip(&step).map(|(a, s)| s * a).collect();
                log_norm += cand_norm.ln();
                phi = cand;
                f = fc;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // no ascent direction left at float resolution
            return Ok(Ascent { entropy: f, maps, residual: gn, iterations, status: ScalingStatus::Converged });
        }
    }
}

/// Local maximization of `H_θ` over the determinant-one local orbit of `t`,
/// from the identity plus `opts.restarts` seeded random starts; the best
/// result wins, ties going to the earliest start.
pub fn lower_local(t: &Tensor, theta: &BipartitionDistribution, opts: &Options) -> Result<ScalingReport> {
    t.require_nonzero()?;
    if t.parties() != theta.parties() {
        return Err(Error::PartyMismatch { left: t.parties(), right: theta.parties() });
    }
    let start_entropy = weighted_entropy(t, theta)?;
    let shape = t.shape().to_vec();
    let starts: Vec<Vec<CMatrix>> = (0..=opts.restarts)
        .map(|i| {
            if i == 0 {
                shape.iter().map(|&d| CMatrix::identity(d, d)).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
                shape
                    .iter()
                    .map(|&d| linalg::expm_hermitian(&linalg::random_traceless_hermitian(d, RESTART_SCALE, &mut rng), 1.0))
                    .collect()
            }
        })
        .collect();
    let runs: Result<Vec<Ascent>> = starts.into_par_iter().map(|m| ascend(t, theta, m, opts)).collect();
    let runs = runs?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.entropy > runs[best].entropy {
            best = i;
        }
    }
    let r = runs.into_iter().nth(best).expect("at least one start");
    Ok(ScalingReport {
        achieved_entropy: r.entropy,
        final_maps: r.maps,
        moment_residual: r.residual,
        iterations: r.iterations,
        status: r.status,
        start_entropy,
        start: best,
    })
}
