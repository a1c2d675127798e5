use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ClaimVerdict, Recorder};
use crate::bipartition::{Bipartition, BipartitionDistribution};
use crate::corpus::w_state;
use crate::error::{Error, Result};
use crate::functionals::{capacity, feasible_tuples, Options};
use crate::linalg::{binary_entropy, CMatrix, ONE, ZERO};
use crate::marginal::marginal_spectrum;
use crate::symmetric::Partition;
use crate::tensor::Tensor;

const FEASIBILITY_TOL: f64 = 1e-12;

/// Normalized second rows (or second eigenvalues) for the parties A, B, C, D
/// and the pair AB of the four-party W-state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct W4Point {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub z: f64,
}

impl W4Point {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, z: f64) -> Self {
        W4Point { alpha, beta, gamma, delta, z }
    }

    pub fn coords(&self) -> [f64; 5] {
        [self.alpha, self.beta, self.gamma, self.delta, self.z]
    }

    /// Bounds, pair differences, pair sums against `1 - z`, and total mass.
    pub fn is_feasible(&self, tol: f64) -> bool {
        let W4Point { alpha: a, beta: b, gamma: c, delta: d, z } = *self;
        self.coords().iter().all(|&x| (-tol..=0.5 + tol).contains(&x))
            && (a - b).abs() <= z + tol
            && (c - d).abs() <= z + tol
            && a + b <= 1.0 - z + tol
            && c + d <= 1.0 - z + tol
            && a + b + c + d <= 1.0 + tol
    }

    /// `θ_AB h(z) + Σ_j θ_j h(x_j)`; `θ` may only weight `AB|CD` and singletons.
    pub fn weighted_entropy(&self, theta: &BipartitionDistribution) -> Result<f64> {
        if theta.parties() != 4 {
            return Err(Error::PartyMismatch { left: theta.parties(), right: 4 });
        }
        let ab = Bipartition::from_mask(4, 0b0011)?;
        let mut total = 0.0;
        for (b, &w) in theta.iter() {
            let x = if *b == ab {
                self.z
            } else if b.is_singleton() {
                let j = [b.side(), b.complement()].into_iter().find(|m| m.count_ones() == 1).expect("singleton side");
                self.coords()[j.trailing_zeros() as usize]
            } else {
                return Err(Error::Distribution(format!("{b} is not AB|CD or a singleton")));
            };
            total += w * binary_entropy(x);
        }
        Ok(total)
    }

    /// Local maps `diag(1, √x_j)` taking `W_4` to a state whose marginals
    /// realize this point, valid when the four party coordinates sum to one.
    pub fn realization_maps(&self) -> Result<Vec<CMatrix>> {
        let s = self.alpha + self.beta + self.gamma + self.delta;
        if (s - 1.0).abs() > 1e-9 || self.coords()[..4].iter().any(|&x| x < 0.0) {
            return Err(Error::Parameter(format!("party coordinates must be nonnegative and sum to 1, got {s}")));
        }
        Ok(self.coords()[..4]
            .iter()
            .map(|&x| CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE * x.sqrt()]))
            .collect())
    }

    /// Second marginal eigenvalues of `t` in the same layout.
    pub fn of_tensor(t: &Tensor) -> Result<W4Point> {
        let second = |b: Bipartition| -> Result<f64> {
            let ev = marginal_spectrum(t, &b)?;
            Ok(ev.get(1).copied().unwrap_or(0.0))
        };
        Ok(W4Point {
            alpha: second(Bipartition::singleton(4, 0)?)?,
            beta: second(Bipartition::singleton(4, 1)?)?,
            gamma: second(Bipartition::singleton(4, 2)?)?,
            delta: second(Bipartition::singleton(4, 3)?)?,
            z: second(Bipartition::from_mask(4, 0b0011)?)?,
        })
    }
}

/// Moves a feasible point to one with total party mass one, without
/// decreasing any binary entropy: the lighter pair is raised first, the
/// heavier pair only up to one half, and `z` becomes the lighter pair sum.
pub fn w4_transform(x: &W4Point) -> Result<W4Point> {
    if !x.is_feasible(FEASIBILITY_TOL) {
        return Err(Error::Parameter(format!("infeasible point {x:?}")));
    }
    let sigma = x.alpha + x.beta + x.gamma + x.delta;
    if sigma >= 1.0 - FEASIBILITY_TOL {
        let z = (x.alpha + x.beta).min(x.gamma + x.delta);
        return Ok(W4Point { z, ..*x });
    }
    // (light1, light2, heavy1, heavy2) with the lighter pair first
    let swap = x.gamma + x.delta > x.alpha + x.beta;
    let (l1, l2, h1, h2) = if swap { (x.alpha, x.beta, x.gamma, x.delta) } else { (x.gamma, x.delta, x.alpha, x.beta) };
    let l1n = l1 + (0.5 - l1 - l2).min(1.0 - sigma);
    let h1n = h1 + (0.5 - h1 - h2).max(0.0);
    let z = l1n + l2;
    Ok(if swap {
        W4Point { alpha: l1n, beta: l2, gamma: h1n, delta: h2, z }
    } else {
        W4Point { alpha: h1n, beta: h2, gamma: l1n, delta: l2, z }
    })
}

fn second_row(p: &Partition) -> Option<usize> {
    (p.rows() <= 2).then(|| p.row(1))
}

/// Whether the normalized second rows of the diagrams for A, B, C, D and AB
/// satisfy the W-state inequalities. Diagrams with more than two rows fail.
pub fn w4_constraint_check(
    la: &Partition,
    lb: &Partition,
    lc: &Partition,
    ld: &Partition,
    lab: &Partition,
) -> Result<bool> {
    let n = la.n();
    for p in [lb, lc, ld, lab] {
        if p.n() != n {
            return Err(Error::SizeMismatch { left: n, right: p.n() });
        }
    }
    let rows: Option<Vec<usize>> = [la, lb, lc, ld, lab].iter().map(|p| second_row(p)).collect();
    let Some(r) = rows else { return Ok(false) };
    let [a, b, c, d, z] = [r[0], r[1], r[2], r[3], r[4]];
    // integer form: every normalized inequality multiplied by n
    Ok(2 * a.max(b).max(c).max(d).max(z) <= n
        && a.abs_diff(b) <= z
        && c.abs_diff(d) <= z
        && a + b + z <= n
        && c + d + z <= n
        && a + b + c + d <= n)
}

fn w4_theta() -> Result<BipartitionDistribution> {
    BipartitionDistribution::parse("AB:0.2,A:0.2,B:0.2,C:0.2,D:0.2", 4)
}

/// Runs the level-`n` projector sweep on `W_4` for `θ` on `AB|CD` and the
/// singletons, without row-bound pruning, and checks every feasible tuple
/// against [`w4_constraint_check`]. Also confirms `W_4` is unstable.
pub fn w4_constraint_suite(n: usize) -> Result<ClaimVerdict> {
    let mut rec = Recorder::new("w4-constraints");
    let w = w_state(4)?;
    let theta = w4_theta()?;
    let (_, tuples) = feasible_tuples(&w, &theta, n, None, false)?;
    let ab = Bipartition::from_mask(4, 0b0011)?;
    let single = |j: usize| Bipartition::singleton(4, j).expect("four parties");
    let mut violations = 0;
    for ft in &tuples {
        let p = |b: &Bipartition| &ft.tuple[b];
        if !w4_constraint_check(p(&single(0)), p(&single(1)), p(&single(2)), p(&single(3)), p(&ab))? {
            violations += 1;
        }
    }
    // how many two-row tuples the inequalities rule out, so the check is not vacuous
    let two_row: Vec<Partition> = crate::symmetric::enumerate_partitions(n, 2);
    let mut rejected = 0usize;
    for a in &two_row {
        for b in &two_row {
            for c in &two_row {
                for d in &two_row {
                    for z in &two_row {
                        if !w4_constraint_check(a, b, c, d, z)? {
                            rejected += 1;
                        }
                    }
                }
            }
        }
    }
    rec.record("n", n as f64);
    rec.at_least("feasible_tuples", tuples.len() as f64, 1.0, 0.0);
    rec.approx("violations", violations as f64, 0.0, 0.0);
    rec.record("two_row_tuples_rejected", rejected as f64);
    let cap = capacity(&w, &Options::default())?;
    rec.check("w4_unstable", !cap.semistable);
    rec.record("w4_final_norm", cap.final_norm);
    Ok(rec.finish())
}

/// Uniform sample from the feasible region by rejection.
fn sample_feasible<R: Rng + ?Sized>(rng: &mut R) -> W4Point {
    loop {
        let mut c = [0.0; 5];
        for x in &mut c {
            *x = rng.random_range(0.0..=0.5);
        }
        let p = W4Point::new(c[0], c[1], c[2], c[3], c[4]);
        if p.is_feasible(0.0) {
            return p;
        }
    }
}

fn random_w4_theta<R: Rng + ?Sized>(rng: &mut R) -> Result<BipartitionDistribution> {
    let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0) + 1e-6).collect();
    let total: f64 = raw.iter().sum();
    let mut sides = vec![Bipartition::from_mask(4, 0b0011)?];
    for j in 0..4 {
        sides.push(Bipartition::singleton(4, j)?);
    }
    let mut entries: Vec<(Bipartition, f64)> = sides.into_iter().zip(raw.iter().map(|w| w / total)).collect();
    let rest: f64 = entries[1..].iter().map(|e| e.1).sum();
    entries[0].1 = 1.0 - rest;
    BipartitionDistribution::new(4, entries)
}

/// Applies [`w4_transform`] to `points` seeded feasible samples and checks
/// feasibility, unit mass, `z'` equal to a pair sum, idempotency,
/// coordinatewise entropy dominance, the weighted entropy on `thetas`
/// sampled distributions, and the realization on `W_4` for the first points.
pub fn w4_transform_suite(points: usize, thetas: usize, seed: u64) -> Result<ClaimVerdict> {
    let mut rec = Recorder::new("w4-transform");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = w_state(4)?;
    let dists: Vec<BipartitionDistribution> = (0..thetas).map(|_| random_w4_theta(&mut rng)).collect::<Result<_>>()?;
    let (mut infeasible, mut dominance, mut theta_drops, mut pair_misses) = (0usize, 0usize, 0usize, 0usize);
    let (mut worst_mass, mut worst_idem, mut worst_real): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut worst_entropy_gain = f64::INFINITY;
    for i in 0..points {
        let x = sample_feasible(&mut rng);
        let y = w4_transform(&x)?;
        if !y.is_feasible(1e-12) {
            infeasible += 1;
        }
        worst_mass = worst_mass.max((y.alpha + y.beta + y.gamma + y.delta - 1.0).abs());
        if (y.z - (y.alpha + y.beta)).abs() > 1e-12 && (y.z - (y.gamma + y.delta)).abs() > 1e-12 {
            pair_misses += 1;
        }
        let again = w4_transform(&y)?;
        worst_idem = worst_idem.max(again.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        for (xi, yi) in x.coords().iter().zip(y.coords()) {
            let gain = binary_entropy(yi) - binary_entropy(*xi);
            worst_entropy_gain = worst_entropy_gain.min(gain);
            if gain < -1e-12 {
                dominance += 1;
            }
        }
        for th in &dists {
            if y.weighted_entropy(th)? < x.weighted_entropy(th)? - 1e-12 {
                theta_drops += 1;
            }
        }
        if i < 20 {
            let realized = W4Point::of_tensor(&w.apply_local_maps(&y.realization_maps()?)?)?;
            let err = realized.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_real = worst_real.max(err);
        }
    }
    let ex = w4_transform(&W4Point::new(0.1, 0.1, 0.1, 0.1, 0.3))?;
    let want = [0.4, 0.1, 0.4, 0.1, 0.5];
    let ex_err = ex.coords().iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    rec.record("points", points as f64);
    rec.record("thetas", thetas as f64);
    rec.approx("infeasible_outputs", infeasible as f64, 0.0, 0.0);
    rec.approx("max_mass_error", worst_mass, 0.0, 1e-12);
    rec.approx("z_not_pair_sum", pair_misses as f64, 0.0, 0.0);
    rec.approx("max_idempotency_error", worst_idem, 0.0, 1e-12);
    rec.approx("coordinate_entropy_drops", dominance as f64, 0.0, 0.0);
    rec.record("min_coordinate_entropy_gain", worst_entropy_gain);
    rec.approx("weighted_entropy_drops", theta_drops as f64, 0.0, 0.0);
    rec.approx("max_realization_error", worst_real, 0.0, 1e-9);
    rec.approx("worked_example_error", ex_err, 0.0, 1e-12);
    Ok(rec.finish())
}
