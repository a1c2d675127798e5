//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.
//! Run with `cargo test -p tqf-core --test acceptance -- --nocapture`.

mod common;

use std::time::{Duration, Instant};

use tqf_core::bipartition::full_mask;
use tqf_core::corpus::{q_gamma, s_p, unit, unit2_on_subset, w_state};
use tqf_core::functionals::{
    c_psi, capacity, det_bound, entropy_max_with_det, entropy_max_with_det_oracle, lower_gradient, lower_local,
    lower_objective, m_theta, moment_map, upper_level,
};
use tqf_core::lab::{
    generic_separation_sample, random_laminar_distribution, recognition_roundtrip, subset_unit_value, w4_constraint_suite,
    w4_transform_suite,
};
use tqf_core::linalg::{expm_hermitian, random_hermitian};
use tqf_core::marginal::{bipartition_entropy, flatten, marginal_spectrum};
use tqf_core::symmetric::{enumerate_partitions, Partition};
use tqf_core::{Bipartition, BipartitionDistribution, Options, PowerState, Tensor};

use common::{max_abs_diff, random_sl, rng};

const P_GRID: [f64; 4] = [0.2, 1.0 / 3.0, 0.5, 0.8];

fn ab() -> Bipartition {
    Bipartition::from_letters(4, "AB").unwrap()
}

fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// Collects failed checks for one criterion, then prints the verdict line.
struct Criterion {
    id: usize,
    start: Instant,
    limit: Duration,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: usize, limit_secs: u64) -> Self {
        Criterion { id, start: Instant::now(), limit: Duration::from_secs(limit_secs), failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        if elapsed > self.limit {
            self.failures.push(format!("runtime {:.1}s over {}s", elapsed.as_secs_f64(), self.limit.as_secs()));
        }
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {}: {} ({:.2}s)", self.id, status, elapsed.as_secs_f64());
        for f in &self.failures {
            println!("  {f}");
        }
        assert!(self.failures.is_empty(), "criterion {} failed: {:?}", self.id, self.failures);
    }
}

#[test]
fn criterion_01_sp_marginals() {
    let mut c = Criterion::new(1, 1);
    for p in P_GRID {
        let t = s_p(p).unwrap();
        let mut ev = marginal_spectrum(&t, &ab()).unwrap();
        ev.sort_by(f64::total_cmp);
        let mut want = vec![p / 2.0, p / 2.0, (1.0 - p) / 2.0, (1.0 - p) / 2.0];
        want.sort_by(f64::total_cmp);
        let err = max_abs_diff(&ev, &want);
        c.check(err <= 1e-10, || format!("p = {p}: AB|CD spectrum error {err:e}"));
        for j in 0..4 {
            let m = tqf_core::marginal::marginal_side(&t, 1 << j).unwrap();
            let half = tqf_core::CMatrix::identity(2, 2).map(|z| z * 0.5);
            let err = (m.matrix() - half).iter().map(|z| z.norm()).fold(0.0, f64::max);
            c.check(err <= 1e-12, || format!("p = {p}: singleton {j} marginal error {err:e}"));
        }
    }
    c.finish();
}

#[test]
fn criterion_02_determinant_identity() {
    let mut c = Criterion::new(2, 1);
    for p in P_GRID {
        let t = s_p(p).unwrap();
        let d = flatten(&t, &ab()).unwrap().determinant().norm_sqr();
        let want = p * p * (1.0 - p) * (1.0 - p) / 16.0;
        c.check((d - want).abs() <= 1e-12, || format!("p = {p}: |det|^2 = {d}, want {want}"));
        let cp = c_psi(&t, &ab()).unwrap();
        c.check((cp - want).abs() <= 1e-12, || format!("p = {p}: c_psi = {cp}, want {want}"));
    }
    let half = flatten(&s_p(0.5).unwrap(), &ab()).unwrap().determinant().norm_sqr();
    c.check((half - 1.0 / 256.0).abs() <= 4.0 * f64::EPSILON / 256.0, || format!("p = 1/2: {half} vs 1/256"));
    c.finish();
}

#[test]
fn criterion_03_projector_norm_and_tuple() {
    let mut c = Criterion::new(3, 30);
    let sign = Partition::sign(4);
    let two_two = Partition::new(vec![2, 2]).unwrap();
    for p in P_GRID {
        let x = PowerState::power(&s_p(p).unwrap(), 4).unwrap();
        let got = x.apply_bipartition_projector(&sign, &ab()).unwrap().norm_sqr();
        let want = p * p * (1.0 - p) * (1.0 - p) / 16.0;
        c.check((got - want).abs() <= 1e-9, || format!("p = {p}: projector norm^2 {got}, want {want}"));
    }
    let theta = BipartitionDistribution::parse("AB:0.5,A:0.125,B:0.125,C:0.125,D:0.125", 4).unwrap();
    for p in [0.2, 1.0 / 3.0, 0.8] {
        let t = s_p(p).unwrap();
        let x = PowerState::power(&t, 4).unwrap();
        let mut steps = vec![(ab(), sign.clone())];
        for j in 0..4 {
            steps.push((Bipartition::singleton(4, j).unwrap(), two_two.clone()));
        }
        let y = x.apply_ordered_product(&steps).unwrap();
        c.check(y.is_nonvanishing(x.norm()), || format!("p = {p}: tuple projects to zero ({:e})", y.norm()));
        let m = m_theta(&t, &theta).unwrap();
        let up = upper_level(&t, &theta, 4, None).unwrap().best_value;
        c.check((m - 1.5).abs() <= 1e-12, || format!("p = {p}: m_theta = {m}"));
        c.check((up - 1.5).abs() <= 1e-9, || format!("p = {p}: level-4 upper = {up}"));
    }
    c.finish();
}

#[test]
fn criterion_04_crossing_asymmetry() {
    let mut c = Criterion::new(4, 30);
    let u = unit(2, 4).unwrap();
    let bc = Bipartition::from_letters(4, "BC").unwrap();
    let l211 = Partition::new(vec![2, 1, 1]).unwrap();
    let l22 = Partition::new(vec![2, 2]).unwrap();
    let x = PowerState::power(&u, 4).unwrap();
    let fwd = x.apply_ordered_product(&[(ab(), l211.clone()), (bc, l22.clone())]).unwrap().norm() / x.norm();
    let rev = x.apply_ordered_product(&[(bc, l22), (ab(), l211)]).unwrap().norm() / x.norm();
    c.check(fwd > 1e-8, || format!("forward product vanishes: {fwd:e}"));
    c.check(rev < 1e-10, || format!("reverse product is {rev:e}"));
    let theta = BipartitionDistribution::new(4, [(ab(), 0.5), (bc, 0.5)]).unwrap();
    let up = upper_level(&u, &theta, 4, Some(&[ab(), bc])).unwrap().best_value;
    c.check(up >= 1.25 - 1e-12, || format!("level-4 upper {up} < 1.25"));
    for b in Bipartition::all(4) {
        let h = bipartition_entropy(&u, &b).unwrap();
        c.check((h - 1.0).abs() <= 1e-12, || format!("H_{b} = {h}"));
    }
    c.finish();
}

#[test]
fn criterion_05_closed_form_vs_oracle() {
    let mut c = Criterion::new(5, 60);
    for cv in [1e-4, 1e-3, 1.0 / 324.0, 1.0 / 300.0] {
        let (v, p) = entropy_max_with_det(4, cv).unwrap();
        let oracle = entropy_max_with_det_oracle(4, cv, 200).unwrap();
        c.check((v - oracle).abs() <= 1e-3, || format!("c = {cv}: closed form {v}, oracle {oracle}"));
        let prod: f64 = p.iter().product();
        c.check((prod - cv).abs() <= 1e-10, || format!("c = {cv}: product {prod}"));
        c.check((shannon(&p) - v).abs() <= 1e-12, || format!("c = {cv}: value/distribution mismatch"));
    }
    for cv in [1.0 / 256.0, 0.01, 0.5] {
        let (v, _) = entropy_max_with_det(4, cv).unwrap();
        c.check(v == 2.0, || format!("c = {cv}: {v} is not exactly 2"));
    }
    c.finish();
}

#[test]
fn criterion_06_qgamma_squeeze() {
    let mut c = Criterion::new(6, 60);
    let opts = Options::default();
    for g in [0.75, 0.8, 0.9, 1.0] {
        let t = q_gamma(g).unwrap();
        let cap = capacity(&t, &opts).unwrap().capacity;
        c.check((cap - 1.0).abs() <= 1e-6, || format!("γ = {g}: capacity {cap}"));
        let cp = c_psi(&t, &ab()).unwrap();
        let want = (1.0 - g) * (g / 3.0).powi(3);
        c.check((cp - want).abs() <= 1e-10, || format!("γ = {g}: c_psi {cp}, want {want}"));
        let h = shannon(&[1.0 - g, g / 3.0, g / 3.0, g / 3.0]);
        let hb = bipartition_entropy(&t, &ab()).unwrap();
        c.check((hb - h).abs() <= 1e-12, || format!("γ = {g}: H_AB|CD {hb}, want {h}"));
        let db = det_bound(&t, &ab()).unwrap();
        c.check((db - h).abs() <= 1e-9, || format!("γ = {g}: det_bound {db}, want {h}"));
        let low = lower_local(&t, &BipartitionDistribution::delta(ab()), &opts).unwrap().achieved_entropy;
        c.check((low - h).abs() <= 1e-4, || format!("γ = {g}: lower_local {low}, want {h}"));
    }
    c.finish();
}

#[test]
fn criterion_07_unit_subset_and_recognition() {
    let mut c = Criterion::new(7, 60);
    let mut r = rng(7);
    let opts = Options { restarts: 2, ..Options::default() };
    let mut thetas = Vec::new();
    while thetas.len() < 20 {
        thetas.push(random_laminar_distribution(4, &mut r).unwrap());
    }
    let full = full_mask(4);
    let rows: Vec<(usize, String, f64, f64, f64)> = {
        use rayon::prelude::*;
        thetas
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, th)| {
                let opts = &opts;
                Bipartition::all(4).into_iter().map(move |b| {
                    let s = b.side();
                    // smaller side; the canonical side on 2|2 ties
                    let s = if (full & !s).count_ones() < s.count_ones() { full & !s } else { s };
                    let t = unit2_on_subset(s, 4).unwrap();
                    let want = subset_unit_value(th, s);
                    let low = lower_local(&t, th, opts).unwrap().achieved_entropy;
                    let up = upper_level(&t, th, 2, None).unwrap().best_value;
                    (i, tqf_core::bipartition::mask_letters(s), want, low, up)
                })
            })
            .collect()
    };
    for (i, s, want, low, up) in rows {
        c.check((low - want).abs() <= 1e-6, || format!("θ #{i}, S = {s}: lower {low}, want {want}"));
        c.check((up - want).abs() <= 1e-6, || format!("θ #{i}, S = {s}: level-2 upper {up}, want {want}"));
    }
    for (i, th) in thetas.iter().enumerate() {
        let v = recognition_roundtrip(th).unwrap();
        let err = v.computed["max_weight_error"];
        c.check(err <= 1e-9, || format!("θ #{i}: recognition error {err:e}"));
    }
    c.finish();
}

#[test]
fn criterion_08_w4_suite() {
    let mut c = Criterion::new(8, 120);
    let cons = w4_constraint_suite(4).unwrap();
    c.check(cons.passed, || format!("constraint suite: {:?}", cons.failures()));
    c.check(cons.computed["violations"] == 0.0, || "level-4 tuples violate the W-state inequalities".into());
    let tr = w4_transform_suite(1000, 100, 8).unwrap();
    c.check(tr.passed, || format!("transform suite: {:?}", tr.failures()));
    let cap = capacity(&w_state(4).unwrap(), &Options::default()).unwrap();
    c.check(!cap.semistable, || format!("W_4 reported semistable, capacity {}", cap.capacity));
    c.finish();
}

#[test]
fn criterion_09_property_suites() {
    let mut c = Criterion::new(9, 120);

    // projectors at n <= 3
    for seed in 0..4u64 {
        let t = Tensor::random_gaussian(vec![2; 4], seed).unwrap();
        for n in 1..=3 {
            let x = PowerState::power(&t, n).unwrap();
            let scale = x.norm();
            for b in Bipartition::all(4) {
                let parts = enumerate_partitions(n, n);
                let mut total = vec![num_complex::Complex64::new(0.0, 0.0); x.data().len()];
                for (i, l) in parts.iter().enumerate() {
                    let once = x.apply_bipartition_projector(l, &b).unwrap();
                    let twice = once.apply_bipartition_projector(l, &b).unwrap();
                    c.check(once.max_abs_diff(&twice) <= 1e-9 * scale, || format!("idempotency {b} {l} n={n}"));
                    for m in &parts[i + 1..] {
                        let cross = once.apply_bipartition_projector(m, &b).unwrap().norm();
                        c.check(cross <= 1e-9 * scale, || format!("orthogonality {b} {l} {m} n={n}"));
                    }
                    for (acc, z) in total.iter_mut().zip(once.data()) {
                        *acc += z;
                    }
                }
                let dev = total.iter().zip(x.data()).map(|(a, z)| (a - z).norm()).fold(0.0, f64::max);
                c.check(dev <= 1e-9 * scale, || format!("resolution of identity {b} n={n}: {dev:e}"));
            }
        }
    }

    // factored vs double sum on non-product states
    for (seed, n) in [(11u64, 2usize), (12, 3)] {
        let flat = Tensor::random_gaussian(vec![16usize.pow(n as u32)], seed).unwrap();
        let x = PowerState::from_data(vec![2; 4], n, flat.into_data()).unwrap();
        for side in 1..15u32 {
            for l in enumerate_partitions(n, n) {
                let a = x.symmetrize().apply_isotypic(&l, side).unwrap();
                let b = x.bipartition_projector_double_sum(&l, side).unwrap();
                c.check(a.max_abs_diff(&b) <= 1e-10, || format!("factored vs double sum side {side} {l}"));
            }
        }
    }

    let mut r = rng(9);
    for seed in 20..30u64 {
        let t = Tensor::random_gaussian(vec![2, 3, 2, 3], seed).unwrap();
        // isospectrality
        for b in Bipartition::all(4) {
            let mut a: Vec<f64> =
                tqf_core::marginal::marginal_side(&t, b.side()).unwrap().eigenvalues().into_iter().filter(|&v| v > 1e-12).collect();
            let mut z: Vec<f64> = tqf_core::marginal::marginal_side(&t, b.complement())
                .unwrap()
                .eigenvalues()
                .into_iter()
                .filter(|&v| v > 1e-12)
                .collect();
            a.sort_by(f64::total_cmp);
            z.sort_by(f64::total_cmp);
            c.check(a.len() == z.len() && max_abs_diff(&a, &z) <= 1e-10, || format!("isospectrality {b} seed {seed}"));
        }
        // determinant SL invariance
        let t4 = Tensor::random_gaussian(vec![2; 4], seed).unwrap();
        let g: Vec<_> = (0..4).map(|_| random_sl(2, &mut r)).collect();
        let d0 = flatten(&t4, &ab()).unwrap().determinant().norm();
        let d1 = flatten(&t4.apply_local_maps(&g).unwrap(), &ab()).unwrap().determinant().norm();
        c.check((d1 - d0).abs() <= 1e-9 * d0, || format!("SL invariance seed {seed}: {d0} vs {d1}"));
        // gradient against central differences
        let theta = random_laminar_distribution(4, &mut r).unwrap();
        let grad = lower_gradient(&t4, &theta).unwrap();
        let dirs: Vec<_> = (0..4).map(|_| random_hermitian(2, 1.0, &mut r)).collect();
        let analytic: f64 = grad.iter().zip(&dirs).map(|(a, b)| (a * b).trace().re).sum();
        let f = |s: f64| {
            let maps: Vec<_> = dirs.iter().map(|x| expm_hermitian(x, s)).collect();
            lower_objective(&t4.apply_local_maps(&maps).unwrap(), &theta).unwrap()
        };
        let numeric = (f(1e-5) - f(-1e-5)) / 2e-5;
        c.check((analytic - numeric).abs() <= 1e-5 * analytic.abs().max(1e-2), || {
            format!("gradient seed {seed}: {analytic} vs {numeric}")
        });
    }

    // Kempf–Ness: a balanced point minimizes the norm on its SL orbit
    for seed in 40..43u64 {
        let t = Tensor::random_gaussian(vec![2; 4], seed).unwrap();
        let cap = capacity(&t, &Options { tol: 1e-11, ..Options::default() }).unwrap();
        let phi = t.apply_local_maps(&cap.minimizing_maps).unwrap();
        let res = moment_map(&phi).unwrap().residual;
        c.check(res < 1e-10, || format!("Kempf–Ness seed {seed}: residual {res:e}"));
        for _ in 0..100 {
            let g: Vec<_> = (0..4).map(|_| random_sl(2, &mut r)).collect();
            let moved = phi.apply_local_maps(&g).unwrap().norm();
            c.check(moved >= phi.norm() - 1e-9, || format!("Kempf–Ness seed {seed}: {moved} < {}", phi.norm()));
        }
    }
    c.finish();
}

#[test]
fn criterion_10_genericity_sampling() {
    let mut c = Criterion::new(10, 300);
    let v = generic_separation_sample(2, 50, 2024).unwrap();
    let frac = v.computed["strict_fraction"];
    c.check(frac >= 0.9, || format!("strict fraction {frac}"));
    c.check(v.passed, || format!("verdict failures: {:?}", v.failures()));
    c.finish();
}
