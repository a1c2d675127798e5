//! Permutation actions and isotypic projectors on Kronecker powers.
//!
//! A [`PowerState`] of a `k`-party base shape at level `n` stores a vector in
//! `(V_1 ⊗ … ⊗ V_k)^{⊗n}`, copy-major: copy 0's `k` indices, then copy 1's,
//! and so on. `τ_S(π)` moves, for every party in `S`, the leg of copy `c` to
//! copy `π(c)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bipartition::{full_mask, Bipartition};
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::symmetric::{
    character, enumerate_partitions, factorial, irrep_dimension, permutation_compose, CycleType, Partition,
    Permutations,
};
use crate::tensor::{strides, Tensor};

/// Relative norm below which a projected state counts as zero.
pub const DEFAULT_NONVANISHING_TOL: f64 = 1e-8;

/// Largest admitted entry count of a power state.
pub const MAX_POWER_ENTRIES: usize = 1 << 24;

/// Hard cap on the power `n`.
pub const MAX_LEVEL: usize = 6;

const CHUNK: usize = 4096;

#[derive(Clone, Debug)]
pub struct PowerState {
    base_shape: Vec<usize>,
    n: usize,
    data: Vec<Complex64>,
    symmetric: bool,
    is_power: bool,
}

impl PowerState {
    /// `t^{⊠n}`.
    pub fn power(t: &Tensor, n: usize) -> Result<Self> {
        check_size(t.len(), n)?;
        let base = t.data();
        let mut data = vec![Complex64::new(1.0, 0.0)];
        for _ in 0..n {
            data = data.iter().flat_map(|&a| base.iter().map(move |&b| a * b)).collect();
        }
        Ok(PowerState { base_shape: t.shape().to_vec(), n, data, symmetric: true, is_power: true })
    }

    /// Wraps raw copy-major data; makes no symmetry assumption.
    pub fn from_data(base_shape: Vec<usize>, n: usize, data: Vec<Complex64>) -> Result<Self> {
        let d: usize = base_shape.iter().product();
        check_size(d, n)?;
        if d.pow(n as u32) != data.len() {
            return Err(Error::Shape(format!("power state needs {} entries, got {}", d.pow(n as u32), data.len())));
        }
        Ok(PowerState { base_shape, n, data, symmetric: false, is_power: false })
    }

    pub fn base_shape(&self) -> &[usize] {
        &self.base_shape
    }

    pub fn parties(&self) -> usize {
        self.base_shape.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Whether the state is known to lie in the range of `P_{(n)}` on all legs.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Whether the state is still the untouched Kronecker power.
    pub fn is_power(&self) -> bool {
        self.is_power
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &PowerState) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn with_data(&self, data: Vec<Complex64>, symmetric: bool) -> PowerState {
        PowerState { base_shape: self.base_shape.clone(), n: self.n, data, symmetric, is_power: false }
    }

    fn check_side(&self, side: u32) -> Result<()> {
        let full = full_mask(self.parties());
        if side == 0 || side & !full != 0 {
            return Err(Error::Bipartition(format!("side mask {side:#b} is not a nonempty subset of {} parties", self.parties())));
        }
        Ok(())
    }

    fn check_level(&self, lambda: &Partition) -> Result<()> {
        if lambda.n() != self.n {
            return Err(Error::SizeMismatch { left: lambda.n(), right: self.n });
        }
        Ok(())
    }

    /// `Σ_terms coeff · τ_S(ρ) τ_{S̄}(σ) x` for `(ρ, σ, coeff)` terms.
    fn gather_sum(&self, side: u32, terms: &[(Vec<usize>, Vec<usize>, f64)]) -> Vec<Complex64> {
        let layout = SideLayout::new(&self.base_shape, side);
        let n = self.n;
        let d = layout.dim;
        let mut pow = vec![1usize; n];
        for c in (0..n.saturating_sub(1)).rev() {
            pow[c] = pow[c + 1] * d;
        }
        let src = &self.data;
        let mut out = vec![ZERO; src.len()];
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, slice)| {
            let mut digits = [0usize; MAX_LEVEL];
            for (off, entry) in slice.iter_mut().enumerate() {
                let o = chunk * CHUNK + off;
                for c in 0..n {
                    digits[c] = o / pow[c] % d;
                }
                let mut acc = ZERO;
                for (rho, sigma, coeff) in terms {
                    let mut idx = 0;
                    for c in 0..n {
                        idx += layout.combine(digits[rho[c]], digits[sigma[c]]) * pow[c];
                    }
                    acc += src[idx] * coeff;
                }
                *entry = acc;
            }
        });
        out
    }

    /// `τ_S(π) x`; `side` may be the full party set.
    pub fn permute_copies(&self, perm: &[usize], side: u32) -> Result<PowerState> {
        self.check_side(side)?;
        check_perm(perm, self.n)?;
        let id: Vec<usize> = (0..self.n).collect();
        let data = self.gather_sum(side, &[(perm.to_vec(), id, 1.0)]);
        let keeps_symmetry = self.symmetric && side == full_mask(self.parties());
        Ok(self.with_data(data, keeps_symmetry))
    }

    /// `P_λ^{V_S} x = dim[λ]/n! Σ_π χ_λ(π) τ_S(π) x`.
    pub fn apply_isotypic(&self, lambda: &Partition, side: u32) -> Result<PowerState> {
        self.check_side(side)?;
        self.check_level(lambda)?;
        let scale = irrep_dimension(lambda) as f64 / factorial(self.n) as f64;
        let id: Vec<usize> = (0..self.n).collect();
        let mut terms = Vec::new();
        for p in Permutations::new(self.n) {
            let chi = character(lambda, &CycleType::of(&p))?;
            if chi != 0 {
                terms.push((p, id.clone(), scale * chi as f64));
            }
        }
        // the class-sum projector commutes with the full symmetrizer
        Ok(self.with_data(self.gather_sum(side, &terms), self.symmetric))
    }

    /// `Σ_{π ∈ c} τ_S(π) x` for every conjugacy class `c`.
    pub fn class_sums(&self, side: u32) -> Result<Vec<(CycleType, Vec<Complex64>)>> {
        self.check_side(side)?;
        let id: Vec<usize> = (0..self.n).collect();
        let classes = CycleType::all(self.n);
        let mut grouped: Vec<Vec<(Vec<usize>, Vec<usize>, f64)>> = vec![Vec::new(); classes.len()];
        for p in Permutations::new(self.n) {
            let ct = CycleType::of(&p);
            let slot = classes.iter().position(|c| *c == ct).expect("class listed");
            grouped[slot].push((p, id.clone(), 1.0));
        }
        Ok(classes.into_iter().zip(grouped).map(|(c, terms)| (c, self.gather_sum(side, &terms))).collect())
    }

    /// `P_λ^{V_S} x` for all `λ ⊢ n` with at most `max_rows` rows, from a
    /// single pass of class sums.
    pub fn isotypic_components(&self, side: u32, max_rows: usize) -> Result<Vec<(Partition, PowerState)>> {
        let sums = self.class_sums(side)?;
        let nfact = factorial(self.n) as f64;
        let mut out = Vec::new();
        for lambda in enumerate_partitions(self.n, max_rows) {
            let scale = irrep_dimension(&lambda) as f64 / nfact;
            let mut data = vec![ZERO; self.data.len()];
            for (c, sum) in &sums {
                let w = scale * character(&lambda, c)? as f64;
                if w != 0.0 {
                    data.iter_mut().zip(sum).for_each(|(a, b)| *a += b * w);
                }
            }
            out.push((lambda, self.with_data(data, self.symmetric)));
        }
        Ok(out)
    }

    /// `P_{(n)}` on all legs. Identity on states already known symmetric.
    pub fn symmetrize(&self) -> PowerState {
        if self.symmetric {
            return self.clone();
        }
        let id: Vec<usize> = (0..self.n).collect();
        let w = 1.0 / factorial(self.n) as f64;
        let terms: Vec<_> = Permutations::new(self.n).map(|p| (p, id.clone(), w)).collect();
        self.with_data(self.gather_sum(full_mask(self.parties()), &terms), true)
    }

    /// `P_λ^{V_b} x = P_λ^{V_S} P_{(n)} x` with `S` the canonical side of `b`.
    pub fn apply_bipartition_projector(&self, lambda: &Partition, b: &Bipartition) -> Result<PowerState> {
        if b.parties() != self.parties() {
            return Err(Error::PartyMismatch { left: b.parties(), right: self.parties() });
        }
        self.check_level(lambda)?;
        self.symmetrize().apply_isotypic(lambda, b.side())
    }

    /// Reference evaluation of `P_λ^{V_S} P_{(n)}` as the double sum
    /// `dim/(n!)² Σ_{π,σ} χ_λ(π) τ_S(πσ) τ_{S̄}(σ)`, without symmetry shortcuts.
    pub fn bipartition_projector_double_sum(&self, lambda: &Partition, side: u32) -> Result<PowerState> {
        self.check_side(side)?;
        self.check_level(lambda)?;
        let nfact = factorial(self.n) as f64;
        let scale = irrep_dimension(lambda) as f64 / (nfact * nfact);
        let perms: Vec<Vec<usize>> = Permutations::new(self.n).collect();
        let mut terms = Vec::new();
        for pi in &perms {
            let chi = character(lambda, &CycleType::of(pi))?;
            if chi == 0 {
                continue;
            }
            for sigma in &perms {
                terms.push((permutation_compose(pi, sigma), sigma.clone(), scale * chi as f64));
            }
        }
        Ok(self.with_data(self.gather_sum(side, &terms), true))
    }

    /// Applies `P^{V_{b_1}}_{λ_1} ⋯ P^{V_{b_m}}_{λ_m}` as written, i.e. the last
    /// step first.
    pub fn apply_ordered_product(&self, steps: &[(Bipartition, Partition)]) -> Result<PowerState> {
        let mut x = self.clone();
        for (b, lambda) in steps.iter().rev() {
            x = x.apply_bipartition_projector(lambda, b)?;
        }
        Ok(x)
    }

    /// `‖x‖ / ref_norm > tol`.
    pub fn is_nonvanishing_with(&self, ref_norm: f64, tol: f64) -> bool {
        ref_norm > 0.0 && self.norm() / ref_norm > tol
    }

    pub fn is_nonvanishing(&self, ref_norm: f64) -> bool {
        self.is_nonvanishing_with(ref_norm, DEFAULT_NONVANISHING_TOL)
    }
}

fn check_size(d: usize, n: usize) -> Result<()> {
    if n == 0 || n > MAX_LEVEL {
        return Err(Error::LevelCap { level: n, cap: MAX_LEVEL });
    }
    match d.checked_pow(n as u32) {
        Some(e) if e <= MAX_POWER_ENTRIES => Ok(()),
        _ => Err(Error::PowerTooLarge(d.saturating_pow(n as u32))),
    }
}

fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::Parameter(format!("{perm:?} is not a permutation of {n} copies")));
    }
    Ok(())
}

/// Splits a base index into its `S` and `S̄` parts and back.
struct SideLayout {
    dim: usize,
    // combine[s * dim + t]: base index with the S-part of `s` and the rest of `t`
    combine: Vec<usize>,
}

impl SideLayout {
    fn new(shape: &[usize], side: u32) -> Self {
        let dim: usize = shape.iter().product();
        let st = strides(shape);
        let mut s_of = vec![0; dim];
        let mut t_of = vec![0; dim];
        let mut idx = vec![0; shape.len()];
        for i in 0..dim {
            for (j, &x) in idx.iter().enumerate() {
                if side >> j & 1 == 1 {
                    s_of[i] += x * st[j];
                } else {
                    t_of[i] += x * st[j];
                }
            }
            crate::tensor::increment(&mut idx, shape);
        }
        let mut combine = vec![0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                combine[a * dim + b] = s_of[a] + t_of[b];
            }
        }
        SideLayout { dim, combine }
    }

    #[inline]
    fn combine(&self, s_from: usize, t_from: usize) -> usize {
        self.combine[s_from * self.dim + t_from]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::symmetric::permutation_inverse;

    fn part(p: &[usize]) -> Partition {
        Partition::new(p.to_vec()).unwrap()
    }

    fn bp(k: usize, s: &str) -> Bipartition {
        Bipartition::from_letters(k, s).unwrap()
    }

    #[test]
    fn power_layout() {
        let t = Tensor::random_gaussian(vec![2, 3], 1).unwrap();
        let x = PowerState::power(&t, 2).unwrap();
        assert_eq!(x.data().len(), 36);
        assert_eq!(x.data()[4 * 6 + 5], t.data()[4] * t.data()[5]);
        assert!((x.norm() - t.norm_sqr()).abs() < 1e-12);
        assert!(PowerState::power(&t, 7).is_err());
    }

    fn triple(a: &Tensor, b: &Tensor, c: &Tensor) -> Vec<Complex64> {
        let mut out = Vec::new();
        for &x in a.data() {
            for &y in b.data() {
                for &z in c.data() {
                    out.push(x * y * z);
                }
            }
        }
        out
    }

    #[test]
    fn permute_moves_copy_legs() {
        let t0 = Tensor::random_gaussian(vec![2, 2], 2).unwrap();
        let t1 = Tensor::random_gaussian(vec![2, 2], 3).unwrap();
        let t2 = Tensor::random_gaussian(vec![2, 2], 4).unwrap();
        let x = PowerState::from_data(vec![2, 2], 3, triple(&t0, &t1, &t2)).unwrap();
        // cycle 0 -> 1 -> 2 -> 0 on all legs: copy c' holds old copy π⁻¹(c')
        let pi = vec![1, 2, 0];
        let y = x.permute_copies(&pi, 0b11).unwrap();
        let expect = triple(&t2, &t0, &t1);
        for (a, b) in y.data().iter().zip(&expect) {
            assert!((a - b).norm() < 1e-14);
        }
        let back = y.permute_copies(&permutation_inverse(&pi), 0b11).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-14);
        let same = x.permute_copies(&[0, 1, 2], 0b01).unwrap();
        assert!(same.max_abs_diff(&x) == 0.0);
        assert!(x.permute_copies(&[0, 0, 1], 0b01).is_err());
    }

    #[test]
    fn powers_are_permutation_invariant() {
        let t = Tensor::random_gaussian(vec![2, 2, 2], 7).unwrap();
        let x = PowerState::power(&t, 3).unwrap();
        let y = x.permute_copies(&[2, 0, 1], 0b111).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn resolution_of_identity() {
        let t = Tensor::random_gaussian(vec![2, 2, 2, 2], 11).unwrap();
        let x = PowerState::power(&t, 3).unwrap();
        let comps = x.isotypic_components(0b0011, 3).unwrap();
        let mut total = vec![ZERO; x.data().len()];
        for (_, c) in &comps {
            total.iter_mut().zip(c.data()).for_each(|(a, b)| *a += b);
        }
        let err = total.iter().zip(x.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
        for (lambda, c) in &comps {
            let single = x.apply_isotypic(lambda, 0b0011).unwrap();
            assert!(single.max_abs_diff(c) < 1e-12);
        }
    }

    #[test]
    fn rows_above_rank_vanish() {
        let w = corpus::w_state(4).unwrap();
        let x = PowerState::power(&w, 3).unwrap();
        let y = x.apply_bipartition_projector(&part(&[1, 1, 1]), &bp(4, "A")).unwrap();
        assert!(!y.is_nonvanishing(x.norm()));
    }

    #[test]
    fn unit_tensor_appendix_example() {
        let u = corpus::unit(2, 4).unwrap();
        let x = PowerState::power(&u, 4).unwrap();
        let ab = bp(4, "AB");
        let bc = bp(4, "BC");
        let y = x.apply_bipartition_projector(&part(&[2, 1, 1]), &ab).unwrap();
        assert!(y.norm() < 1e-12);
        let fwd = x.apply_ordered_product(&[(ab, part(&[2, 1, 1])), (bc, part(&[2, 2]))]).unwrap();
        assert!(fwd.is_nonvanishing(x.norm()));
        let rev = x.apply_ordered_product(&[(bc, part(&[2, 2])), (ab, part(&[2, 1, 1]))]).unwrap();
        assert!(rev.norm() / x.norm() < 1e-10);
    }

    #[test]
    fn sp_sign_projection_norm() {
        for p in [0.2, 0.5] {
            let x = PowerState::power(&corpus::s_p(p).unwrap(), 4).unwrap();
            let y = x.apply_bipartition_projector(&Partition::sign(4), &bp(4, "AB")).unwrap();
            let want = p * p * (1.0 - p) * (1.0 - p) / 16.0;
            assert!((y.norm_sqr() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn double_sum_matches_factored() {
        let t = Tensor::random_gaussian(vec![2, 2, 2, 2], 5).unwrap();
        let x = PowerState::power(&t, 3).unwrap();
        for lambda in enumerate_partitions(3, 3) {
            for side in [0b0001, 0b0011, 0b0101] {
                let b = Bipartition::from_mask(4, side).unwrap();
                let a = x.apply_bipartition_projector(&lambda, &b).unwrap();
                let d = x.bipartition_projector_double_sum(&lambda, side).unwrap();
                assert!(a.max_abs_diff(&d) < 1e-10);
            }
        }
    }

    #[test]
    fn symmetrize_fixes_powers() {
        let t = Tensor::random_gaussian(vec![2, 2], 8).unwrap();
        let x = PowerState::power(&t, 3).unwrap();
        let raw = PowerState::from_data(vec![2, 2], 3, x.data().to_vec()).unwrap();
        assert!(raw.symmetrize().max_abs_diff(&x) < 1e-12);
    }
}
