use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{ClaimVerdict, Recorder};
use crate::bipartition::{full_mask, mask_letters, Bipartition, BipartitionDistribution};
use crate::corpus::unit2_on_subset;
use crate::error::{Error, Result};
use crate::functionals::{lower_local, upper_level, Options};

/// `1 - Σ θ_b` over the support bipartitions with a side containing `side`:
/// both functionals of the rank-2 unit tensor on `side`, for laminar `θ`.
pub fn subset_unit_value(theta: &BipartitionDistribution, side: u32) -> f64 {
    1.0 - theta.iter().filter(|(b, _)| b.has_side_containing(side)).map(|(_, w)| w).sum::<f64>()
}

/// Random laminar distribution on `k` parties: a greedily grown laminar
/// family over a shuffled list of bipartitions, with exponential weights.
pub fn random_laminar_distribution<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<BipartitionDistribution> {
    let mut all = Bipartition::all(k);
    if all.is_empty() {
        return Err(Error::Parameter(format!("no bipartitions of {k} parties")));
    }
    all.shuffle(rng);
    let mut family: Vec<Bipartition> = Vec::new();
    for b in all {
        if (family.is_empty() || rng.random_bool(0.6)) && family.iter().all(|f| f.is_mutually_laminar(&b)) {
            family.push(b);
        }
    }
    let raw: Vec<f64> = family.iter().map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut entries: Vec<(Bipartition, f64)> = family.into_iter().zip(raw.iter().map(|w| w / total)).collect();
    // absorb rounding into the last weight so the sum is exact
    let rest: f64 = entries[..entries.len() - 1].iter().map(|e| e.1).sum();
    entries.last_mut().expect("nonempty family").1 = 1.0 - rest;
    BipartitionDistribution::new(k, entries)
}

/// Checks both functionals of `⟨2⟩_S` against [`subset_unit_value`] for every
/// proper nonempty `S`: local ascent for the lower one, level 2 for the upper.
///
/// Level 2 cannot certify the value when three parties of `S` each need an
/// antisymmetric diagram (their swaps multiply to the identity on the
/// symmetric state); those subsets are certified at level 4 instead.
pub fn unit_subset_formula(theta: &BipartitionDistribution) -> Result<ClaimVerdict> {
    if !theta.is_laminar() {
        return Err(Error::Distribution("the subset-unit formula needs a laminar distribution".into()));
    }
    let mut rec = Recorder::new("unit-subset");
    let k = theta.parties();
    let opts = Options { restarts: 2, ..Options::default() };
    let rows: Result<Vec<(u32, f64, f64, f64, f64)>> = (1..full_mask(k))
        .into_par_iter()
        .map(|s| {
            let want = subset_unit_value(theta, s);
            let t = unit2_on_subset(s, k)?;
            let lower = lower_local(&t, theta, &opts)?.achieved_entropy;
            let level2 = upper_level(&t, theta, 2, None)?.best_value;
            let upper = if level2 < want - 1e-9 { level2.max(upper_level(&t, theta, 4, None)?.best_value) } else { level2 };
            Ok((s, want, lower, level2, upper))
        })
        .collect();
    for (s, want, lower, level2, upper) in rows? {
        let name = mask_letters(s);
        rec.approx(format!("lower[{name}]"), lower, want, 1e-6);
        rec.record(format!("upper_level2[{name}]"), level2);
        rec.approx(format!("upper[{name}]"), upper, want, 1e-6);
    }
    Ok(rec.finish())
}

/// Recovers `θ` from the values `E(⟨2⟩_S)` for all proper nonempty `S`:
/// each bipartition is read off at its larger side, largest sides first,
/// after subtracting the already known weights of bipartitions with a side
/// strictly containing it.
pub fn recover_from_subset_values(k: usize, values: &BTreeMap<u32, f64>) -> Result<BipartitionDistribution> {
    let mut order: Vec<(u32, Bipartition)> = Bipartition::all(k)
        .into_iter()
        .map(|b| {
            let (s, c) = (b.side(), b.complement());
            (if c.count_ones() > s.count_ones() { c } else { s }, b)
        })
        .collect();
    order.sort_by_key(|&(big, b)| (std::cmp::Reverse(big.count_ones()), b));
    let mut known: Vec<(Bipartition, f64)> = Vec::new();
    for (big, b) in order {
        let e = *values.get(&big).ok_or_else(|| Error::Parameter(format!("missing value for subset {}", mask_letters(big))))?;
        let above: f64 = known
            .iter()
            .filter(|(o, _)| [o.side(), o.complement()].iter().any(|&t| t != big && big & !t == 0))
            .map(|(_, w)| w)
            .sum();
        let w = 1.0 - e - above;
        if w < -1e-9 {
            return Err(Error::Distribution(format!("negative weight {w} recovered for {b}")));
        }
        known.push((b, w));
    }
    BipartitionDistribution::new(k, known.into_iter().filter(|&(_, w)| w > 1e-12))
}

/// Builds the subset-unit value vector of `θ` and recovers `θ` from it.
pub fn recognition_roundtrip(theta: &BipartitionDistribution) -> Result<ClaimVerdict> {
    let mut rec = Recorder::new("recognition");
    let k = theta.parties();
    if !theta.is_laminar() {
        rec.note("distribution is not laminar; the value vector is the closed formula, not the functional");
    }
    let values: BTreeMap<u32, f64> = (1..full_mask(k)).map(|s| (s, subset_unit_value(theta, s))).collect();
    let back = recover_from_subset_values(k, &values)?;
    let mut worst: f64 = 0.0;
    for b in Bipartition::all(k) {
        let (w0, w1) = (theta.weight(&b), back.weight(&b));
        if w0 > 0.0 || w1 > 0.0 {
            rec.record(format!("recovered[{b}]"), w1);
        }
        worst = worst.max((w0 - w1).abs());
    }
    rec.approx("max_weight_error", worst, 0.0, 1e-9);
    Ok(rec.finish())
}
