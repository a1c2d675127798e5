use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bipartition::{full_mask, Bipartition, BipartitionDistribution};
use crate::error::{Error, Result};
use crate::marginal::{flattening_rank, DEFAULT_RANK_TOL};
use crate::projector::{PowerState, MAX_LEVEL};
use crate::symmetric::{diagram_entropy, row_bound_check, Partition};
use crate::tensor::Tensor;

pub const DEFAULT_LEVEL: usize = 4;

/// `M^θ(t) = Σ_b θ_b log₂ R_b(t)`.
pub fn m_theta(t: &Tensor, theta: &BipartitionDistribution) -> Result<f64> {
    check_parties(t, theta)?;
    t.require_nonzero()?;
    let mut total = 0.0;
    for (b, w) in theta.iter() {
        total += w * (flattening_rank(t, b, DEFAULT_RANK_TOL)? as f64).log2();
    }
    Ok(total)
}

fn check_parties(t: &Tensor, theta: &BipartitionDistribution) -> Result<()> {
    if t.parties() != theta.parties() {
        return Err(Error::PartyMismatch { left: t.parties(), right: theta.parties() });
    }
    Ok(())
}

/// One Young diagram per support bipartition whose projector product does
/// not annihilate `t^{⊠n}`, with its value `Σ_b θ_b H(λ^{(b)}/n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibleTuple {
    pub tuple: BTreeMap<Bipartition, Partition>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperReport {
    pub n: usize,
    pub best_value: f64,
    pub best_tuple: BTreeMap<Bipartition, Partition>,
    pub feasible_count: usize,
    pub m_theta: f64,
    /// Projector order as written; the last entry is applied first.
    pub order: Vec<Bipartition>,
}

impl UpperReport {
    /// `2^{best_value}`.
    pub fn f_value(&self) -> f64 {
        self.best_value.exp2()
    }
}

struct Step {
    b: Bipartition,
    weight: f64,
    max_rows: usize,
}

struct Search {
    steps: Vec<Step>,
    // (a, b, c): some side of step a is the disjoint union of sides of b and c
    triples: Vec<[usize; 3]>,
    ref_norm: f64,
}

impl Search {
    fn admissible(&self, chosen: &[Partition]) -> Result<bool> {
        let depth = chosen.len() - 1;
        for tri in &self.triples {
            if !tri.contains(&depth) || tri.iter().any(|&i| i > depth) {
                continue;
            }
            let [a, b, c] = tri.map(|i| &chosen[i]);
            if !(row_bound_check(a, b, c)? && row_bound_check(b, a, c)? && row_bound_check(c, a, b)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn dfs(&self, x: &PowerState, chosen: &mut Vec<Partition>, out: &mut Vec<Vec<Partition>>) -> Result<()> {
        let depth = chosen.len();
        if depth == self.steps.len() {
            out.push(chosen.clone());
            return Ok(());
        }
        let step = &self.steps[depth];
        for (lambda, y) in x.symmetrize().isotypic_components(step.b.side(), step.max_rows)? {
            if !y.is_nonvanishing(self.ref_norm) {
                continue;
            }
            chosen.push(lambda);
            if self.admissible(chosen)? {
                self.dfs(&y, chosen, out)?;
            }
            chosen.pop();
        }
        Ok(())
    }

    fn run(&self, x: &PowerState) -> Result<Vec<Vec<Partition>>> {
        let first = &self.steps[0];
        let comps = x.symmetrize().isotypic_components(first.b.side(), first.max_rows)?;
        let branches: Result<Vec<Vec<Vec<Partition>>>> = comps
            .into_par_iter()
            .map(|(lambda, y)| {
                let mut out = Vec::new();
                if y.is_nonvanishing(self.ref_norm) {
                    let mut chosen = vec![lambda];
                    if self.admissible(&chosen)? {
                        self.dfs(&y, &mut chosen, &mut out)?;
                    }
                }
                Ok(out)
            })
            .collect();
        Ok(branches?.into_iter().flatten().collect())
    }
}

fn resolve_order(theta: &BipartitionDistribution, order: Option<&[Bipartition]>) -> Result<Vec<Bipartition>> {
    let support = theta.support();
    match order {
        None if !theta.is_laminar() => Err(Error::OrderRequired),
        None => Ok(support),
        Some(order) => {
            let mut sorted = order.to_vec();
            sorted.sort();
            if sorted != support {
                let names: Vec<String> = support.iter().map(ToString::to_string).collect();
                return Err(Error::Order(format!("order must list each support bipartition once: {}", names.join(", "))));
            }
            Ok(order.to_vec())
        }
    }
}

/// Every feasible tuple at level `n`, in depth-first enumeration order.
///
/// With `prune`, row counts are capped by flattening ranks and diagram
/// triples over nested sides must pass the Kronecker row bound; both are
/// exact consequences of commuting projectors, so they are only used where
/// they hold (all steps for laminar `θ`, the first applied step otherwise).
pub fn feasible_tuples(
    t: &Tensor,
    theta: &BipartitionDistribution,
    n: usize,
    order: Option<&[Bipartition]>,
    prune: bool,
) -> Result<(Vec<Bipartition>, Vec<FeasibleTuple>)> {
    check_parties(t, theta)?;
    t.require_nonzero()?;
    if n == 0 || n > MAX_LEVEL {
        return Err(Error::LevelCap { level: n, cap: MAX_LEVEL });
    }
    let written = resolve_order(theta, order)?;
    let laminar = theta.is_laminar();
    let applied: Vec<Bipartition> = written.iter().rev().copied().collect();
    let mut steps = Vec::with_capacity(applied.len());
    for (i, b) in applied.iter().enumerate() {
        let max_rows = if prune && (laminar || i == 0) { flattening_rank(t, b, DEFAULT_RANK_TOL)?.min(n) } else { n };
        steps.push(Step { b: *b, weight: theta.weight(b), max_rows });
    }
    let mut triples = Vec::new();
    if prune && laminar {
        let full = full_mask(t.parties());
        let sides = |i: usize| [applied[i].side(), full & !applied[i].side()];
        for a in 0..applied.len() {
            for b in 0..applied.len() {
                for c in b + 1..applied.len() {
                    if a == b || a == c {
                        continue;
                    }
                    let nested = sides(a).iter().any(|&sa| {
                        sides(b).iter().any(|&sb| sides(c).iter().any(|&sc| sb & sc == 0 && sb | sc == sa))
                    });
                    if nested {
                        triples.push([a, b, c]);
                    }
                }
            }
        }
    }
    let x = PowerState::power(t, n)?;
    let search = Search { steps, triples, ref_norm: t.norm().powi(n as i32) };
    let tuples = search
        .run(&x)?
        .into_iter()
        .map(|chosen| {
            let value = search.steps.iter().zip(&chosen).map(|(s, l)| s.weight * diagram_entropy(l)).sum();
            let tuple = search.steps.iter().map(|s| s.b).zip(chosen).collect();
            FeasibleTuple { tuple, value }
        })
        .collect();
    Ok((written, tuples))
}

fn report(t: &Tensor, theta: &BipartitionDistribution, n: usize, order: Option<&[Bipartition]>, prune: bool) -> Result<UpperReport> {
    let (order, tuples) = feasible_tuples(t, theta, n, order, prune)?;
    let mut best: Option<&FeasibleTuple> = None;
    for ft in &tuples {
        if best.map_or(true, |b| ft.value > b.value) {
            best = Some(ft);
        }
    }
    let best = best.ok_or_else(|| Error::Parameter("no feasible tuple found".into()))?;
    Ok(UpperReport {
        n,
        best_value: best.value,
        best_tuple: best.tuple.clone(),
        feasible_count: tuples.len(),
        m_theta: m_theta(t, theta)?,
        order,
    })
}

/// Level-`n` lower bound on the upper functional: the best feasible tuple of
/// Young diagrams. `order` is required when `θ` is not laminar.
pub fn upper_level(t: &Tensor, theta: &BipartitionDistribution, n: usize, order: Option<&[Bipartition]>) -> Result<UpperReport> {
    report(t, theta, n, order, true)
}

/// As [`upper_level`] but without rank and row-bound pruning; only the
/// projector nonvanishing test decides feasibility.
pub fn upper_level_unpruned(
    t: &Tensor,
    theta: &BipartitionDistribution,
    n: usize,
    order: Option<&[Bipartition]>,
) -> Result<UpperReport> {
    report(t, theta, n, order, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn theta(spec: &str, k: usize) -> BipartitionDistribution {
        BipartitionDistribution::parse(spec, k).unwrap()
    }

    #[test]
    fn m_theta_examples() {
        let sp = corpus::s_p(1.0 / 3.0).unwrap();
        let th = theta("AB:0.5,A:0.125,B:0.125,C:0.125,D:0.125", 4);
        assert!((m_theta(&sp, &th).unwrap() - 1.5).abs() < 1e-12);
        let u = corpus::unit(3, 4).unwrap();
        assert!((m_theta(&u, &th).unwrap() - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn unit_tensor_level_value() {
        let th = theta("AB:0.5,A:0.25,C:0.25", 4);
        let u2 = corpus::unit(2, 4).unwrap();
        for n in [2, 4] {
            assert!((upper_level(&u2, &th, n, None).unwrap().best_value - 1.0).abs() < 1e-12);
        }
        // (2,1) is the best two-row diagram of 3
        let odd = upper_level(&u2, &th, 3, None).unwrap().best_value;
        assert!((odd - crate::linalg::binary_entropy(1.0 / 3.0)).abs() < 1e-12);
        let u3 = corpus::unit(3, 4).unwrap();
        assert!((upper_level(&u3, &th, 3, None).unwrap().best_value - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn pruned_and_unpruned_agree() {
        let w = corpus::w_state(4).unwrap();
        let th = theta("AB:0.4,A:0.3,B:0.3", 4);
        let a = feasible_tuples(&w, &th, 3, None, true).unwrap().1;
        let b = feasible_tuples(&w, &th, 3, None, false).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn order_validation() {
        let u = corpus::unit(2, 4).unwrap();
        let crossing = theta("AB:0.5,AD:0.5", 4);
        assert_eq!(upper_level(&u, &crossing, 2, None).err(), Some(Error::OrderRequired));
        let ab: Bipartition = "AB|CD".parse().unwrap();
        assert!(matches!(upper_level(&u, &crossing, 2, Some(&[ab])), Err(Error::Order(_))));
        assert!(matches!(upper_level(&u, &theta("AB:1", 4), 7, None), Err(Error::LevelCap { .. })));
    }
}
