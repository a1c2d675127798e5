//! Named tensors and the standard embedding.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::bipartition::{full_mask, mask_letters, parse_side};
use crate::error::{Error, Result};
use crate::linalg::ONE;
use crate::symmetric::{permutation_sign, Permutations};
use crate::tensor::Tensor;

fn check_k(k: usize, min: usize) -> Result<()> {
    if k < min || k > crate::bipartition::MAX_PARTIES {
        return Err(Error::Parameter(format!("party count {k} outside {min}..=26")));
    }
    Ok(())
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Parameter(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// `Σ_{i<n} e_i^{⊗k}`.
pub fn unit(n: usize, k: usize) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::Parameter("unit tensor rank must be at least 1".into()));
    }
    check_k(k, 2)?;
    let entries: Vec<_> = (0..n).map(|i| (vec![i; k], ONE)).collect();
    Tensor::from_sparse(vec![n; k], &entries)
}

/// Rank-2 unit tensor on the legs in `side`; all other legs have dimension 1.
pub fn unit2_on_subset(side: u32, k: usize) -> Result<Tensor> {
    check_k(k, 2)?;
    if side == 0 || side & !full_mask(k) != 0 {
        return Err(Error::Parameter(format!("subset {side:#b} is not a nonempty subset of {k} legs")));
    }
    let shape: Vec<usize> = (0..k).map(|j| if side >> j & 1 == 1 { 2 } else { 1 }).collect();
    let ones: Vec<usize> = shape.iter().map(|&d| d - 1).collect();
    Tensor::from_sparse(shape, &[(vec![0; k], ONE), (ones, ONE)])
}

/// Unnormalized W-state: sum of all weight-one basis vectors of `(C²)^{⊗k}`.
pub fn w_state(k: usize) -> Result<Tensor> {
    check_k(k, 2)?;
    let entries: Vec<_> = (0..k)
        .map(|i| {
            let mut idx = vec![0; k];
            idx[i] = 1;
            (idx, ONE)
        })
        .collect();
    Tensor::from_sparse(vec![2; k], &entries)
}

/// The unit-norm 4-party qubit tensor with AB|CD spectrum `(p/2, p/2, (1-p)/2, (1-p)/2)`.
pub fn s_p(p: f64) -> Result<Tensor> {
    check_unit_interval("p", p)?;
    let a = Complex64::new((p / 2.0).sqrt(), 0.0);
    let b = Complex64::new(((1.0 - p) / 2.0).sqrt(), 0.0);
    Tensor::from_sparse(
        vec![2; 4],
        &[(vec![0, 0, 0, 0], a), (vec![1, 1, 1, 1], a), (vec![0, 1, 0, 1], b), (vec![1, 0, 1, 0], b)],
    )
}

/// Bell vectors in the order Φ₊, Φ₋, Ψ₊, Ψ₋, as 2x2 coefficient arrays.
fn bell(which: usize) -> [[f64; 2]; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match which {
        0 => [[s, 0.0], [0.0, s]],
        1 => [[s, 0.0], [0.0, -s]],
        2 => [[0.0, s], [s, 0.0]],
        _ => [[0.0, s], [-s, 0.0]],
    }
}

/// Werner-state purification: `√(1-γ) Ψ₋Ψ₋ + √(γ/3)(Φ₊Φ₊ + Φ₋Φ₋ + Ψ₊Ψ₊)`
/// with the first factor on AB and the second on CD.
pub fn q_gamma(gamma: f64) -> Result<Tensor> {
    check_unit_interval("gamma", gamma)?;
    let coeffs = [(0, (gamma / 3.0).sqrt()), (1, (gamma / 3.0).sqrt()), (2, (gamma / 3.0).sqrt()), (3, (1.0 - gamma).sqrt())];
    Tensor::from_fn(vec![2; 4], |i| {
        let v: f64 = coeffs.iter().map(|&(w, c)| c * bell(w)[i[0]][i[1]] * bell(w)[i[2]][i[3]]).sum();
        Complex64::new(v, 0.0)
    })
}

/// Absolutely maximally entangled 4-qutrit tensor on legs A..D, padded with
/// `k - 4` trivial legs.
pub fn ame_l(k: usize) -> Result<Tensor> {
    check_k(k, 4)?;
    let mut shape = vec![3; 4];
    shape.resize(k, 1);
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let mut entries = Vec::with_capacity(9);
    for l in 0..3 {
        for m in 0..3 {
            let mut idx = vec![l, m, (l + m) % 3, (l + 2 * m) % 3];
            idx.resize(k, 0);
            entries.push((idx, third));
        }
    }
    Tensor::from_sparse(shape, &entries)
}

/// `e_1 ∧ … ∧ e_k` with entries `sgn(π)` at permutation indices.
pub fn det_tensor(k: usize) -> Result<Tensor> {
    if !(2..=6).contains(&k) {
        return Err(Error::Parameter(format!("determinant tensor needs 2 <= k <= 6, got {k}")));
    }
    let entries: Vec<_> = Permutations::new(k)
        .map(|p| {
            let s = permutation_sign(&p) as f64;
            (p, Complex64::new(s, 0.0))
        })
        .collect();
    Tensor::from_sparse(vec![k; k], &entries)
}

/// Places the legs of `t` at `positions` (0-based) among `k` legs; every other
/// leg has dimension 1.
pub fn embed(t: &Tensor, k: usize, positions: &[usize]) -> Result<Tensor> {
    check_k(k, 1)?;
    if positions.len() != t.parties() || t.parties() > k {
        return Err(Error::Parameter(format!(
            "{} positions given for a {}-party tensor embedded into {k} parties",
            positions.len(),
            t.parties()
        )));
    }
    let mut seen = vec![false; k];
    for &p in positions {
        if p >= k || seen[p] {
            return Err(Error::Parameter(format!("invalid or repeated embedding position {p}")));
        }
        seen[p] = true;
    }
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by_key(|&i| positions[i]);
    let sorted = t.permute_legs(&order)?;
    let mut shape = vec![1; k];
    for (i, &p) in positions.iter().enumerate() {
        shape[p] = t.shape()[i];
    }
    Tensor::new(shape, sorted.into_data())
}

/// A named constructor with its parameters, as written on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedTensorSpec {
    Unit { n: usize, k: usize },
    Unit2OnSubset { side: u32, k: usize },
    W { k: usize },
    Sp { p: f64 },
    QGamma { gamma: f64 },
    AmeL { k: usize },
    Det { k: usize },
}

impl NamedTensorSpec {
    pub fn build(&self) -> Result<Tensor> {
        match *self {
            NamedTensorSpec::Unit { n, k } => unit(n, k),
            NamedTensorSpec::Unit2OnSubset { side, k } => unit2_on_subset(side, k),
            NamedTensorSpec::W { k } => w_state(k),
            NamedTensorSpec::Sp { p } => s_p(p),
            NamedTensorSpec::QGamma { gamma } => q_gamma(gamma),
            NamedTensorSpec::AmeL { k } => ame_l(k),
            NamedTensorSpec::Det { k } => det_tensor(k),
        }
    }

    /// Number of parties of the built tensor.
    pub fn parties(&self) -> usize {
        match *self {
            NamedTensorSpec::Unit { k, .. }
            | NamedTensorSpec::Unit2OnSubset { k, .. }
            | NamedTensorSpec::W { k }
            | NamedTensorSpec::AmeL { k }
            | NamedTensorSpec::Det { k } => k,
            NamedTensorSpec::Sp { .. } | NamedTensorSpec::QGamma { .. } => 4,
        }
    }

    pub const NAMES: [&'static str; 7] = ["unit", "unit2S", "w", "sp", "qgamma", "ameL", "det"];
}

struct Params<'a> {
    items: Vec<(&'a str, &'a str, usize)>,
}

impl<'a> Params<'a> {
    fn parse(s: &'a str, offset: usize) -> Result<Self> {
        let mut items = Vec::new();
        let mut pos = offset;
        for item in s.split(',') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse { pos, msg: format!("expected key=value, got `{item}`") })?;
            items.push((key.trim(), value.trim(), pos + key.len() + 1));
            pos += item.len() + 1;
        }
        Ok(Params { items })
    }

    fn raw(&self, key: &str, end: usize) -> Result<(&'a str, usize)> {
        self.items
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|&(_, v, p)| (v, p))
            .ok_or_else(|| Error::Parse { pos: end, msg: format!("missing parameter `{key}`") })
    }

    fn get<T: FromStr>(&self, key: &str, end: usize) -> Result<T> {
        let (v, p) = self.raw(key, end)?;
        v.parse().map_err(|_| Error::Parse { pos: p, msg: format!("invalid value `{v}` for `{key}`") })
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for &(k, _, p) in &self.items {
            if !allowed.contains(&k) {
                return Err(Error::Parse { pos: p - k.len() - 1, msg: format!("unknown parameter `{k}`") });
            }
        }
        Ok(())
    }
}

impl FromStr for NamedTensorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let offset = name.len() + 1;
        let end = s.len();
        let params = if rest.is_empty() { Params { items: vec![] } } else { Params::parse(rest, offset)? };
        let spec = match name {
            "unit" => {
                params.check_keys(&["n", "k"])?;
                NamedTensorSpec::Unit { n: params.get("n", end)?, k: params.get("k", end)? }
            }
            "unit2S" => {
                params.check_keys(&["S", "k"])?;
                let (side, p) = params.raw("S", end)?;
                NamedTensorSpec::Unit2OnSubset { side: parse_side(side, p)?, k: params.get("k", end)? }
            }
            "w" => {
                params.check_keys(&["k"])?;
                NamedTensorSpec::W { k: params.get("k", end)? }
            }
            "sp" => {
                params.check_keys(&["p"])?;
                NamedTensorSpec::Sp { p: params.get("p", end)? }
            }
            "qgamma" => {
                params.check_keys(&["g"])?;
                NamedTensorSpec::QGamma { gamma: params.get("g", end)? }
            }
            "ameL" => {
                params.check_keys(&["k"])?;
                NamedTensorSpec::AmeL { k: params.get("k", end)? }
            }
            "det" => {
                params.check_keys(&["k"])?;
                NamedTensorSpec::Det { k: params.get("k", end)? }
            }
            _ => {
                return Err(Error::Parse {
                    pos: 0,
                    msg: format!("unknown tensor `{name}`, expected one of {}", Self::NAMES.join(", ")),
                })
            }
        };
        Ok(spec)
    }
}

impl fmt::Display for NamedTensorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NamedTensorSpec::Unit { n, k } => write!(f, "unit:n={n},k={k}"),
            NamedTensorSpec::Unit2OnSubset { side, k } => write!(f, "unit2S:S={},k={k}", mask_letters(side)),
            NamedTensorSpec::W { k } => write!(f, "w:k={k}"),
            NamedTensorSpec::Sp { p } => write!(f, "sp:p={p}"),
            NamedTensorSpec::QGamma { gamma } => write!(f, "qgamma:g={gamma}"),
            NamedTensorSpec::AmeL { k } => write!(f, "ameL:k={k}"),
            NamedTensorSpec::Det { k } => write!(f, "det:k={k}"),
        }
    }
}
