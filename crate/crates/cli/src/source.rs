use std::path::Path;

use tqf_core::bipartition::{full_mask, parse_side};
use tqf_core::{Bipartition, BipartitionDistribution, Error, NamedTensorSpec, Result, Tensor};

/// Loads a tensor from a named spec (`sp:p=0.5`) or a JSON file path.
pub fn load_tensor(source: &str) -> Result<Tensor> {
    let path = Path::new(source);
    let t = if source.ends_with(".json") || path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parameter(format!("cannot read {source}: {e}")))?;
        Tensor::from_json(&text)?
    } else {
        source.parse::<NamedTensorSpec>()?.build()?
    };
    t.require_nonzero()?;
    Ok(t)
}

/// A bipartition written as one side (`AB`) or both (`AB|CD`).
pub fn parse_bipartition(s: &str, k: usize) -> Result<Bipartition> {
    let s = s.trim();
    if s.contains('|') {
        let b: Bipartition = s.parse()?;
        if b.parties() != k {
            return Err(Error::PartyMismatch { left: b.parties(), right: k });
        }
        return Ok(b);
    }
    let side = parse_side(s, 0)?;
    if side & !full_mask(k) != 0 {
        return Err(Error::Bipartition(format!("side `{s}` names a party beyond {k}")));
    }
    Bipartition::from_mask(k, side)
}

/// Comma-separated projector order, leftmost written first.
pub fn parse_order(s: &str, k: usize) -> Result<Vec<Bipartition>> {
    s.split(',').map(|item| parse_bipartition(item, k)).collect()
}

pub fn parse_theta(s: &str, k: usize) -> Result<BipartitionDistribution> {
    BipartitionDistribution::parse(s, k)
}

/// The cut for determinant quantities: an explicit bipartition, or the point
/// mass of a one-entry distribution spec.
pub fn parse_cut(s: &str, k: usize) -> Result<Bipartition> {
    if !s.contains(':') {
        return parse_bipartition(s, k);
    }
    let theta = parse_theta(s, k)?;
    match theta.support().as_slice() {
        [b] => Ok(*b),
        _ => Err(Error::Parameter(format!("`{s}` is not a single bipartition"))),
    }
}

/// Substitutes `value` for the `$` placeholder of a sweep template.
pub fn instantiate(template: &str, value: f64) -> Result<NamedTensorSpec> {
    if template.matches('$').count() != 1 {
        return Err(Error::Parse {
            pos: template.find('$').unwrap_or(0),
            msg: "sweep template needs exactly one `$` placeholder".into(),
        });
    }
    template.replace('$', &format!("{value:?}")).parse()
}
