//! Bipartitions of the party set and probability distributions on them.
//!
//! Parties are numbered `0..k` internally and printed as letters `A..Z`.
//! Sides are bitmasks; a [`Bipartition`] is stored by its canonical side,
//! the one containing party `0`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported party count (letters `A..Z`).
pub const MAX_PARTIES: usize = 26;

/// Bitmask of all `k` parties.
pub fn full_mask(k: usize) -> u32 {
    if k >= 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

/// Parties of a side mask in ascending order.
pub fn mask_parties(mask: u32) -> Vec<usize> {
    (0..32).filter(|&j| mask & (1 << j) != 0).collect()
}

pub fn mask_letters(mask: u32) -> String {
    mask_parties(mask).into_iter().map(party_letter).collect()
}

pub fn party_letter(j: usize) -> char {
    (b'A' + j as u8) as char
}

/// Parses a side such as `"ABD"` into a mask; letters may repeat only once.
pub fn parse_side(s: &str, offset: usize) -> Result<u32> {
    let mut mask = 0u32;
    if s.is_empty() {
        return Err(Error::Parse { pos: offset, msg: "empty party set".into() });
    }
    for (i, ch) in s.char_indices() {
        if !ch.is_ascii_uppercase() {
            return Err(Error::Parse { pos: offset + i, msg: format!("expected a party letter A-Z, got `{ch}`") });
        }
        let bit = 1u32 << (ch as u8 - b'A');
        if mask & bit != 0 {
            return Err(Error::Parse { pos: offset + i, msg: format!("party `{ch}` repeated") });
        }
        mask |= bit;
    }
    Ok(mask)
}

/// Unordered pair `{S, S̄}` of nonempty complementary party sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    k: u8,
    side: u32,
}

impl Bipartition {
    /// Bipartition with `side` as one of its two sides (either one).
    pub fn from_mask(k: usize, side: u32) -> Result<Self> {
        if !(2..=MAX_PARTIES).contains(&k) {
            return Err(Error::Bipartition(format!("party count {k} outside 2..={MAX_PARTIES}")));
        }
        let full = full_mask(k);
        if side & !full != 0 {
            return Err(Error::Bipartition(format!("side {} uses parties beyond {k}", mask_letters(side))));
        }
        if side == 0 || side == full {
            return Err(Error::Bipartition("both sides must be nonempty".into()));
        }
        let side = if side & 1 == 1 { side } else { full & !side };
        Ok(Bipartition { k: k as u8, side })
    }

    /// From a list of (0-based) parties forming one side.
    pub fn new(k: usize, parties: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        for &p in parties {
            if p >= k {
                return Err(Error::Bipartition(format!("party {p} out of range for k={k}")));
            }
            mask |= 1 << p;
        }
        Bipartition::from_mask(k, mask)
    }

    /// From a letter side such as `"AB"`.
    pub fn from_letters(k: usize, side: &str) -> Result<Self> {
        Bipartition::from_mask(k, parse_side(side, 0)?)
    }

    /// Singleton bipartition `{j} | rest`.
    pub fn singleton(k: usize, j: usize) -> Result<Self> {
        Bipartition::new(k, &[j])
    }

    pub fn parties(&self) -> usize {
        self.k as usize
    }

    /// Canonical side (contains party 0).
    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn complement(&self) -> u32 {
        full_mask(self.parties()) & !self.side
    }

    /// The side with the smaller total dimension for the given shape
    /// (canonical side on ties).
    pub fn smaller_side(&self, shape: &[usize]) -> u32 {
        let dim = |m: u32| -> usize { mask_parties(m).iter().map(|&j| shape[j]).product() };
        if dim(self.complement()) < dim(self.side) {
            self.complement()
        } else {
            self.side
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.side.count_ones() == 1 || self.complement().count_ones() == 1
    }

    /// Whether some side of `self` is contained in some side of `other`.
    pub fn is_mutually_laminar(&self, other: &Bipartition) -> bool {
        let subset = |a: u32, b: u32| a & !b == 0;
        [self.side, self.complement()]
            .iter()
            .any(|&a| [other.side, other.complement()].iter().any(|&b| subset(a, b)))
    }

    /// Whether one side of `self` contains all of `set`.
    pub fn has_side_containing(&self, set: u32) -> bool {
        set & !self.side == 0 || set & !self.complement() == 0
    }

    /// All bipartitions of `k` parties, ordered by canonical mask.
    pub fn all(k: usize) -> Vec<Bipartition> {
        let full = full_mask(k);
        (1..full).filter(|m| m & 1 == 1).map(|m| Bipartition { k: k as u8, side: m }).collect()
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", mask_letters(self.side), mask_letters(self.complement()))
    }
}

impl FromStr for Bipartition {
    type Err = Error;

    /// Parses `"AB|CD"` (both sides spelled out; `k` is the letter count).
    fn from_str(s: &str) -> Result<Self> {
        let (left, right) = s
            .split_once('|')
            .ok_or_else(|| Error::Parse { pos: 0, msg: format!("expected `SIDE|SIDE`, got `{s}`") })?;
        let a = parse_side(left, 0)?;
        let b = parse_side(right, left.len() + 1)?;
        let k = (a | b).count_ones() as usize;
        if a & b != 0 || a | b != full_mask(k) {
            return Err(Error::Parse { pos: 0, msg: format!("`{s}` does not split A..{}", party_letter(k.max(1) - 1)) });
        }
        Bipartition::from_mask(k, a)
    }
}

impl Serialize for Bipartition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bipartition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Weighting `θ` on the bipartitions of `k` parties.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartitionDistribution {
    k: usize,
    weights: BTreeMap<Bipartition, f64>,
}

impl BipartitionDistribution {
    /// Builds from `(bipartition, weight)` pairs; repeated bipartitions add
    /// up, zero weights are dropped. Weights must be nonnegative and sum to
    /// one within `1e-12`.
    pub fn new(k: usize, entries: impl IntoIterator<Item = (Bipartition, f64)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (b, w) in entries {
            if b.parties() != k {
                return Err(Error::PartyMismatch { left: b.parties(), right: k });
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Distribution(format!("weight {w} on {b} is not a nonnegative number")));
            }
            if w > 0.0 {
                *weights.entry(b).or_insert(0.0) += w;
            }
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Distribution(format!("weights sum to {total}, expected 1")));
        }
        Ok(BipartitionDistribution { k, weights })
    }

    /// Point mass on one bipartition.
    pub fn delta(b: Bipartition) -> Self {
        BipartitionDistribution { k: b.parties(), weights: BTreeMap::from([(b, 1.0)]) }
    }

    /// Uniform weight on the `k` singleton bipartitions.
    pub fn uniform_singletons(k: usize) -> Result<Self> {
        let w = 1.0 / k as f64;
        let entries: Result<Vec<_>> = (0..k).map(|j| Ok((Bipartition::singleton(k, j)?, w))).collect();
        Self::new(k, entries?)
    }

    /// Parses `"AB:0.5,A:0.125,..."` for `k` parties.
    pub fn parse(spec: &str, k: usize) -> Result<Self> {
        let mut entries = Vec::new();
        let mut pos = 0;
        for term in spec.split(',') {
            let (side, weight) = term
                .split_once(':')
                .ok_or_else(|| Error::Parse { pos, msg: format!("expected `SIDE:weight`, got `{term}`") })?;
            let side_trim = side.trim();
            let side_pos = pos + (side.len() - side.trim_start().len());
            let mask = parse_side(side_trim, side_pos)?;
            if mask & !full_mask(k) != 0 {
                return Err(Error::Parse { pos: side_pos, msg: format!("side `{side_trim}` names parties beyond k={k}") });
            }
            let w: f64 = weight.trim().parse().map_err(|_| Error::Parse {
                pos: pos + side.len() + 1,
                msg: format!("invalid weight `{}`", weight.trim()),
            })?;
            let b = Bipartition::from_mask(k, mask).map_err(|e| Error::Parse { pos: side_pos, msg: e.to_string() })?;
            entries.push((b, w));
            pos += term.len() + 1;
        }
        Self::new(k, entries)
    }

    pub fn parties(&self) -> usize {
        self.k
    }

    pub fn weight(&self, b: &Bipartition) -> f64 {
        self.weights.get(b).copied().unwrap_or(0.0)
    }

    /// Support with weights, in canonical bipartition order.
    pub fn iter(&self) -> impl Iterator<Item = (&Bipartition, &f64)> {
        self.weights.iter()
    }

    pub fn support(&self) -> Vec<Bipartition> {
        self.weights.keys().copied().collect()
    }

    /// A pair of support bipartitions that is not mutually laminar, if any.
    pub fn laminar_witness(&self) -> Option<(Bipartition, Bipartition)> {
        let s = self.support();
        for (i, a) in s.iter().enumerate() {
            for b in &s[i + 1..] {
                if !a.is_mutually_laminar(b) {
                    return Some((*a, *b));
                }
            }
        }
        None
    }

    pub fn is_laminar(&self) -> bool {
        self.laminar_witness().is_none()
    }

    pub fn is_singleton_supported(&self) -> bool {
        self.weights.keys().all(Bipartition::is_singleton)
    }

    /// Restriction to the first `l` parties: each support bipartition `T`
    /// contributes its weight to `T ∩ [l]` when that is a proper nonempty
    /// subset; the result is renormalized by the total contributing weight
    /// `C`, which is returned alongside.
    pub fn restricted(&self, l: usize) -> Result<(BipartitionDistribution, f64)> {
        if l < 1 || l >= self.k {
            return Err(Error::Parameter(format!("restriction length {l} must lie in 1..{}", self.k)));
        }
        let lmask = full_mask(l);
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        let mut c = 0.0;
        for (b, &w) in &self.weights {
            let s = b.side() & lmask;
            if s != 0 && s != lmask {
                // both sides of T restrict to complementary sides of [l]
                let canon = if s & 1 == 1 { s } else { lmask & !s };
                *acc.entry(canon).or_insert(0.0) += w;
                c += w;
            }
        }
        if c <= 0.0 || acc.is_empty() {
            return Err(Error::DegenerateRestriction);
        }
        let mut weights = BTreeMap::new();
        for (m, w) in acc {
            weights.insert(Bipartition { k: l as u8, side: m }, w / c);
        }
        // renormalize exactly so the sum invariant survives rounding
        let total: f64 = weights.values().sum();
        for w in weights.values_mut() {
            *w /= total;
        }
        Ok((BipartitionDistribution { k: l, weights }, c))
    }
}

impl fmt::Display for BipartitionDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.weights.iter().map(|(b, w)| format!("{}:{}", mask_letters(b.side()), w)).collect();
        write!(f, "{}", terms.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(k: usize, s: &str) -> Bipartition {
        Bipartition::from_letters(k, s).unwrap()
    }

    #[test]
    fn canonical_representative() {
        assert_eq!(bp(4, "AB"), bp(4, "CD"));
        assert_eq!(bp(4, "BC").to_string(), "AD|BC");
        assert_eq!(bp(4, "D").side(), 0b0111);
        assert!(Bipartition::from_mask(4, 0).is_err());
        assert!(Bipartition::from_mask(4, 0b1111).is_err());
        assert!(Bipartition::from_mask(4, 0b10000).is_err());
        assert_eq!(Bipartition::all(4).len(), 7);
        assert_eq!("AB|CD".parse::<Bipartition>().unwrap(), bp(4, "AB"));
        assert!("AB|BD".parse::<Bipartition>().is_err());
    }

    #[test]
    fn laminar_examples() {
        let ok = BipartitionDistribution::parse("AB:0.2,C:0.2,ABC:0.2,E:0.2,DE:0.2", 5).unwrap();
        assert!(ok.is_laminar());
        let bad = BipartitionDistribution::parse("AB:0.5,BCD:0.5", 5).unwrap();
        let (x, y) = bad.laminar_witness().unwrap();
        assert_eq!((x, y), (bp(5, "AB"), bp(5, "BCD")));
        assert!(BipartitionDistribution::delta(bp(4, "AC")).is_laminar());
    }

    #[test]
    fn parse_errors_carry_positions() {
        match BipartitionDistribution::parse("AB:0.5,A1:0.5", 4) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("{other:?}"),
        }
        assert!(matches!(BipartitionDistribution::parse("AB:0.4", 4), Err(Error::Distribution(_))));
        assert!(BipartitionDistribution::parse("AE:1", 4).is_err());
        let d = BipartitionDistribution::parse("AB:0.5,A:0.125,B:0.125,C:0.125,D:0.125", 4).unwrap();
        assert_eq!(d.support().len(), 5);
        assert_eq!(d.weight(&bp(4, "CD")), 0.5);
    }

    #[test]
    fn restriction_examples() {
        let (r, c) = BipartitionDistribution::delta(bp(4, "AB")).restricted(3).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(r, BipartitionDistribution::delta(bp(3, "AB")));

        let th = BipartitionDistribution::parse("AB:0.5,D:0.5", 4).unwrap();
        let (r, c) = th.restricted(3).unwrap();
        assert_eq!(c, 0.5);
        assert_eq!(r, BipartitionDistribution::delta(bp(3, "C")));

        assert_eq!(
            BipartitionDistribution::delta(bp(4, "AB")).restricted(2),
            Err(Error::DegenerateRestriction)
        );
    }
}
