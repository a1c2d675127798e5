//! Scripted reproductions of the separation and agreement claims.
//!
//! Every check returns a [`ClaimVerdict`] carrying the numbers it computed
//! next to the values (or bounds) they were compared against.

mod claims;
mod laminar;
mod w4;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub use claims::{
    embedding_identity_check, generic_separation_sample, lower_not_spectral_ingredients, semiring_spot_check,
    verify_crossing, verify_qgamma, verify_sp_separation,
};
pub use laminar::{random_laminar_distribution, recognition_roundtrip, recover_from_subset_values, subset_unit_value, unit_subset_formula};
pub use w4::{w4_constraint_check, w4_constraint_suite, w4_transform, w4_transform_suite, W4Point};

/// How a computed value is compared with its reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|computed - value| <= tolerance`
    Approx,
    /// `computed >= value - tolerance`
    AtLeast,
    /// `computed <= value + tolerance`
    AtMost,
    /// `computed > value`
    Greater,
    /// `computed < value`
    Less,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Expected {
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
}

impl Expected {
    pub fn holds(&self, computed: f64) -> bool {
        match self.relation {
            Relation::Approx => (computed - self.value).abs() <= self.tolerance,
            Relation::AtLeast => computed >= self.value - self.tolerance,
            Relation::AtMost => computed <= self.value + self.tolerance,
            Relation::Greater => computed > self.value,
            Relation::Less => computed < self.value,
        }
    }
}

/// Outcome of one scripted claim.
#[derive(Clone, Debug, Serialize)]
pub struct ClaimVerdict {
    pub claim_id: String,
    /// True iff every entry of `expected` holds for its computed value.
    pub passed: bool,
    /// Sampling checks report fractions and do not fail a suite.
    pub probabilistic: bool,
    pub computed: BTreeMap<String, f64>,
    pub expected: BTreeMap<String, Expected>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub runtime_ms: u64,
}

impl ClaimVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }

    /// Names of the expectations that do not hold.
    pub fn failures(&self) -> Vec<&str> {
        self.expected
            .iter()
            .filter(|(k, e)| !self.computed.get(*k).is_some_and(|&v| e.holds(v)))
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Accumulates computed values and expectations for one claim.
pub(crate) struct Recorder {
    id: &'static str,
    start: Instant,
    probabilistic: bool,
    computed: BTreeMap<String, f64>,
    expected: BTreeMap<String, Expected>,
    notes: Vec<String>,
}

impl Recorder {
    pub(crate) fn new(id: &'static str) -> Self {
        Recorder {
            id,
            start: Instant::now(),
            probabilistic: false,
            computed: BTreeMap::new(),
            expected: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub(crate) fn probabilistic(mut self) -> Self {
        self.probabilistic = true;
        self
    }

    pub(crate) fn record(&mut self, name: impl Into<String>, v: f64) {
        self.computed.insert(name.into(), v);
    }

    fn expect(&mut self, name: impl Into<String>, v: f64, value: f64, tolerance: f64, relation: Relation) {
        let name = name.into();
        self.computed.insert(name.clone(), v);
        self.expected.insert(name, Expected { value, tolerance, relation });
    }

    pub(crate) fn approx(&mut self, name: impl Into<String>, v: f64, value: f64, tol: f64) {
        self.expect(name, v, value, tol, Relation::Approx);
    }

    pub(crate) fn at_least(&mut self, name: impl Into<String>, v: f64, bound: f64, tol: f64) {
        self.expect(name, v, bound, tol, Relation::AtLeast);
    }

    pub(crate) fn at_most(&mut self, name: impl Into<String>, v: f64, bound: f64, tol: f64) {
        self.expect(name, v, bound, tol, Relation::AtMost);
    }

    pub(crate) fn greater(&mut self, name: impl Into<String>, v: f64, bound: f64) {
        self.expect(name, v, bound, 0.0, Relation::Greater);
    }

    pub(crate) fn less(&mut self, name: impl Into<String>, v: f64, bound: f64) {
        self.expect(name, v, bound, 0.0, Relation::Less);
    }

    /// A yes/no check, stored as 1 or 0 and expected to be 1.
    pub(crate) fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.approx(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0);
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub(crate) fn finish(self) -> ClaimVerdict {
        let passed = self.expected.iter().all(|(k, e)| self.computed.get(k).is_some_and(|&v| e.holds(v)));
        ClaimVerdict {
            claim_id: self.id.to_string(),
            passed,
            probabilistic: self.probabilistic,
            computed: self.computed,
            expected: self.expected,
            notes: self.notes,
            runtime_ms: self.start.elapsed().as_millis() as u64,
        }
    }
}

pub const CLAIM_IDS: [&str; 10] = [
    "sp-separation",
    "qgamma",
    "crossing",
    "unit-subset",
    "recognition",
    "w4-transform",
    "w4-constraints",
    "generic",
    "not-spectral",
    "embedding",
];

/// Runs a claim by id with its default parameters.
pub fn run_claim(id: &str) -> Result<ClaimVerdict> {
    use crate::bipartition::BipartitionDistribution as Dist;
    match id {
        "sp-separation" => verify_sp_separation(1.0 / 3.0, 0.5),
        "qgamma" => verify_qgamma(0.9),
        "crossing" => verify_crossing(4, 0.5),
        "unit-subset" => unit_subset_formula(&Dist::parse("AB:0.4,A:0.2,C:0.2,D:0.2", 4)?),
        "recognition" => recognition_roundtrip(&Dist::parse("AB:0.4,A:0.2,C:0.2,D:0.2", 4)?),
        "w4-transform" => w4_transform_suite(1000, 100, 0),
        "w4-constraints" => w4_constraint_suite(4),
        "generic" => generic_separation_sample(2, 50, 0),
        "not-spectral" => lower_not_spectral_ingredients(4),
        "embedding" => {
            let w3 = crate::corpus::w_state(3)?;
            embedding_identity_check(&w3, &Dist::parse("AB:0.5,C:0.5", 4)?, 4)
        }
        _ => Err(Error::UnknownClaim { id: id.to_string(), available: CLAIM_IDS.join(", ") }),
    }
}

/// Every registered claim, run in parallel, in registry order.
pub fn run_all() -> Result<Vec<ClaimVerdict>> {
    CLAIM_IDS.par_iter().map(|id| run_claim(id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        let e = Expected { value: 1.0, tolerance: 0.1, relation: Relation::Approx };
        assert!(e.holds(1.05) && !e.holds(1.2));
        assert!(Expected { value: 1.0, tolerance: 0.0, relation: Relation::Greater }.holds(1.0 + 1e-12));
        assert!(!Expected { value: 1.0, tolerance: 0.0, relation: Relation::Less }.holds(1.0));
        assert!(Expected { value: 1.0, tolerance: 0.1, relation: Relation::AtMost }.holds(1.05));
    }

    #[test]
    fn recorder_passes_only_when_all_hold() {
        let mut r = Recorder::new("sp-separation");
        r.approx("x", 1.0, 1.0, 0.0);
        r.record("info", f64::NAN);
        let v = r.finish();
        assert!(v.passed);
        let mut r = Recorder::new("qgamma");
        r.approx("x", 1.0, 1.0, 0.0);
        r.less("y", 2.0, 1.0);
        let v = r.finish();
        assert!(!v.passed);
        assert_eq!(v.failures(), vec!["y"]);
        let json = v.to_json();
        assert!(json.starts_with(r#"{"claim_id":"qgamma","passed":false"#), "{json}");
    }

    #[test]
    fn unknown_claim_lists_ids() {
        match run_claim("bogus") {
            Err(Error::UnknownClaim { id, available }) => {
                assert_eq!(id, "bogus");
                assert!(available.contains("crossing") && available.contains("embedding"));
            }
            other => panic!("{other:?}"),
        }
    }
}
