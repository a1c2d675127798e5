use serde::{Deserialize, Serialize};

use crate::bipartition::Bipartition;
use crate::error::{Error, Result};

/// Solver settings shared by the functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Gradient-norm (lower) or moment-residual (capacity) stopping threshold.
    pub tol: f64,
    pub max_iters: usize,
    /// Random starts in addition to the identity start.
    pub restarts: usize,
    pub seed: u64,
    pub level_n: usize,
    /// Projector order as written in the product, leftmost first; the last
    /// entry is applied first.
    pub order: Option<Vec<Bipartition>>,
}

impl Default for Options {
    fn default() -> Self {
        Options { tol: 1e-8, max_iters: 10_000, restarts: 8, seed: 0, level_n: 4, order: None }
    }
}

impl Options {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse { pos: e.column().saturating_sub(1), msg: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("options serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut o = Options::default();
        o.order = Some(vec!["AB|CD".parse().unwrap(), "BC|AD".parse().unwrap()]);
        o.seed = 7;
        let s = o.to_json();
        assert!(s.contains(r#""order":["AB|CD","AD|BC"]"#), "{s}");
        assert_eq!(Options::from_json(&s).unwrap(), o);
        assert_eq!(Options::from_json(r#"{"restarts":2}"#).unwrap().restarts, 2);
        assert!(Options::from_json(r#"{"bogus":1}"#).is_err());
    }
}
