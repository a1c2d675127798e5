//! Upper and lower functionals, capacity and the determinant bound.
//!
//! All entropies are in bits.

mod det;
mod lower;
mod options;
mod scaling;
mod upper;

pub use det::{c_psi, c_psi_with, det_bound, det_bound_with, entropy_max_with_det, entropy_max_with_det_oracle};
pub use lower::{lower_gradient, lower_local, lower_objective, ScalingReport, ScalingStatus};
pub use options::Options;
pub use scaling::{capacity, moment_map, CapacityReport, MomentMap};
pub use upper::{feasible_tuples, m_theta, upper_level, upper_level_unpruned, FeasibleTuple, UpperReport, DEFAULT_LEVEL};

use serde::Serializer;

use crate::linalg::CMatrix;

/// Serializes matrices as nested `[[re, im], ...]` row lists.
pub(crate) fn serialize_matrices<S: Serializer>(maps: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(maps.len()))?;
    for m in maps {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
        seq.serialize_element(&rows)?;
    }
    seq.end()
}
