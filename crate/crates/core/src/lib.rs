//! Upper and lower quantum functionals of complex tensors.
//!
//! The crate computes flattening ranks, marginal entropies, isotypic
//! projections of Kronecker powers, level-`n` values of the upper
//! functional, orbit-optimized lower bounds for the lower functional,
//! capacities and determinant bounds, and scripted checks of the
//! separations between them.

pub mod bipartition;
pub mod corpus;
pub mod error;
pub mod functionals;
pub mod lab;
pub mod linalg;
pub mod marginal;
pub mod projector;
pub mod symmetric;
pub mod tensor;

pub use bipartition::{Bipartition, BipartitionDistribution};
pub use corpus::NamedTensorSpec;
pub use error::{Error, Result};
pub use functionals::{CapacityReport, Options, ScalingReport, ScalingStatus, UpperReport};
pub use lab::{ClaimVerdict, W4Point};
pub use linalg::CMatrix;
pub use marginal::DensityOperator;
pub use projector::PowerState;
pub use symmetric::{CycleType, Partition};
pub use tensor::Tensor;
