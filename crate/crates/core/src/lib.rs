//! Tensors, rank strata and explicit paths between points of a stratum.

pub mod certify;
pub mod classify;
pub mod error;
pub mod json;
pub mod linalg;
pub mod mrank;
pub mod path;
pub mod sample;
pub mod stratum;
pub mod subspace;
pub mod sym;
pub mod tensor;
pub mod tolerance;

pub use error::{Error, Result};
pub use tensor::{Field, Hypermatrix, Matrix, RankOneFactors, Vector, C64};
pub use tolerance::TolerancePolicy;
