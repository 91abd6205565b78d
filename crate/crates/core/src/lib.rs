//! Recovery certificates for sparse recovery with nonconvex sparsity-promoting
//! penalties: scale and elasticity machinery, null-space-constant and RIC
//! bounds, exact small-matrix analysis, and reproducible experiment pipelines.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod grid;
pub mod holder;
pub mod rng;
pub mod spf;

pub use error::{Error, Result};
pub use spf::{Family, Measure, SparsityFunction};
