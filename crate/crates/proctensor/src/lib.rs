//! Process tensors for open quantum dynamics: construction from dilated
//! system-environment evolution, instrument-specific memory strength via
//! conditional mutual information, process recovery, and the associated
//! recoverability bounds, together with two exactly solvable models.

pub mod eig;
pub mod error;
pub mod haar;
pub mod instrument;
pub mod legs;
pub mod matrix;
pub mod process;
pub mod qinfo;

pub use error::{Error, Result};
pub use legs::{Leg, LegId, LegLayout, LegRole};
pub use matrix::{C64, ComplexMatrix};
pub use qinfo::DensityOperator;
