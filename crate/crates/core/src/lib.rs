//! Orbit gluing on suspension flows over subshifts of finite type, with the
//! thermodynamic and large-deviation tools built on top of it.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod deviations;
pub mod error;
pub mod gluing;
pub mod linalg;
pub mod sft;
pub mod stats;
pub mod suspension;
pub mod thermo;

pub use error::{Error, Result};
