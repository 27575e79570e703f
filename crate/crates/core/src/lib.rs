//! Exact finite-volume grand-canonical ensembles for diagonal Bose-gas models
//! and the matching thermodynamic-limit formulas.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod modes;
pub mod oracle;
pub mod partition;
pub mod quad;
pub mod special;
pub mod thermolimit;

pub use error::{Error, Result};
