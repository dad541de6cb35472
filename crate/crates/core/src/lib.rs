// `!(x > 0.0)` is used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cache;
pub mod cli;
pub mod dynamics;
pub mod eigensolve;
pub mod error;
pub mod model;
