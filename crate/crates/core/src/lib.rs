// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod error;
pub mod geo;
pub mod harness;
pub mod proximity;
pub mod query;
pub mod seeds;
pub mod sybilrank;
pub mod tracker;
pub mod traffic;
pub mod world;

pub use error::{Error, Result};
