//! Geometric-side evaluation of averaged twisted special values and explicit
//! certification of the error terms in the sharpened Duke estimate.

pub mod arith;
pub mod bounds;
pub mod characters;
pub mod cli;
pub mod error;
pub mod kloosterman;
pub mod petersson;
pub mod special;

pub use error::{Error, Hypothesis, Result};
