//! Exact checks of negative dependence on `{0,1}^n`, the adaptive bounded-difference
//! martingale that follows from negative regression, and the resulting tail bounds.
//!
//! Every probability is an exact rational; floating point appears only when a bound
//! needs an exponential.

pub mod bits;
pub mod concentration;
pub mod coupling;
pub mod dependence;
pub mod error;
mod flow;
pub mod limits;
pub mod martingale;
pub mod measure;
pub mod rational;
pub mod upset;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use measure::{Assignment, ExplicitMeasure, TestFunction};
pub use num_rational::BigRational;
