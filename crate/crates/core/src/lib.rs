// `!(x > 0.0)` is used on purpose: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod black_scholes;
pub mod bootstrap;
pub mod calibrate;
pub mod descriptive;
pub mod error;
pub mod fbm;
pub mod market;
pub mod model;
pub mod pricer;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
