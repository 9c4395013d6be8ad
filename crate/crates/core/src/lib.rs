//! Sharp asymptotic time-uniform confidence sequences for a location
//! parameter, the anytime-valid sequential tests dual to them, Monte Carlo
//! critical values, and a simulation harness checking their guarantees.
//!
//! The sequence at time `t` is the open interval
//!
//! ```text
//! mu_hat_t +/- sigma_hat_t * c_alpha(rho) * sqrt(m) / (t * rho(t / m))
//! ```
//!
//! where `rho` is a [`boundary::BoundaryShape`], `m` the burn-in scale and
//! `c_alpha(rho)` the `(1 - alpha)`-quantile of `sup_y |rho(y) W(y)|` for a
//! standard Wiener process `W` (see [`quantiles`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod estimators;
pub mod quantiles;
pub mod rng;
pub mod sequence;
pub mod simulate;
pub mod stats;

pub use boundary::{boundary_width, rho_eval, validate_shape, BoundaryShape};
pub use error::{Error, Result};
pub use estimators::{BurnIn, StreamState, VarianceMethod};
pub use quantiles::{critical_value, CriticalValue, Sided};
pub use sequence::{interval, test_one_sided, test_two_sided, Direction, IntervalRecord, TestVerdict};
