//! Adaptive accelerated optimization via closed-loop time scaling.
//!
//! The crate has two halves that mirror each other:
//!
//! * [`discrete`] — proximal algorithms whose step size `λ_k` is an explicit
//!   feedback of the iterate velocity `‖y_k − y_{k−1}‖` or of the gradient
//!   norm `‖∇f(y_k)‖` (the PEAS family), plus the inertial averaged variant.
//! * [`continuous`] — the matching ODE systems: rescaled steepest descent
//!   `ẏ = −τ̇ ∇f(y)` with the time scale `τ` driven in closed loop, the
//!   averaging equation producing `x(t)`, the equivalent second-order
//!   inertial form, and comparison baselines.
//!
//! [`objectives`] supplies smooth convex test problems with known minima,
//! [`prox`] the certified proximal operator they share, and [`analysis`]
//! the power-law rate fits and monotonicity/summability verdicts used to
//! check the expected convergence behaviour at desk scale. [`acceptance`]
//! bundles the canned verification runs behind `peas verify`.

// Validation deliberately writes `!(x > 0.0)` so NaN parameters are
// rejected along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analysis;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod objectives;
pub mod prox;
pub mod rng;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Scale constant used by the default tolerances: `1 + |f(x0)|` of the run's
/// starting point, so absolute thresholds stay meaningful across instances.
pub fn tolerance_scale(f_at_start: f64) -> f64 {
    1.0 + f_at_start.abs()
}
