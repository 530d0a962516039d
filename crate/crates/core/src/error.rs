//! Crate-wide error type.
//!
//! One enum covers the integrator, the model constructors, and the
//! verification checks so that callers (in particular the CLI) can map every
//! failure to either "invalid input" or "a named check failed".

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation time lies outside the solution's domain by more than 1e-12.
    #[error("evaluation time {t} outside domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    /// The adaptive step fell below 1e-12 x span. For the equilibrium systems
    /// this signals a singularity and must not occur; it can occur for
    /// arbitrary user-supplied right-hand sides.
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// The right-hand side returned NaN or an infinity.
    #[error("right-hand side returned a non-finite value at t = {t}")]
    NonFiniteRhs { t: f64 },

    /// The integration problem itself is malformed (bad span, tolerances,
    /// dimensions). Lists every violation, not just the first.
    #[error("invalid integration problem: {}", .0.join("; "))]
    InvalidIvp(Vec<String>),

    /// Model-parameter invariants are violated. Lists every violation.
    #[error("invalid model parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    /// A differential-equation residual exceeded its tolerance.
    #[error("residual of equation `{equation}` is {residual:.3e} at t = {t} (tolerance {tol:.3e})")]
    ResidualExceedsTolerance {
        equation: String,
        t: f64,
        residual: f64,
        tol: f64,
    },

    /// An algebraic identity (pointwise optimizer, proportionality, ...) was
    /// violated beyond its tolerance.
    #[error("identity `{name}` deviates by {deviation:.3e} (tolerance {tol:.3e})")]
    IdentityViolation {
        name: String,
        deviation: f64,
        tol: f64,
    },

    /// Market clearing deviated beyond tolerance.
    #[error("market clearing deviates by {deviation:.3e} (tolerance {tol:.3e})")]
    ClearingViolation { deviation: f64, tol: f64 },

    /// A positivity/bound check on the core solution failed.
    #[error("bound violation: {what} at s = {s} (value {value:.6e}, bound {bound:.6e})")]
    BoundViolation {
        what: String,
        s: f64,
        value: f64,
        bound: f64,
    },

    /// A measure-change simulation was requested for a model that does not
    /// define the measure change.
    #[error("the drift-adjusted measure requires endogenous coefficients")]
    InvalidMeasure,

    /// The closed-form welfare difference requires `Y0 = Y'0 = 0`.
    #[error("welfare-difference formula requires Y0 = Y'0 = 0 (got Y0 = {y0}, Y'0 = {yp0})")]
    HypothesisViolation { y0: f64, yp0: f64 },
}
