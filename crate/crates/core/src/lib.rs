//! Numerical engine for a continuous-time Radner equilibrium with noise
//! trading, in two variants that share one verification surface:
//!
//! * **endogenous noise tracker** — the noise trader maximizes expected
//!   terminal wealth minus a quadratic tracking penalty `κ∫(θ_t − Y_t)² dt`
//!   against a noisy target `Y`, and her holdings are part of the fixed point;
//! * **exogenous noise trader** — the noise trader's holdings are pinned to
//!   `Y` by fiat (the `κ → ∞` limit of the endogenous model).
//!
//! Both equilibria reduce to a two-dimensional initial value problem in
//! reversed time `s = 1 − t` (the "core" system `(z1, z2)`), from which every
//! price and value-function coefficient follows either in closed form or by
//! linear quadrature. The crate computes the equilibria, substitutes them back
//! into every differential equation and algebraic identity they must satisfy,
//! verifies martingale/optimality claims by Monte Carlo, and compares
//! aggregate welfare (sum of certainty equivalents) across the two models.
//!
//! Module map:
//!
//! * [`ode`] — adaptive Dormand–Prince 5(4) integrator with 4th-order dense
//!   output and augmented quadrature states.
//! * [`core_ivp`] — the shared reduced-system solution type.
//! * [`params`] — validated model parameters.
//! * [`endogenous`] / [`exogenous`] — core IVP solves and coefficient
//!   construction for the two models.
//! * [`verification`] — residual and identity checks (the proof-by-computation
//!   surface).
//! * [`simulation`] — exact-Gaussian Monte Carlo paths, wealth/value
//!   processes, martingale and tracker-optimality statistics.
//! * [`welfare`] — certainty-equivalent aggregates, the welfare difference
//!   computed two independent ways, the supply threshold `Σ*`, and parameter
//!   sweeps.
//! * [`exec`] — data-parallel map over independent work items (rayon behind
//!   the `parallel` feature) with a bit-identical sequential fallback.

pub mod core_ivp;
pub mod endogenous;
pub mod error;
pub mod exec;
pub mod exogenous;
pub mod ode;
pub mod params;
pub mod simulation;
pub mod verification;
pub mod welfare;

pub use error::Error;
pub use params::ModelParams;

/// Default integrator tolerance (both relative and absolute) used by the
/// equilibrium solvers unless the caller overrides it. Downstream identity
/// checks assert at 1e-6..1e-8, so the solver runs two-plus orders tighter.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Which equilibrium model a set of coefficients belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Noise tracker chooses holdings optimally under a tracking penalty.
    Endogenous,
    /// Noise trader holds the target `Y` by definition.
    Exogenous,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Endogenous => write!(f, "endogenous"),
            ModelKind::Exogenous => write!(f, "exogenous"),
        }
    }
}

/// Equilibrium coefficients for either model, with a shared accessor surface
/// for the code paths (pricing, simulation, welfare) that treat the two models
/// uniformly. The `f·` tracker-value coefficients exist only in the
/// endogenous model.
pub enum Coefficients {
    Endogenous(endogenous::EndogenousCoefficients),
    Exogenous(exogenous::ExogenousCoefficients),
}

impl Coefficients {
    pub fn kind(&self) -> ModelKind {
        match self {
            Coefficients::Endogenous(_) => ModelKind::Endogenous,
            Coefficients::Exogenous(_) => ModelKind::Exogenous,
        }
    }

    pub fn alpha(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.alpha(t),
            Coefficients::Exogenous(c) => c.alpha(t),
        }
    }

    pub fn beta(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.beta(t),
            Coefficients::Exogenous(c) => c.beta(t),
        }
    }

    pub fn mu(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.mu(t),
            Coefficients::Exogenous(c) => c.mu(t),
        }
    }

    pub fn g1(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.g1(t),
            Coefficients::Exogenous(c) => c.g1(t),
        }
    }

    pub fn g2(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.g2(t),
            Coefficients::Exogenous(c) => c.g2(t),
        }
    }

    pub fn g3(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.g3(t),
            Coefficients::Exogenous(c) => c.g3(t),
        }
    }

    pub fn g22(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.g22(t),
            Coefficients::Exogenous(c) => c.g22(t),
        }
    }

    pub fn g23(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.g23(t),
            Coefficients::Exogenous(c) => c.g23(t),
        }
    }

    pub fn g33(&self, t: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.g33(t),
            Coefficients::Exogenous(c) => c.g33(t),
        }
    }

    /// Equilibrium stock price `S = D + μ(t) + α(t)·Y + β(t)·Y'`. The affine
    /// form is identical across the two models.
    pub fn stock_price(&self, t: f64, d: f64, y: f64, yp: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.stock_price(t, d, y, yp),
            Coefficients::Exogenous(c) => c.stock_price(t, d, y, yp),
        }
    }

    /// Per-investor equilibrium holding at state `(t, Y, Y')`.
    pub fn investor_strategy(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.investor_strategy(t, y, yp),
            Coefficients::Exogenous(c) => c.investor_strategy(t, y, yp),
        }
    }

    /// Noise-agent holding: the optimizing tracker's strategy in the
    /// endogenous model, and `Y` itself in the exogenous one.
    pub fn noise_strategy(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.tracker_strategy(t, y, yp),
            Coefficients::Exogenous(c) => {
                c.alpha(t)?; // domain check
                Ok(y)
            }
        }
    }

    /// Investor indirect utility `V(t, x, Y, Y') = −exp(−a(x + G(t, Y, Y')))`,
    /// saturated (never NaN, never ±∞).
    pub fn investor_value(&self, t: f64, x: f64, y: f64, yp: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.investor_value(t, x, y, yp),
            Coefficients::Exogenous(c) => c.investor_value(t, x, y, yp),
        }
    }

    /// Certainty-equivalent quadratic `G(t, Y, Y')` from the investor value.
    pub fn investor_g(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.investor_g(t, y, yp),
            Coefficients::Exogenous(c) => c.investor_g(t, y, yp),
        }
    }

    /// `∫₀¹ g33(t) dt` from the augmented quadrature state.
    pub fn g33_integral(&self) -> Result<f64, Error> {
        match self {
            Coefficients::Endogenous(c) => c.g33_integral(),
            Coefficients::Exogenous(c) => c.g33_integral(),
        }
    }

    /// Model parameters this equilibrium was built from.
    pub fn params(&self) -> &ModelParams {
        match self {
            Coefficients::Endogenous(c) => c.params(),
            Coefficients::Exogenous(c) => c.params(),
        }
    }

    /// The dense core solution `(z1, z2, quadrature states)` in reversed time.
    pub fn core(&self) -> &ode::DenseSolution {
        match self {
            Coefficients::Endogenous(c) => c.core().solution(),
            Coefficients::Exogenous(c) => c.core().solution(),
        }
    }
}

/// Canonical float serialization for CSV artifacts: 17 significant digits
/// (round-trip exact), with lowercase `nan`/`inf`/`-inf` for non-finite
/// values so emitted files are stable and machine-readable.
pub fn format_float17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Solves the requested equilibrium at tolerance `tol`.
pub fn solve(kind: ModelKind, params: &ModelParams, tol: f64) -> Result<Coefficients, Error> {
    match kind {
        ModelKind::Endogenous => Ok(Coefficients::Endogenous(endogenous::solve(params, tol)?)),
        ModelKind::Exogenous => Ok(Coefficients::Exogenous(exogenous::solve(params, tol)?)),
    }
}
