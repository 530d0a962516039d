//! The reduced "core" system shared by both equilibrium variants.
//!
//! In reversed time `s = 1 − t` each equilibrium collapses to an autonomous
//! two-dimensional IVP for `(z1, z2)` started at the origin, where
//! `β(t) = z1(1 − t)` is the price loading on the target slope `Y'` and
//! `g33(t) = z2(1 − t)` is the investor value coefficient on `Y'²`. Every
//! remaining coefficient is either a closed form in `(1 − t)` or an integral
//! of core quantities, so the solvers append the needed integrands as extra
//! *quadrature states* and integrate once.
//!
//! Positivity and growth bounds: away from `s = 0` the true solution
//! satisfies `0 < z1 < c1·s²` and `0 < z2 < c2·s³` strictly whenever the
//! slope volatility is positive (with equality in the degenerate
//! `σ_Y' = 0` case), with model-specific constants `c1`, `c2`. The solver
//! records those constants so checks can be run without re-deriving them.

use crate::error::Error;
use crate::ode::DenseSolution;

/// Dense solution of a reduced core system in reversed time `s ∈ [0, 1]`,
/// together with its tolerance and growth-bound constants.
///
/// Component 0 is `z1`, component 1 is `z2`; any further components are
/// quadrature states whose meaning the owning model defines.
#[derive(Debug, Clone)]
pub struct CoreSolution {
    sol: DenseSolution,
    tol: f64,
    c1: f64,
    c2: f64,
}

impl CoreSolution {
    pub(crate) fn new(sol: DenseSolution, tol: f64, c1: f64, c2: f64) -> Self {
        CoreSolution { sol, tol, c1, c2 }
    }

    /// Price loading component `z1(s)`.
    pub fn z1(&self, s: f64) -> Result<f64, Error> {
        self.sol.eval_component(s, 0)
    }

    /// Value-curvature component `z2(s)`.
    pub fn z2(&self, s: f64) -> Result<f64, Error> {
        self.sol.eval_component(s, 1)
    }

    /// Interpolant derivative `z1'(s)`.
    pub fn z1_prime(&self, s: f64) -> Result<f64, Error> {
        self.sol.derivative_component(s, 0)
    }

    /// Interpolant derivative `z2'(s)`.
    pub fn z2_prime(&self, s: f64) -> Result<f64, Error> {
        self.sol.derivative_component(s, 1)
    }

    /// Value of the quadrature state stored at `index`.
    pub fn quadrature(&self, index: usize, s: f64) -> Result<f64, Error> {
        self.sol.eval_component(s, index)
    }

    /// Interpolant derivative of the quadrature state stored at `index`.
    pub fn quadrature_prime(&self, index: usize, s: f64) -> Result<f64, Error> {
        self.sol.derivative_component(s, index)
    }

    /// Tolerance (relative = absolute) the core solve was run at.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Constant of the quadratic growth bound `z1 < c1·s²`.
    pub fn bound_c1(&self) -> f64 {
        self.c1
    }

    /// Constant of the cubic growth bound `z2 < c2·s³`.
    pub fn bound_c2(&self) -> f64 {
        self.c2
    }

    /// The underlying dense solution (all components).
    pub fn solution(&self) -> &DenseSolution {
        &self.sol
    }
}

/// CARA utility `−exp(−a·w)` with the exponent clamped to ±700 so the result
/// is always finite and never NaN. The first clamped evaluation in a process
/// prints a note to stderr; repeated saturation is silent.
pub(crate) fn neg_exp_utility(a: f64, w: f64) -> f64 {
    use std::sync::atomic::{AtomicBool, Ordering};
    static WARNED: AtomicBool = AtomicBool::new(false);
    let mut exponent = -a * w;
    if exponent.is_nan() {
        exponent = 700.0; // utility of unboundedly bad wealth
    }
    if exponent.abs() > 700.0 {
        if !WARNED.swap(true, Ordering::Relaxed) {
            eprintln!(
                "note: exponential-utility exponent {exponent:.3e} exceeds ±700; \
                 saturating (reported utilities are clamped, not NaN)"
            );
        }
        exponent = exponent.clamp(-700.0, 700.0);
    }
    -exponent.exp()
}
