//! Equilibrium with a hard-wired noise trader.
//!
//! Identical market to the tracker variant except the noise agent's holding
//! is pinned to the target, `θ_N,t = Y_t`, with no optimization and no
//! penalty. Market clearing then forces each investor to hold
//! `θ̂_j = (Σ − Y)/I` outright, and the equilibrium involves only the
//! investors' value coefficients. With `s := 1 − t` the core pair solves
//!
//! ```text
//! z1' = (aσ_D²/I)·s − 2aσ² z1 z2,       z1(0) = 0,
//! z2' = z1/I − 2aσ² z2²,                z2(0) = 0,
//! ```
//!
//! with `β(t) = z1(s)`, `g33(t) = z2(s)`, closed forms
//!
//! ```text
//! α   = (aσ_D²/I)·s          μ  = −Σ·α
//! g22 = (aσ_D²/2I²)·s        g2 = −2Σ·g22
//! g23 = z1(s)/I              g3 = −Σ·g23
//! ```
//!
//! and one quadrature `g1 = (aσ_D²Σ²/2I²)·s + σ²·∫₀ˢ z2`.
//!
//! None of this depends on the tracking penalty `κ`; the parameter is
//! accepted (shared [`ModelParams`]) but inert here.

use crate::core_ivp::{neg_exp_utility, CoreSolution};
use crate::error::Error;
use crate::ode::{self, IvpSpec};
use crate::params::ModelParams;

// --- Core state layout -------------------------------------------------------

/// Index of `z1` (price loading on `Y'`, reversed time).
pub const Z1: usize = 0;
/// Index of `z2` (investor value curvature in `Y'`, reversed time).
pub const Z2: usize = 1;
/// Index of `∫₀ˢ z2` (feeds `g1`).
pub const Q_G33: usize = 2;
/// Dimension of the augmented core system.
pub const DIM: usize = 3;

// --- Core solve ----------------------------------------------------------------

/// Solves the reduced system (with its quadrature state) at tolerance `tol`.
pub fn solve_core(params: &ModelParams, tol: f64) -> Result<CoreSolution, Error> {
    params.validate()?;
    let a = params.a;
    let i = params.i_f64();
    let sd2 = params.sigma_d * params.sigma_d;
    let s2 = params.sigma_yp * params.sigma_yp;

    let z1_slope = a * sd2 / i;
    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| {
        let z1 = y[Z1];
        let z2 = y[Z2];
        dy[Z1] = z1_slope * s - 2.0 * a * s2 * z1 * z2;
        dy[Z2] = z1 / i - 2.0 * a * s2 * z2 * z2;
        dy[Q_G33] = z2;
    };

    let sol = ode::integrate(&IvpSpec {
        dimension: DIM,
        rhs,
        y0: vec![0.0; DIM],
        t_span: (0.0, 1.0),
        rel_tol: tol,
        abs_tol: tol,
    })?;

    let c1 = a * sd2 / (2.0 * i);
    let c2 = a * sd2 / (6.0 * i * i);
    Ok(CoreSolution::new(sol, tol, c1, c2))
}

// --- Coefficients ----------------------------------------------------------------

/// Price and investor-value coefficients of the pinned-noise equilibrium.
pub struct ExogenousCoefficients {
    params: ModelParams,
    core: CoreSolution,
    c_alpha: f64,
    c_g22: f64,
    a_g1: f64,
    s2: f64,
}

/// Solves the core system and assembles the coefficient table.
pub fn solve(params: &ModelParams, tol: f64) -> Result<ExogenousCoefficients, Error> {
    let core = solve_core(params, tol)?;
    build_coefficients(params, core)
}

/// Assembles coefficients from an already-solved core system.
pub fn build_coefficients(
    params: &ModelParams,
    core: CoreSolution,
) -> Result<ExogenousCoefficients, Error> {
    params.validate()?;
    let a = params.a;
    let i = params.i_f64();
    let sd2 = params.sigma_d * params.sigma_d;
    let sigma = params.supply;

    Ok(ExogenousCoefficients {
        c_alpha: a * sd2 / i,
        c_g22: a * sd2 / (2.0 * i * i),
        a_g1: a * sd2 * sigma * sigma / (2.0 * i * i),
        s2: params.sigma_yp * params.sigma_yp,
        params: params.clone(),
        core,
    })
}

/// Maps model time `t ∈ [0, 1]` to reversed time `s` (1e-12 slack).
fn reversed(t: f64) -> Result<f64, Error> {
    if !(-1e-12..=1.0 + 1e-12).contains(&t) {
        return Err(Error::OutOfDomain { t, lo: 0.0, hi: 1.0 });
    }
    Ok((1.0 - t).clamp(0.0, 1.0))
}

impl ExogenousCoefficients {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn core(&self) -> &CoreSolution {
        &self.core
    }

    // -- price coefficients --

    /// `α(t) = (aσ_D²/I)(1 − t)`.
    pub fn alpha(&self, t: f64) -> Result<f64, Error> {
        Ok(self.c_alpha * reversed(t)?)
    }

    /// `β(t) = z1(1 − t)`.
    pub fn beta(&self, t: f64) -> Result<f64, Error> {
        self.core.z1(reversed(t)?)
    }

    /// `μ(t) = −Σ·α(t)`.
    pub fn mu(&self, t: f64) -> Result<f64, Error> {
        Ok(-self.params.supply * self.c_alpha * reversed(t)?)
    }

    /// Equilibrium price `S = D + μ + αY + βY'`.
    pub fn stock_price(&self, t: f64, d: f64, y: f64, yp: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(d - self.params.supply * self.c_alpha * s
            + self.c_alpha * s * y
            + self.core.z1(s)? * yp)
    }

    // -- investor value coefficients --

    pub fn g1(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(self.a_g1 * s + self.s2 * self.core.quadrature(Q_G33, s)?)
    }

    pub fn g2(&self, t: f64) -> Result<f64, Error> {
        Ok(-2.0 * self.params.supply * self.c_g22 * reversed(t)?)
    }

    pub fn g3(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-self.params.supply * self.core.z1(s)? / self.params.i_f64())
    }

    pub fn g22(&self, t: f64) -> Result<f64, Error> {
        Ok(self.c_g22 * reversed(t)?)
    }

    pub fn g23(&self, t: f64) -> Result<f64, Error> {
        Ok(self.core.z1(reversed(t)?)? / self.params.i_f64())
    }

    pub fn g33(&self, t: f64) -> Result<f64, Error> {
        self.core.z2(reversed(t)?)
    }

    // -- time derivatives (analytic for closed forms, interpolant for the rest) --

    pub fn alpha_prime(&self, t: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok(-self.c_alpha)
    }

    pub fn beta_prime(&self, t: f64) -> Result<f64, Error> {
        Ok(-self.core.z1_prime(reversed(t)?)?)
    }

    pub fn mu_prime(&self, t: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok(self.params.supply * self.c_alpha)
    }

    pub fn g1_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-self.a_g1 - self.s2 * self.core.quadrature_prime(Q_G33, s)?)
    }

    pub fn g2_prime(&self, t: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok(2.0 * self.params.supply * self.c_g22)
    }

    pub fn g3_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(self.params.supply * self.core.z1_prime(s)? / self.params.i_f64())
    }

    pub fn g22_prime(&self, t: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok(-self.c_g22)
    }

    pub fn g23_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-self.core.z1_prime(s)? / self.params.i_f64())
    }

    pub fn g33_prime(&self, t: f64) -> Result<f64, Error> {
        Ok(-self.core.z2_prime(reversed(t)?)?)
    }

    // -- strategy and values --

    /// Investor holding forced by clearing: `θ̂_j = (Σ − Y)/I`.
    pub fn investor_strategy(&self, t: f64, y: f64, _yp: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok((self.params.supply - y) / self.params.i_f64())
    }

    /// Quadratic form `G(t, Y, Y')` in the investor's indirect utility.
    pub fn investor_g(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        Ok(self.g1(t)?
            + self.g2(t)? * y
            + self.g3(t)? * yp
            + self.g22(t)? * y * y
            + self.g23(t)? * y * yp
            + self.g33(t)? * yp * yp)
    }

    /// Investor indirect utility `V = −exp(−a(x + G))`, saturated.
    pub fn investor_value(&self, t: f64, x: f64, y: f64, yp: f64) -> Result<f64, Error> {
        Ok(neg_exp_utility(self.params.a, x + self.investor_g(t, y, yp)?))
    }

    /// `∫₀¹ g33(t) dt`.
    pub fn g33_integral(&self) -> Result<f64, Error> {
        self.core.quadrature(Q_G33, 1.0)
    }
}

// --- Tests -------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> ExogenousCoefficients {
        solve(&ModelParams::baseline(), 1e-10).expect("baseline solve")
    }

    #[test]
    fn test_degenerate_slope_volatility_gives_simple_polynomials() {
        // Baseline with σ_Y' = 0: z1 = s²/20 and z2 = s³/600 exactly.
        let mut p = ModelParams::baseline();
        p.sigma_yp = 0.0;
        let core = solve_core(&p, 1e-10).expect("degenerate solve");
        for j in 0..=100 {
            let s = j as f64 / 100.0;
            assert!(
                (core.z1(s).unwrap() - s * s / 20.0).abs() < 1e-12,
                "z1({s}) must equal s²/20"
            );
            assert!(
                (core.z2(s).unwrap() - s * s * s / 600.0).abs() < 1e-12,
                "z2({s}) must equal s³/600"
            );
        }
    }

    #[test]
    fn test_terminal_coefficients_vanish_exactly() {
        let c = baseline();
        for (name, v) in [
            ("alpha", c.alpha(1.0).unwrap()),
            ("beta", c.beta(1.0).unwrap()),
            ("mu", c.mu(1.0).unwrap()),
            ("g1", c.g1(1.0).unwrap()),
            ("g2", c.g2(1.0).unwrap()),
            ("g3", c.g3(1.0).unwrap()),
            ("g22", c.g22(1.0).unwrap()),
            ("g23", c.g23(1.0).unwrap()),
            ("g33", c.g33(1.0).unwrap()),
        ] {
            assert_eq!(v, 0.0, "{name}(1) must vanish exactly");
        }
        assert_eq!(c.stock_price(1.0, -0.75, 1.0, 2.0).unwrap(), -0.75);
    }

    #[test]
    fn test_clearing_with_pinned_noise_holding() {
        let c = baseline();
        for &(t, y) in &[(0.0, 0.0), (0.3, 1.7), (0.9, -4.0)] {
            let total = 10.0 * c.investor_strategy(t, y, 0.0).unwrap() + y;
            assert!(
                (total - 1.0).abs() < 1e-12,
                "I·θ̂_j + Y = {total} must equal Σ at (t, Y) = ({t}, {y})"
            );
        }
    }

    #[test]
    fn test_kappa_is_inert() {
        // The pinned-noise equilibrium never sees the penalty rate.
        let mut p_lo = ModelParams::baseline();
        p_lo.kappa = 1.0;
        let mut p_hi = ModelParams::baseline();
        p_hi.kappa = 1e6;
        let lo = solve(&p_lo, 1e-10).unwrap();
        let hi = solve(&p_hi, 1e-10).unwrap();
        for j in 0..=20 {
            let t = j as f64 / 20.0;
            assert_eq!(
                lo.beta(t).unwrap().to_bits(),
                hi.beta(t).unwrap().to_bits(),
                "beta must be bit-identical across kappa"
            );
            assert_eq!(lo.g1(t).unwrap().to_bits(), hi.g1(t).unwrap().to_bits());
        }
    }

    #[test]
    fn test_proportionality_between_beta_and_g23() {
        let c = baseline();
        for j in 0..=50 {
            let t = j as f64 / 50.0;
            let lhs = c.g23(t).unwrap() * c.params().i_f64();
            let rhs = c.beta(t).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-16 * rhs.abs().max(1.0),
                "I·g23 must equal beta at t = {t}"
            );
        }
    }

    #[test]
    fn test_time_domain_is_enforced() {
        let c = baseline();
        assert!(matches!(c.g33(-0.01), Err(Error::OutOfDomain { .. })));
        assert!(matches!(c.stock_price(1.01, 0.0, 0.0, 0.0), Err(Error::OutOfDomain { .. })));
        assert!(c.alpha(1.0 + 1e-13).is_ok(), "slack endpoint evaluation");
    }
}
