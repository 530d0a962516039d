//! Equilibrium with an optimizing noise tracker.
//!
//! `I` CARA investors trade against one tracker who maximizes expected
//! terminal wealth minus the running penalty `κ∫(θ_t − Y_t)² dt`. The
//! equilibrium price is affine in the state, `S_t = D_t + μ(t) + α(t)Y_t +
//! β(t)Y'_t`, the investors' indirect utility is exponential in wealth plus a
//! quadratic form `G` in `(Y, Y')`, and the tracker's value is wealth plus a
//! quadratic form `F`. With `D0 := 2Iκ + aσ_D²` and `s := 1 − t`, every
//! coefficient reduces to the workhorse pair `(z1, z2)` solving
//!
//! ```text
//! z1' = (2aκσ_D²/D0)·s − 4aκIσ² z1 z2 / (D0 + aσ² z1²),            z1(0) = 0,
//! z2' = 2κ z1/D0 − 2aσ² (D0² + aσ² z1² (aσ_D² + 4κI)) z2²
//!                                     / (D0 + aσ² z1²)²,            z2(0) = 0,
//! ```
//!
//! via `β(t) = z1(s)`, `g33(t) = z2(s)`, plus closed forms
//!
//! ```text
//! α   = (2aκσ_D²/D0)·s            μ   = −Σ·α
//! g22 = (2aκ²σ_D²/D0²)·s          g2  = −2Σ·g22
//! g23 = (2κ/D0)·z1(s)             g3  = −Σ·g23
//! f2  = (4aIκ²σ_D²Σ/D0²)·s        f22 = (4I²κ³/D0² − κ)·s
//! ```
//!
//! and quadratures (appended to the IVP as extra states)
//!
//! ```text
//! g1  = (2aκ²σ_D²Σ²/D0²)·s + σ²·∫₀ˢ z2
//! f3  = (2aIκ²σ_D²Σ/D0²)·s² + (4a²IκΣσ_D²σ²/D0)·∫₀ˢ z1 z2/(D0 + aσ² z1²)
//! f23 = (4I²κ³/D0² − κ)·s² + (8aI²κ²σ²/D0)·∫₀ˢ z1 z2/(D0 + aσ² z1²)
//! f33 = ∫₀ˢ f23 + ∫₀ˢ 4a²I²κσ⁴ z1² z2²/(D0 + aσ² z1²)²
//! f1  = (a²κσ_D⁴Σ²/D0²)·s + σ²·∫₀ˢ f33
//! ```
//!
//! The equilibrium holdings, with `Δ̃(t) := aσ_D² + aσ²β² + 2Iκ`, are
//!
//! ```text
//! θ̂_j = 2κ(Σ − Y)/D0 − 2aσ²β g33 Y'/Δ̃        (each investor)
//! θ̂_N = (2IκY + aσ_D²Σ)/D0 + 2aIσ²β g33 Y'/Δ̃  (tracker)
//! ```
//!
//! which clear the market exactly: `I·θ̂_j + θ̂_N = Σ`.

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
/// Index of `∫₀ˢ z1 z2/(D0 + aσ² z1²)` (feeds `f3` and `f23`).
pub const Q_K: usize = 3;
/// Index of `∫₀ˢ f23` (feeds `f33`).
pub const Q_F23: usize = 4;
/// Index of `∫₀ˢ 4a²I²κσ⁴ z1² z2²/(D0 + aσ² z1²)²` (feeds `f33`).
pub const Q_FF: usize = 5;
/// Index of `∫₀ˢ f33` (feeds `f1`).
pub const Q_F33: usize = 6;
/// Dimension of the augmented core system.
pub const DIM: usize = 7;

// --- Core solve ----------------------------------------------------------------

/// Solves the reduced system (with quadrature states) at tolerance `tol`.
pub fn solve_core(params: &ModelParams, tol: f64) -> Result<CoreSolution, Error> {
    params.validate()?;
    let a = params.a;
    let i = params.i_f64();
    let kappa = params.kappa;
    let sd2 = params.sigma_d * params.sigma_d;
    let s2 = params.sigma_yp * params.sigma_yp;
    let d0 = params.d0();

    let z1_slope = 2.0 * a * kappa * sd2 / d0;
    let curvature_num = a * sd2 + 4.0 * kappa * i;
    let e_f22 = 4.0 * i * i * kappa.powi(3) / (d0 * d0) - kappa;
    let c_f23 = 8.0 * a * i * i * kappa * kappa * s2 / d0;
    let ff_scale = 4.0 * a * a * i * i * kappa * s2 * s2;

    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| {
        let z1 = y[Z1];
        let z2 = y[Z2];
        let denom = d0 + a * s2 * z1 * z1;
        dy[Z1] = z1_slope * s - 4.0 * a * kappa * i * s2 * z1 * z2 / denom;
        dy[Z2] = 2.0 * kappa * z1 / d0
            - 2.0 * a * s2 * (d0 * d0 + a * s2 * z1 * z1 * curvature_num) * z2 * z2
                / (denom * denom);
        dy[Q_G33] = z2;
        dy[Q_K] = z1 * z2 / denom;
        dy[Q_F23] = e_f22 * s * s + c_f23 * y[Q_K];
        dy[Q_FF] = ff_scale * z1 * z1 * z2 * z2 / (denom * denom);
        dy[Q_F33] = y[Q_F23] + y[Q_FF];
    };

    let sol = ode::integrate(&IvpSpec {
        dimension: DIM,
        rhs,
        y0: vec![0.0; DIM],
        t_span: (0.0, 1.0),
        rel_tol: tol,
        abs_tol: tol,
    })?;

    let c1 = a * kappa * sd2 / d0;
    let c2 = 2.0 * a * kappa * kappa * sd2 / (3.0 * d0 * d0);
    Ok(CoreSolution::new(sol, tol, c1, c2))
}

// --- Coefficients ----------------------------------------------------------------

/// Every price, strategy, and value coefficient of the tracker equilibrium,
/// as functions of `t ∈ [0, 1]`.
pub struct EndogenousCoefficients {
    params: ModelParams,
    core: CoreSolution,
    // Closed-form multipliers (see the module docs).
    c_alpha: f64,
    c_g22: f64,
    c_g23: f64,
    a_g1: f64,
    a_f1: f64,
    a_f2: f64,
    a_f3: f64,
    c_f3: f64,
    e_f22: f64,
    c_f23: f64,
    s2: f64,
    d0: f64,
}

/// Solves the core system and assembles the coefficient table.
pub fn solve(params: &ModelParams, tol: f64) -> Result<EndogenousCoefficients, Error> {
    let core = solve_core(params, tol)?;
    build_coefficients(params, core)
}

/// Assembles coefficients from an already-solved core system.
pub fn build_coefficients(
    params: &ModelParams,
    core: CoreSolution,
) -> Result<EndogenousCoefficients, Error> {
    params.validate()?;
    let a = params.a;
    let i = params.i_f64();
    let kappa = params.kappa;
    let sd2 = params.sigma_d * params.sigma_d;
    let s2 = params.sigma_yp * params.sigma_yp;
    let sigma = params.supply;
    let d0 = params.d0();
    let d0sq = d0 * d0;

    Ok(EndogenousCoefficients {
        c_alpha: 2.0 * a * kappa * sd2 / d0,
        c_g22: 2.0 * a * kappa * kappa * sd2 / d0sq,
        c_g23: 2.0 * kappa / d0,
        a_g1: 2.0 * a * kappa * kappa * sd2 * sigma * sigma / d0sq,
        a_f1: a * a * kappa * sd2 * sd2 * sigma * sigma / d0sq,
        a_f2: 4.0 * a * i * kappa * kappa * sd2 * sigma / d0sq,
        a_f3: 2.0 * a * i * kappa * kappa * sd2 * sigma / d0sq,
        c_f3: 4.0 * a * a * i * kappa * sigma * sd2 * s2 / d0,
        e_f22: 4.0 * i * i * kappa.powi(3) / d0sq - kappa,
        c_f23: 8.0 * a * i * i * kappa * kappa * s2 / d0,
        s2,
        d0,
        params: params.clone(),
        core,
    })
}

/// Maps model time `t ∈ [0, 1]` to reversed time `s`, with the same
/// 1e-12 domain slack the dense solution grants.
fn reversed(t: f64) -> Result<f64, Error> {
    if !(-1e-12..=1.0 + 1e-12).contains(&t) {
        return Err(Error::OutOfDomain { t, lo: 0.0, hi: 1.0 });
    }
    Ok((1.0 - t).clamp(0.0, 1.0))
}

impl EndogenousCoefficients {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn core(&self) -> &CoreSolution {
        &self.core
    }

    // -- price coefficients --

    /// Price loading on `Y`: `α(t) = (2aκσ_D²/D0)(1 − t)`.
    pub fn alpha(&self, t: f64) -> Result<f64, Error> {
        Ok(self.c_alpha * reversed(t)?)
    }

    /// Price loading on `Y'`: `β(t) = z1(1 − t)`.
    pub fn beta(&self, t: f64) -> Result<f64, Error> {
        self.core.z1(reversed(t)?)
    }

    /// Price intercept: `μ(t) = −Σ·α(t)`.
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
        Ok(-self.params.supply * self.c_g23 * self.core.z1(s)?)
    }

    pub fn g22(&self, t: f64) -> Result<f64, Error> {
        Ok(self.c_g22 * reversed(t)?)
    }

    pub fn g23(&self, t: f64) -> Result<f64, Error> {
        Ok(self.c_g23 * self.core.z1(reversed(t)?)?)
    }

    pub fn g33(&self, t: f64) -> Result<f64, Error> {
        self.core.z2(reversed(t)?)
    }

    // -- tracker value coefficients --

    pub fn f1(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(self.a_f1 * s + self.s2 * self.core.quadrature(Q_F33, s)?)
    }

    pub fn f2(&self, t: f64) -> Result<f64, Error> {
        Ok(self.a_f2 * reversed(t)?)
    }

    pub fn f3(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(self.a_f3 * s * s + self.c_f3 * self.core.quadrature(Q_K, s)?)
    }

    pub fn f22(&self, t: f64) -> Result<f64, Error> {
        Ok(self.e_f22 * reversed(t)?)
    }

    pub fn f23(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(self.e_f22 * s * s + self.c_f23 * self.core.quadrature(Q_K, s)?)
    }

    pub fn f33(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(self.core.quadrature(Q_F23, s)? + self.core.quadrature(Q_FF, s)?)
    }

    // -- time derivatives --
    //
    // Closed-form pieces are differentiated analytically; integral-bearing
    // pieces use the dense interpolant's derivative, so substituting these
    // into the equilibrium ODE system yields a residual that honestly
    // reflects the integrator's accuracy (it is not zero by construction).

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
        Ok(self.params.supply * self.c_g23 * self.core.z1_prime(s)?)
    }

    pub fn g22_prime(&self, t: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok(-self.c_g22)
    }

    pub fn g23_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-self.c_g23 * self.core.z1_prime(s)?)
    }

    pub fn g33_prime(&self, t: f64) -> Result<f64, Error> {
        Ok(-self.core.z2_prime(reversed(t)?)?)
    }

    pub fn f1_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-self.a_f1 - self.s2 * self.core.quadrature_prime(Q_F33, s)?)
    }

    pub fn f2_prime(&self, t: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok(-self.a_f2)
    }

    pub fn f3_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-2.0 * self.a_f3 * s - self.c_f3 * self.core.quadrature_prime(Q_K, s)?)
    }

    pub fn f22_prime(&self, t: f64) -> Result<f64, Error> {
        reversed(t)?;
        Ok(-self.e_f22)
    }

    pub fn f23_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-2.0 * self.e_f22 * s - self.c_f23 * self.core.quadrature_prime(Q_K, s)?)
    }

    pub fn f33_prime(&self, t: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        Ok(-self.core.quadrature_prime(Q_F23, s)? - self.core.quadrature_prime(Q_FF, s)?)
    }

    // -- strategies --

    /// `Δ̃(t) = aσ_D² + aσ²β(t)² + 2Iκ`, the investor's conditional price
    /// variance rate times `a`.
    pub fn delta_tilde(&self, t: f64) -> Result<f64, Error> {
        let beta = self.beta(t)?;
        Ok(self.d0 + self.params.a * self.s2 * beta * beta)
    }

    /// Equilibrium investor holding `θ̂_j(t, Y, Y')`.
    pub fn investor_strategy(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        let p = &self.params;
        let beta = self.core.z1(s)?;
        let g33 = self.core.z2(s)?;
        let delta = self.d0 + p.a * self.s2 * beta * beta;
        Ok(2.0 * p.kappa * (p.supply - y) / self.d0
            - 2.0 * p.a * self.s2 * beta * g33 * yp / delta)
    }

    /// Equilibrium tracker holding `θ̂_N(t, Y, Y')`.
    pub fn tracker_strategy(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        let s = reversed(t)?;
        let p = &self.params;
        let beta = self.core.z1(s)?;
        let g33 = self.core.z2(s)?;
        let delta = self.d0 + p.a * self.s2 * beta * beta;
        Ok((2.0 * p.i_f64() * p.kappa * y + p.a * p.sigma_d * p.sigma_d * p.supply) / self.d0
            + 2.0 * p.a * p.i_f64() * self.s2 * beta * g33 * yp / delta)
    }

    /// Drift correction `aσ²(βθ̂_j + g3 + 2Y'g33 + Yg23)` that turns `Y'`
    /// into its dynamics under the investor's wealth-neutral measure.
    pub fn yp_drift_shift(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        let p = &self.params;
        Ok(p.a
            * self.s2
            * (self.beta(t)? * self.investor_strategy(t, y, yp)?
                + self.g3(t)?
                + 2.0 * yp * self.g33(t)?
                + y * self.g23(t)?))
    }

    // -- value functions --

    /// Quadratic form `G(t, Y, Y') = g1 + g2Y + g3Y' + g22Y² + g23YY' + g33Y'²`.
    pub fn investor_g(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        Ok(self.g1(t)?
            + self.g2(t)? * y
            + self.g3(t)? * yp
            + self.g22(t)? * y * y
            + self.g23(t)? * y * yp
            + self.g33(t)? * yp * yp)
    }

    /// Investor indirect utility `V(t, x, Y, Y') = −exp(−a(x + G))`,
    /// saturated to finite values (never NaN).
    pub fn investor_value(&self, t: f64, x: f64, y: f64, yp: f64) -> Result<f64, Error> {
        Ok(neg_exp_utility(self.params.a, x + self.investor_g(t, y, yp)?))
    }

    /// Quadratic form `F(t, Y, Y') = f1 + f2Y + f3Y' + f22Y² + f23YY' + f33Y'²`.
    pub fn tracker_f(&self, t: f64, y: f64, yp: f64) -> Result<f64, Error> {
        Ok(self.f1(t)?
            + self.f2(t)? * y
            + self.f3(t)? * yp
            + self.f22(t)? * y * y
            + self.f23(t)? * y * yp
            + self.f33(t)? * yp * yp)
    }

    /// Tracker value `V_N(t, x, Y, Y') = x + F(t, Y, Y')` (risk neutral).
    pub fn tracker_value(&self, t: f64, x: f64, y: f64, yp: f64) -> Result<f64, Error> {
        Ok(x + self.tracker_f(t, y, yp)?)
    }

    /// `∫₀¹ g33(t) dt`, the quantity welfare comparisons hinge on.
    pub fn g33_integral(&self) -> Result<f64, Error> {
        self.core.quadrature(Q_G33, 1.0)
    }
}

// --- Tests -------------------------------------------------------------------------
