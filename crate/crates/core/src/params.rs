//! Model primitives shared by both equilibrium variants.
//!
//! The market has `I` identical CARA investors with risk aversion `a`, a
//! terminal dividend `D(1)` accumulated as `dD = σ_D dW`, and one additional
//! agent whose position is pulled toward a stochastic target `Y` with
//! `Y'' = σ_Y' dB` (so `Y` is the integral of a Brownian motion `Y'`). In the
//! first variant the extra agent is a *tracker* optimizing expected wealth
//! minus the quadratic penalty `κ∫(θ−Y)² dt`; in the second the target is
//! simply held (`θ_N = Y`) without optimization. Total share supply is `Σ`.

use crate::error::Error;

/// Parameters of the market model. All rates are per unit time on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of CARA investors, `I ≥ 1`.
    pub n_investors: u32,
    /// Common absolute risk aversion `a > 0`.
    pub a: f64,
    /// Dividend volatility `σ_D > 0`.
    pub sigma_d: f64,
    /// Volatility `σ_Y' ≥ 0` of the target's derivative process.
    pub sigma_yp: f64,
    /// Tracking penalty rate `κ > 0`.
    pub kappa: f64,
    /// Total share supply `Σ ≥ 0`.
    pub supply: f64,
    /// Initial target level `Y(0)`.
    pub y0: f64,
    /// Initial target slope `Y'(0)`.
    pub yp0: f64,
    /// Initial dividend level `D(0)` (only shifts the price path).
    pub d_init: f64,
    /// Pre-market investor holdings; market clearing at time `0−` requires
    /// `sum(theta0) + Y(0) = Σ`.
    pub theta0: Vec<f64>,
}

impl ModelParams {
    /// Reference calibration used throughout the test suite:
    /// `I = 10`, `a = 1`, `σ_D = 1`, `σ_Y' = 10`, `κ = 5`, `Σ = 1`,
    /// `Y(0) = Y'(0) = D(0) = 0`, uniform holdings.
    pub fn baseline() -> Self {
        let mut p = ModelParams {
            n_investors: 10,
            a: 1.0,
            sigma_d: 1.0,
            sigma_yp: 10.0,
            kappa: 5.0,
            supply: 1.0,
            y0: 0.0,
            yp0: 0.0,
            d_init: 0.0,
            theta0: Vec::new(),
        };
        p.set_uniform_holdings();
        p
    }

    /// Sets `theta0 = [(Σ − Y0)/I; I]`, the symmetric clearing allocation.
    pub fn set_uniform_holdings(&mut self) {
        let share = (self.supply - self.y0) / self.n_investors as f64;
        self.theta0 = vec![share; self.n_investors as usize];
    }

    /// Number of investors as a float.
    pub fn i_f64(&self) -> f64 {
        self.n_investors as f64
    }

    /// The constant `D0 := 2·I·κ + a·σ_D²`, the common denominator of the
    /// tracker-equilibrium closed forms.
    pub fn d0(&self) -> f64 {
        2.0 * self.i_f64() * self.kappa + self.a * self.sigma_d * self.sigma_d
    }

    /// Checks every invariant and reports *all* violations at once.
    pub fn validate(&self) -> Result<(), Error> {
        let mut problems = Vec::new();
        if self.n_investors == 0 {
            problems.push("n_investors must be at least 1".to_string());
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            problems.push(format!("a must be a positive real (got {})", self.a));
        }
        if !(self.sigma_d > 0.0 && self.sigma_d.is_finite()) {
            problems.push(format!("sigma_D must be a positive real (got {})", self.sigma_d));
        }
        if !(self.sigma_yp >= 0.0 && self.sigma_yp.is_finite()) {
            problems.push(format!(
                "sigma_Yp must be a nonnegative real (got {})",
                self.sigma_yp
            ));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            problems.push(format!("kappa must be a positive real (got {})", self.kappa));
        }
        if !(self.supply >= 0.0 && self.supply.is_finite()) {
            problems.push(format!("Sigma must be a nonnegative real (got {})", self.supply));
        }
        for (name, v) in [("Y0", self.y0), ("Yp0", self.yp0), ("D0", self.d_init)] {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite (got {v})"));
            }
        }
        if self.theta0.len() != self.n_investors as usize {
            problems.push(format!(
                "theta0 has {} entries but there are {} investors",
                self.theta0.len(),
                self.n_investors
            ));
        }
        if self.theta0.iter().any(|v| !v.is_finite()) {
            problems.push("theta0 contains a non-finite value".to_string());
        } else {
            let total: f64 = self.theta0.iter().sum::<f64>() + self.y0;
            if (total - self.supply).abs() > 1e-12 {
                problems.push(format!(
                    "initial clearing fails: sum(theta0) + Y0 = {total} but Sigma = {}",
                    self.supply
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems))
        }
    }
}
