//! Shared test oracles, written independently of the library under test.
//!
//! The reference integrator is a classic fixed-step 4th-order Runge–Kutta
//! loop — deliberately different machinery from the adaptive embedded pair in
//! the library — run at step counts where its `O(h⁴)` error is far below the
//! tolerances being asserted. The model right-hand sides are restated here
//! from scratch so that an error in the library's formulation cannot be
//! reproduced by construction.

#![allow(dead_code)] // each integration-test binary uses a subset

/// Classic RK4 with `n` fixed steps from `t0` to `t1`; returns `y(t1)`.
pub fn rk4<F>(rhs: F, y0: &[f64], t0: f64, t1: f64, n: usize) -> Vec<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let h = (t1 - t0) / n as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut tmp = vec![0.0; dim];
    for step in 0..n {
        let t = t0 + step as f64 * h;
        rhs(t, &y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Plain model parameters for the oracles (kept as scalars on purpose).
#[derive(Clone, Copy)]
pub struct OracleParams {
    pub a: f64,
    pub i: f64,
    pub kappa: f64,
    pub sigma_d: f64,
    pub sigma_yp: f64,
}

impl OracleParams {
    pub fn baseline() -> Self {
        OracleParams { a: 1.0, i: 10.0, kappa: 5.0, sigma_d: 1.0, sigma_yp: 10.0 }
    }

    pub fn d0(&self) -> f64 {
        2.0 * self.i * self.kappa + self.a * self.sigma_d * self.sigma_d
    }
}

/// Right-hand side of the 7-state tracker-model reduced system in reversed
/// time: `[z1, z2, ∫z2, ∫z1z2/(D0+aσ²z1²), ∫f23, ∫ff, ∫f33]`.
pub fn tracker_core_rhs(p: OracleParams) -> impl Fn(f64, &[f64], &mut [f64]) {
    let OracleParams { a, i, kappa, sigma_d, sigma_yp } = p;
    let sd2 = sigma_d * sigma_d;
    let s2 = sigma_yp * sigma_yp;
    let d0 = p.d0();
    move |s: f64, y: &[f64], dy: &mut [f64]| {
        let (z1, z2) = (y[0], y[1]);
        let den = d0 + a * s2 * z1 * z1;
        dy[0] = 2.0 * a * kappa * sd2 / d0 * s - 4.0 * a * kappa * i * s2 * z1 * z2 / den;
        dy[1] = 2.0 * kappa * z1 / d0
            - 2.0 * a * s2 * (d0 * d0 + a * s2 * z1 * z1 * (a * sd2 + 4.0 * kappa * i)) * z2
                * z2
                / (den * den);
        dy[2] = z2;
        dy[3] = z1 * z2 / den;
        dy[4] = (4.0 * i * i * kappa * kappa * kappa / (d0 * d0) - kappa) * s * s
            + 8.0 * a * i * i * kappa * kappa * s2 / d0 * y[3];
        dy[5] = 4.0 * a * a * i * i * kappa * s2 * s2 * z1 * z1 * z2 * z2 / (den * den);
        dy[6] = y[4] + y[5];
    }
}

/// Right-hand side of the 3-state pinned-noise reduced system in reversed
/// time: `[z1, z2, ∫z2]`.
pub fn pinned_core_rhs(p: OracleParams) -> impl Fn(f64, &[f64], &mut [f64]) {
    let OracleParams { a, i, sigma_d, sigma_yp, .. } = p;
    let sd2 = sigma_d * sigma_d;
    let s2 = sigma_yp * sigma_yp;
    move |s: f64, y: &[f64], dy: &mut [f64]| {
        let (z1, z2) = (y[0], y[1]);
        dy[0] = a * sd2 / i * s - 2.0 * a * s2 * z1 * z2;
        dy[1] = z1 / i - 2.0 * a * s2 * z2 * z2;
        dy[2] = z2;
    }
}

/// Composite-Simpson quadrature of `f` over `[lo, hi]` with `2n` panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let m = 2 * n;
    let h = (hi - lo) / m as f64;
    let mut acc = f(lo) + f(hi);
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + j as f64 * h);
    }
    acc * h / 3.0
}
