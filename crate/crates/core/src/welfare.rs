//! Aggregate welfare (sum of investor certainty equivalents) for both
//! equilibria, the welfare difference computed two independent ways, the
//! supply threshold `Σ*`, and parameter sweeps.
//!
//! An investor with CARA utility and indirect value `−exp(−a(x + G))` has
//! certainty equivalent `x + G`, so the investors' aggregate welfare is
//!
//! ```text
//! W = S₀·(Σ − Y₀) + I·G(0, Y₀, Y'₀)
//! ```
//!
//! (the noise agent holds `Y₀` pre-trade, so investors jointly hold
//! `Σ − Y₀` shares priced at `S₀`). The welfare *difference* between the
//! tracker and pinned models is computed along two routes that the theory
//! proves identical when `Y₀ = Y'₀ = 0`:
//!
//! * **direct** — `W^en − W^ex` from the two equilibrium solves;
//! * **formula** — `a³Σ²σ_D⁶ / (2I·(aσ_D² + 2κI)²) + Iσ² ∫₀¹(g33^en − g33^ex) dt`.
//!
//! Their agreement (to 1e-8 at solver tolerance 1e-10) is itself a
//! verification gate, so the routes are never collapsed into one. The
//! `g33` gap integral comes from the quadrature state each core IVP carries
//! (no cross-interpolation between the two solves' grids), the first term is
//! closed-form arithmetic, and `Σ* = sqrt(max(0, −2I²σ²(aσ_D²+2κI)²·gap / (a³σ_D⁶)))`
//! is the supply level above which the tracker model yields higher welfare.

use crate::error::Error;
use crate::exec::map_indexed;
use crate::params::ModelParams;
use crate::{solve, Coefficients, ModelKind};

// --- Aggregate welfare ---------------------------------------------------------

/// Sum of investor certainty equivalents `S₀(Σ − Y₀) + I·G(0, Y₀, Y'₀)`.
pub fn aggregate_welfare(params: &ModelParams, coeffs: &Coefficients) -> Result<f64, Error> {
    if params != coeffs.params() {
        return Err(Error::InvalidParams(vec![
            "coefficients were built from different model parameters".to_string(),
        ]));
    }
    let s0 = coeffs.stock_price(0.0, params.d_init, params.y0, params.yp0)?;
    let g0 = coeffs.investor_g(0.0, params.y0, params.yp0)?;
    Ok(s0 * (params.supply - params.y0) + params.i_f64() * g0)
}

// --- Welfare difference ------------------------------------------------------------

/// Both welfare-difference routes plus the quantities they are built from.
#[derive(Debug, Clone)]
pub struct WelfareReport {
    /// Aggregate investor welfare, tracker model.
    pub ce_sum_endogenous: f64,
    /// Aggregate investor welfare, pinned-noise model.
    pub ce_sum_exogenous: f64,
    /// `ce_sum_endogenous − ce_sum_exogenous`.
    pub difference_direct: f64,
    /// Closed-form route; equals `difference_direct` only under the
    /// `Y₀ = Y'₀ = 0` hypothesis (see [`require_zero_initial_target`]).
    pub difference_formula: f64,
    /// `∫₀¹ (g33^en − g33^ex) dt`.
    pub g33_gap_integral: f64,
    /// Supply threshold `Σ*`; the tracker model wins iff `Σ > Σ*`.
    pub sigma_threshold: f64,
    /// Whether `Y₀ = Y'₀ = 0`, the hypothesis under which the two routes
    /// provably agree.
    pub hypothesis_holds: bool,
}

/// First (noise-free) term of the formula route,
/// `a³Σ²σ_D⁶ / (2I·(aσ_D² + 2κI)²)`.
pub fn formula_first_term(params: &ModelParams) -> f64 {
    let sd2 = params.sigma_d * params.sigma_d;
    let d0 = params.d0();
    params.a.powi(3) * params.supply * params.supply * sd2 * sd2 * sd2
        / (2.0 * params.i_f64() * d0 * d0)
}

fn threshold_from_gap(params: &ModelParams, gap: f64) -> f64 {
    let sd2 = params.sigma_d * params.sigma_d;
    let d0 = params.d0();
    let i = params.i_f64();
    let rhs = -2.0 * i * i * params.sigma_yp * params.sigma_yp * d0 * d0 * gap
        / (params.a.powi(3) * sd2 * sd2 * sd2);
    rhs.max(0.0).sqrt()
}

/// Errors with `HypothesisViolation` unless `Y₀ = Y'₀ = 0`; callers treating
/// the formula route as authoritative must pass this gate first.
pub fn require_zero_initial_target(params: &ModelParams) -> Result<(), Error> {
    if params.y0 != 0.0 || params.yp0 != 0.0 {
        return Err(Error::HypothesisViolation { y0: params.y0, yp0: params.yp0 });
    }
    Ok(())
}

/// Solves both models at tolerance `tol` and assembles the report. Both
/// difference routes are always populated; they agree (within 1e-8 at
/// default tolerance) exactly when `hypothesis_holds`.
pub fn welfare_difference(params: &ModelParams, tol: f64) -> Result<WelfareReport, Error> {
    let en = solve(ModelKind::Endogenous, params, tol)?;
    let ex = solve(ModelKind::Exogenous, params, tol)?;
    welfare_difference_from(params, &en, &ex)
}

/// Report assembly from already-solved coefficient pairs.
pub fn welfare_difference_from(
    params: &ModelParams,
    endogenous: &Coefficients,
    exogenous: &Coefficients,
) -> Result<WelfareReport, Error> {
    if endogenous.kind() != ModelKind::Endogenous || exogenous.kind() != ModelKind::Exogenous {
        return Err(Error::InvalidParams(vec![
            "welfare difference needs one tracker-model and one pinned-model solve".to_string(),
        ]));
    }
    let ce_en = aggregate_welfare(params, endogenous)?;
    let ce_ex = aggregate_welfare(params, exogenous)?;
    let gap = endogenous.g33_integral()? - exogenous.g33_integral()?;
    let s2 = params.sigma_yp * params.sigma_yp;
    Ok(WelfareReport {
        ce_sum_endogenous: ce_en,
        ce_sum_exogenous: ce_ex,
        difference_direct: ce_en - ce_ex,
        difference_formula: formula_first_term(params) + params.i_f64() * s2 * gap,
        g33_gap_integral: gap,
        sigma_threshold: threshold_from_gap(params, gap),
        hypothesis_holds: params.y0 == 0.0 && params.yp0 == 0.0,
    })
}

/// Supply threshold `Σ*` alone (requires both core solves; independent of
/// the supply in `params`).
pub fn sigma_threshold(params: &ModelParams, tol: f64) -> Result<f64, Error> {
    Ok(welfare_difference(params, tol)?.sigma_threshold)
}

// --- Parameter sweeps -----------------------------------------------------------------

/// Sweepable parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SigmaYp,
    SigmaD,
    Kappa,
    Investors,
}

impl SweepAxis {
    /// Canonical axis name used in CSV output and CLI flags.
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SigmaYp => "sigma_Yp",
            SweepAxis::SigmaD => "sigma_D",
            SweepAxis::Kappa => "kappa",
            SweepAxis::Investors => "I",
        }
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "sigma_Yp" => Ok(SweepAxis::SigmaYp),
            "sigma_D" => Ok(SweepAxis::SigmaD),
            "kappa" => Ok(SweepAxis::Kappa),
            "I" => Ok(SweepAxis::Investors),
            other => Err(Error::InvalidParams(vec![format!(
                "unknown sweep axis {other:?} (expected sigma_Yp, sigma_D, kappa, or I)"
            )])),
        }
    }

    /// Default grid for each axis, chosen to straddle the base value and
    /// show the documented non-monotonicities without excessive cells.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepAxis::SigmaYp => vec![0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0],
            SweepAxis::SigmaD => vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
            SweepAxis::Kappa => vec![1.0, 2.5, 5.0, 10.0, 25.0, 50.0, 125.0],
            SweepAxis::Investors => vec![1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 50.0],
        }
    }

    /// Applies one axis value to a parameter set (re-deriving uniform
    /// holdings, since `I` changes the split). Non-integral investor counts
    /// are rejected.
    fn apply(&self, base: &ModelParams, value: f64) -> Result<ModelParams, Error> {
        let mut p = base.clone();
        match self {
            SweepAxis::SigmaYp => p.sigma_yp = value,
            SweepAxis::SigmaD => p.sigma_d = value,
            SweepAxis::Kappa => p.kappa = value,
            SweepAxis::Investors => {
                if value < 1.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
                    return Err(Error::InvalidParams(vec![format!(
                        "investor count must be a positive integer, got {value}"
                    )]));
                }
                p.n_investors = value as u32;
            }
        }
        p.set_uniform_holdings();
        p.validate()?;
        Ok(p)
    }
}

/// A `(axis value, a)` cell: either a report or the error that cell hit.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub axis_value: f64,
    pub a: f64,
    pub result: Result<WelfareReport, Error>,
}

/// Result table of [`sweep`], ordered by (axis value, then a).
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub cells: Vec<SweepCell>,
}

/// Exact CSV header emitted by [`SweepTable::to_csv`].
pub const SWEEP_CSV_HEADER: &str =
    "axis,axis_value,a,diff_direct,diff_formula,g33_gap_integral,sigma_threshold";

impl SweepTable {
    /// Serializes the table; every float carries 17 significant digits and
    /// failed cells emit `nan` in the report columns so the header never
    /// changes shape.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for cell in &self.cells {
            let (direct, formula, gap, threshold) = match &cell.result {
                Ok(r) => (
                    r.difference_direct,
                    r.difference_formula,
                    r.g33_gap_integral,
                    r.sigma_threshold,
                ),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.axis.name(),
                crate::format_float17(cell.axis_value),
                crate::format_float17(cell.a),
                crate::format_float17(direct),
                crate::format_float17(formula),
                crate::format_float17(gap),
                crate::format_float17(threshold)
            ));
        }
        out
    }
}

/// One [`welfare_difference`] per `(axis value, a)` cell, cells computed
/// independently (in parallel when enabled) and assembled in deterministic
/// order. Per-cell failures are recorded in the table, not raised.
///
/// The base must satisfy the comparison conventions: `Y₀ = Y'₀ = 0` and
/// `Σ = 1`.
pub fn sweep(
    base: &ModelParams,
    axis: SweepAxis,
    values: &[f64],
    a_values: &[f64],
    tol: f64,
) -> Result<SweepTable, Error> {
    require_zero_initial_target(base)?;
    let mut violations = Vec::new();
    if base.supply != 1.0 {
        violations.push(format!("sweep base requires supply = 1, got {}", base.supply));
    }
    if values.is_empty() || a_values.is_empty() {
        violations.push("sweep needs at least one axis value and one a value".to_string());
    }
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }

    let grid: Vec<(f64, f64)> = values
        .iter()
        .flat_map(|&v| a_values.iter().map(move |&a| (v, a)))
        .collect();
    let cells = map_indexed(grid.len(), false, |i| {
        let (axis_value, a) = grid[i];
        let result = axis.apply(base, axis_value).and_then(|mut p| {
            p.a = a;
            p.validate()?;
            welfare_difference(&p, tol)
        });
        SweepCell { axis_value, a, result }
    });
    Ok(SweepTable { axis, cells })
}

// --- Tests ------------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL;

    /// Shared tolerance for values frozen from the high-resolution
    /// fixed-step oracle runs (see the integration test suite).
    fn close(got: f64, frozen: f64) -> bool {
        (got - frozen).abs() <= 5e-12 + 2e-10 * frozen.abs()
    }

    #[test]
    fn test_first_term_baseline_pin() {
        // a=1, Σ=1, σ_D=1, I=10, κ=5 → a³Σ²σ_D⁶/(2I(aσ_D²+2κI)²) = 1/204020.
        let p = ModelParams::baseline();
        assert_eq!(formula_first_term(&p), 1.0 / 204020.0);
    }

    #[test]
    fn test_degenerate_velocity_reduces_to_first_term() {
        let mut p = ModelParams::baseline();
        p.sigma_yp = 0.0;
        let r = welfare_difference(&p, DEFAULT_TOL).expect("report");
        assert_eq!(r.difference_formula, formula_first_term(&p));
        assert!((r.difference_direct - r.difference_formula).abs() < 1e-10);
        assert_eq!(r.sigma_threshold, 0.0);
    }

    #[test]
    fn test_baseline_report_matches_frozen_oracle_values() {
        let p = ModelParams::baseline();
        let r = welfare_difference(&p, DEFAULT_TOL).expect("report");
        assert!(r.hypothesis_holds);
        assert!(
            close(r.g33_gap_integral, -7.6244795032979281e-6),
            "gap = {:e}",
            r.g33_gap_integral
        );
        assert!(
            close(r.difference_direct, -7.6195780230508929e-3),
            "direct = {:e}",
            r.difference_direct
        );
        assert!(
            close(r.difference_formula, -7.6195780230508929e-3),
            "formula = {:e}",
            r.difference_formula
        );
        assert!(
            close(r.sigma_threshold, 3.9440414656324840e+1),
            "threshold = {:e}",
            r.sigma_threshold
        );
    }

    #[test]
    fn test_two_routes_agree_at_baseline() {
        let p = ModelParams::baseline();
        let r = welfare_difference(&p, DEFAULT_TOL).unwrap();
        assert!(
            (r.difference_direct - r.difference_formula).abs() < 1e-8,
            "routes differ by {:e}",
            (r.difference_direct - r.difference_formula).abs()
        );
    }

    #[test]
    fn test_supply_separability() {
        let zero_supply = {
            let mut p = ModelParams::baseline();
            p.supply = 0.0;
            p.set_uniform_holdings();
            welfare_difference(&p, DEFAULT_TOL).unwrap().difference_formula
        };
        for supply in [0.5, 2.0, 7.3, 19.0, 40.0] {
            let mut p = ModelParams::baseline();
            p.supply = supply;
            p.set_uniform_holdings();
            let r = welfare_difference(&p, DEFAULT_TOL).unwrap();
            let separated = r.difference_formula - zero_supply;
            assert!(
                (separated - formula_first_term(&p)).abs() < 1e-10,
                "supply {supply}: {:e}",
                (separated - formula_first_term(&p)).abs()
            );
        }
    }

    #[test]
    fn test_threshold_brackets_the_sign_change() {
        let base = ModelParams::baseline();
        let threshold = sigma_threshold(&base, DEFAULT_TOL).unwrap();
        assert!(threshold > 0.0);
        let diff_at = |supply: f64| {
            let mut p = base.clone();
            p.supply = supply;
            p.set_uniform_holdings();
            welfare_difference(&p, DEFAULT_TOL).unwrap()
        };
        let above = diff_at(1.01 * threshold);
        let below = diff_at(0.99 * threshold);
        assert!(above.difference_direct > 0.0 && above.difference_formula > 0.0);
        assert!(below.difference_direct < 0.0 && below.difference_formula < 0.0);
        assert!(diff_at(2.0 * threshold + 1.0).difference_direct > 0.0);
        // The threshold itself does not depend on the supply.
        assert!((above.sigma_threshold - threshold).abs() < 1e-12);
    }

    #[test]
    fn test_aggregate_welfare_zero_net_position() {
        // With Y₀ = Σ the investors hold nothing: W = I·(g1 + g2Σ + g22Σ²).
        let mut p = ModelParams::baseline();
        p.y0 = 1.0;
        p.set_uniform_holdings();
        let c = solve(ModelKind::Endogenous, &p, DEFAULT_TOL).unwrap();
        let w = aggregate_welfare(&p, &c).unwrap();
        let expected = p.i_f64()
            * (c.g1(0.0).unwrap() + c.g2(0.0).unwrap() * 1.0 + c.g22(0.0).unwrap() * 1.0);
        assert!((w - expected).abs() < 1e-14);
    }

    #[test]
    fn test_aggregate_welfare_zero_supply_is_pure_noise_exposure() {
        // Σ = 0 in the pinned model: W = I·g1(0) = I·σ²·∫g33.
        let mut p = ModelParams::baseline();
        p.supply = 0.0;
        p.set_uniform_holdings();
        let c = solve(ModelKind::Exogenous, &p, DEFAULT_TOL).unwrap();
        let w = aggregate_welfare(&p, &c).unwrap();
        let expected =
            p.i_f64() * p.sigma_yp * p.sigma_yp * c.g33_integral().unwrap();
        assert!((w - expected).abs() < 1e-14, "{w:e} vs {expected:e}");
    }

    #[test]
    fn test_hypothesis_gate() {
        let mut p = ModelParams::baseline();
        p.y0 = 0.5;
        p.set_uniform_holdings();
        assert!(matches!(
            require_zero_initial_target(&p),
            Err(Error::HypothesisViolation { .. })
        ));
        let r = welfare_difference(&p, DEFAULT_TOL).unwrap();
        assert!(!r.hypothesis_holds);
        assert!(r.difference_direct.is_finite() && r.difference_formula.is_finite());
        assert!(sweep(&p, SweepAxis::Kappa, &[1.0], &[1.0], DEFAULT_TOL).is_err());
    }

    #[test]
    fn test_singleton_sweep_reproduces_welfare_difference() {
        let p = ModelParams::baseline();
        let table = sweep(&p, SweepAxis::SigmaYp, &[10.0], &[1.0], DEFAULT_TOL).unwrap();
        assert_eq!(table.cells.len(), 1);
        let cell = table.cells[0].result.as_ref().expect("cell solves");
        let direct = welfare_difference(&p, DEFAULT_TOL).unwrap();
        assert_eq!(cell.difference_direct.to_bits(), direct.difference_direct.to_bits());
        assert_eq!(cell.sigma_threshold.to_bits(), direct.sigma_threshold.to_bits());
    }

    #[test]
    fn test_sweep_records_cell_errors_as_nan_rows() {
        let p = ModelParams::baseline();
        let table =
            sweep(&p, SweepAxis::Investors, &[2.5, 10.0], &[1.0], DEFAULT_TOL).unwrap();
        assert!(table.cells[0].result.is_err(), "fractional investor count must fail");
        assert!(table.cells[1].result.is_ok());
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_CSV_HEADER);
        let bad_row = lines.next().unwrap();
        assert!(bad_row.starts_with("I,2.5"));
        assert!(bad_row.contains("nan"));
        let good_row = lines.next().unwrap();
        assert!(!good_row.contains("nan"));
    }

    #[test]
    fn test_sweep_csv_is_deterministic() {
        let p = ModelParams::baseline();
        let run = || {
            sweep(&p, SweepAxis::Kappa, &[1.0, 5.0, 25.0], &[1.0, 10.0], DEFAULT_TOL)
                .unwrap()
                .to_csv()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn test_axis_parsing_and_defaults() {
        for axis in [SweepAxis::SigmaYp, SweepAxis::SigmaD, SweepAxis::Kappa, SweepAxis::Investors]
        {
            assert_eq!(SweepAxis::parse(axis.name()).unwrap(), axis);
            assert!(!axis.default_values().is_empty());
        }
        assert!(SweepAxis::parse("volatility").is_err());
    }
}
