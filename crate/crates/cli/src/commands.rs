//! Subcommand implementations.
//!
//! Conventions shared by all five commands:
//!
//! * data files carry a `#` config comment first, then a CSV header, then
//!   rows with 17-significant-digit floats (`format_float17`), so repeated
//!   runs of one configuration are byte-identical regardless of directory;
//! * human-readable results go to stdout; `--emit report` additionally
//!   writes them (without any filesystem paths) to `<command>_summary.txt`;
//! * artifacts are written *before* pass/fail gates are applied, so a
//!   failing run leaves its evidence on disk.

use radner_core::format_float17 as f17;
use radner_core::simulation::{martingale_check, sample_paths, Measure, SimGrid};
use radner_core::verification::{
    check_clearing, check_exogenous_decoupling, check_pointwise_optimizers,
    check_positivity_bounds, check_terminal_conditions, enforce_residual_tolerance,
    residuals_endogenous, residuals_exogenous, ResidualReport,
};
use radner_core::welfare::{require_zero_initial_target, sweep, welfare_difference};
use radner_core::{solve, Coefficients, ModelKind};

use crate::config::{Command, EmitKind, RunConfig};
use crate::error::CliError;
use crate::output::write_atomic;
use crate::svg;

/// Residual sup-norm accepted by `verify` (at default solver tolerance the
/// systems come in around three orders of magnitude below this).
const RESIDUAL_GATE: f64 = 1e-6;
/// Random states drawn for the market-clearing and optimizer identities.
const CLEARING_SAMPLES: usize = 10_000;
const OPTIMIZER_SAMPLES: usize = 10_000;
/// Martingale acceptance gate on the Monte Carlo z-scores.
const MARTINGALE_Z_GATE: f64 = 3.0;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Solve => run_solve(cfg),
        Command::Verify => run_verify(cfg),
        Command::Simulate => run_simulate(cfg),
        Command::Welfare => run_welfare(cfg),
        Command::Sweep => run_sweep(cfg),
    }
}

/// Prints the report lines and, under `--emit report`, persists them (path
/// free, hence directory independent) to `<command>_summary.txt`.
fn finish(cfg: &RunConfig, lines: &[String]) -> Result<(), CliError> {
    for l in lines {
        println!("{l}");
    }
    if cfg.emits(EmitKind::Report) {
        let mut text = cfg.comment_line();
        text.push('\n');
        for l in lines {
            text.push_str(l);
            text.push('\n');
        }
        let name = format!("{}_summary.txt", cfg.command.name());
        let path = write_atomic(cfg.dir(), &name, &text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

// --- solve ------------------------------------------------------------------------

fn run_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let mut lines = Vec::new();
    for kind in cfg.model.kinds() {
        let coeffs = solve(kind, &cfg.params, cfg.tol)?;
        if cfg.emits(EmitKind::Csv) {
            let table = solve_table(cfg, &coeffs)?;
            let path = write_atomic(cfg.dir(), &format!("solve_{kind}.csv"), &table)?;
            println!("wrote {}", path.display());
        }
        let p = &cfg.params;
        lines.push(format!(
            "{kind}: S0 = {}, alpha(0) = {}, beta(0) = {}, mu(0) = {}",
            coeffs.stock_price(0.0, p.d_init, p.y0, p.yp0)?,
            coeffs.alpha(0.0)?,
            coeffs.beta(0.0)?,
            coeffs.mu(0.0)?,
        ));
    }
    finish(cfg, &lines)
}

/// Coefficient table on the uniform grid `t_i = i/(grid−1)` (so the final
/// row sits exactly at `t = 1`, where every coefficient vanishes).
fn solve_table(cfg: &RunConfig, coeffs: &Coefficients) -> Result<String, CliError> {
    let endo = match coeffs {
        Coefficients::Endogenous(c) => Some(c),
        Coefficients::Exogenous(_) => None,
    };
    let mut out = cfg.comment_line();
    out.push('\n');
    out.push_str("t,alpha,beta,mu,g1,g2,g3,g22,g23,g33");
    if endo.is_some() {
        out.push_str(",f1,f2,f3,f22,f23,f33");
    }
    out.push('\n');
    for i in 0..cfg.grid {
        let t = i as f64 / (cfg.grid - 1) as f64;
        let mut row = vec![
            f17(t),
            f17(coeffs.alpha(t)?),
            f17(coeffs.beta(t)?),
            f17(coeffs.mu(t)?),
            f17(coeffs.g1(t)?),
            f17(coeffs.g2(t)?),
            f17(coeffs.g3(t)?),
            f17(coeffs.g22(t)?),
            f17(coeffs.g23(t)?),
            f17(coeffs.g33(t)?),
        ];
        if let Some(c) = endo {
            row.extend([
                f17(c.f1(t)?),
                f17(c.f2(t)?),
                f17(c.f3(t)?),
                f17(c.f22(t)?),
                f17(c.f23(t)?),
                f17(c.f33(t)?),
            ]);
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

// --- verify ------------------------------------------------------------------------

fn run_verify(cfg: &RunConfig) -> Result<(), CliError> {
    let mut lines = Vec::new();
    for kind in cfg.model.kinds() {
        let coeffs = solve(kind, &cfg.params, cfg.tol)?;
        let reports = match &coeffs {
            Coefficients::Endogenous(c) => residuals_endogenous(&cfg.params, c, cfg.grid)?,
            Coefficients::Exogenous(c) => residuals_exogenous(&cfg.params, c, cfg.grid)?,
        };
        if cfg.emits(EmitKind::Csv) {
            let csv = residual_table(cfg, &reports);
            let path = write_atomic(cfg.dir(), &format!("verify_{kind}.csv"), &csv)?;
            println!("wrote {}", path.display());
        }

        enforce_residual_tolerance(&reports, RESIDUAL_GATE)?;
        let worst = reports
            .iter()
            .max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
            .expect("both systems have equations");
        lines.push(format!(
            "{kind}: {} equation residuals below {RESIDUAL_GATE:.0e} \
             (worst {:.3e} in `{}`)",
            reports.len(),
            worst.max_residual,
            worst.equation
        ));

        check_terminal_conditions(&coeffs)?;
        lines.push(format!("{kind}: terminal conditions hold exactly"));

        let clearing = check_clearing(&cfg.params, &coeffs, CLEARING_SAMPLES, cfg.seed)?;
        lines.push(format!(
            "{kind}: market clearing deviates at most {clearing:.3e} \
             over {CLEARING_SAMPLES} random states"
        ));

        match &coeffs {
            Coefficients::Endogenous(c) => {
                let opt =
                    check_pointwise_optimizers(&cfg.params, c, OPTIMIZER_SAMPLES, cfg.seed)?;
                lines.push(format!(
                    "{kind}: pointwise optimizer identities hold \
                     (investor {:.3e}, tracker {:.3e} over {} states)",
                    opt.investor_max_deviation, opt.tracker_max_deviation, opt.n_samples
                ));
                let b = check_positivity_bounds(c.core(), &cfg.params)?;
                lines.push(bound_line(kind, b.degenerate, b.min_margin_z1, b.min_margin_z2));
            }
            Coefficients::Exogenous(c) => {
                let b = check_positivity_bounds(c.core(), &cfg.params)?;
                lines.push(bound_line(kind, b.degenerate, b.min_margin_z1, b.min_margin_z2));
                let dev = check_exogenous_decoupling(c, cfg.grid)?;
                lines.push(format!(
                    "{kind}: price drift decouples from the target \
                     (max deviation {dev:.3e})"
                ));
            }
        }
    }
    finish(cfg, &lines)
}

fn bound_line(kind: ModelKind, degenerate: bool, m1: f64, m2: f64) -> String {
    if degenerate {
        format!("{kind}: core bounds hold as equalities (sigma_Yp = 0)")
    } else {
        format!(
            "{kind}: strict core bounds hold \
             (z1 margin {m1:.3e}, z2 margin {m2:.3e})"
        )
    }
}

fn residual_table(cfg: &RunConfig, reports: &[ResidualReport]) -> String {
    let mut out = cfg.comment_line();
    out.push('\n');
    out.push_str("equation,max_residual,argmax_t,fd_max_residual\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.equation,
            f17(r.max_residual),
            f17(r.argmax_t),
            f17(r.fd_max_residual)
        ));
    }
    out
}

// --- simulate ----------------------------------------------------------------------

fn run_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let coeffs = solve(ModelKind::Endogenous, &cfg.params, cfg.tol)?;
    let grid = SimGrid::new(cfg.steps)?;
    let report = martingale_check(&cfg.params, &coeffs, grid, cfg.paths, cfg.seed)?;

    if cfg.emits(EmitKind::Csv) {
        let mut csv = cfg.comment_line();
        csv.push('\n');
        csv.push_str("check,mean,target,std_error,z\n");
        csv.push_str(&format!(
            "value_martingale_P,{},{},{},{}\n",
            f17(report.value_mean),
            f17(report.value_target),
            f17(report.value_std_error),
            f17(report.value_z)
        ));
        csv.push_str(&format!(
            "wealth_martingale_Qhat,{},{},{},{}\n",
            f17(report.wealth_mean),
            f17(report.wealth_target),
            f17(report.wealth_std_error),
            f17(report.wealth_z)
        ));
        let path = write_atomic(cfg.dir(), "simulate_report.csv", &csv)?;
        println!("wrote {}", path.display());
    }
    if cfg.dump_paths > 0 {
        let csv = paths_table(cfg, &coeffs, grid)?;
        let path = write_atomic(cfg.dir(), "paths.csv", &csv)?;
        println!("wrote {}", path.display());
    }

    let lines = vec![
        format!(
            "value martingale under P:     E[V1] = {:.6e} vs V0 = {:.6e} (z = {:+.3})",
            report.value_mean, report.value_target, report.value_z
        ),
        format!(
            "wealth martingale under Q^:   E[X1] = {:.6e} vs X0 = {:.6e} (z = {:+.3})",
            report.wealth_mean, report.wealth_target, report.wealth_z
        ),
        format!(
            "paths = {}, steps = {}, seed = {}",
            report.n_paths, report.n_steps, report.seed
        ),
    ];
    finish(cfg, &lines)?;

    for (name, z) in [
        ("martingale:value", report.value_z),
        ("martingale:wealth", report.wealth_z),
    ] {
        if !(z.abs() < MARTINGALE_Z_GATE) {
            return Err(CliError::Check {
                name: name.to_string(),
                message: format!(
                    "|z| = {:.3} exceeds the {MARTINGALE_Z_GATE} gate \
                     ({} paths, {} steps, seed {})",
                    z.abs(),
                    report.n_paths,
                    report.n_steps,
                    report.seed
                ),
            });
        }
    }
    Ok(())
}

/// First `dump_paths` physical-measure paths; identical to the first paths of
/// the martingale run at the same seed (common random numbers by stream id).
fn paths_table(
    cfg: &RunConfig,
    coeffs: &Coefficients,
    grid: SimGrid,
) -> Result<String, CliError> {
    let mut out = cfg.comment_line();
    out.push('\n');
    out.push_str("path_id,t,D,Yp,Y,S,theta_inv,theta_tracker,X_inv,V_inv\n");
    let bundles = sample_paths(
        &cfg.params,
        coeffs,
        grid,
        cfg.dump_paths,
        cfg.seed,
        Measure::P,
    )?;
    for b in bundles {
        for i in 0..grid.n_nodes() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                b.path_id,
                f17(grid.t(i)),
                f17(b.d[i]),
                f17(b.yp[i]),
                f17(b.y[i]),
                f17(b.s[i]),
                f17(b.theta_inv[i]),
                f17(b.theta_tracker[i]),
                f17(b.x_inv[i]),
                f17(b.v_inv[i])
            ));
        }
    }
    Ok(out)
}

// --- welfare -----------------------------------------------------------------------

fn run_welfare(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.formula {
        require_zero_initial_target(&cfg.params)?;
    }
    let r = welfare_difference(&cfg.params, cfg.tol)?;

    if cfg.emits(EmitKind::Csv) {
        let mut csv = cfg.comment_line();
        csv.push('\n');
        csv.push_str(
            "ce_endogenous,ce_exogenous,difference_direct,difference_formula,\
             g33_gap_integral,sigma_threshold,hypothesis_holds\n",
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            f17(r.ce_sum_endogenous),
            f17(r.ce_sum_exogenous),
            f17(r.difference_direct),
            f17(r.difference_formula),
            f17(r.g33_gap_integral),
            f17(r.sigma_threshold),
            r.hypothesis_holds
        ));
        let path = write_atomic(cfg.dir(), "welfare.csv", &csv)?;
        println!("wrote {}", path.display());
    }

    let mut lines = vec![
        format!("welfare, tracker model:  {}", r.ce_sum_endogenous),
        format!("welfare, pinned model:   {}", r.ce_sum_exogenous),
        format!("difference (direct):     {}", r.difference_direct),
        format!("difference (formula):    {}", r.difference_formula),
        format!("g33 gap integral:        {}", r.g33_gap_integral),
        format!("supply threshold Sigma*: {}", r.sigma_threshold),
    ];
    if !r.hypothesis_holds {
        lines.push(
            "note: Y0/Y'0 nonzero, so the formula route is not authoritative here".to_string(),
        );
    }
    finish(cfg, &lines)
}

// --- sweep -------------------------------------------------------------------------

fn run_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let values = cfg.values_or_default();
    let table = sweep(&cfg.params, cfg.axis, &values, &cfg.a_values, cfg.tol)?;
    let failed = table.cells.iter().filter(|c| c.result.is_err()).count();

    if cfg.emits(EmitKind::Csv) {
        let mut csv = cfg.comment_line();
        csv.push('\n');
        csv.push_str(&table.to_csv());
        let path = write_atomic(cfg.dir(), "sweep.csv", &csv)?;
        println!("wrote {}", path.display());
    }
    if cfg.emits(EmitKind::Svg) {
        let path = write_atomic(cfg.dir(), "sweep.svg", &svg::sweep_chart(&table))?;
        println!("wrote {}", path.display());
    }

    let lines = vec![format!(
        "swept {} over {} values x {} risk aversions: {} cells, {} failed",
        cfg.axis.name(),
        values.len(),
        cfg.a_values.len(),
        table.cells.len(),
        failed
    )];
    finish(cfg, &lines)?;
    if failed > 0 {
        eprintln!("warning: {failed} sweep cells failed; their rows carry nan");
    }
    Ok(())
}
