//! Run configuration: built-in defaults, overridden by a flat TOML config
//! file, overridden by command-line flags.
//!
//! Resolution collects *every* violation (unknown keys, type errors, range
//! errors, invalid model parameters) before failing, so one run of the tool
//! reports everything wrong with an input instead of the first problem only.
//!
//! Every emitted artifact starts with a `#`-comment carrying the fully
//! resolved configuration in a fixed key order. The output directory is
//! deliberately excluded from that line: two runs of the same configuration
//! into different directories must produce byte-identical files.

use std::path::{Path, PathBuf};

use clap::Args;
use radner_core::welfare::SweepAxis;
use radner_core::{ModelKind, ModelParams, DEFAULT_TOL};

use crate::error::CliError;

/// Environment variable consulted for the default output directory.
pub const OUTPUT_DIR_ENV: &str = "RADNER_OUTPUT_DIR";

/// Default Monte Carlo sizes and seed (also used by `simulate` tests).
pub const DEFAULT_GRID: usize = 1001;
pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_STEPS: u32 = 1024;
pub const DEFAULT_SEED: u64 = 42;

// --- Command and flag surface ---------------------------------------------------

/// Which subcommand a configuration is resolved for. Affects the default
/// model selection and which fields are validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Simulate,
    Welfare,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::Welfare => "welfare",
            Command::Sweep => "sweep",
        }
    }
}

/// Flags shared by every subcommand. Each value flag is optional; a missing
/// flag falls back to the config file, then to the built-in default.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat TOML config file; flags override its values
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Model selection: endogenous, exogenous, or both
    #[arg(long)]
    pub model: Option<String>,

    /// Solver tolerance (absolute and relative)
    #[arg(long)]
    pub tol: Option<f64>,

    /// Grid size for coefficient tables and residual scans
    #[arg(long)]
    pub grid: Option<usize>,

    /// Monte Carlo path count
    #[arg(long)]
    pub paths: Option<usize>,

    /// Monte Carlo time steps per path
    #[arg(long)]
    pub steps: Option<u32>,

    /// RNG seed (counter-based streams derive per-path states from it)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory (default: $RADNER_OUTPUT_DIR, else ".")
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Comma-separated artifact kinds: csv, svg, report
    #[arg(long)]
    pub emit: Option<String>,

    /// Sweep axis: sigma_Yp, sigma_D, kappa, or I
    #[arg(long)]
    pub axis: Option<String>,

    /// Comma-separated sweep axis values (default: built-in per-axis grid)
    #[arg(long)]
    pub values: Option<String>,

    /// Comma-separated risk-aversion values for welfare sweeps
    #[arg(long)]
    pub a_values: Option<String>,

    /// Enforce the zero-initial-target hypothesis (Y0 = Y'0 = 0) under which
    /// the closed-form welfare route is exact
    #[arg(long)]
    pub formula: bool,

    /// Dump the first N simulated paths to paths.csv
    #[arg(long, value_name = "N")]
    pub dump_paths: Option<usize>,
}

// --- Enumerated options ------------------------------------------------------------

/// Which equilibrium model(s) a command operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Endogenous,
    Exogenous,
    Both,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Endogenous => "endogenous",
            ModelChoice::Exogenous => "exogenous",
            ModelChoice::Both => "both",
        }
    }

    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Endogenous => vec![ModelKind::Endogenous],
            ModelChoice::Exogenous => vec![ModelKind::Exogenous],
            ModelChoice::Both => vec![ModelKind::Endogenous, ModelKind::Exogenous],
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "endogenous" => Ok(ModelChoice::Endogenous),
            "exogenous" => Ok(ModelChoice::Exogenous),
            "both" => Ok(ModelChoice::Both),
            other => Err(format!(
                "unknown model {other:?} (expected endogenous, exogenous, or both)"
            )),
        }
    }
}

/// Artifact kinds a command may emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitKind {
    /// Data tables (the default).
    Csv,
    /// Charts (sweep only).
    Svg,
    /// Plain-text summaries mirroring the stdout report.
    Report,
}

impl EmitKind {
    pub fn name(self) -> &'static str {
        match self {
            EmitKind::Csv => "csv",
            EmitKind::Svg => "svg",
            EmitKind::Report => "report",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(EmitKind::Csv),
            "svg" => Ok(EmitKind::Svg),
            "report" => Ok(EmitKind::Report),
            other => Err(format!(
                "unknown artifact kind {other:?} (expected csv, svg, or report)"
            )),
        }
    }
}

// --- Resolved configuration ---------------------------------------------------------

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelChoice,
    pub params: ModelParams,
    pub tol: f64,
    pub grid: usize,
    pub paths: usize,
    pub steps: u32,
    pub seed: u64,
    pub out: PathBuf,
    pub emit: Vec<EmitKind>,
    pub axis: SweepAxis,
    pub values: Option<Vec<f64>>,
    pub a_values: Vec<f64>,
    pub formula: bool,
    pub dump_paths: usize,
}

impl RunConfig {
    pub fn dir(&self) -> &Path {
        &self.out
    }

    pub fn emits(&self, kind: EmitKind) -> bool {
        self.emit.contains(&kind)
    }

    /// Sweep axis values: explicit list if given, else the axis default grid.
    pub fn values_or_default(&self) -> Vec<f64> {
        self.values
            .clone()
            .unwrap_or_else(|| self.axis.default_values())
    }

    /// The `#` comment line prepended to every artifact: the full resolved
    /// configuration in fixed key order, excluding the output directory.
    pub fn comment_line(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let emit = self
            .emit
            .iter()
            .map(|e| e.name())
            .collect::<Vec<_>>()
            .join(",");
        let p = &self.params;
        format!(
            "# radner {} model={} I={} a={} sigma_D={} sigma_Yp={} kappa={} Sigma={} \
             Y0={} Yp0={} D0={} theta0={} tol={} grid={} paths={} steps={} seed={} \
             emit={} axis={} values={} a_values={} formula={} dump_paths={}",
            self.command.name(),
            self.model.name(),
            p.n_investors,
            p.a,
            p.sigma_d,
            p.sigma_yp,
            p.kappa,
            p.supply,
            p.y0,
            p.yp0,
            p.d_init,
            join(&p.theta0),
            self.tol,
            self.grid,
            self.paths,
            self.steps,
            self.seed,
            emit,
            self.axis.name(),
            join(&self.values_or_default()),
            join(&self.a_values),
            self.formula,
            self.dump_paths,
        )
    }
}

// --- Config-file readers -------------------------------------------------------------

/// Every key a config file may contain. Anything else is a hard error — a
/// typo like `sigma_d` silently falling back to the default would be worse
/// than failing.
const KNOWN_KEYS: &[&str] = &[
    "model",
    "tol",
    "grid",
    "paths",
    "steps",
    "seed",
    "out",
    "emit",
    "axis",
    "values",
    "a_values",
    "formula",
    "dump_paths",
    "I",
    "a",
    "sigma_D",
    "sigma_Yp",
    "kappa",
    "Sigma",
    "Y0",
    "Yp0",
    "D0",
    "theta0",
];

fn file_f64(t: Option<&toml::Table>, key: &str, errs: &mut Vec<String>) -> Option<f64> {
    match t?.get(key)? {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => {
            errs.push(format!("config key `{key}` must be a number"));
            None
        }
    }
}

fn file_u64(t: Option<&toml::Table>, key: &str, errs: &mut Vec<String>) -> Option<u64> {
    match t?.get(key)? {
        toml::Value::Integer(i) if *i >= 0 => Some(*i as u64),
        _ => {
            errs.push(format!("config key `{key}` must be a nonnegative integer"));
            None
        }
    }
}

fn file_bool(t: Option<&toml::Table>, key: &str, errs: &mut Vec<String>) -> Option<bool> {
    match t?.get(key)? {
        toml::Value::Boolean(b) => Some(*b),
        _ => {
            errs.push(format!("config key `{key}` must be a boolean"));
            None
        }
    }
}

fn file_str(t: Option<&toml::Table>, key: &str, errs: &mut Vec<String>) -> Option<String> {
    match t?.get(key)? {
        toml::Value::String(s) => Some(s.clone()),
        _ => {
            errs.push(format!("config key `{key}` must be a string"));
            None
        }
    }
}

fn file_f64_list(t: Option<&toml::Table>, key: &str, errs: &mut Vec<String>) -> Option<Vec<f64>> {
    let arr = match t?.get(key)? {
        toml::Value::Array(a) => a,
        _ => {
            errs.push(format!("config key `{key}` must be an array of numbers"));
            return None;
        }
    };
    let mut out = Vec::with_capacity(arr.len());
    for v in arr {
        match v {
            toml::Value::Float(x) => out.push(*x),
            toml::Value::Integer(i) => out.push(*i as f64),
            _ => {
                errs.push(format!("config key `{key}` must be an array of numbers"));
                return None;
            }
        }
    }
    Some(out)
}

/// Parses a comma-separated float list from a flag value.
fn parse_f64_list(flag: &str, s: &str, errs: &mut Vec<String>) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for token in s.split(',') {
        match token.trim().parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) => {
                errs.push(format!("--{flag}: {token:?} is not a number"));
                return None;
            }
        }
    }
    Some(out)
}

// --- Resolution -----------------------------------------------------------------------

/// Resolves `defaults <- config file <- flags` into a [`RunConfig`],
/// reporting every violation at once.
pub fn resolve(args: &CommonArgs, command: Command) -> Result<RunConfig, CliError> {
    let mut errs: Vec<String> = Vec::new();

    // Config file (if any), with unknown-key detection.
    let table: Option<toml::Table> = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match text.parse::<toml::Table>() {
                Ok(t) => {
                    for key in t.keys() {
                        if !KNOWN_KEYS.contains(&key.as_str()) {
                            errs.push(format!("unknown config key `{key}`"));
                        }
                    }
                    Some(t)
                }
                Err(e) => {
                    errs.push(format!("config file {}: {e}", path.display()));
                    None
                }
            },
            Err(e) => {
                errs.push(format!("config file {}: {e}", path.display()));
                None
            }
        },
        None => None,
    };
    let t = table.as_ref();

    // Model parameters (config file only; the sweep axes cover flag-level
    // parameter variation).
    let mut params = ModelParams::baseline();
    if let Some(i) = file_u64(t, "I", &mut errs) {
        if (1..=u64::from(u32::MAX)).contains(&i) {
            params.n_investors = i as u32;
        } else {
            errs.push(format!("I must be a positive integer fitting u32, got {i}"));
        }
    }
    macro_rules! set_param {
        ($key:literal, $field:expr) => {
            if let Some(v) = file_f64(t, $key, &mut errs) {
                $field = v;
            }
        };
    }
    set_param!("a", params.a);
    set_param!("sigma_D", params.sigma_d);
    set_param!("sigma_Yp", params.sigma_yp);
    set_param!("kappa", params.kappa);
    set_param!("Sigma", params.supply);
    set_param!("Y0", params.y0);
    set_param!("Yp0", params.yp0);
    set_param!("D0", params.d_init);
    match file_f64_list(t, "theta0", &mut errs) {
        Some(theta0) => params.theta0 = theta0,
        None => params.set_uniform_holdings(),
    }
    if let Err(radner_core::Error::InvalidParams(list)) = params.validate() {
        errs.extend(list);
    }

    // Scalar knobs.
    let tol = args
        .tol
        .or_else(|| file_f64(t, "tol", &mut errs))
        .unwrap_or(DEFAULT_TOL);
    if !(tol.is_finite() && tol > 0.0) {
        errs.push(format!("tol must be a positive real, got {tol}"));
    }
    let grid = args
        .grid
        .or_else(|| file_u64(t, "grid", &mut errs).map(|v| v as usize))
        .unwrap_or(DEFAULT_GRID);
    if grid < 11 {
        errs.push(format!("grid must be at least 11, got {grid}"));
    }
    let paths = args
        .paths
        .or_else(|| file_u64(t, "paths", &mut errs).map(|v| v as usize))
        .unwrap_or(DEFAULT_PATHS);
    if paths < 2 {
        errs.push(format!("paths must be at least 2, got {paths}"));
    }
    let steps = args
        .steps
        .or_else(|| {
            file_u64(t, "steps", &mut errs).and_then(|v| {
                u32::try_from(v)
                    .map_err(|_| errs.push(format!("steps must fit u32, got {v}")))
                    .ok()
            })
        })
        .unwrap_or(DEFAULT_STEPS);
    if steps == 0 {
        errs.push("steps must be at least 1".to_string());
    }
    let seed = args
        .seed
        .or_else(|| file_u64(t, "seed", &mut errs))
        .unwrap_or(DEFAULT_SEED);
    let dump_paths = args
        .dump_paths
        .or_else(|| file_u64(t, "dump_paths", &mut errs).map(|v| v as usize))
        .unwrap_or(0);
    if dump_paths > paths {
        errs.push(format!(
            "dump_paths ({dump_paths}) cannot exceed paths ({paths})"
        ));
    }
    let formula = args.formula || file_bool(t, "formula", &mut errs).unwrap_or(false);

    // Output directory: flag <- file <- environment <- ".".
    let out = args
        .out
        .clone()
        .or_else(|| file_str(t, "out", &mut errs).map(PathBuf::from))
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    // Artifact kinds: deduplicated, input order preserved.
    let emit_raw = args
        .emit
        .clone()
        .or_else(|| file_str(t, "emit", &mut errs))
        .unwrap_or_else(|| "csv".to_string());
    let mut emit: Vec<EmitKind> = Vec::new();
    for token in emit_raw.split(',') {
        match EmitKind::parse(token.trim()) {
            Ok(kind) => {
                if !emit.contains(&kind) {
                    emit.push(kind);
                }
            }
            Err(msg) => errs.push(msg),
        }
    }

    // Model selection, per-command.
    let model_raw = args.model.clone().or_else(|| file_str(t, "model", &mut errs));
    let model = match command {
        Command::Solve | Command::Verify => match model_raw.as_deref().map(ModelChoice::parse) {
            Some(Ok(m)) => m,
            Some(Err(msg)) => {
                errs.push(msg);
                ModelChoice::Both
            }
            None => ModelChoice::Both,
        },
        Command::Simulate => {
            match model_raw.as_deref().map(ModelChoice::parse) {
                Some(Ok(ModelChoice::Endogenous)) | None => {}
                Some(Ok(other)) => errs.push(format!(
                    "simulate supports only model=endogenous (the wealth-neutral measure \
                     needs tracker coefficients), got {}",
                    other.name()
                )),
                Some(Err(msg)) => errs.push(msg),
            }
            ModelChoice::Endogenous
        }
        Command::Welfare | Command::Sweep => {
            // Welfare comparisons always solve both models; a config-file
            // `model` key (possibly shared with other commands) is ignored,
            // but an explicit flag signals a misunderstanding.
            if args.model.is_some() {
                errs.push(format!(
                    "{} always compares both models; --model is not configurable",
                    command.name()
                ));
            }
            ModelChoice::Both
        }
    };

    // Sweep axis and value grids.
    let axis_raw = args.axis.clone().or_else(|| file_str(t, "axis", &mut errs));
    let axis = match axis_raw.as_deref().map(SweepAxis::parse) {
        Some(Ok(axis)) => axis,
        Some(Err(radner_core::Error::InvalidParams(list))) => {
            errs.extend(list);
            SweepAxis::SigmaYp
        }
        Some(Err(other)) => {
            errs.push(other.to_string());
            SweepAxis::SigmaYp
        }
        None => SweepAxis::SigmaYp,
    };
    let values = match &args.values {
        Some(s) => parse_f64_list("values", s, &mut errs),
        None => file_f64_list(t, "values", &mut errs),
    };
    if let Some(v) = &values {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            errs.push("values must be a nonempty list of finite numbers".to_string());
        }
    }
    let a_values = match &args.a_values {
        Some(s) => parse_f64_list("a-values", s, &mut errs),
        None => file_f64_list(t, "a_values", &mut errs),
    }
    .unwrap_or_else(|| vec![1.0, 10.0, 20.0]);
    if a_values.is_empty() || a_values.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        errs.push("a_values must be a nonempty list of positive reals".to_string());
    }

    if errs.is_empty() {
        Ok(RunConfig {
            command,
            model,
            params,
            tol,
            grid,
            paths,
            steps,
            seed,
            out,
            emit,
            axis,
            values,
            a_values,
            formula,
            dump_paths,
        })
    } else {
        Err(CliError::Config(errs))
    }
}
