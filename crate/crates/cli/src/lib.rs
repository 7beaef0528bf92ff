//! Command-line front end: argument and config-file parsing, the four
//! subcommands, and CSV/JSON emission.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use catamp::audit::{discrepancy_report, AUDIT_PHI};
use catamp::fock::{apply_two_mode_squeeze, coherent_vector, product_state, vacuum_vector};
use catamp::pipeline::{default_dims, prepare_cat, uniform_theta_grid, visibility_sweep, Branches};
use catamp::qfunc::{amplifier_scaling_check, marginal_q};
use catamp::validation::{run_checks, CheckOutcome};
use catamp::{ExperimentConfig, GainParam, PostSelectMode, TwoModeState};
use clap::{Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failed(_) => EXIT_FAILED,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<catamp::Error> for CliError {
    fn from(e: catamp::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "catamp",
    version,
    about = "Cat-state interferometry through an ideal parametric amplifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// File of `key = value` lines; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Amplitude gain g = cosh r (>= 1).
    #[arg(long, global = true, allow_hyphen_values = true)]
    g: Option<String>,
    /// Cat amplitude as "re,im".
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha0: Option<String>,
    /// Conditional phase, in radians or as "pi/2", "pi/4", ...
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Analyzer phase for single-point stages.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Number of analyzer phases in a sweep.
    #[arg(long = "theta-steps", global = true)]
    theta_steps: Option<String>,
    /// branch_drop or homodyne_window.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Homodyne acceptance threshold on the signal X quadrature.
    #[arg(long, global = true, allow_hyphen_values = true)]
    threshold: Option<String>,
    /// Fock levels as "n" or "signal,idler".
    #[arg(long, global = true)]
    dims: Option<String>,
    /// Output data file; the summary goes next to it as *.summary.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run the numerical acceptance checks.
    Validate {
        /// Comma-separated subset of checks.
        #[arg(long)]
        only: Option<String>,
    },
    /// Sweep the analyzer phase and report the fringe visibility.
    Visibility,
    /// Tabulate the idler-traced signal Q-function on a grid.
    Qgrid {
        /// prep, post_amplifier or post_analyzer.
        #[arg(long)]
        stage: Option<String>,
        /// cat or coherent.
        #[arg(long)]
        input: Option<String>,
        /// Points per axis.
        #[arg(long)]
        grid: Option<String>,
        /// Real-axis range "lo,hi".
        #[arg(long = "re-range", allow_hyphen_values = true)]
        re_range: Option<String>,
        /// Imaginary-axis range "lo,hi".
        #[arg(long = "im-range", allow_hyphen_values = true)]
        im_range: Option<String>,
    },
    /// Compare the linear-response and exact post-selected variances.
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QGridStage {
    Prep,
    PostAmplifier,
    PostAnalyzer,
}

impl QGridStage {
    fn name(self) -> &'static str {
        match self {
            QGridStage::Prep => "prep",
            QGridStage::PostAmplifier => "post_amplifier",
            QGridStage::PostAnalyzer => "post_analyzer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputState {
    Cat,
    Coherent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QGridSpec {
    pub stage: QGridStage,
    pub input: InputState,
    pub points: usize,
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Validate { only: Option<Vec<String>> },
    Visibility,
    QGrid(QGridSpec),
    Variance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub g: f64,
    pub alpha0: C64,
    pub phi: f64,
    pub theta: f64,
    pub theta_steps: usize,
    pub mode: PostSelectMode,
    pub dims: (usize, usize),
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunSpec {
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig::new(
            self.alpha0,
            GainParam::from_gain(self.g).expect("validated gain"),
        )
        .with_phi(self.phi)
        .with_theta(self.theta)
        .with_dims(self.dims)
        .with_mode(self.mode)
    }
}

const CONFIG_KEYS: [&str; 16] = [
    "g",
    "alpha0",
    "phi",
    "theta",
    "theta-steps",
    "mode",
    "threshold",
    "dims",
    "out",
    "format",
    "only",
    "stage",
    "input",
    "grid",
    "re-range",
    "im-range",
];

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// underscores in keys are read as hyphens.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(usage(format!("unknown config key '{}'", k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid value '{v}' for {key}: expected a number")))?;
    if !x.is_finite() {
        return Err(usage(format!(
            "invalid value '{v}' for {key}: must be finite"
        )));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.trim().parse().map_err(|_| {
        usage(format!(
            "invalid value '{v}' for {key}: expected a non-negative integer"
        ))
    })
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| usage(format!("invalid value '{v}' for {key}: expected \"a,b\"")))?;
    Ok((parse_f64(key, a)?, parse_f64(key, b)?))
}

/// Radians, or a multiple of pi such as `pi/2`, `-pi/4`, `3pi/4`, `2*pi`.
pub fn parse_angle(key: &str, v: &str) -> Result<f64, CliError> {
    let s = v.trim().to_ascii_lowercase();
    let Some(at) = s.find("pi") else {
        return parse_f64(key, &s);
    };
    let bad = || {
        usage(format!(
            "invalid value '{v}' for {key}: expected radians or a form like pi/2"
        ))
    };
    let coeff = s[..at].trim_end_matches('*').trim();
    let coeff = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = s[at + 2..].trim();
    let denom = if rest.is_empty() {
        1.0
    } else {
        let d = rest.strip_prefix('/').ok_or_else(bad)?;
        d.trim().parse::<f64>().map_err(|_| bad())?
    };
    if denom == 0.0 || !coeff.is_finite() || !denom.is_finite() {
        return Err(bad());
    }
    Ok(coeff * PI / denom)
}

fn parse_alpha0(v: &str) -> Result<C64, CliError> {
    if v.contains(',') {
        let (re, im) = parse_pair("--alpha0", v)?;
        Ok(C64::new(re, im))
    } else {
        Ok(C64::new(parse_f64("--alpha0", v)?, 0.0))
    }
}

fn parse_dims(v: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = match v.split_once(',') {
        Some((a, b)) => (parse_usize("--dims", a)?, parse_usize("--dims", b)?),
        None => {
            let n = parse_usize("--dims", v)?;
            (n, n)
        }
    };
    if a < 4 || b < 4 {
        return Err(usage(format!("dims must be ≥ 4, got {a},{b}")));
    }
    Ok((a, b))
}

/// Parses arguments (without the program name) into a validated [`RunSpec`].
pub fn parse_args<S: AsRef<str>>(argv: &[S]) -> Result<RunSpec, CliError> {
    let cli = Cli::try_parse_from(std::iter::once("catamp").chain(argv.iter().map(|s| s.as_ref())))
        .map_err(|e| usage(e.to_string().trim_end()))?;
    resolve(cli)
}

fn resolve(cli: Cli) -> Result<RunSpec, CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    // command line first, then config file
    let pick = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone().or_else(|| file.get(key).cloned())
    };

    let g = match pick(&cli.g, "g") {
        Some(v) => parse_f64("--g", &v)?,
        None => 1.0,
    };
    if g < 1.0 {
        return Err(usage(format!("g must be ≥ 1, got {g}")));
    }
    let alpha0 = match pick(&cli.alpha0, "alpha0") {
        Some(v) => parse_alpha0(&v)?,
        None => C64::new(1.0, 0.0),
    };
    let default_phi = if matches!(cli.command, Sub::Variance) {
        AUDIT_PHI
    } else {
        FRAC_PI_2
    };
    let phi = match pick(&cli.phi, "phi") {
        Some(v) => parse_angle("--phi", &v)?,
        None => default_phi,
    };
    let theta = match pick(&cli.theta, "theta") {
        Some(v) => parse_angle("--theta", &v)?,
        None => 0.0,
    };
    let theta_steps = match pick(&cli.theta_steps, "theta-steps") {
        Some(v) => parse_usize("--theta-steps", &v)?,
        None => 64,
    };
    let threshold = match pick(&cli.threshold, "threshold") {
        Some(v) => parse_f64("--threshold", &v)?,
        None => 0.0,
    };
    let mode = match pick(&cli.mode, "mode").as_deref() {
        None | Some("branch_drop") => PostSelectMode::BranchDrop,
        Some("homodyne_window") => PostSelectMode::HomodyneWindow { threshold },
        Some(other) => {
            return Err(usage(format!(
                "invalid value '{other}' for --mode: expected branch_drop or homodyne_window"
            )))
        }
    };
    let gain = GainParam::from_gain(g).map_err(|e| usage(e.to_string()))?;
    let dims = match pick(&cli.dims, "dims") {
        Some(v) => parse_dims(&v)?,
        None => default_dims(alpha0.norm(), gain),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from));
    let format = match pick(&cli.format, "format").as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(usage(format!(
                "invalid value '{other}' for --format: expected csv or json"
            )))
        }
    };

    let command = match &cli.command {
        Sub::Validate { only } => Command::Validate {
            only: pick(only, "only").map(|s| {
                s.split(',')
                    .map(|x| x.trim().to_string())
                    .filter(|x| !x.is_empty())
                    .collect()
            }),
        },
        Sub::Visibility => {
            if theta_steps < catamp::pipeline::MIN_SWEEP_POINTS {
                return Err(usage(format!(
                    "theta-steps must be ≥ {}, got {theta_steps}",
                    catamp::pipeline::MIN_SWEEP_POINTS
                )));
            }
            Command::Visibility
        }
        Sub::Variance => {
            if theta_steps < 2 {
                return Err(usage(format!("theta-steps must be ≥ 2, got {theta_steps}")));
            }
            Command::Variance
        }
        Sub::Qgrid {
            stage,
            input,
            grid,
            re_range,
            im_range,
        } => {
            let stage = match pick(stage, "stage").as_deref() {
                None | Some("prep") => QGridStage::Prep,
                Some("post_amplifier") => QGridStage::PostAmplifier,
                Some("post_analyzer") => QGridStage::PostAnalyzer,
                Some(other) => {
                    return Err(usage(format!(
                        "invalid value '{other}' for --stage: expected prep, post_amplifier or post_analyzer"
                    )))
                }
            };
            let input = match pick(input, "input").as_deref() {
                None | Some("cat") => InputState::Cat,
                Some("coherent") => InputState::Coherent,
                Some(other) => {
                    return Err(usage(format!(
                        "invalid value '{other}' for --input: expected cat or coherent"
                    )))
                }
            };
            if stage == QGridStage::PostAnalyzer && input == InputState::Coherent {
                return Err(usage("--stage post_analyzer needs --input cat"));
            }
            let points = match pick(grid, "grid") {
                Some(v) => parse_usize("--grid", &v)?,
                None => 41,
            };
            if points < 2 {
                return Err(usage(format!("grid must be ≥ 2, got {points}")));
            }
            let half = (g * alpha0.norm() + 3.0).ceil().max(4.0);
            let range = |v: Option<String>, key: &str| -> Result<(f64, f64), CliError> {
                let r = match v {
                    Some(v) => parse_pair(key, &v)?,
                    None => (-half, half),
                };
                if r.0 >= r.1 {
                    return Err(usage(format!("{key} needs lo < hi, got {},{}", r.0, r.1)));
                }
                Ok(r)
            };
            Command::QGrid(QGridSpec {
                stage,
                input,
                points,
                re_range: range(pick(re_range, "re-range"), "--re-range")?,
                im_range: range(pick(im_range, "im-range"), "--im-range")?,
            })
        }
    };

    Ok(RunSpec {
        command,
        g,
        alpha0,
        phi,
        theta,
        theta_steps,
        mode,
        dims,
        out,
        format,
    })
}

/// A data table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Header line plus one line per row, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Serialize)]
struct Metadata {
    version: &'static str,
}

const METADATA: Metadata = Metadata {
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Serialize)]
struct VisibilitySummary {
    p_max: f64,
    p_min: f64,
    visibility: f64,
    eq23_reference: f64,
    mode: &'static str,
    threshold: Option<f64>,
    g: f64,
    alpha0: [f64; 2],
    phi: f64,
    dims: [usize; 2],
    theta_steps: usize,
    metadata: Metadata,
}

#[derive(Debug, Serialize)]
struct QGridSummary {
    stage: &'static str,
    input: &'static str,
    max_q: f64,
    max_relative_error: Option<f64>,
    g: f64,
    alpha0: [f64; 2],
    phi: f64,
    theta: f64,
    dims: [usize; 2],
    points: usize,
    metadata: Metadata,
}

#[derive(Debug, Serialize)]
struct VarianceSummary {
    naive_modulation_ratio: f64,
    exact_modulation_ratio: f64,
    disagreement: bool,
    g: f64,
    alpha0: [f64; 2],
    phi: f64,
    dims: [usize; 2],
    theta_steps: usize,
    metadata: Metadata,
}

#[derive(Debug, Serialize)]
struct Combined<'a, T: Serialize> {
    columns: &'a [&'static str],
    rows: &'a [Vec<f64>],
    summary: &'a T,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable summary");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_stream(mut w: impl std::io::Write, text: &str) -> Result<(), CliError> {
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}

/// `data.csv` → `data.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn emit<T: Serialize>(spec: &RunSpec, table: &Table, summary: &T) -> Result<(), CliError> {
    match (spec.format, &spec.out) {
        (OutputFormat::Csv, Some(path)) => {
            write_file(path, &table.to_csv())?;
            write_file(&summary_path(path), &to_json(summary))
        }
        (OutputFormat::Csv, None) => {
            write_stream(std::io::stdout().lock(), &table.to_csv())?;
            write_stream(std::io::stderr().lock(), &to_json(summary))
        }
        (OutputFormat::Json, out) => {
            let text = to_json(&Combined {
                columns: &table.columns,
                rows: &table.rows,
                summary,
            });
            match out {
                Some(path) => write_file(path, &text),
                None => write_stream(std::io::stdout().lock(), &text),
            }
        }
    }
}

fn alpha_pair(a: C64) -> [f64; 2] {
    [a.re, a.im]
}

pub fn visibility_table(spec: &RunSpec) -> Result<(Table, serde_json::Value), CliError> {
    let cfg = spec.experiment();
    let r = visibility_sweep(&cfg, &uniform_theta_grid(spec.theta_steps))?;
    let table = Table {
        columns: vec!["theta", "probability"],
        rows: r.samples.iter().map(|&(t, p)| vec![t, p]).collect(),
    };
    let summary = VisibilitySummary {
        p_max: r.p_max,
        p_min: r.p_min,
        visibility: r.visibility,
        eq23_reference: r.reference_visibility,
        mode: r.mode.name(),
        threshold: match r.mode {
            PostSelectMode::HomodyneWindow { threshold } => Some(threshold),
            PostSelectMode::BranchDrop => None,
        },
        g: spec.g,
        alpha0: alpha_pair(spec.alpha0),
        phi: spec.phi,
        dims: [spec.dims.0, spec.dims.1],
        theta_steps: spec.theta_steps,
        metadata: METADATA,
    };
    Ok((
        table,
        serde_json::to_value(summary).expect("serialisable summary"),
    ))
}

pub fn run_visibility(spec: &RunSpec) -> Result<(), CliError> {
    let (table, summary) = visibility_table(spec)?;
    emit(spec, &table, &summary)
}

fn qgrid_input(spec: &RunSpec, q: &QGridSpec) -> Result<TwoModeState, CliError> {
    let cfg = spec.experiment();
    Ok(match q.input {
        InputState::Cat => prepare_cat(&cfg)?,
        InputState::Coherent => product_state(
            &coherent_vector(spec.alpha0, spec.dims.0)?,
            &vacuum_vector(spec.dims.1),
        )?,
    })
}

pub fn qgrid_table(spec: &RunSpec, q: &QGridSpec) -> Result<(Table, serde_json::Value), CliError> {
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..q.points)
            .map(|i| lo + (hi - lo) * i as f64 / (q.points - 1) as f64)
            .collect()
    };
    let (re_axis, im_axis) = (axis(q.re_range), axis(q.im_range));
    let grid: Vec<C64> = re_axis
        .iter()
        .flat_map(|&re| im_axis.iter().map(move |&im| C64::new(re, im)))
        .collect();

    let gain = GainParam::from_gain(spec.g)?;
    let input = qgrid_input(spec, q)?;
    let state = match q.stage {
        QGridStage::Prep => input.clone(),
        QGridStage::PostAmplifier => apply_two_mode_squeeze(&input, gain)?,
        QGridStage::PostAnalyzer => {
            Branches::build(&spec.experiment())?.accepted_state(spec.theta)?
        }
    };

    let mut rows = Vec::with_capacity(grid.len());
    let mut max_q: f64 = 0.0;
    for &a in &grid {
        let value = marginal_q(&state, a)?;
        max_q = max_q.max(value);
        let mut row = vec![a.re, a.im, value];
        if q.stage == QGridStage::PostAmplifier {
            row.push(marginal_q(&input, a / spec.g)? / (spec.g * spec.g));
        }
        rows.push(row);
    }
    let mut columns = vec!["re_alpha", "im_alpha", "q_tilde"];
    let max_relative_error = if q.stage == QGridStage::PostAmplifier {
        columns.push("q_predicted");
        Some(amplifier_scaling_check(&input, gain, &grid)?)
    } else {
        None
    };
    let summary = QGridSummary {
        stage: q.stage.name(),
        input: match q.input {
            InputState::Cat => "cat",
            InputState::Coherent => "coherent",
        },
        max_q,
        max_relative_error,
        g: spec.g,
        alpha0: alpha_pair(spec.alpha0),
        phi: spec.phi,
        theta: spec.theta,
        dims: [spec.dims.0, spec.dims.1],
        points: q.points,
        metadata: METADATA,
    };
    Ok((
        Table { columns, rows },
        serde_json::to_value(summary).expect("serialisable summary"),
    ))
}

pub fn run_qgrid(spec: &RunSpec) -> Result<(), CliError> {
    let Command::QGrid(q) = &spec.command else {
        return Err(usage("qgrid settings missing"));
    };
    let (table, summary) = qgrid_table(spec, q)?;
    emit(spec, &table, &summary)
}

pub fn variance_table(spec: &RunSpec) -> Result<(Table, serde_json::Value), CliError> {
    let r = discrepancy_report(&spec.experiment(), &uniform_theta_grid(spec.theta_steps))?;
    let rows = r
        .theta_samples
        .iter()
        .zip(r.naive_variance.iter().zip(&r.exact_variance))
        .map(|(t, (n, e))| vec![*t, *n, *e])
        .collect();
    let summary = VarianceSummary {
        naive_modulation_ratio: r.naive_modulation_ratio,
        exact_modulation_ratio: r.exact_modulation_ratio,
        disagreement: r.disagreement,
        g: spec.g,
        alpha0: alpha_pair(spec.alpha0),
        phi: spec.phi,
        dims: [spec.dims.0, spec.dims.1],
        theta_steps: spec.theta_steps,
        metadata: METADATA,
    };
    Ok((
        Table {
            columns: vec!["theta", "naive_variance", "exact_variance"],
            rows,
        },
        serde_json::to_value(summary).expect("serialisable summary"),
    ))
}

pub fn run_variance(spec: &RunSpec) -> Result<(), CliError> {
    let (table, summary) = variance_table(spec)?;
    emit(spec, &table, &summary)
}

#[derive(Debug, Serialize)]
struct MeasurementRecord<'a> {
    check: &'a str,
    label: &'a str,
    value: f64,
    bound: String,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct CheckRecord<'a> {
    name: &'a str,
    passed: bool,
    elapsed_s: f64,
    budget_s: f64,
    error: Option<&'a str>,
    measurements: Vec<MeasurementRecord<'a>>,
}

/// Plain-text pass/fail table.
pub fn format_checks(outcomes: &[CheckOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:<6} {:<48} {:>14}  bound",
        "check", "result", "quantity", "measured"
    );
    for c in outcomes {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        if let Some(err) = &c.error {
            let _ = writeln!(s, "{:<8} {:<6} error: {err}", c.name, verdict);
        }
        for m in &c.measurements {
            let _ = writeln!(
                s,
                "{:<8} {:<6} {:<48} {:>14.6e}  {}",
                c.name,
                if m.passed() { "PASS" } else { "FAIL" },
                m.label,
                m.value,
                m.bound
            );
        }
        let _ = writeln!(
            s,
            "{:<8} {:<6} {:<48} {:>14.3}  <= {}",
            c.name,
            if c.elapsed <= c.budget {
                "PASS"
            } else {
                "FAIL"
            },
            "runtime (s)",
            c.elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    s
}

pub fn run_validate(spec: &RunSpec) -> Result<(), CliError> {
    let Command::Validate { only } = &spec.command else {
        return Err(usage("validate settings missing"));
    };
    let outcomes = run_checks(only.as_deref()).map_err(|e| usage(e.to_string()))?;
    let text = match spec.format {
        OutputFormat::Csv => format_checks(&outcomes),
        OutputFormat::Json => {
            let records: Vec<CheckRecord> = outcomes
                .iter()
                .map(|c| CheckRecord {
                    name: c.name,
                    passed: c.passed(),
                    elapsed_s: c.elapsed.as_secs_f64(),
                    budget_s: c.budget.as_secs_f64(),
                    error: c.error.as_deref(),
                    measurements: c
                        .measurements
                        .iter()
                        .map(|m| MeasurementRecord {
                            check: c.name,
                            label: &m.label,
                            value: m.value,
                            bound: m.bound.to_string(),
                            passed: m.passed(),
                        })
                        .collect(),
                })
                .collect();
            to_json(&records)
        }
    };
    match &spec.out {
        Some(path) => write_file(path, &text)?,
        None => write_stream(std::io::stdout().lock(), &text)?,
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

pub fn execute(spec: &RunSpec) -> Result<(), CliError> {
    match spec.command {
        Command::Validate { .. } => run_validate(spec),
        Command::Visibility => run_visibility(spec),
        Command::QGrid(_) => run_qgrid(spec),
        Command::Variance => run_variance(spec),
    }
}

/// Parses and runs; returns the process exit code.
pub fn run<S: AsRef<str>>(argv: &[S]) -> i32 {
    let parsed =
        Cli::try_parse_from(std::iter::once("catamp").chain(argv.iter().map(|s| s.as_ref())));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", e.to_string().trim_end());
            return EXIT_USAGE;
        }
    };
    match resolve(cli).and_then(|spec| execute(&spec)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
