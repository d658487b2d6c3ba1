//! Command-line front end.
//!
//! Settings come from flags and an optional TOML file; flags win. Data go
//! only to the output file, summaries to standard output and diagnostics
//! to standard error.

pub mod generator;
pub mod report;
pub mod verify;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::dimension::{self, DimensionEstimate, WindowPolicy};
use crate::diversity::{self, DiversitySweep, DEFAULT_TOLERANCE};
use crate::grid;
use crate::magnitude;
use crate::metric::io::{self as mio, format_f64, InputKind};
use crate::metric::{self, FiniteMetricSpace, MetricError};
use crate::spaces::SpaceError;
use crate::ultra;

use report::{report_render, Cell, Report};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "METRIC_MAGNITUDE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("computation: {0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Compute(_) => 4,
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Magnitude,
    Diversity,
    Dimension,
    Ultra,
    Generate,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum DimensionMethod {
    #[default]
    Magnitude,
    Diversity,
    Minkowski,
    Ultra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Points,
    Matrix,
}

impl From<KindArg> for InputKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Points => InputKind::Points,
            KindArg::Matrix => InputKind::Matrix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// A grid given either explicitly or as `(min, max, count, spacing)`.
///
/// On the command line: `0.5,1,2` or `log:0.01:100:20` or `linear:1:5:5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridSpec {
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            GridSpec::List(v) => Ok(v.clone()),
            GridSpec::Range {
                min,
                max,
                count,
                spacing,
            } => {
                let ok = min.is_finite() && max.is_finite() && *count > 0 && min <= max;
                if !ok || (*spacing == Spacing::Log && *min <= 0.0) {
                    return Err(CliError::Config(format!(
                        "bad grid range min={min} max={max} count={count}"
                    )));
                }
                Ok(match spacing {
                    Spacing::Log => grid::log_grid(*min, *max, *count),
                    Spacing::Linear => grid::linear_grid(*min, *max, *count),
                })
            }
        }
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number `{x}`"));
        if let Some((head, rest)) = s.split_once(':') {
            let spacing = match head {
                "log" => Spacing::Log,
                "linear" => Spacing::Linear,
                _ => return Err(format!("unknown spacing `{head}`")),
            };
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err("expected spacing:min:max:count".into());
            }
            let count = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("bad count `{}`", parts[2]))?;
            return Ok(GridSpec::Range {
                min: num(parts[0])?,
                max: num(parts[1])?,
                count,
                spacing,
            });
        }
        s.split(',').map(num).collect::<Result<_, _>>().map(GridSpec::List)
    }
}

fn parse_window(s: &str) -> Result<WindowPolicy, String> {
    match s {
        "auto" => Ok(WindowPolicy::Auto),
        "full" => Ok(WindowPolicy::Full),
        _ => {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| format!("window must be auto, full or low:high, got `{s}`"))?;
            let low: f64 = a.trim().parse().map_err(|_| format!("bad window bound `{a}`"))?;
            let high: f64 = b.trim().parse().map_err(|_| format!("bad window bound `{b}`"))?;
            if !(low > 0.0 && high > low && high.is_finite()) {
                return Err(format!("window needs 0 < low < high, got {low}:{high}"));
            }
            Ok(WindowPolicy::Range { low, high })
        }
    }
}

/// Command-line flags.
#[derive(Debug, Parser)]
#[command(name = "metric-magnitude", version, about = "Magnitude and diversity of finite metric spaces")]
pub struct Cli {
    /// Command to run. May instead be set in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML file with the same keys as the long flags (underscored).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input file, or a generator spec such as `interval:length=1,n=5`.
    #[arg(short, long)]
    pub input: Option<String>,
    /// How to read CSV input.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Scales: `0.5,1,2` or `log:0.01:100:20`.
    #[arg(long)]
    pub t_grid: Option<GridSpec>,
    /// Radii for covering numbers, same syntax as the scale grid.
    #[arg(long)]
    pub epsilon_grid: Option<GridSpec>,
    /// Duality-gap tolerance for maximum diversity.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Worker threads. Defaults to the environment variable
    /// METRIC_MAGNITUDE_THREADS, then to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Data file to write. Stdout only gets a summary.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Output format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Seed for random generators. Required when one is used.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimator for the dimension command.
    #[arg(long, value_enum)]
    pub method: Option<DimensionMethod>,
    /// Fit window: auto, full, or low:high in scale units.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<WindowPolicy>,
    /// Volume of the body approximated by the input, for the volume bound.
    #[arg(long)]
    pub volume: Option<f64>,
    /// Keep the optimal weights in diversity JSON output.
    #[arg(long)]
    pub include_mu: bool,
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<Command>,
    pub input: Option<String>,
    pub kind: Option<KindArg>,
    pub t_grid: Option<GridSpec>,
    pub epsilon_grid: Option<GridSpec>,
    pub tolerance: Option<f64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub method: Option<DimensionMethod>,
    pub window: Option<String>,
    pub volume: Option<f64>,
    pub include_mu: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<String>,
    pub kind: Option<InputKind>,
    pub t_grid: Option<Vec<f64>>,
    pub epsilon_grid: Option<Vec<f64>>,
    pub tolerance: f64,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: Option<u64>,
    pub method: DimensionMethod,
    pub window: WindowPolicy,
    pub volume: Option<f64>,
    pub include_mu: bool,
}

impl RunConfig {
    /// Merge flags over the file, then validate.
    pub fn resolve(cli: Cli, env_threads: Option<String>) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let command = cli
            .command
            .or(file.command)
            .ok_or_else(|| CliError::Config("no command given".into()))?;
        let window = match (cli.window, file.window) {
            (Some(w), _) => w,
            (None, Some(s)) => parse_window(&s).map_err(CliError::Config)?,
            (None, None) => WindowPolicy::Auto,
        };
        let env_threads = match env_threads {
            Some(s) => Some(s.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))
            })?),
            None => None,
        };
        let output = cli.output.or(file.output);
        let inferred = output
            .as_ref()
            .and_then(|p| p.extension())
            .map(|e| if e.eq_ignore_ascii_case("json") { OutputFormat::Json } else { OutputFormat::Csv });
        let t_grid = cli.t_grid.or(file.t_grid).map(|g| g.values()).transpose()?;
        let epsilon_grid = cli
            .epsilon_grid
            .or(file.epsilon_grid)
            .map(|g| g.values())
            .transpose()?;
        let config = RunConfig {
            command,
            input: cli.input.or(file.input),
            kind: cli.kind.or(file.kind).map(Into::into),
            t_grid,
            epsilon_grid,
            tolerance: cli.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE),
            threads: cli.threads.or(file.threads).or(env_threads),
            output,
            format: cli.format.or(file.format).or(inferred).unwrap_or_default(),
            seed: cli.seed.or(file.seed),
            method: cli.method.or(file.method).unwrap_or_default(),
            window,
            volume: cli.volume.or(file.volume),
            include_mu: cli.include_mu || file.include_mu.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(CliError::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if let Some(g) = &self.t_grid {
            if g.is_empty() || !grid::is_strictly_increasing(g) || g.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(CliError::Config("t grid must be nonempty, positive and strictly increasing".into()));
            }
        }
        if let Some(g) = &self.epsilon_grid {
            let sorted = grid::is_strictly_increasing(g) || g.windows(2).all(|w| w[0] > w[1]);
            if g.is_empty() || !sorted || g.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(CliError::Config("epsilon grid must be nonempty, positive and strictly sorted".into()));
            }
        }
        if let Some(v) = self.volume {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Config(format!("volume must be nonnegative, got {v}")));
            }
        }
        if self.input.is_none() {
            return Err(CliError::Config("no input given".into()));
        }
        if self.command == Command::Generate && self.output.is_none() {
            return Err(CliError::Config("generate needs an output path".into()));
        }
        Ok(())
    }

    fn t_grid_or_default(&self) -> Vec<f64> {
        self.t_grid.clone().unwrap_or_else(metric::standard_sweep_grid)
    }

    /// Default scales for growth fits: from `1/diam` to `10/min_sep`.
    fn growth_grid_or_default(&self, space: &FiniteMetricSpace) -> Vec<f64> {
        match (&self.t_grid, space.min_separation()) {
            (Some(g), _) => g.clone(),
            (None, Some(sep)) => grid::log_grid(1.0 / space.diameter(), 10.0 / sep, 25),
            (None, None) => metric::standard_sweep_grid(),
        }
    }

    /// Epsilon grid in decreasing order.
    fn epsilon_grid_or_default(&self, space: &FiniteMetricSpace) -> Vec<f64> {
        let mut g = match &self.epsilon_grid {
            Some(g) => g.clone(),
            None => {
                let lo = space.min_separation().unwrap_or(1.0);
                let hi = space.diameter().max(lo);
                grid::log_grid(lo, hi, 20)
            }
        };
        if grid::is_strictly_increasing(&g) {
            g.reverse();
        }
        g
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub reports: Vec<Report>,
    /// Compute failures, reported after the rest of the output is written.
    pub failures: Vec<String>,
    pub verification_failures: usize,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if !self.failures.is_empty() {
            4
        } else if self.verification_failures > 0 {
            1
        } else {
            0
        }
    }
}

pub fn load_input(config: &RunConfig) -> Result<FiniteMetricSpace, CliError> {
    let input = config.input.as_deref().expect("validated");
    if generator::is_generator_spec(input) {
        generator::generate(input, config.seed)
    } else {
        Ok(mio::load_space(Path::new(input), config.kind)?)
    }
}

fn write_output(config: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(path) = &config.output {
        let mut f = fs::File::create(path).map_err(io_err(path))?;
        f.write_all(bytes).map_err(io_err(path))?;
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s.into_bytes()
}

/// Run one configured command, writing its output file.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    match config.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| dispatch(config)),
        None => dispatch(config),
    }
}

fn dispatch(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let space = load_input(config)?;
    match config.command {
        Command::Magnitude => run_magnitude(config, &space),
        Command::Diversity => run_diversity(config, &space),
        Command::Dimension => run_dimension(config, &space),
        Command::Ultra => run_ultra(config, &space),
        Command::Generate => run_generate(config, &space),
        Command::Verify => run_verify(config, &space),
    }
}

fn magnitude_csv(curve: &magnitude::MagnitudeCurve) -> Vec<u8> {
    csv_bytes(
        "t,magnitude,residual",
        curve
            .samples
            .iter()
            .zip(curve.solver_meta.iter().filter(|m| m.error.is_none()))
            .map(|(p, m)| {
                vec![
                    format_f64(p.t),
                    format_f64(p.value),
                    format_f64(m.residual.unwrap_or(f64::NAN)),
                ]
            }),
    )
}

fn run_magnitude(config: &RunConfig, space: &FiniteMetricSpace) -> Result<RunOutcome, CliError> {
    let curve = magnitude::magnitude_function(space, &config.t_grid_or_default())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let bytes = match config.format {
        OutputFormat::Csv => magnitude_csv(&curve),
        OutputFormat::Json => json_bytes(&curve),
    };
    write_output(config, &bytes)?;
    let rows = curve
        .samples
        .iter()
        .zip(curve.solver_meta.iter().filter(|m| m.error.is_none()))
        .map(|(p, m)| {
            vec![
                Cell::Num(p.t),
                Cell::Num(p.value),
                Cell::Num(m.residual.unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    Ok(RunOutcome {
        reports: vec![Report::Table {
            title: format!("magnitude of {} points", curve.n_points),
            headers: vec!["t".into(), "magnitude".into(), "residual".into()],
            rows,
        }],
        failures: curve
            .failures()
            .map(|m| format!("t = {}: {}", m.t, m.error.as_ref().expect("failure")))
            .collect(),
        verification_failures: 0,
    })
}

fn diversity_csv(curve: &diversity::DiversityCurve) -> Vec<u8> {
    csv_bytes(
        "t,diversity,gap,iterations",
        curve.samples.iter().map(|r| {
            vec![
                format_f64(r.t),
                format_f64(r.value),
                format_f64(r.duality_gap),
                r.iterations.to_string(),
            ]
        }),
    )
}

fn sweep(config: &RunConfig) -> DiversitySweep {
    DiversitySweep {
        tolerance: config.tolerance,
        ..DiversitySweep::default()
    }
}

fn run_diversity(config: &RunConfig, space: &FiniteMetricSpace) -> Result<RunOutcome, CliError> {
    let curve = diversity::diversity_function_with(space, &config.t_grid_or_default(), &sweep(config))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let bytes = match config.format {
        OutputFormat::Csv => diversity_csv(&curve),
        OutputFormat::Json => {
            let mut v = serde_json::to_value(&curve).expect("serializable");
            if !config.include_mu {
                for sample in v["samples"].as_array_mut().into_iter().flatten() {
                    sample.as_object_mut().map(|o| o.remove("mu"));
                }
            }
            json_bytes(&v)
        }
    };
    write_output(config, &bytes)?;
    let rows = curve
        .samples
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.t),
                Cell::Num(r.value),
                Cell::Num(r.duality_gap),
                Cell::Int(r.iterations as u64),
                Cell::Flag(r.certified),
            ]
        })
        .collect();
    Ok(RunOutcome {
        reports: vec![Report::Table {
            title: format!("maximum diversity of {} points", curve.n_points),
            headers: ["t", "diversity", "gap", "iterations", "certified"]
                .map(String::from)
                .to_vec(),
            rows,
        }],
        failures: curve
            .failures
            .iter()
            .map(|(t, e)| format!("t = {t}: {e}"))
            .collect(),
        verification_failures: 0,
    })
}

fn ultra_rows(points: &[(f64, usize)]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|(t, v)| vec![format_f64(*t), v.to_string()])
        .collect()
}

fn run_ultra(config: &RunConfig, space: &FiniteMetricSpace) -> Result<RunOutcome, CliError> {
    let u = ultra::validate_ultrametric(space.clone()).map_err(|e| CliError::Compute(e.to_string()))?;
    let points: Vec<(f64, usize)> = match &config.t_grid {
        Some(g) => g
            .iter()
            .map(|&t| Ok((t, ultra::ultramagnitude(&u, t)?)))
            .collect::<Result<_, ultra::UltraError>>()
            .map_err(|e| CliError::Config(e.to_string()))?,
        None => ultra::ultramagnitude_steps(&u)
            .into_iter()
            .map(|s| (s.t, s.value))
            .collect(),
    };
    let bytes = match config.format {
        OutputFormat::Csv => csv_bytes("t,ultramagnitude", ultra_rows(&points)),
        OutputFormat::Json => json_bytes(
            &points
                .iter()
                .map(|(t, v)| json!({"t": t, "ultramagnitude": v}))
                .collect::<Vec<_>>(),
        ),
    };
    write_output(config, &bytes)?;
    Ok(RunOutcome {
        reports: vec![Report::Table {
            title: format!("ultramagnitude of {} points", u.len()),
            headers: vec!["t".into(), "ultramagnitude".into()],
            rows: points
                .iter()
                .map(|(t, v)| vec![Cell::Num(*t), Cell::Int(*v as u64)])
                .collect(),
        }],
        ..RunOutcome::default()
    })
}

fn run_dimension(config: &RunConfig, space: &FiniteMetricSpace) -> Result<RunOutcome, CliError> {
    let compute = |e: dimension::DimensionError| CliError::Compute(e.to_string());
    let (estimate, bytes, failures): (DimensionEstimate, Vec<u8>, Vec<String>) = match config.method {
        DimensionMethod::Magnitude => {
            let curve = magnitude::magnitude_function(space, &config.growth_grid_or_default(space))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let failures = curve
                .failures()
                .map(|m| format!("t = {}: {}", m.t, m.error.as_ref().expect("failure")))
                .collect();
            let est = dimension::magnitude_dimension(&curve, config.window).map_err(compute)?;
            let bytes = match config.format {
                OutputFormat::Csv => magnitude_csv(&curve),
                OutputFormat::Json => json_bytes(&json!({"estimate": est, "curve": curve})),
            };
            (est, bytes, failures)
        }
        DimensionMethod::Diversity => {
            let curve = diversity::diversity_function_with(space, &config.growth_grid_or_default(space), &sweep(config))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let failures = curve.failures.iter().map(|(t, e)| format!("t = {t}: {e}")).collect();
            let est = dimension::diversity_dimension(&curve, config.window).map_err(compute)?;
            let bytes = match config.format {
                OutputFormat::Csv => diversity_csv(&curve),
                OutputFormat::Json => json_bytes(&json!({"estimate": est, "curve": curve})),
            };
            (est, bytes, failures)
        }
        DimensionMethod::Minkowski => {
            let eps = config.epsilon_grid_or_default(space);
            let m = dimension::minkowski_dimension(space, &eps, config.window).map_err(compute)?;
            let bytes = match config.format {
                OutputFormat::Csv => csv_bytes(
                    "epsilon,covering,packing,exact",
                    m.table.iter().map(|r| {
                        vec![
                            format_f64(r.epsilon),
                            r.covering.to_string(),
                            r.packing.to_string(),
                            r.exact.to_string(),
                        ]
                    }),
                ),
                OutputFormat::Json => json_bytes(&m),
            };
            (m.estimate, bytes, Vec::new())
        }
        DimensionMethod::Ultra => {
            let u = ultra::validate_ultrametric(space.clone())
                .map_err(|e| CliError::Compute(e.to_string()))?;
            let g = config.growth_grid_or_default(space);
            let est = ultra::ultramagnitude_dimension(&u, &g, config.window).map_err(compute)?;
            let curve = ultra::ultramagnitude_curve(&u, &g).map_err(|e| CliError::Config(e.to_string()))?;
            let points: Vec<(f64, usize)> = curve.iter().map(|p| (p.t, p.value as usize)).collect();
            let bytes = match config.format {
                OutputFormat::Csv => csv_bytes("t,ultramagnitude", ultra_rows(&points)),
                OutputFormat::Json => json_bytes(&json!({"estimate": est, "curve": curve})),
            };
            (est, bytes, Vec::new())
        }
    };
    write_output(config, &bytes)?;
    let method = format!("{:?}", config.method).to_lowercase();
    let axis = if config.method == DimensionMethod::Minkowski { "1/epsilon" } else { "t" };
    Ok(RunOutcome {
        reports: vec![Report::Dimension {
            method,
            axis: axis.into(),
            estimate,
        }],
        failures,
        verification_failures: 0,
    })
}

fn run_generate(config: &RunConfig, space: &FiniteMetricSpace) -> Result<RunOutcome, CliError> {
    let mut buf = Vec::new();
    match (config.format, space.ambient()) {
        (OutputFormat::Csv, Some(points)) => mio::write_points_csv(&mut buf, points),
        (OutputFormat::Csv, None) => mio::write_matrix_csv(&mut buf, space),
        (OutputFormat::Json, _) => mio::write_matrix_json(&mut buf, space),
    }
    .map_err(|e| CliError::Io(e.to_string()))?;
    write_output(config, &buf)?;
    let what = if config.format == OutputFormat::Csv && space.ambient().is_some() {
        "points"
    } else {
        "distance matrix"
    };
    Ok(RunOutcome {
        reports: vec![Report::Note(format!(
            "wrote {} {what} for {} points",
            config.output.as_ref().expect("validated").display(),
            space.len()
        ))],
        ..RunOutcome::default()
    })
}

fn run_verify(config: &RunConfig, space: &FiniteMetricSpace) -> Result<RunOutcome, CliError> {
    let t_grid = config.t_grid_or_default();
    let eps = config.epsilon_grid.as_ref().map(|_| config.epsilon_grid_or_default(space));
    let plan = verify::VerifyPlan {
        t_grid: &t_grid,
        epsilon_grid: eps.as_deref(),
        tolerance: config.tolerance,
        volume: config.volume,
    };
    let outcome = verify::verify(space, &plan);
    let bytes = match config.format {
        OutputFormat::Csv => csv_bytes(
            "check,parameter,value,bound,passed",
            outcome.checks.iter().map(|c| {
                vec![
                    c.check.clone(),
                    format_f64(c.parameter),
                    format_f64(c.value),
                    format_f64(c.bound),
                    c.passed.to_string(),
                ]
            }),
        ),
        OutputFormat::Json => json_bytes(&outcome),
    };
    write_output(config, &bytes)?;
    let mut names: Vec<&str> = Vec::new();
    for c in &outcome.checks {
        if !names.contains(&c.check.as_str()) {
            names.push(&c.check);
        }
    }
    let rows = names
        .iter()
        .map(|name| {
            let mine: Vec<_> = outcome.checks.iter().filter(|c| c.check == *name).collect();
            let failed = mine.iter().filter(|c| !c.passed).count();
            vec![
                Cell::Text(name.to_string()),
                Cell::Int(mine.len() as u64),
                Cell::Int(failed as u64),
            ]
        })
        .collect();
    let mut reports = vec![Report::Table {
        title: format!("verification of {} points", space.len()),
        headers: vec!["check".into(), "cases".into(), "failed".into()],
        rows,
    }];
    reports.extend(outcome.skipped.iter().map(|s| Report::Note(format!("skipped: {s}"))));
    Ok(RunOutcome {
        reports,
        failures: outcome.errors.clone(),
        verification_failures: outcome.failures(),
    })
}

/// Parse arguments, run, print the summary, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = RunConfig::resolve(cli, std::env::var(THREADS_ENV).ok()).and_then(|c| run(&c));
    match outcome {
        Ok(o) => {
            print!("{}", report_render(&o.reports));
            for f in &o.failures {
                eprintln!("error: {f}");
            }
            if o.verification_failures > 0 {
                eprintln!("verification failed: {} checks", o.verification_failures);
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
