//! `eb-shrink` command-line front end.

pub mod error;
pub mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eb_shrink_core::experiments::{run_experiment, EstimatorKind, ExperimentSpec};
use eb_shrink_core::kernel::DEFAULT_WINDOW_TAU;
use eb_shrink_core::presets::{preset, Table};
use eb_shrink_core::{default_v, shrink, ObservationVector, QuadratureSpec, ShrinkageConfig, Truncation, Variant};

pub use error::{CliError, CliResult};
use render::{Provenance, RunReport, TableReport};

#[derive(Debug, Parser)]
#[command(name = "eb-shrink", version, about = "Empirical-Bayes shrinkage of normal means")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Trapezoid step for exact risk integrals.
    #[arg(long, global = true)]
    pub quad_step: Option<f64>,

    /// Kernel window radius in bandwidths; 0 sums over every observation.
    #[arg(long, global = true)]
    pub window_tau: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce the n = 1000 point-mass grid.
    Table1(TableArgs),
    /// Reproduce the n = 10,000 uniform-signal comparison with the strong oracle.
    Table2(TableArgs),
    /// Reproduce the n = 100,000 comparison (needs --heavy).
    Table3(TableArgs),
    /// Run an experiment described by a JSON spec file.
    Run(RunArgs),
    /// Shrink a column of z-scores (unit noise variance).
    Denoise(DenoiseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Allow the n = 100,000 preset.
    #[arg(long)]
    pub heavy: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replications per configuration (default 50; 10 for table3).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the spec file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the spec file's replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Allow specs with n above 50,000.
    #[arg(long)]
    pub heavy: bool,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Hat,
    Tilde,
}

/// `none`, `residual` or `magnitude:C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationArg(pub Truncation);

impl FromStr for TruncationArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self(Truncation::None)),
            "residual" => Ok(Self(Truncation::Residual)),
            _ => match s.strip_prefix("magnitude:") {
                Some(c) => {
                    let bound: f64 = c.parse().map_err(|_| format!("bad magnitude bound `{c}`"))?;
                    if bound > 0.0 && bound.is_finite() {
                        Ok(Self(Truncation::Magnitude { bound }))
                    } else {
                        Err(format!("magnitude bound must be positive, got {c}"))
                    }
                }
                None => Err(format!("expected none, residual or magnitude:C, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// One number per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Bandwidth parameter (default 1 + 1/ln n).
    #[arg(long)]
    pub v: Option<f64>,
    #[arg(long, value_enum, default_value_t = VariantArg::Tilde)]
    pub variant: VariantArg,
    #[arg(long, default_value = "residual")]
    pub trunc: TruncationArg,
    /// Leave each observation out of its own estimate.
    #[arg(long)]
    pub loo: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Specs above this dimension are refused without `--heavy`.
pub const HEAVY_N: usize = 50_000;

/// Global numeric knobs after applying defaults.
#[derive(Debug, Clone, Copy)]
struct Knobs {
    quadrature: QuadratureSpec,
    /// `None` = leave the spec's own setting; `Some(None)` = exact.
    window_tau: Option<Option<f64>>,
}

impl Knobs {
    fn from_cli(cli: &Cli) -> CliResult<Self> {
        let mut quadrature = QuadratureSpec::default();
        if let Some(step) = cli.quad_step {
            quadrature = QuadratureSpec::new(quadrature.half_width, step)?;
        }
        let window_tau = cli.window_tau.map(|t| if t == 0.0 { None } else { Some(t) });
        Ok(Self { quadrature, window_tau })
    }

    fn apply(&self, spec: &mut ExperimentSpec, override_quad: bool) {
        if override_quad {
            spec.quadrature = self.quadrature;
        }
        if let Some(tau) = self.window_tau {
            for e in &mut spec.estimators {
                if let EstimatorKind::Shrinkage(s) = &mut e.kind {
                    s.window_tau = tau;
                }
            }
        }
    }

    fn effective_tau(&self) -> Option<f64> {
        self.window_tau.unwrap_or(Some(DEFAULT_WINDOW_TAU))
    }
}

/// Result of a command: the rendered output and where it went.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub path: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let knobs = Knobs::from_cli(&cli)?;
    let work = || match &cli.command {
        Command::Table1(a) => cmd_table(Table::Table1, a, &knobs),
        Command::Table2(a) => cmd_table(Table::Table2, a, &knobs),
        Command::Table3(a) => cmd_table(Table::Table3, a, &knobs),
        Command::Run(a) => cmd_run(a, &knobs, cli.quad_step.is_some()),
        Command::Denoise(a) => cmd_denoise(a, knobs.window_tau),
    };
    match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| CliError::Refused(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn emit(text: String, out: &Option<PathBuf>) -> CliResult<Outcome> {
    if let Some(path) = out {
        fs::write(path, &text).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(Outcome {
        text,
        path: out.clone(),
    })
}

/// Runs every column of a preset and renders it.
pub fn table_report(
    table: Table,
    seed: u64,
    reps: usize,
    quad: QuadratureSpec,
    window_tau: Option<Option<f64>>,
) -> CliResult<TableReport> {
    let knobs = Knobs {
        quadrature: quad,
        window_tau,
    };
    let p = preset(table, seed, reps);
    let mut reports = Vec::with_capacity(p.columns.len());
    for c in &p.columns {
        let mut spec = c.spec.clone();
        knobs.apply(&mut spec, true);
        reports.push(run_experiment(&spec)?);
    }
    let provenance = Provenance {
        seed,
        replications: reps,
        quadrature: quad,
        window_tau: knobs.effective_tau(),
    };
    Ok(TableReport::new(&p, provenance, reports))
}

fn cmd_table(table: Table, args: &TableArgs, knobs: &Knobs) -> CliResult<Outcome> {
    if table.is_heavy() && !args.heavy {
        return Err(CliError::Refused(format!(
            "{} runs n = 100,000 experiments; pass --heavy to run it",
            table.name()
        )));
    }
    let reps = args.reps.unwrap_or_else(|| table.default_replications());
    if reps == 0 {
        return Err(eb_shrink_core::Error::InvalidArgument("--reps must be >= 1".into()).into());
    }
    let started = Instant::now();
    let report = table_report(table, args.seed, reps, knobs.quadrature, knobs.window_tau)?;
    eprintln!(
        "{}: {} columns in {:.1?}",
        table.name(),
        report.columns.len(),
        started.elapsed()
    );
    let text = match args.format {
        Format::Markdown => render::table_markdown(&report),
        Format::Csv => render::table_csv(&report)?,
        Format::Json => render::to_json(&report)?,
    };
    emit(text, &args.out)
}

/// Parses and validates a JSON spec file. Syntax errors carry line and column;
/// validation errors name the offending field.
pub fn load_spec(path: &Path) -> CliResult<ExperimentSpec> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(&display, e))?;
    let spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: display.clone(),
        message: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

fn cmd_run(args: &RunArgs, knobs: &Knobs, override_quad: bool) -> CliResult<Outcome> {
    let mut spec = load_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(reps) = args.reps {
        spec.replications = reps;
    }
    knobs.apply(&mut spec, override_quad);
    if spec.n > HEAVY_N && !args.heavy {
        return Err(CliError::Refused(format!(
            "n = {} exceeds {HEAVY_N}; pass --heavy to run it",
            spec.n
        )));
    }
    let started = Instant::now();
    let report = run_experiment(&spec)?;
    eprintln!("run: {} replications in {:.1?}", spec.replications, started.elapsed());
    let tau = spec.estimators.iter().find_map(|e| match &e.kind {
        EstimatorKind::Shrinkage(s) => Some(s.window_tau),
        _ => None,
    });
    let provenance = Provenance {
        seed: spec.seed,
        replications: spec.replications,
        quadrature: spec.quadrature,
        window_tau: tau.unwrap_or_else(|| knobs.effective_tau()),
    };
    let run = RunReport { provenance, report };
    let text = match args.format {
        Format::Markdown => render::run_markdown(&run),
        Format::Csv => render::run_csv(&run)?,
        Format::Json => render::to_json(&run)?,
    };
    emit(text, &args.out)
}

/// One number per line; LF or CRLF; a trailing newline is optional.
pub fn parse_values(text: &str, source: &str) -> CliResult<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let t = line.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Parse {
                    path: source.to_string(),
                    message: format!("line {}: `{t}` is not a finite number", i + 1),
                })
        })
        .collect()
}

pub fn denoise_values(values: Vec<f64>, args: &DenoiseArgs, window_tau: Option<Option<f64>>) -> CliResult<Vec<f64>> {
    let n = values.len();
    if n < 2 {
        return Err(CliError::Refused(format!("denoise needs at least 2 values, got {n}")));
    }
    let v = match args.v {
        Some(v) => v,
        None => default_v(n)?,
    };
    let variant = match args.variant {
        VariantArg::Hat => Variant::Hat,
        VariantArg::Tilde => Variant::Tilde,
    };
    let cfg = ShrinkageConfig::new(v)?
        .variant(variant)
        .truncation(args.trunc.0)
        .leave_one_out(args.loo)
        .window_tau(window_tau.unwrap_or(Some(DEFAULT_WINDOW_TAU)));
    cfg.validate()?;
    let y = ObservationVector::new(values)?;
    Ok(shrink(&y, &cfg)?.into_values())
}

fn cmd_denoise(args: &DenoiseArgs, window_tau: Option<Option<f64>>) -> CliResult<Outcome> {
    let display = args.input.display().to_string();
    let text = fs::read_to_string(&args.input).map_err(|e| CliError::io(&display, e))?;
    let values = parse_values(&text, &display)?;
    let out = denoise_values(values, args, window_tau)?;
    let mut s = String::with_capacity(out.len() * 20);
    for x in out {
        s.push_str(&x.to_string());
        s.push('\n');
    }
    emit(s, &args.out)
}
