//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification or I/O trouble, 2 unparseable
//! input, 3 a well-formed request outside the domain of the maths.

pub mod experiments;
pub mod format;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::extension::{
    extension_norm_experiment, holder_probe, Direction, ExtensionError, ExtensionSpec, TestFunction,
};
use crate::geometry::{classify, CuspParams, GeometryError, Point, Region, Scheme, ShellRange};
use crate::reflections::{apply, differential, ChartId, ReflectionError};
use crate::sobolev::SobolevError;
use experiments::{
    extendnorm_csv, grid_cells, holder_csv, outer_regions, scaling, scaling_csv, sweep, sweep_csv, SweepConfig,
};
use format::{num, point, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain(e.to_string())
            }
        }
    )*};
}
domain_from!(GeometryError, ReflectionError, SobolevError);

impl From<ExtensionError> for CliError {
    fn from(e: ExtensionError) -> Self {
        match e {
            ExtensionError::Parse(_) => CliError::Parse(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "cusp-reflect", version, about = "Reflections across a polynomial cusp and their Sobolev extension experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the region label of a point.
    Classify(PointArgs<SchemeArg>),
    /// Print the image of a point under a chart.
    Reflect(PointArgs<ChartArg>),
    /// Print the spectral norm and determinant of a chart's differential.
    Jacobian(PointArgs<ChartArg>),
    /// Run the invariant suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Convergence verdicts of the distortion integral over a (p, q) grid.
    Sweep(SweepArgs),
    /// Jacobian scaling along rays into the tip.
    Scaling(ScalingArgs),
    /// Shell-resolved norms of an extended test function.
    Extendnorm(ExtendArgs),
    /// Oscillation against diameter of the inward Lipschitz extension.
    Holder(HolderArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    R1,
    R2,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::R1 => Scheme::R1,
            SchemeArg::R2 => Scheme::R2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChartArg {
    R1Outer,
    R1Inner,
    R2Outer,
}

impl From<ChartArg> for ChartId {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::R1Outer => ChartId::R1Outer,
            ChartArg::R1Inner => ChartId::R1Inner,
            ChartArg::R2Outer => ChartId::R2Outer,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Inside,
    Outside,
}

#[derive(Debug, Args)]
pub struct CuspArgs {
    /// Ambient dimension.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Cusp degree.
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
}

impl CuspArgs {
    fn params(&self) -> Result<CuspParams, CliError> {
        Ok(CuspParams::new(self.n, self.s)?)
    }
}

#[derive(Debug, Args)]
pub struct PointArgs<S: ValueEnum + Clone + Send + Sync + 'static> {
    #[command(flatten)]
    pub cusp: CuspArgs,
    #[arg(long)]
    pub scheme: S,
    /// Coordinates `t,x1,...,x_{n-1}`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Shell range `k_min..k_max`.
    #[arg(long, default_value = "5..30", value_parser = parse_shells)]
    pub shells: ShellRange,
    /// Quadrature points per shell and region.
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write CSV here (plus a `.manifest.json` beside it) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub cusp: CuspArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Corrupt the analytic differentials so the finite-difference check fails.
    #[arg(long)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub cusp: CuspArgs,
    #[arg(long, default_value = "r1")]
    pub scheme: SchemeArg,
    /// Explicit p values; combined with `--q` as a product grid.
    #[arg(long, value_delimiter = ',', requires = "q")]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', requires = "p")]
    pub q: Vec<f64>,
    /// Side of the default grid when no explicit values are given.
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub cusp: CuspArgs,
    /// Regions to probe, from A, B, C, D, E.
    #[arg(long, value_delimiter = ',', default_value = "A,B,C,D,E")]
    pub region: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub cusp: CuspArgs,
    #[arg(long, default_value = "r1")]
    pub scheme: SchemeArg,
    #[arg(long, default_value = "inside")]
    pub direction: DirectionArg,
    /// Test function: `power:a`, `clamp`, `const:c` or `bump:R:t,x1,...`.
    #[arg(long, default_value = "power:1.4")]
    pub u: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.3)]
    pub q: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct HolderArgs {
    #[command(flatten)]
    pub cusp: CuspArgs,
    /// Heights in (0, 1/2); defaults to 2^-3, ..., 2^-10.
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_shells(text: &str) -> Result<ShellRange, String> {
    let (a, b) = text.split_once("..").ok_or_else(|| format!("expected k_min..k_max, got {text:?}"))?;
    let a: u32 = a.trim().parse().map_err(|e| format!("bad k_min {a:?}: {e}"))?;
    let b: u32 = b.trim().parse().map_err(|e| format!("bad k_max {b:?}: {e}"))?;
    ShellRange::new(a, b).map_err(|e| e.to_string())
}

fn parse_point(text: &str, params: &CuspParams) -> Result<Point, CliError> {
    let coords: Vec<f64> = text
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| CliError::Parse(format!("bad coordinate {c:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    if coords.len() != params.n() {
        return Err(CliError::Parse(format!("point has {} coordinates, expected n={}", coords.len(), params.n())));
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(CliError::Parse(format!("point {text:?} has non-finite coordinates")));
    }
    Ok(Point::from_coords(&coords))
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli.command, recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Output<'a> {
    command: &'a str,
    args: Vec<String>,
    seed: Option<u64>,
    out: Option<&'a Path>,
    started: Instant,
}

impl Output<'_> {
    fn emit(&self, csv: &str, summary: serde_json::Value) -> Result<(), CliError> {
        match self.out {
            None => print!("{csv}"),
            Some(path) => {
                std::fs::write(path, csv)?;
                Manifest {
                    command: self.command,
                    args: self.args.clone(),
                    seed: self.seed,
                    version: env!("CARGO_PKG_VERSION"),
                    wall_time_s: format::seconds(self.started.elapsed()),
                    summary,
                }
                .write_next_to(path)?;
            }
        }
        Ok(())
    }
}

pub fn run(command: Command, args: Vec<String>) -> Result<(), CliError> {
    let started = Instant::now();
    let output = |command: &'static str, seed: Option<u64>, out: Option<&'static Path>| Output {
        command,
        args: args.clone(),
        seed,
        out,
        started,
    };
    match command {
        Command::Classify(a) => {
            let params = a.cusp.params()?;
            let z = parse_point(&a.point, &params)?;
            println!("{}", classify(&params, a.scheme.into(), &z)?);
        }
        Command::Reflect(a) => {
            let params = a.cusp.params()?;
            let z = parse_point(&a.point, &params)?;
            println!("{}", point(&apply(a.scheme.into(), &params, &z)?.coords()));
        }
        Command::Jacobian(a) => {
            let params = a.cusp.params()?;
            let z = parse_point(&a.point, &params)?;
            let jet = differential(a.scheme.into(), &params, &z)?;
            println!("opnorm={} det={}", num(jet.opnorm), num(jet.det));
        }
        Command::Verify(a) => {
            let params = verify::check_window(a.cusp.n, a.cusp.s)?;
            let cfg = verify::VerifyConfig {
                params,
                shells: a.run.shells,
                samples: a.run.samples,
                seed: a.run.seed,
                inject_fault: a.inject_fault,
            };
            let checks = verify::run(&cfg)?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.pass()).map(|c| c.name.as_str()).collect();
            let csv = verify::report_csv(&checks)?;
            let out = a.run.out.as_deref();
            Output { out, ..output("verify", Some(cfg.seed), None) }
                .emit(&csv, json!({ "checks": checks.len(), "failed": failed }))?;
            if !failed.is_empty() {
                return Err(CliError::Failed(failed.join(", ")));
            }
        }
        Command::Sweep(a) => {
            let params = a.cusp.params()?;
            let scheme: Scheme = a.scheme.into();
            let cells: Vec<(f64, f64)> = if a.p.is_empty() {
                grid_cells(&params, scheme, a.grid)
            } else {
                a.p.iter().flat_map(|&p| a.q.iter().map(move |&q| (p, q))).collect()
            };
            if cells.iter().any(|(p, q)| !(p.is_finite() && q.is_finite())) {
                return Err(CliError::Parse("grid values must be finite".into()));
            }
            let cfg = SweepConfig {
                params,
                scheme,
                cells: &cells,
                shells: a.run.shells,
                samples: a.run.samples,
                seed: a.run.seed,
            };
            let rows = sweep(&cfg)?;
            let count = |f: &dyn Fn(&experiments::SweepRow) -> bool| rows.iter().filter(|r| f(r)).count();
            let summary = json!({
                "rows": rows.len(),
                "agree": count(&|r| r.agrees == Some(true)),
                "disagree": count(&|r| r.agrees == Some(false)),
                "undecided": count(&|r| r.agrees.is_none()),
            });
            let out = a.run.out.as_deref();
            Output { out, ..output("sweep", Some(cfg.seed), None) }.emit(&sweep_csv(&rows)?, summary)?;
        }
        Command::Scaling(a) => {
            let params = a.cusp.params()?;
            let mut reports = Vec::new();
            for name in &a.region {
                let region = Region::parse(name)
                    .filter(|r| outer_regions(Scheme::R1).contains(r) || outer_regions(Scheme::R2).contains(r))
                    .ok_or_else(|| CliError::Parse(format!("unknown region {name:?}; expected one of A, B, C, D, E")))?;
                reports.push(scaling(&params, region, a.run.shells)?);
            }
            let summary: serde_json::Value = reports
                .iter()
                .map(|r| {
                    json!({ "region": r.rows[0].region.name(), "fitted_slope": r.fitted_slope, "target_slope": r.target_slope })
                })
                .collect();
            let out = a.run.out.as_deref();
            Output { out, ..output("scaling", None, None) }.emit(&scaling_csv(&reports)?, summary)?;
        }
        Command::Extendnorm(a) => {
            let params = a.cusp.params()?;
            let u = TestFunction::parse(&a.u)?;
            let direction = match a.direction {
                DirectionArg::Inside => Direction::FromInside,
                DirectionArg::Outside => Direction::FromOutside,
            };
            let spec = ExtensionSpec::new(a.scheme.into(), direction)?;
            let rep = extension_norm_experiment(&spec, &params, &u, a.p, a.q, a.run.shells, a.run.samples, a.run.seed)?;
            let summary = json!({
                "verdict": rep.verdict.kind.to_string(),
                "extended_norm": rep.extended_norm,
                "source_norm": rep.source_norm,
                "ratio": rep.ratio,
            });
            let out = a.run.out.as_deref();
            Output { out, ..output("extendnorm", Some(a.run.seed), None) }.emit(&extendnorm_csv(&rep)?, summary)?;
        }
        Command::Holder(a) => {
            let params = a.cusp.params()?;
            let heights: Vec<f64> = if a.t.is_empty() { (3..=10).map(|k| 2f64.powi(-k)).collect() } else { a.t };
            let rep = holder_probe(&params, &heights)?;
            let summary = json!({ "fitted_exponent": rep.fitted_exponent, "residual": rep.residual });
            Output { out: a.out.as_deref(), ..output("holder", None, None) }.emit(&holder_csv(&rep)?, summary)?;
        }
    }
    Ok(())
}
