//! Command-line front end: argument parsing, orchestration and output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    analytic_doublet_splitting, classify_spectrum, plasma_frequency, semiclassical_zc,
    sweep_zc_with, DoubletReport, DEFAULT_DOUBLET_THRESHOLD, DEFAULT_WINDOW_PERIODS,
    DEFAULT_ZC_THRESHOLD,
};
use crate::cache::{CacheKey, SpectrumCache};
use crate::dynamics::{
    evolve_imbalance, plasma_time_grid, prepare_from_tilt, prepare_initial_with, InitialState,
    Z0_TOLERANCE,
};
use crate::eigensolve::{eigh_tridiagonal, Spectrum};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModelParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const ORTHONORMALITY_BOUND: f64 = 1e-10;
const RESIDUAL_BOUND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Eigenvalues E_m/U
    Spectrum,
    /// Occupations |c_m|² of the prepared state over a z0 grid
    Occupation,
    /// Imbalance z(t) over the plasma-period window
    Evolve,
    /// Time-averaged imbalance over a z0 grid and the z_c estimate
    Sweep,
    /// Quasi-degenerate doublet structure of the spectrum
    Doublets,
    /// Closed-form quantities
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "bosewell",
    version,
    about = "Exact dynamics of N bosons in a double well"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    #[arg(long, default_value_t = 100)]
    pub particles: usize,
    #[arg(
        long = "j-over-u",
        default_value_t = 3.333,
        allow_negative_numbers = true
    )]
    pub j_over_u: f64,
    /// Tilt of the preparation well (spectrum: tilt of the Hamiltonian)
    #[arg(
        long = "delta-over-u",
        conflicts_with = "z0",
        allow_negative_numbers = true
    )]
    pub delta_over_u: Option<f64>,
    /// Target initial imbalance in (-1, 1)
    #[arg(long, allow_negative_numbers = true)]
    pub z0: Option<f64>,
    /// start:stop:step, inclusive of stop
    #[arg(long = "z0-grid", value_parser = parse_grid)]
    pub z0_grid: Option<GridSpec>,
    #[arg(long = "window-periods", default_value_t = DEFAULT_WINDOW_PERIODS)]
    pub window_periods: f64,
    #[arg(long = "samples-per-period", default_value_t = 256)]
    pub samples_per_period: usize,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Spectrum cache directory (falls back to $BOSEWELL_CACHE)
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; defaults to available parallelism
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long = "doublet-threshold", default_value_t = DEFAULT_DOUBLET_THRESHOLD)]
    pub doublet_threshold: f64,
    #[arg(long = "zc-threshold", default_value_t = DEFAULT_ZC_THRESHOLD)]
    pub zc_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub const DEFAULT: GridSpec = GridSpec {
        start: 0.05,
        stop: 0.95,
        step: 0.02,
    };

    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!(
                "grid {start}:{stop}:{step} needs finite bounds and step > 0"
            )));
        }
        if stop < start {
            return Err(Error::Config(format!(
                "grid stop {stop} below start {start}"
            )));
        }
        Ok(Self { start, stop, step })
    }

    /// `start + i·step` for every `i` with the point at most `stop` (up to a
    /// relative slack of 1e-9 steps, so that `0.05:0.95:0.02` ends at 0.95).
    /// Points are rounded to 12 decimals so `0.1:0.9:0.1` yields 0.3, not
    /// 0.30000000000000004.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let x = self.start + i as f64 * self.step;
                (x * 1e12).round() / 1e12
            })
            .collect()
    }
}

pub fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(format!("expected start:stop:step, got '{s}'"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    GridSpec::new(num(a)?, num(b)?, num(c)?).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    DeltaOverU(f64),
    Z0(f64),
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n_particles: usize,
    pub j_over_u: f64,
    pub initial: Option<Initial>,
    pub z0_grid: Option<GridSpec>,
    pub window_periods: f64,
    pub samples_per_period: usize,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    pub format: Format,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
    pub doublet_threshold: f64,
    pub zc_threshold: f64,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let o = cli.options;
        let initial = match (o.delta_over_u, o.z0) {
            (Some(d), None) => Some(Initial::DeltaOverU(d + 0.0)),
            (None, Some(z)) => Some(Initial::Z0(z)),
            (None, None) => None,
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "--delta-over-u and --z0 are exclusive".into(),
                ))
            }
        };
        let format = o.format.unwrap_or(match cli.command {
            Command::Doublets | Command::Report => Format::Json,
            _ => Format::Csv,
        });
        let config = Self {
            command: cli.command,
            n_particles: o.particles,
            j_over_u: o.j_over_u,
            initial,
            z0_grid: o.z0_grid,
            window_periods: o.window_periods,
            samples_per_period: o.samples_per_period,
            output_path: o.out,
            format,
            cache_dir: o.cache_dir,
            threads: o.threads,
            doublet_threshold: o.doublet_threshold,
            zc_threshold: o.zc_threshold,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_particles == 0 {
            return bad("--particles must be at least 1".into());
        }
        if !(self.j_over_u.is_finite() && self.j_over_u >= 0.0) {
            return bad(format!(
                "--j-over-u must be finite and >= 0, got {}",
                self.j_over_u
            ));
        }
        if !(self.window_periods.is_finite() && self.window_periods > 0.0) {
            return bad("--window-periods must be > 0".into());
        }
        if self.samples_per_period == 0 {
            return bad("--samples-per-period must be > 0".into());
        }
        if self.threads == Some(0) {
            return bad("--threads must be > 0".into());
        }
        if !(self.doublet_threshold > 0.0 && self.doublet_threshold < 1.0) {
            return bad("--doublet-threshold must lie in (0, 1)".into());
        }
        if !(self.zc_threshold.is_finite() && self.zc_threshold > 0.0) {
            return bad("--zc-threshold must be > 0".into());
        }
        match (self.command, self.initial) {
            (Command::Evolve, None) => bad("evolve needs --z0 or --delta-over-u".into()),
            (Command::Sweep | Command::Doublets | Command::Report, Some(_)) => {
                bad(format!("{} takes no initial state", self.command_name()))
            }
            (Command::Spectrum, Some(Initial::Z0(_))) => {
                bad("spectrum takes --delta-over-u, not --z0".into())
            }
            (Command::Occupation, Some(_)) if self.z0_grid.is_some() => {
                bad("occupation takes either a single initial state or --z0-grid".into())
            }
            _ => Ok(()),
        }?;
        if self.z0_grid.is_some() && !matches!(self.command, Command::Occupation | Command::Sweep) {
            return bad(format!("{} takes no --z0-grid", self.command_name()));
        }
        if self.command == Command::Report && self.format == Format::Csv {
            return bad("report is written as JSON only".into());
        }
        Ok(())
    }

    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Spectrum => "spectrum",
            Command::Occupation => "occupation",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Doublets => "doublets",
            Command::Report => "report",
        }
    }

    fn symmetric_params(&self) -> Result<ModelParams> {
        ModelParams::symmetric(self.n_particles, self.j_over_u)
    }

    fn grid(&self) -> Vec<f64> {
        self.z0_grid.unwrap_or(GridSpec::DEFAULT).points()
    }

    /// Path of the z_c sidecar written next to a CSV sweep.
    pub fn sidecar_path(&self) -> Option<PathBuf> {
        let out = self.output_path.as_ref()?;
        (self.command == Command::Sweep && self.format == Format::Csv)
            .then(|| out.with_extension("zc.json"))
    }
}

/// One rendered artifact: a file (or stdout) and its full contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub contents: String,
}

struct Table {
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Copy)]
enum Cell {
    Int(usize),
    Real(f64),
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Cell::Int(i) => s.serialize_u64(i as u64),
            Cell::Real(x) => s.serialize_f64(x),
        }
    }
}

/// Shortest decimal that parses back to the same `f64`, switching to
/// exponent notation for very small or very large magnitudes.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

struct Output {
    metadata: Value,
    table: Option<Table>,
    extra: Value,
}

fn metadata(config: &RunConfig, extra: Value) -> Value {
    let mut m = json!({
        "program": "bosewell",
        "version": VERSION,
        "command": config.command,
        "created": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "particles": config.n_particles,
        "j_over_u": config.j_over_u,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut m, extra) {
        m.extend(e);
    }
    m
}

fn csv_header(meta: &Value) -> String {
    let mut s = String::new();
    if let Value::Object(map) = meta {
        for (k, v) in map {
            let v = match v {
                Value::String(t) => t.clone(),
                Value::Number(n) => n
                    .as_f64()
                    .filter(|_| !n.is_u64())
                    .map_or(n.to_string(), format_real),
                other => other.to_string(),
            };
            let _ = writeln!(s, "# {k}: {v}");
        }
    }
    s
}

fn render(config: &RunConfig, out: &Output) -> Result<String> {
    match config.format {
        Format::Csv => {
            let table = out
                .table
                .as_ref()
                .ok_or_else(|| Error::Config("no tabular output for this command".into()))?;
            let mut s = csv_header(&out.metadata);
            s.push_str(&table.columns.join(","));
            s.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|c| match *c {
                        Cell::Int(i) => i.to_string(),
                        Cell::Real(x) => format_real(x),
                    })
                    .collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            Ok(s)
        }
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("metadata".into(), out.metadata.clone());
            if let Some(table) = &out.table {
                doc.insert("columns".into(), json!(table.columns));
                doc.insert("rows".into(), serde_json::to_value(&table.rows)?);
            }
            if let Value::Object(e) = &out.extra {
                doc.extend(e.clone());
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(doc))?;
            s.push('\n');
            Ok(s)
        }
    }
}

struct Context {
    config: RunConfig,
    cache: Option<SpectrumCache>,
}

impl Context {
    fn spectrum(&self, delta_over_u: f64) -> Result<Spectrum> {
        let params = self.config.symmetric_params()?.with_delta(delta_over_u)?;
        let matrix = build_hamiltonian(&params);
        let compute = || eigh_tridiagonal(&matrix);
        let spectrum = match &self.cache {
            Some(cache) => {
                let key =
                    CacheKey::new(self.config.n_particles, self.config.j_over_u, delta_over_u);
                cache.load_or_compute(&key, compute)?
            }
            None => compute()?,
        };
        check_spectrum(&spectrum, &matrix)?;
        Ok(spectrum)
    }

    fn initial(&self, spectrum: &Spectrum, initial: Initial) -> Result<InitialState> {
        let params = self.config.symmetric_params()?;
        match initial {
            Initial::Z0(z0) => prepare_initial_with(z0, &params, spectrum),
            Initial::DeltaOverU(d) => prepare_from_tilt(d, &params, spectrum),
        }
    }
}

fn check_spectrum(spectrum: &Spectrum, matrix: &crate::model::TridiagonalMatrix) -> Result<()> {
    if spectrum.values().windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Invariant("eigenvalues not ascending".into()));
    }
    let ortho = spectrum.orthonormality_error();
    let resid = spectrum.max_residual(matrix) / matrix.frobenius_norm().max(f64::MIN_POSITIVE);
    if !(ortho <= ORTHONORMALITY_BOUND && resid <= RESIDUAL_BOUND) {
        return Err(Error::Invariant(format!(
            "eigendecomposition quality: orthonormality {ortho:e}, residual {resid:e}"
        )));
    }
    Ok(())
}

fn check_occupations(z0: f64, occ: &[f64]) -> Result<()> {
    let total: f64 = occ.iter().sum();
    if (total - 1.0).abs() > 1e-10 || occ.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Invariant(format!(
            "occupations at z0 = {z0} sum to {total}"
        )));
    }
    Ok(())
}

fn run_spectrum(ctx: &Context) -> Result<Output> {
    let delta = match ctx.config.initial {
        Some(Initial::DeltaOverU(d)) => d,
        _ => 0.0,
    };
    let spectrum = ctx.spectrum(delta)?;
    let rows = spectrum
        .values()
        .iter()
        .enumerate()
        .map(|(m, &e)| vec![Cell::Int(m), Cell::Real(e)])
        .collect();
    Ok(Output {
        metadata: metadata(&ctx.config, json!({ "delta_over_u": delta })),
        table: Some(Table {
            columns: &["m", "energy_over_u"],
            rows,
        }),
        extra: Value::Null,
    })
}

fn run_occupation(ctx: &Context) -> Result<Output> {
    let spectrum = ctx.spectrum(0.0)?;
    let states: Vec<InitialState> = match ctx.config.initial {
        Some(initial) => vec![ctx.initial(&spectrum, initial)?],
        None => {
            use rayon::prelude::*;
            let params = ctx.config.symmetric_params()?;
            ctx.config
                .grid()
                .par_iter()
                .map(|&z0| prepare_initial_with(z0, &params, &spectrum))
                .collect::<Result<_>>()?
        }
    };
    let mut rows = Vec::with_capacity(states.len() * spectrum.dim());
    for state in &states {
        let occ = state.occupations();
        check_occupations(state.z0, &occ)?;
        for (m, p) in occ.into_iter().enumerate() {
            rows.push(vec![Cell::Real(state.z0), Cell::Int(m), Cell::Real(p)]);
        }
    }
    let mut extra = json!({});
    if let Some(initial) = ctx.config.initial {
        extra = json!({ "initial": initial, "delta_over_u_used": states[0].delta_used });
    } else {
        extra["z0_grid"] = json!(ctx.config.z0_grid.unwrap_or(GridSpec::DEFAULT));
    }
    Ok(Output {
        metadata: metadata(&ctx.config, extra),
        table: Some(Table {
            columns: &["z0", "m", "occupation"],
            rows,
        }),
        extra: Value::Null,
    })
}

fn run_evolve(ctx: &Context) -> Result<Output> {
    let config = &ctx.config;
    let params = config.symmetric_params()?;
    let spectrum = ctx.spectrum(0.0)?;
    let state = ctx.initial(&spectrum, config.initial.expect("validated"))?;
    let times = plasma_time_grid(&params, config.window_periods, config.samples_per_period)?;
    let trace = evolve_imbalance(&state, &spectrum, &times)?;
    if (trace.z[0] - state.z0).abs() > 1e3 * Z0_TOLERANCE {
        return Err(Error::Invariant(format!(
            "z(0) = {} differs from prepared z0 = {}",
            trace.z[0], state.z0
        )));
    }
    if trace.z.iter().any(|z| !(z.abs() <= 1.0 + 1e-9)) {
        return Err(Error::Invariant("imbalance left [-1, 1]".into()));
    }
    let rows = trace
        .times
        .iter()
        .zip(&trace.z)
        .map(|(&t, &z)| vec![Cell::Real(t), Cell::Real(z)])
        .collect();
    Ok(Output {
        metadata: metadata(
            config,
            json!({
                "initial": config.initial,
                "z0": state.z0,
                "delta_over_u_used": state.delta_used,
                "plasma_frequency": plasma_frequency(&params)?,
                "window_periods": config.window_periods,
                "samples_per_period": config.samples_per_period,
            }),
        ),
        table: Some(Table {
            columns: &["t", "z"],
            rows,
        }),
        extra: Value::Null,
    })
}

fn run_sweep(ctx: &Context) -> Result<Output> {
    let config = &ctx.config;
    let params = config.symmetric_params()?;
    let spectrum = ctx.spectrum(0.0)?;
    let sweep = sweep_zc_with(
        &params,
        &spectrum,
        &config.grid(),
        config.window_periods,
        config.zc_threshold,
    )?;
    let rows = sweep
        .z0_grid
        .iter()
        .zip(&sweep.zbar_over_z0)
        .map(|(&z, &r)| vec![Cell::Real(z), Cell::Real(r)])
        .collect();
    let semiclassical = params.lambda().map(semiclassical_zc).transpose()?;
    Ok(Output {
        metadata: metadata(
            config,
            json!({
                "z0_grid": config.z0_grid.unwrap_or(GridSpec::DEFAULT),
                "window_periods": config.window_periods,
                "zc_threshold": config.zc_threshold,
            }),
        ),
        table: Some(Table {
            columns: &["z0", "zbar_over_z0"],
            rows,
        }),
        extra: json!({
            "z_c": sweep.z_c_estimate,
            "lambda": sweep.lambda,
            "semiclassical_z_c": semiclassical,
        }),
    })
}

fn run_doublets(ctx: &Context) -> Result<Output> {
    let spectrum = ctx.spectrum(0.0)?;
    let report: DoubletReport = classify_spectrum(&spectrum, ctx.config.doublet_threshold);
    let rows = report
        .doublets
        .iter()
        .map(|d| {
            vec![
                Cell::Int(d.lower),
                Cell::Int(d.upper),
                Cell::Real(d.centroid(&spectrum)),
                Cell::Real(d.splitting),
                Cell::Real(d.gap_to_next.unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    let meta_extra = json!({
        "doublet_threshold": ctx.config.doublet_threshold,
        "separatrix_index": report.separatrix_index,
        "irregular": report.irregular,
    });
    Ok(Output {
        metadata: metadata(&ctx.config, meta_extra),
        table: match ctx.config.format {
            Format::Csv => Some(Table {
                columns: &[
                    "lower",
                    "upper",
                    "centroid_over_u",
                    "splitting_over_u",
                    "gap_to_next_over_u",
                ],
                rows,
            }),
            Format::Json => None,
        },
        extra: json!({ "report": report }),
    })
}

fn run_report(ctx: &Context) -> Result<Output> {
    let params = ctx.config.symmetric_params()?;
    let lambda = params.lambda();
    let omega = plasma_frequency(&params)?;
    let zc = lambda.map(semiclassical_zc).transpose()?;
    let splitting = analytic_doublet_splitting(ctx.config.n_particles, ctx.config.j_over_u)?;
    Ok(Output {
        metadata: metadata(&ctx.config, json!({})),
        table: None,
        extra: json!({
            "plasma_frequency": omega,
            "lambda": lambda,
            "semiclassical_z_c": zc,
            "doublet_splitting": splitting,
        }),
    })
}

/// Compute every artifact for `config` without touching the filesystem
/// (except the spectrum cache).
pub fn render_artifacts(config: &RunConfig) -> Result<Vec<Artifact>> {
    config.validate()?;
    let ctx = Context {
        config: config.clone(),
        cache: SpectrumCache::from_option_or_env(config.cache_dir.as_deref()),
    };
    let output = match config.command {
        Command::Spectrum => run_spectrum(&ctx)?,
        Command::Occupation => run_occupation(&ctx)?,
        Command::Evolve => run_evolve(&ctx)?,
        Command::Sweep => run_sweep(&ctx)?,
        Command::Doublets => run_doublets(&ctx)?,
        Command::Report => run_report(&ctx)?,
    };
    let mut artifacts = vec![Artifact {
        path: config.output_path.clone(),
        contents: render(config, &output)?,
    }];
    if config.command == Command::Sweep && config.format == Format::Csv {
        let mut sidecar = serde_json::Map::new();
        sidecar.insert("metadata".into(), output.metadata.clone());
        if let Value::Object(e) = output.extra {
            sidecar.extend(e);
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(sidecar))?;
        s.push('\n');
        match config.sidecar_path() {
            Some(path) => artifacts.push(Artifact {
                path: Some(path),
                contents: s,
            }),
            // no output file: append the sidecar to stdout as comments
            None => {
                for line in s.lines() {
                    let _ = writeln!(artifacts[0].contents, "# {line}");
                }
            }
        }
    }
    Ok(artifacts)
}

/// Write artifacts atomically; on any failure, remove whatever was written.
pub fn write_artifacts(artifacts: &[Artifact]) -> Result<()> {
    let mut written: Vec<&Path> = Vec::new();
    let result = (|| -> Result<()> {
        for a in artifacts {
            match &a.path {
                Some(path) => {
                    write_atomic(path, a.contents.as_bytes())?;
                    written.push(path);
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout.write_all(a.contents.as_bytes())?;
                    stdout.flush()?;
                }
            }
        }
        Ok(())
    })();
    if result.is_err() {
        for path in written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Run inside a worker pool sized by `config.threads`.
pub fn run(config: &RunConfig) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let artifacts = pool.install(|| render_artifacts(config))?;
    write_artifacts(&artifacts)
}
