//! Command-line front end.
//!
//! Exit codes: 0 success, 1 simulation failure, 2 usage error, 3 missing
//! config file, 4 type mismatch or malformed config, 5 unknown key,
//! 6 inconsistent sweep axes, 7 invalid value, 8 unknown preset, 9 output
//! failure.

pub mod config;
pub mod presets;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::Value;

use crate::constellation::{psk_constellation, ris_constellation, Constellation};
use crate::harness::{
    aggregate_trajectories, sweep, with_workers, write_curves_csv, write_heatmap_csv, write_sweep_csv,
    write_trajectory_csv, ExperimentSpec, Manifest, PointResult, Scheme, TrajectorySummary,
};
use crate::quantum_rx::TrialRecord;
use config::ConfigError;
use presets::Report;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_UNKNOWN_PRESET: i32 = 8;
pub const EXIT_OUTPUT: i32 = 9;

pub const SWEEP_CSV: &str = "pe_sweep.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const CURVES_CSV: &str = "trajectory_mean.csv";
pub const HEATMAP_CSV: &str = "heatmap.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "risqr", version, about = "Quantum reading of surface-modulated coherent states")]
pub struct Cli {
    /// Master seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV outputs and the run manifest.
    #[arg(long, global = true, default_value = "risqr-out")]
    pub out_dir: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Multiplies every trial count; physics parameters are untouched.
    #[arg(long, global = true, visible_alias = "desk-scale")]
    pub scale: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Constellation utilities.
    Constellation {
        #[command(subcommand)]
        action: ConstellationCommand,
    },
    /// Heterodyne error probability at one intensity; prints one CSV row.
    Baseline(BaselineArgs),
    /// Quantum-receiver run at one point with full trajectory output.
    Read(SpecArgs),
    /// Parameter sweep from a config file and overrides.
    Sweep(SweepArgs),
    /// Runs a built-in preset.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Subcommand)]
pub enum ConstellationCommand {
    /// Writes every symbol as CSV (index, ring, phase_slot, re, im, abs, arg).
    Dump(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModulationArg {
    Ris,
    Psk,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long, value_enum, default_value = "ris")]
    pub modulation: ModulationArg,
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// Surface element count (ring constellations).
    #[arg(long, default_value_t = 80)]
    pub k: u64,
    /// Source photon number per element group; the amplitude is `√n0`.
    #[arg(long, default_value_t = 1.0)]
    pub n0: f64,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub modulation: ModulationArg,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n0: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 80)]
    pub k: u64,
    /// Central-mode efficiency ξη.
    #[arg(long, default_value_t = crate::optics::CENTRAL_EFFICIENCY)]
    pub efficiency: f64,
    /// Intensity convention: source, received or detected.
    #[arg(long, default_value = "source")]
    pub convention: String,
    /// Also print the CSV header line.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args, Default)]
pub struct SpecArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value` override, repeatable; applied after the file and environment.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u64>,
    /// Total source photon number `⟨n⟩` (comma-separated to sweep).
    #[arg(long, value_delimiter = ',')]
    pub n0: Vec<f64>,
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Symbol duration in μs (comma-separated to sweep).
    #[arg(long = "t-us", value_delimiter = ',')]
    pub t_us: Vec<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Record per-trial trajectories.
    #[arg(long)]
    pub trajectories: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Re-runs the specs recorded in a previous run's manifest.
    #[arg(long, conflicts_with_all = ["config", "set"])]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Preset id, e.g. fig3a, fig6, table2.
    pub id: String,
}

/// Every way a command can fail.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown preset `{0}`; known presets: {known}", known = presets::PRESET_IDS.join(", "))]
    UnknownPreset(String),
    #[error("cannot write outputs: {0}")]
    Output(crate::Error),
    #[error(transparent)]
    Run(crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(e) => e.exit_code(),
            CliError::UnknownPreset(_) => EXIT_UNKNOWN_PRESET,
            CliError::Output(_) => EXIT_OUTPUT,
            CliError::Run(_) => EXIT_RUNTIME,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn output<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(CliError::Output)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let command_line = args.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>().join(" ");
    let env = config::env_overrides(std::env::vars());
    match execute(&cli, &command_line, &env) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command with explicit environment overrides.
pub fn execute(cli: &Cli, command_line: &str, env: &[(String, Value)]) -> CliResult<()> {
    let ctx = Context {
        out_dir: cli.out_dir.clone(),
        workers: cli.workers.unwrap_or_else(default_workers),
        seed: cli.seed,
        scale: cli.scale.unwrap_or(1.0),
        command_line: command_line.to_string(),
        started: Instant::now(),
    };
    if !(ctx.scale > 0.0 && ctx.scale.is_finite()) {
        return Err(ConfigError::InvalidValue {
            key: "scale".into(),
            reason: format!("must be positive, got {}", ctx.scale),
        }
        .into());
    }
    match &cli.command {
        Command::Constellation { action: ConstellationCommand::Dump(args) } => dump(&ctx, args),
        Command::Baseline(args) => baseline(&ctx, args),
        Command::Read(args) => read(&ctx, args, env),
        Command::Sweep(args) => sweep_command(&ctx, args, env),
        Command::Reproduce(args) => reproduce(&ctx, &args.id),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

struct Context {
    out_dir: PathBuf,
    workers: usize,
    seed: Option<u64>,
    scale: f64,
    command_line: String,
    started: Instant,
}

impl Context {
    fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(BufWriter::new(File::create(self.out_dir.join(name))?))
    }

    fn manifest(
        &self,
        specs: Vec<ExperimentSpec>,
        outputs: Vec<String>,
        row_wall_time_s: Vec<f64>,
    ) -> CliResult<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command_line.clone(),
            master_seed: self.seed.or_else(|| specs.first().map(|s| s.master_seed)).unwrap_or(0),
            workers: self.workers,
            scale: self.scale,
            specs,
            outputs,
            row_wall_time_s,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        std::fs::create_dir_all(&self.out_dir)?;
        output(manifest.write(&self.out_dir.join(MANIFEST_JSON)))
    }
}

fn modulation_constellation(
    modulation: ModulationArg,
    m: usize,
    k: u64,
    n0: f64,
) -> crate::Result<Constellation> {
    match modulation {
        ModulationArg::Ris => ris_constellation(m, k, n0.sqrt()),
        ModulationArg::Psk => psk_constellation(m, n0.sqrt()),
    }
}

/// Writes a constellation as `index, ring, phase_slot, re, im, abs, arg`
/// with 1-based indices.
pub fn write_constellation_csv<W: Write>(out: W, c: &Constellation) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "ring", "phase_slot", "re", "im", "abs", "arg"])?;
    for (i, (s, slot)) in c.symbols().iter().zip(c.slots()).enumerate() {
        w.write_record([
            (i + 1).to_string(),
            slot.ring.to_string(),
            slot.phase_slot.to_string(),
            s.re.to_string(),
            s.im.to_string(),
            s.norm().to_string(),
            s.arg().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn dump(ctx: &Context, args: &DumpArgs) -> CliResult<()> {
    let c = modulation_constellation(args.modulation, args.m, args.k, args.n0).map_err(|e| {
        CliError::Config(ConfigError::InvalidValue { key: "constellation".into(), reason: e.to_string() })
    })?;
    let name = "constellation.csv";
    output(write_constellation_csv(ctx.create(name)?, &c))?;
    output(write_constellation_csv(std::io::stdout().lock(), &c))?;
    ctx.manifest(Vec::new(), vec![name.into()], Vec::new())
}

fn baseline(ctx: &Context, args: &BaselineArgs) -> CliResult<()> {
    let scheme = match args.modulation {
        ModulationArg::Ris => "ris-sql",
        ModulationArg::Psk => "psk-sql",
    };
    let flags = vec![
        ("scheme".to_string(), Value::String(scheme.into())),
        ("m".to_string(), Value::Integer(args.m as i64)),
        ("n0_total".to_string(), Value::Float(args.n0)),
        ("trials".to_string(), Value::Integer(scaled_trials(args.trials, ctx.scale) as i64)),
        ("k".to_string(), Value::Integer(args.k as i64)),
        ("efficiency_central".to_string(), Value::Float(args.efficiency)),
        ("convention".to_string(), Value::String(args.convention.clone())),
        ("seed".to_string(), Value::Integer(ctx.seed.unwrap_or(0) as i64)),
    ];
    let spec = config::parse_config(&[], None, &[], &[], &flags)?;
    let results = run_specs(ctx, std::slice::from_ref(&spec))?;
    let row = &results[0].1[0].row;
    let header = ["M", "scheme", "n0", "xi_eta", "trials", "pe", "ci_low", "ci_high"];
    let record = [
        row.m.to_string(),
        row.scheme.to_string(),
        row.n0.to_string(),
        row.xi_eta.to_string(),
        row.trials.to_string(),
        row.pe.to_string(),
        row.ci_low.to_string(),
        row.ci_high.to_string(),
    ];
    let name = "baseline.csv";
    {
        let mut w = csv::Writer::from_writer(ctx.create(name)?);
        w.write_record(header)
            .and_then(|_| w.write_record(&record))
            .map_err(|e| CliError::Output(e.into()))?;
        w.flush()?;
    }
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    if args.header {
        w.write_record(header).map_err(|e| CliError::Output(e.into()))?;
    }
    w.write_record(&record).map_err(|e| CliError::Output(e.into()))?;
    w.flush()?;
    let walls = vec![row.wall_time_s];
    ctx.manifest(vec![spec], vec![name.into()], walls)
}

fn scaled_trials(trials: u64, scale: f64) -> u64 {
    if scale == 1.0 {
        trials
    } else {
        presets::scaled(trials, scale)
    }
}

/// Flag overrides shared by `read` and `sweep`.
fn spec_flags(ctx: &Context, args: &SpecArgs) -> Vec<(String, Value)> {
    let mut flags = Vec::new();
    let array = |xs: Vec<Value>| Value::Array(xs);
    if let Some(s) = &args.scheme {
        flags.push(("scheme".into(), Value::String(s.clone())));
    }
    if let Some(m) = args.m {
        flags.push(("m".into(), Value::Integer(m as i64)));
    }
    if !args.modes.is_empty() {
        flags.push(("modes".into(), array(args.modes.iter().map(|&x| Value::Integer(x as i64)).collect())));
    }
    if !args.k.is_empty() {
        flags.push(("k".into(), array(args.k.iter().map(|&x| Value::Integer(x as i64)).collect())));
    }
    if !args.n0.is_empty() {
        flags.push(("n0_total".into(), array(args.n0.iter().map(|&x| Value::Float(x)).collect())));
    }
    if let Some(v) = args.visibility {
        flags.push(("visibility".into(), Value::Float(v)));
    }
    if !args.t_us.is_empty() {
        flags
            .push(("symbol_duration_us".into(), array(args.t_us.iter().map(|&x| Value::Float(x)).collect())));
    }
    if let Some(t) = args.trials {
        flags.push(("trials".into(), Value::Integer(t as i64)));
    }
    if args.trajectories {
        flags.push(("trajectories".into(), Value::Boolean(true)));
    }
    if let Some(seed) = ctx.seed {
        flags.push(("seed".into(), Value::Integer(seed as i64)));
    }
    flags
}

fn resolve(
    ctx: &Context,
    args: &SpecArgs,
    env: &[(String, Value)],
    defaults: &[(String, Value)],
) -> CliResult<ExperimentSpec> {
    let flags = spec_flags(ctx, args);
    let mut spec = config::parse_config(defaults, args.config.as_deref(), env, &args.set, &flags)?;
    spec.trials = scaled_trials(spec.trials, ctx.scale);
    Ok(spec)
}

fn read(ctx: &Context, args: &SpecArgs, env: &[(String, Value)]) -> CliResult<()> {
    let defaults = [("trials".to_string(), Value::Integer(1))];
    let mut spec = resolve(ctx, args, env, &defaults)?;
    if spec.scheme != Scheme::RisQuantum {
        return Err(ConfigError::InvalidValue {
            key: "scheme".into(),
            reason: "`read` runs the quantum receiver (ris-quantum)".into(),
        }
        .into());
    }
    spec.trajectories = true;
    if spec.points().map_err(CliError::Run)?.len() != 1 {
        return Err(
            ConfigError::InconsistentAxes("`read` runs a single grid point; use `sweep`".into()).into()
        );
    }
    let results = run_specs(ctx, std::slice::from_ref(&spec))?;
    let mut stdout = std::io::stdout().lock();
    for (i, rec) in results[0].1[0].records.iter().enumerate() {
        writeln!(
            stdout,
            "trial {i}: true {} decided {} ({}) after {} shots, {} clicks",
            rec.true_index + 1,
            rec.decision + 1,
            if rec.correct { "correct" } else { "error" },
            rec.steps_used,
            rec.clicks.len()
        )?;
    }
    let (outputs, walls) = write_results(ctx, &results)?;
    ctx.manifest(vec![spec], outputs, walls)
}

fn sweep_command(ctx: &Context, args: &SweepArgs, env: &[(String, Value)]) -> CliResult<()> {
    let specs = match &args.from_manifest {
        Some(path) => {
            let manifest = Manifest::read(path).map_err(|e| match e {
                crate::Error::Io(source) => {
                    CliError::Config(ConfigError::MissingFile { path: path.clone(), source })
                }
                other => CliError::Config(ConfigError::Malformed {
                    path: path.clone(),
                    message: other.to_string(),
                }),
            })?;
            for s in &manifest.specs {
                config::check(s)?;
            }
            manifest.specs
        }
        None => vec![resolve(ctx, &args.spec, env, &[])?],
    };
    let results = run_specs(ctx, &specs)?;
    let (outputs, walls) = write_results(ctx, &results)?;
    ctx.manifest(specs, outputs, walls)
}

fn reproduce(ctx: &Context, id: &str) -> CliResult<()> {
    let preset = presets::preset(id, ctx.scale, ctx.seed.unwrap_or(0))
        .ok_or_else(|| CliError::UnknownPreset(id.to_string()))?;
    let results = run_specs(ctx, &preset.specs)?;
    let (mut outputs, walls) = write_results(ctx, &results)?;
    match &preset.report {
        Report::Sweep => {}
        Report::MinIntensity(targets) => {
            let name = "table1.csv";
            output(write_min_intensity_csv(ctx.create(name)?, targets, &results))?;
            outputs.push(name.into());
        }
        Report::RateTable => {
            let name = "table2.csv";
            output(write_rate_table_csv(ctx.create(name)?, &results))?;
            outputs.push(name.into());
        }
    }
    eprintln!("{}: wrote {} to {}", preset.id, outputs.join(", "), ctx.out_dir.display());
    ctx.manifest(preset.specs, outputs, walls)
}

type SpecResults = Vec<(ExperimentSpec, Vec<PointResult>)>;

fn run_specs(ctx: &Context, specs: &[ExperimentSpec]) -> CliResult<SpecResults> {
    let out = with_workers(ctx.workers, || {
        specs.iter().map(|s| sweep(s).map(|rows| (s.clone(), rows))).collect::<crate::Result<Vec<_>>>()
    })
    .map_err(CliError::Run)?;
    out.map_err(CliError::Run)
}

/// Writes the sweep rows and, when recorded, trajectory files. Returns the
/// file names and per-row wall times.
fn write_results(ctx: &Context, results: &SpecResults) -> CliResult<(Vec<String>, Vec<f64>)> {
    let rows: Vec<_> = results.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.row.clone())).collect();
    let walls = rows.iter().map(|r| r.wall_time_s).collect();
    output(write_sweep_csv(ctx.create(SWEEP_CSV)?, &rows))?;
    let mut outputs = vec![SWEEP_CSV.to_string()];

    let mut named: Vec<(String, &[TrialRecord], f64)> = Vec::new();
    for (spec, points) in results {
        for (i, p) in points.iter().enumerate() {
            if p.records.is_empty() {
                continue;
            }
            let name =
                if points.len() == 1 { spec.series.clone() } else { format!("{} #{}", spec.series, i + 1) };
            named.push((name, &p.records, spec.heatmap_bin_us));
        }
    }
    if !named.is_empty() {
        let summaries: Vec<TrajectorySummary> = named
            .iter()
            .map(|(_, recs, bin)| aggregate_trajectories(recs, *bin))
            .collect::<crate::Result<_>>()
            .map_err(CliError::Run)?;
        let raw: Vec<(&str, &[TrialRecord])> = named.iter().map(|(n, r, _)| (n.as_str(), *r)).collect();
        let agg: Vec<(&str, &TrajectorySummary)> =
            named.iter().zip(&summaries).map(|((n, _, _), s)| (n.as_str(), s)).collect();
        output(write_trajectory_csv(ctx.create(TRAJECTORY_CSV)?, &raw))?;
        output(write_curves_csv(ctx.create(CURVES_CSV)?, &agg))?;
        output(write_heatmap_csv(ctx.create(HEATMAP_CSV)?, &agg))?;
        outputs.extend([TRAJECTORY_CSV, CURVES_CSV, HEATMAP_CSV].map(String::from));
    }
    Ok((outputs, walls))
}

/// Smallest grid intensity whose estimate meets `target`, if any.
pub fn min_intensity(points: &[PointResult], target: f64) -> Option<f64> {
    points.iter().find(|p| p.row.pe <= target).map(|p| p.row.n0)
}

fn write_min_intensity_csv<W: Write>(
    out: W,
    targets: &[presets::IntensityTarget],
    results: &SpecResults,
) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pe_target", "visibility", "m", "n_sql_ris", "n_qr_imperfect", "n_qr_perfect"])?;
    let lookup = |m: usize, scheme: Scheme, v: f64, target: f64| {
        results
            .iter()
            .find(|(s, _)| s.m == m && s.scheme == scheme && s.visibility == v)
            .and_then(|(_, pts)| min_intensity(pts, target))
            .map(|x| x.to_string())
            .unwrap_or_default()
    };
    for t in targets {
        w.write_record([
            t.pe_target.to_string(),
            t.visibility.to_string(),
            t.m.to_string(),
            lookup(t.m, Scheme::RisSql, 1.0, t.pe_target),
            lookup(t.m, Scheme::RisQuantum, t.visibility, t.pe_target),
            lookup(t.m, Scheme::RisQuantum, 1.0, t.pe_target),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_rate_table_csv<W: Write>(out: W, results: &SpecResults) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "visibility",
        "m",
        "t_us",
        "s1_rate_per_mode_mbps",
        "s2_rate_per_mode_mbps",
        "s1_pe",
        "s2_pe",
    ])?;
    for (v, m, t) in presets::RATE_ROWS {
        let find = |s: usize| {
            results.iter().find_map(|(spec, pts)| {
                let row = &pts[0].row;
                (spec.visibility == v && spec.m == m && row.t_us == t && row.modes == s).then_some(row)
            })
        };
        let (Some(a), Some(b)) = (find(1), find(2)) else {
            continue;
        };
        w.write_record([
            v.to_string(),
            m.to_string(),
            t.to_string(),
            (a.data_rate_per_mode_bps / 1e6).to_string(),
            (b.data_rate_per_mode_bps / 1e6).to_string(),
            a.pe.to_string(),
            b.pe.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a manifest path relative to an output directory.
pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join(MANIFEST_JSON)
}
