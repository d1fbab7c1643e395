//! Monte Carlo experiment engine.
//!
//! An [`ExperimentSpec`] describes one series: a receiver scheme, fixed
//! physical parameters and at most one swept axis. Every grid point runs
//! `trials` independent symbols whose random streams derive from
//! `(master_seed, point, trial)` only, so rows are identical for any worker
//! count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical_rx::{sql_error_probability, HeterodyneNoise};
use crate::constellation::{psk_constellation, ris_constellation, Constellation};
use crate::error::{invalid, Error, Result};
use crate::optics::{geometric_efficiency, mode_set, ChannelGeometry, ModeSpec};
use crate::quantum_rx::{run_symbol, ReceiverParams, Retention, TrialRecord};
use crate::rng;
use crate::stats::PeEstimate;

/// Receiver and constellation family of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Ring constellation read by the adaptive photon-counting receiver.
    RisQuantum,
    /// Ring constellation read by the heterodyne receiver.
    RisSql,
    /// PSK constellation read by the heterodyne receiver.
    PskSql,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::RisQuantum => "ris-quantum",
            Scheme::RisSql => "ris-sql",
            Scheme::PskSql => "psk-sql",
        }
    }
}

/// Meaning of the swept intensity `⟨n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntensityConvention {
    /// Total probe photon number before the surface gain, split over modes.
    #[default]
    Source,
    /// Photon number of the brightest received symbol, summed over modes.
    Received,
    /// Source photon number after the central mode's efficiency, `ξη·n₀`.
    Detected,
}

/// Which symbol is transmitted in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthPolicy {
    #[default]
    Uniform,
    /// Always the given 0-based symbol.
    Fixed(usize),
}

/// Geometry-derived channel efficiency, multiplied into the efficiency table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    #[serde(flatten)]
    pub channel: ChannelGeometry,
    /// Probe wavelength in meters.
    pub lambda: f64,
}

/// One experiment series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub series: String,
    pub scheme: Scheme,
    pub m: usize,
    pub modes: Vec<usize>,
    pub k: Vec<u64>,
    pub visibility: f64,
    pub n0: Vec<f64>,
    pub symbol_duration_us: Vec<f64>,
    pub time_bin_divisor: f64,
    pub feedback_delay_us: f64,
    pub max_steps: usize,
    pub accel_threshold: f64,
    pub efficiency_central: f64,
    pub efficiency_other: f64,
    pub geometry: Option<GeometrySpec>,
    pub retention: Retention,
    pub convention: IntensityConvention,
    pub truth: TruthPolicy,
    pub trials: u64,
    pub master_seed: u64,
    /// Keep every trial's trajectory (quantum scheme only).
    pub trajectories: bool,
    /// Bin width of the per-step elapsed-time histogram.
    pub heatmap_bin_us: f64,
}

impl ExperimentSpec {
    /// A single-point quantum-receiver spec with every default applied.
    pub fn new(scheme: Scheme, m: usize) -> Self {
        Self {
            series: scheme.as_str().to_string(),
            scheme,
            m,
            modes: vec![1],
            k: vec![80],
            visibility: 1.0,
            n0: vec![1.5],
            symbol_duration_us: vec![1000.0],
            time_bin_divisor: 10.0,
            feedback_delay_us: 1.0,
            max_steps: 200,
            accel_threshold: 0.99,
            efficiency_central: crate::optics::CENTRAL_EFFICIENCY,
            efficiency_other: crate::optics::OTHER_EFFICIENCY,
            geometry: None,
            retention: Retention::BestMode,
            convention: IntensityConvention::Source,
            truth: TruthPolicy::Uniform,
            trials: 1000,
            master_seed: 0,
            trajectories: false,
            heatmap_bin_us: 0.1,
        }
    }

    /// The swept axis, if any.
    pub fn axis(&self) -> Result<Option<Axis>> {
        let lens = [
            (Axis::N0, self.n0.len()),
            (Axis::K, self.k.len()),
            (Axis::SymbolDuration, self.symbol_duration_us.len()),
            (Axis::Modes, self.modes.len()),
        ];
        if let Some((axis, _)) = lens.iter().find(|(_, l)| *l == 0) {
            return Err(Error::InvalidSweep(format!("{} grid is empty", axis.name())));
        }
        let swept: Vec<Axis> = lens.iter().filter(|(_, l)| *l > 1).map(|(a, _)| *a).collect();
        match swept.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            many => Err(Error::InvalidSweep(format!(
                "only one axis may be swept per run, got {}",
                many.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axis()?;
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(invalid("visibility", format!("must lie in [0, 1], got {}", self.visibility)));
        }
        if !(self.heatmap_bin_us > 0.0) {
            return Err(invalid("heatmap_bin_us", "must be positive"));
        }
        if !(self.time_bin_divisor >= 1.0) {
            return Err(invalid("time_bin_divisor", "must be at least 1"));
        }
        if self.scheme != Scheme::RisQuantum {
            if self.modes.iter().any(|&s| s != 1) {
                return Err(Error::InvalidSweep("heterodyne baselines are single-mode".into()));
            }
            if self.truth != TruthPolicy::Uniform {
                return Err(Error::InvalidSweep("heterodyne baselines draw uniform symbols".into()));
            }
            if self.trajectories {
                return Err(Error::InvalidSweep("trajectories exist only for the quantum receiver".into()));
            }
        }
        if let TruthPolicy::Fixed(i) = self.truth {
            if i >= self.m {
                return Err(invalid("truth", format!("symbol {i} outside 0..{}", self.m)));
            }
        }
        // Building every point surfaces parameter errors before any work.
        for point in self.points()? {
            self.setup(&point)?;
        }
        Ok(())
    }

    /// Grid points in sweep order.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        self.axis()?;
        let mut out = Vec::new();
        for &modes in &self.modes {
            for &k in &self.k {
                for &n0 in &self.n0 {
                    for &t_us in &self.symbol_duration_us {
                        out.push(GridPoint { modes, k, n0, t_us });
                    }
                }
            }
        }
        Ok(out)
    }

    fn efficiencies(&self, modes: usize) -> Result<Vec<f64>> {
        let geometric = match &self.geometry {
            Some(g) => geometric_efficiency(&g.channel, g.lambda)?,
            None => 1.0,
        };
        Ok((0..modes)
            .map(|s| geometric * if s == 0 { self.efficiency_central } else { self.efficiency_other })
            .collect())
    }

    fn setup(&self, point: &GridPoint) -> Result<PointSetup> {
        if !(point.t_us > 0.0) {
            return Err(invalid("symbol_duration_us", "must be positive"));
        }
        let mut modes = mode_set(point.modes, point.n0, &self.efficiencies(point.modes)?)?;
        let per_mode = point.n0 / point.modes as f64;
        let constellation = match self.scheme {
            Scheme::PskSql => {
                let photons = match self.convention {
                    IntensityConvention::Detected => per_mode / modes[0].efficiency,
                    _ => per_mode,
                };
                psk_constellation(self.m, photons.sqrt())?
            }
            Scheme::RisQuantum | Scheme::RisSql => {
                let alpha0 = match self.convention {
                    IntensityConvention::Source => per_mode.sqrt(),
                    IntensityConvention::Received => (per_mode / point.k as f64).sqrt(),
                    IntensityConvention::Detected => (per_mode / modes[0].efficiency).sqrt(),
                };
                for m in &mut modes {
                    m.source_amplitude = alpha0;
                }
                ris_constellation(self.m, point.k, alpha0)?
            }
        };
        let t = point.t_us * 1e-6;
        let mut params = ReceiverParams::new(t, self.visibility);
        params.time_bin = t / self.time_bin_divisor;
        params.feedback_delay = self.feedback_delay_us * 1e-6;
        params.max_steps = self.max_steps;
        params.accel_threshold = self.accel_threshold;
        params.retention = self.retention;
        params.validate()?;
        Ok(PointSetup { constellation, modes, params })
    }
}

/// Sweepable axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    N0,
    K,
    SymbolDuration,
    Modes,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N0 => "n0",
            Axis::K => "k",
            Axis::SymbolDuration => "symbol_duration_us",
            Axis::Modes => "modes",
        }
    }
}

/// One point of a sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub modes: usize,
    pub k: u64,
    pub n0: f64,
    pub t_us: f64,
}

struct PointSetup {
    constellation: Constellation,
    modes: Vec<ModeSpec>,
    params: ReceiverParams,
}

/// Aggregated result at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub series: String,
    pub scheme: &'static str,
    pub m: usize,
    pub modes: usize,
    pub k: u64,
    pub visibility: f64,
    pub n0: f64,
    pub t_us: f64,
    /// Efficiency of the central mode.
    pub xi_eta: f64,
    pub trials: u64,
    pub errors: u64,
    pub pe: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(1 − pe)·log₂M / T` in bits per second.
    pub data_rate_bps: f64,
    pub data_rate_per_mode_bps: f64,
    /// Mean shots per symbol; 0 for heterodyne rows.
    pub mean_steps: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SweepRow {
    pub fn estimate(&self) -> PeEstimate {
        PeEstimate::from_counts(self.errors, self.trials)
    }
}

/// Result at one grid point plus optional per-trial records.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub row: SweepRow,
    pub records: Vec<TrialRecord>,
}

/// Error-free-weighted throughput `(1 − p_e)·log₂(M)/T` in bits per second
/// for `t` in seconds.
pub fn data_rate(p_e: f64, m: usize, t: f64) -> f64 {
    (1.0 - p_e) * (m as f64).log2() / t
}

/// Index of the transmitted symbol for one trial.
fn draw_truth(truth: TruthPolicy, m: usize, seed: u64) -> usize {
    match truth {
        TruthPolicy::Uniform => rng::stream(seed, rng::TRUTH_STREAM).random_range(0..m),
        TruthPolicy::Fixed(i) => i,
    }
}

/// Seed shared by every trial of grid point `point`.
pub fn point_seed(master_seed: u64, point: u64) -> u64 {
    rng::trial_seed(master_seed, point, u64::MAX)
}

/// Runs every trial of one grid point on the current rayon pool.
pub fn estimate_pe(spec: &ExperimentSpec, point: &GridPoint, point_index: u64) -> Result<PointResult> {
    let started = Instant::now();
    let setup = spec.setup(point)?;
    let seed = point_seed(spec.master_seed, point_index);
    let central = setup.modes[0].efficiency;
    let (estimate, mean_steps, records) = match spec.scheme {
        Scheme::RisSql | Scheme::PskSql => {
            let est = sql_error_probability(
                &setup.constellation,
                central,
                spec.trials,
                HeterodyneNoise::Vacuum,
                seed,
            )?;
            (est, 0.0, Vec::new())
        }
        Scheme::RisQuantum => {
            let outcomes: Vec<TrialRecord> = (0..spec.trials)
                .into_par_iter()
                .map(|i| {
                    let trial = rng::trial_seed(seed, 0, i);
                    let truth = draw_truth(spec.truth, spec.m, trial);
                    let mut streams = rng::mode_streams(trial, setup.modes.len());
                    run_symbol(truth, &setup.constellation, &setup.modes, &setup.params, &mut streams)
                })
                .collect::<Result<_>>()?;
            let errors = outcomes.iter().filter(|r| !r.correct).count() as u64;
            let steps: u64 = outcomes.iter().map(|r| r.steps_used as u64).sum();
            let mean_steps = steps as f64 / spec.trials as f64;
            let records = if spec.trajectories { outcomes } else { Vec::new() };
            (PeEstimate::from_counts(errors, spec.trials), mean_steps, records)
        }
    };
    let t = point.t_us * 1e-6;
    let rate = data_rate(estimate.p_e, spec.m, t);
    let row = SweepRow {
        series: spec.series.clone(),
        scheme: spec.scheme.as_str(),
        m: spec.m,
        modes: point.modes,
        k: point.k,
        visibility: spec.visibility,
        n0: point.n0,
        t_us: point.t_us,
        xi_eta: central,
        trials: estimate.trials,
        errors: estimate.errors,
        pe: estimate.p_e,
        ci_low: estimate.ci_low,
        ci_high: estimate.ci_high,
        data_rate_bps: rate,
        data_rate_per_mode_bps: rate / point.modes as f64,
        mean_steps,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(PointResult { row, records })
}

/// Runs every grid point of `spec` in order.
pub fn sweep(spec: &ExperimentSpec) -> Result<Vec<PointResult>> {
    spec.validate()?;
    spec.points()?.iter().enumerate().map(|(i, p)| estimate_pe(spec, p, i as u64)).collect()
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Per-step means over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMean {
    pub step: usize,
    pub max_pr: f64,
    pub true_pr: f64,
    pub deviation: f64,
    /// Trials still running at this step (the rest carry their last value).
    pub active: usize,
}

/// Count of shots at `step` whose elapsed time fell in one bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatmapCell {
    pub step: usize,
    pub elapsed_bin_us: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub curves: Vec<StepMean>,
    pub heatmap: Vec<HeatmapCell>,
}

/// Averages trajectories step by step, carrying each finished trial's
/// terminal values forward, and histograms per-shot elapsed time with bins
/// of `bin_width_us`.
pub fn aggregate_trajectories(records: &[TrialRecord], bin_width_us: f64) -> Result<TrajectorySummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("trial records"));
    }
    if !(bin_width_us > 0.0) {
        return Err(invalid("bin_width_us", "must be positive"));
    }
    if records.iter().any(|r| r.steps.is_empty()) {
        return Err(Error::EmptyInput("trial without shots"));
    }
    let longest = records.iter().map(|r| r.steps.len()).max().unwrap_or(0);
    let n = records.len() as f64;
    let curves = (0..longest)
        .map(|k| {
            let (mut max_pr, mut true_pr, mut deviation, mut active) = (0.0, 0.0, 0.0, 0);
            for r in records {
                let s = r.steps.get(k).unwrap_or_else(|| r.steps.last().unwrap());
                active += usize::from(k < r.steps.len());
                max_pr += s.max_pr;
                true_pr += s.true_pr;
                deviation += s.deviation;
            }
            StepMean {
                step: k + 1,
                max_pr: max_pr / n,
                true_pr: true_pr / n,
                deviation: deviation / n,
                active,
            }
        })
        .collect();

    let mut counts: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    for r in records {
        for s in &r.steps {
            let bin = (s.shot_elapsed * 1e6 / bin_width_us).floor() as u64;
            *counts.entry((s.step, bin)).or_default() += 1;
        }
    }
    let heatmap = counts
        .into_iter()
        .map(|((step, bin), count)| HeatmapCell { step, elapsed_bin_us: bin as f64 * bin_width_us, count })
        .collect();
    Ok(TrajectorySummary { curves, heatmap })
}

/// One row of `trajectory.csv`.
#[derive(Debug, Serialize)]
struct TrajectoryRow<'a> {
    series: &'a str,
    trial: usize,
    step: usize,
    t_us: f64,
    lo_index: usize,
    max_pr: f64,
    true_pr: f64,
    deviation: f64,
    shot_elapsed_us: f64,
    clicks: usize,
}

/// Writes `rows` as `pe_sweep.csv`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes raw per-trial trajectories. Symbol indices are 1-based.
pub fn write_trajectory_csv<W: Write>(out: W, series: &[(&str, &[TrialRecord])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (name, records) in series {
        for (trial, rec) in records.iter().enumerate() {
            for s in &rec.steps {
                w.serialize(TrajectoryRow {
                    series: name,
                    trial,
                    step: s.step,
                    t_us: s.t * 1e6,
                    lo_index: s.lo_index + 1,
                    max_pr: s.max_pr,
                    true_pr: s.true_pr,
                    deviation: s.deviation,
                    shot_elapsed_us: s.shot_elapsed * 1e6,
                    clicks: s.clicks,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes per-step mean curves for each series.
pub fn write_curves_csv<W: Write>(out: W, series: &[(&str, &TrajectorySummary)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "step", "max_pr", "true_pr", "deviation", "active"])?;
    for (name, summary) in series {
        for c in &summary.curves {
            w.write_record([
                name.to_string(),
                c.step.to_string(),
                c.max_pr.to_string(),
                c.true_pr.to_string(),
                c.deviation.to_string(),
                c.active.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes elapsed-time histograms for each series.
pub fn write_heatmap_csv<W: Write>(out: W, series: &[(&str, &TrajectorySummary)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "step", "elapsed_bin_us", "count"])?;
    for (name, summary) in series {
        for cell in &summary.heatmap {
            w.write_record([
                name.to_string(),
                cell.step.to_string(),
                cell.elapsed_bin_us.to_string(),
                cell.count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Run manifest written next to every output set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub workers: usize,
    pub scale: f64,
    pub specs: Vec<ExperimentSpec>,
    pub outputs: Vec<String>,
    /// Wall time of each emitted row, in row order.
    pub row_wall_time_s: Vec<f64>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_rx::StepLog;

    fn record(true_prs: &[f64], elapsed: &[f64]) -> TrialRecord {
        let steps = true_prs
            .iter()
            .zip(elapsed)
            .enumerate()
            .map(|(i, (&p, &e))| StepLog {
                step: i + 1,
                t: 0.0,
                lo_index: 0,
                max_pr: p,
                true_pr: p,
                deviation: 1.0 - p,
                shot_elapsed: e,
                clicks: 0,
            })
            .collect();
        TrialRecord {
            true_index: 0,
            decision: 0,
            correct: true,
            steps_used: true_prs.len(),
            steps,
            clicks: Vec::new(),
            final_posterior: vec![1.0],
        }
    }

    #[test]
    fn data_rate_examples() {
        let t = 15e-6;
        assert!((data_rate(0.0, 16, t) / 1e6 - 4.0 / 15.0).abs() < 1e-12);
        assert!((data_rate(0.0, 16, t) / 1e6 - 0.2667).abs() < 1e-4);
        assert_eq!(data_rate(1.0, 16, t), 0.0);
    }

    #[test]
    fn single_trial_curves_equal_the_trial() {
        let r = record(&[0.2, 0.5, 0.9], &[1e-6, 2e-6, 3e-6]);
        let s = aggregate_trajectories(std::slice::from_ref(&r), 1.0).unwrap();
        let got: Vec<f64> = s.curves.iter().map(|c| c.true_pr).collect();
        assert_eq!(got, vec![0.2, 0.5, 0.9]);
    }

    #[test]
    fn ragged_trials_carry_terminal_values() {
        let a = record(&[0.5], &[1e-6]);
        let b = record(&[1.0, 0.8], &[1e-6, 2.5e-6]);
        let s = aggregate_trajectories(&[a, b], 1.0).unwrap();
        assert_eq!(s.curves.len(), 2);
        assert!((s.curves[0].true_pr - 0.75).abs() < 1e-15);
        assert!((s.curves[1].true_pr - 0.65).abs() < 1e-15);
        assert_eq!(s.curves[1].active, 1);
        let cells: Vec<(usize, f64, u64)> =
            s.heatmap.iter().map(|c| (c.step, c.elapsed_bin_us, c.count)).collect();
        assert_eq!(cells, vec![(1, 1.0, 2), (2, 2.0, 1)]);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(matches!(aggregate_trajectories(&[], 1.0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn single_point_grid_gives_one_row() {
        let mut spec = ExperimentSpec::new(Scheme::RisSql, 16);
        spec.trials = 100;
        assert_eq!(sweep(&spec).unwrap().len(), 1);
    }

    #[test]
    fn two_swept_axes_are_rejected() {
        let mut spec = ExperimentSpec::new(Scheme::RisQuantum, 16);
        spec.n0 = vec![0.5, 1.0];
        spec.k = vec![80, 160];
        assert!(matches!(spec.validate(), Err(Error::InvalidSweep(_))));
        spec.k = vec![];
        assert!(matches!(spec.validate(), Err(Error::InvalidSweep(_))));
    }

    #[test]
    fn baselines_are_single_mode() {
        let mut spec = ExperimentSpec::new(Scheme::PskSql, 16);
        spec.modes = vec![2];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn forced_null_truth_never_errs() {
        let mut spec = ExperimentSpec::new(Scheme::RisQuantum, 16);
        spec.truth = TruthPolicy::Fixed(0);
        spec.visibility = 1.0;
        spec.n0 = vec![0.6];
        spec.trials = 300;
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows[0].row.errors, 0);
    }

    #[test]
    fn rate_and_pe_are_consistent() {
        let mut spec = ExperimentSpec::new(Scheme::RisQuantum, 16);
        spec.symbol_duration_us = vec![7.0, 13.0, 15.0];
        spec.k = vec![80_000];
        spec.trials = 200;
        for r in sweep(&spec).unwrap() {
            let row = r.row;
            let back = row.data_rate_bps * row.t_us * 1e-6 / (row.m as f64).log2() + row.pe;
            assert!((back - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn received_convention_pins_the_peak_symbol() {
        let mut spec = ExperimentSpec::new(Scheme::RisSql, 16);
        spec.convention = IntensityConvention::Received;
        spec.n0 = vec![2.0];
        let setup = spec.setup(&spec.points().unwrap()[0]).unwrap();
        assert!((setup.constellation.peak_photon_number() - 2.0).abs() < 1e-12);
    }
}
