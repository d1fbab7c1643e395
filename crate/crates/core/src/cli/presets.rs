//! Built-in experiment presets for `reproduce`.
//!
//! A preset is a list of series specs plus a report shape. Trial counts are
//! the nominal ones multiplied by the desk-scale factor; physics parameters
//! never depend on the scale.

use crate::harness::{ExperimentSpec, IntensityConvention, Scheme};

/// Extra table derived from the sweep rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    /// Only the sweep rows (plus trajectory files when recorded).
    Sweep,
    /// Smallest grid intensity reaching a target error probability, per order.
    MinIntensity(Vec<IntensityTarget>),
    /// Data rate per mode for each single-point spec.
    RateTable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityTarget {
    pub m: usize,
    pub pe_target: f64,
    pub visibility: f64,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub id: String,
    pub specs: Vec<ExperimentSpec>,
    pub report: Report,
}

/// Every accepted preset id.
pub const PRESET_IDS: &[&str] = &[
    "fig3a", "fig3b", "fig3c", "fig3", "fig5a", "fig5b", "fig5c", "fig5", "fig6a", "fig6b", "fig6c", "fig6",
    "fig7a", "fig7b", "fig7c", "fig7", "fig8a", "fig8b", "fig8c", "fig8", "fig10a", "fig10b", "fig10c",
    "fig10", "table1", "table2",
];

/// Mode counts compared in the multi-mode figures.
pub const MODE_SET: [usize; 4] = [1, 2, 3, 7];

/// Visibility used for the multi-mode studies.
pub const MULTIMODE_VISIBILITY: f64 = 0.9995;

/// Nominal trials per modulation order.
pub fn nominal_trials(m: usize) -> u64 {
    if m >= 256 {
        10_000
    } else {
        20_000
    }
}

/// Trajectory presets average this many trials per mode count.
pub const TRAJECTORY_TRIALS: u64 = 1000;

pub fn scaled(trials: u64, scale: f64) -> u64 {
    ((trials as f64 * scale).round() as u64).max(1)
}

struct Panel {
    m: usize,
    /// Element count of the intensity study.
    k_small: u64,
    /// Imperfect visibility of the intensity study.
    visibility: f64,
    intensity_grid: Vec<f64>,
    pe_target: f64,
    /// Symbol duration of the element-count study.
    t_k_sweep: f64,
    /// Element count of the duration study.
    k_large: u64,
    t_grid: Vec<f64>,
    /// Duration of the trajectory study.
    t_trajectory: f64,
}

fn panel(letter: char) -> Option<Panel> {
    let steps = |step: f64, n: usize| (1..=n).map(|i| (step * i as f64 * 100.0).round() / 100.0).collect();
    match letter {
        'a' => Some(Panel {
            m: 16,
            k_small: 80,
            visibility: 0.997,
            intensity_grid: {
                let mut g = vec![0.1];
                g.extend(steps(0.15, 10));
                g
            },
            pe_target: 0.003,
            t_k_sweep: 7.0,
            k_large: 80_000,
            t_grid: vec![3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0],
            t_trajectory: 13.0,
        }),
        'b' => Some(Panel {
            m: 64,
            k_small: 80,
            visibility: 0.998,
            intensity_grid: steps(0.15, 12),
            pe_target: 0.3,
            t_k_sweep: 15.0,
            k_large: 160_000,
            t_grid: vec![9.0, 13.0, 17.0, 19.0, 21.0, 23.0],
            t_trajectory: 23.0,
        }),
        'c' => Some(Panel {
            m: 256,
            k_small: 160,
            visibility: 0.9995,
            intensity_grid: steps(1.5, 11),
            pe_target: 0.03,
            t_k_sweep: 30.0,
            k_large: 640_000,
            t_grid: vec![14.0, 18.0, 22.0, 26.0, 30.0],
            t_trajectory: 30.0,
        }),
        _ => None,
    }
}

fn base(scheme: Scheme, m: usize, series: String, seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(scheme, m);
    spec.series = series;
    spec.master_seed = seed;
    spec
}

/// Intensity sweeps at `T = 1000 μs`, `S = 1`: quantum receiver at the
/// panel's imperfect visibility and at `V = 1`, plus both heterodyne baselines.
fn intensity_specs(p: &Panel, scale: f64, seed: u64) -> Vec<ExperimentSpec> {
    let trials = scaled(nominal_trials(p.m), scale);
    let mut out = Vec::new();
    for (scheme, v, name) in [
        (Scheme::RisSql, 1.0, "sql-ris".to_string()),
        (Scheme::PskSql, 1.0, "sql-psk".to_string()),
        (Scheme::RisQuantum, p.visibility, format!("ris-qr V={}", p.visibility)),
        (Scheme::RisQuantum, 1.0, "ris-qr V=1".to_string()),
    ] {
        let mut spec = base(scheme, p.m, name, seed);
        spec.k = vec![p.k_small];
        spec.visibility = v;
        spec.n0 = p.intensity_grid.clone();
        spec.symbol_duration_us = vec![1000.0];
        spec.convention = IntensityConvention::Detected;
        spec.trials = trials;
        out.push(spec);
    }
    out
}

fn k_sweep_specs(p: &Panel, scale: f64, seed: u64) -> Vec<ExperimentSpec> {
    let multipliers = [1, 10, 100, 250, 500, 1000, 2000, 4000];
    MODE_SET
        .iter()
        .map(|&s| {
            let mut spec = base(Scheme::RisQuantum, p.m, format!("S={s}"), seed);
            spec.modes = vec![s];
            spec.k = multipliers.iter().map(|x| x * p.k_small).collect();
            spec.visibility = MULTIMODE_VISIBILITY;
            spec.symbol_duration_us = vec![p.t_k_sweep];
            spec.trials = scaled(nominal_trials(p.m), scale);
            spec
        })
        .collect()
}

fn t_sweep_specs(p: &Panel, scale: f64, seed: u64) -> Vec<ExperimentSpec> {
    MODE_SET
        .iter()
        .map(|&s| {
            let mut spec = base(Scheme::RisQuantum, p.m, format!("S={s}"), seed);
            spec.modes = vec![s];
            spec.k = vec![p.k_large];
            spec.visibility = MULTIMODE_VISIBILITY;
            spec.symbol_duration_us = p.t_grid.clone();
            spec.trials = scaled(nominal_trials(p.m), scale);
            spec
        })
        .collect()
}

fn trajectory_specs(p: &Panel, scale: f64, seed: u64) -> Vec<ExperimentSpec> {
    MODE_SET
        .iter()
        .map(|&s| {
            let mut spec = base(Scheme::RisQuantum, p.m, format!("S={s}"), seed);
            spec.modes = vec![s];
            spec.k = vec![p.k_large];
            spec.visibility = MULTIMODE_VISIBILITY;
            spec.symbol_duration_us = vec![p.t_trajectory];
            spec.trials = scaled(TRAJECTORY_TRIALS, scale);
            spec.trajectories = true;
            spec
        })
        .collect()
}

/// Rows of the data-rate table: `(V, M, T μs)`.
pub const RATE_ROWS: [(f64, usize, f64); 6] = [
    (0.997, 16, 15.0),
    (0.998, 64, 23.0),
    (0.9995, 256, 30.0),
    (1.0, 16, 13.0),
    (1.0, 64, 19.0),
    (1.0, 256, 27.0),
];

fn rate_specs(scale: f64, seed: u64) -> Vec<ExperimentSpec> {
    let mut out = Vec::new();
    for (v, m, t) in RATE_ROWS {
        let k = panel(match m {
            16 => 'a',
            64 => 'b',
            _ => 'c',
        })
        .map(|p| p.k_large)
        .unwrap_or(80_000);
        for s in [1, 2] {
            let mut spec = base(Scheme::RisQuantum, m, format!("V={v} M={m} S={s}"), seed);
            spec.modes = vec![s];
            spec.k = vec![k];
            spec.visibility = v;
            spec.symbol_duration_us = vec![t];
            spec.trials = scaled(nominal_trials(m), scale);
            out.push(spec);
        }
    }
    out
}

type Builder = fn(&Panel, f64, u64) -> Vec<ExperimentSpec>;

fn letters(rest: &str) -> Option<Vec<char>> {
    match rest {
        "" => Some(vec!['a', 'b', 'c']),
        "a" | "b" | "c" => rest.chars().next().map(|c| vec![c]),
        _ => None,
    }
}

/// Builds preset `id`, or `None` for an unknown id.
pub fn preset(id: &str, scale: f64, seed: u64) -> Option<Preset> {
    let (specs, report) = match id {
        "table1" => {
            let mut specs = Vec::new();
            let mut targets = Vec::new();
            for c in ['a', 'b', 'c'] {
                let p = panel(c)?;
                targets.push(IntensityTarget { m: p.m, pe_target: p.pe_target, visibility: p.visibility });
                specs.extend(
                    intensity_specs(&p, scale, seed).into_iter().filter(|s| s.scheme != Scheme::PskSql),
                );
            }
            (specs, Report::MinIntensity(targets))
        }
        "table2" => (rate_specs(scale, seed), Report::RateTable),
        _ => {
            let families: [(&str, Builder); 6] = [
                ("fig10", trajectory_specs),
                ("fig3", intensity_specs),
                ("fig5", k_sweep_specs),
                ("fig6", t_sweep_specs),
                ("fig7", trajectory_specs),
                ("fig8", trajectory_specs),
            ];
            let (builder, rest) =
                families.iter().find_map(|(prefix, b)| id.strip_prefix(prefix).map(|rest| (*b, rest)))?;
            let panels = letters(rest)?;
            let mut specs = Vec::new();
            for c in panels {
                let p = panel(c)?;
                let mut part = builder(&p, scale, seed);
                if rest.is_empty() {
                    for s in &mut part {
                        s.series = format!("M={} {}", p.m, s.series);
                    }
                }
                specs.extend(part);
            }
            (specs, Report::Sweep)
        }
    };
    Some(Preset { id: id.to_string(), specs, report })
}
