//! Adaptive time-resolving receiver.
//!
//! Each symbol is read in a sequence of shots. During a shot the incoming
//! field of every mode is displaced by a local oscillator `β` drawn from the
//! constellation, and a click detector reports the arrival time of the first
//! photon (or that none arrived). The click/no-click likelihoods of every
//! hypothesis update a posterior per mode, the sharpest mode's posterior is
//! retained, and its MAP symbol becomes the LO for the next shot.
//!
//! Time is in seconds throughout. Rates are photons per second.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::optics::{check_efficiency, deviation_metric, interference_bracket, ModeSpec};

/// How the shared prior for the next shot is formed from the per-mode
/// posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Retention {
    /// Keep the whole posterior of the mode with the highest MAP probability.
    #[default]
    BestMode,
    /// Element-wise maximum over modes, renormalised. Kept for comparison.
    ElementwiseMax,
}

/// How the LO is chosen before each shot.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoPolicy {
    /// MAP symbol of the retained posterior.
    #[default]
    Adaptive,
    /// Pre-set sequence of 0-based symbol indices, cycled by shot.
    Fixed(Vec<usize>),
}

/// Receiver timing and hardware parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverParams {
    /// Symbol duration `T`.
    pub symbol_duration: f64,
    /// Maximum observation window per shot.
    pub time_bin: f64,
    /// Blind time after each shot while the LO is updated.
    pub feedback_delay: f64,
    pub max_steps: usize,
    /// LO interference visibility in [0, 1].
    pub visibility: f64,
    /// Fraction of `T` after which shots end at the first click of any mode.
    pub accel_threshold: f64,
    pub retention: Retention,
    pub lo_policy: LoPolicy,
    /// When set, click times are reported at the centre of one of this many
    /// equal sub-bins of the shot window (finite timing resolution).
    pub timing_bins: Option<usize>,
}

impl ReceiverParams {
    /// Defaults: time bin `T/10`, 1 µs feedback delay, 200 steps and
    /// acceleration past 99% of the symbol.
    pub fn new(symbol_duration: f64, visibility: f64) -> Self {
        Self {
            symbol_duration,
            time_bin: symbol_duration / 10.0,
            feedback_delay: 1e-6,
            max_steps: 200,
            visibility,
            accel_threshold: 0.99,
            retention: Retention::BestMode,
            lo_policy: LoPolicy::Adaptive,
            timing_bins: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.symbol_duration;
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("symbol_duration", format!("must be positive, got {t}")));
        }
        if !(self.time_bin > 0.0 && self.time_bin <= t) {
            return Err(invalid("time_bin", format!("must lie in (0, T], got {}", self.time_bin)));
        }
        if !(self.feedback_delay >= 0.0 && self.feedback_delay.is_finite()) {
            return Err(invalid("feedback_delay", "must be non-negative"));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(invalid("visibility", format!("must lie in [0, 1], got {}", self.visibility)));
        }
        if !(self.accel_threshold > 0.0 && self.accel_threshold <= 1.0) {
            return Err(invalid("accel_threshold", "must lie in (0, 1]"));
        }
        if let LoPolicy::Fixed(schedule) = &self.lo_policy {
            if schedule.is_empty() {
                return Err(invalid("lo_policy", "fixed schedule is empty"));
            }
        }
        if self.timing_bins == Some(0) {
            return Err(invalid("timing_bins", "must be at least 1"));
        }
        Ok(())
    }
}

/// What a detector saw during one shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    /// First photon arrived `at` seconds into the shot.
    Click {
        at: f64,
    },
    NoClick,
}

/// Detection outcome of one mode over an observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionEvent {
    /// 0-based mode index.
    pub mode: usize,
    pub kind: EventKind,
    pub window: f64,
}

impl DetectionEvent {
    pub fn click(mode: usize, at: f64, window: f64) -> Result<Self> {
        if !(window > 0.0) {
            return Err(invalid("window", "must be positive"));
        }
        if !(at > 0.0 && at <= window) {
            return Err(invalid("click time", format!("{at} outside (0, {window}]")));
        }
        Ok(Self { mode, kind: EventKind::Click { at }, window })
    }

    pub fn no_click(mode: usize, window: f64) -> Result<Self> {
        if !(window > 0.0) {
            return Err(invalid("window", "must be positive"));
        }
        Ok(Self { mode, kind: EventKind::NoClick, window })
    }

    /// Log-likelihood of this event for a Poisson arrival rate `rate`.
    #[inline]
    pub fn log_likelihood(&self, rate: f64) -> f64 {
        log_likelihood(rate, self.kind, self.window)
    }
}

#[inline]
fn log_likelihood(rate: f64, kind: EventKind, window: f64) -> f64 {
    match kind {
        EventKind::NoClick => -rate * window,
        EventKind::Click { at } => {
            if rate > 0.0 {
                rate.ln() - rate * at
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// Samples the first arrival of a Poisson process of rate `rate` by inverse
/// CDF; `None` when it falls after `window`. Always consumes one uniform.
pub fn sample_first_click<R: Rng + ?Sized>(rate: f64, window: f64, rng: &mut R) -> Option<f64> {
    let u: f64 = rng.sample(Open01);
    if rate <= 0.0 {
        return None;
    }
    let tau = -u.ln() / rate;
    (tau <= window).then_some(tau)
}

/// Likelihood `ℵ` of `event` under the hypothesis that `alpha` was sent while
/// the LO was `beta`: `e^{−n w}` for no click over `w`, `n e^{−n τ}` for a click
/// at `τ`.
pub fn click_likelihood(
    alpha: Complex64,
    beta: Complex64,
    mode: &ModeSpec,
    event: &DetectionEvent,
    params: &ReceiverParams,
) -> f64 {
    let rate =
        mode.efficiency / params.symbol_duration * interference_bracket(alpha, beta, params.visibility);
    match event.kind {
        EventKind::NoClick => (-rate * event.window).exp(),
        EventKind::Click { at } => rate * (-rate * at).exp(),
    }
}

/// Bayes update of `prior` with linear `likelihoods`, evaluated in log space.
pub fn posterior_update(prior: &[f64], likelihoods: &[f64]) -> Result<Vec<f64>> {
    if prior.len() != likelihoods.len() {
        return Err(invalid("likelihoods", "length differs from prior"));
    }
    if likelihoods.iter().any(|&l| !(l >= 0.0)) {
        return Err(invalid("likelihoods", "must be non-negative"));
    }
    let log_lik: Vec<f64> = likelihoods.iter().map(|l| l.ln()).collect();
    let mut out = vec![0.0; prior.len()];
    posterior_update_log(prior, &log_lik, &mut out)?;
    Ok(out)
}

/// Log-space Bayes update into `out`; a single normalisation at the end.
pub fn posterior_update_log(prior: &[f64], log_likelihoods: &[f64], out: &mut [f64]) -> Result<()> {
    let mut peak = f64::NEG_INFINITY;
    for ((o, &p), &ll) in out.iter_mut().zip(prior).zip(log_likelihoods) {
        *o = p.ln() + ll;
        peak = peak.max(*o);
    }
    if peak == f64::NEG_INFINITY || peak.is_nan() {
        return Err(Error::DegenerateEvidence);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - peak).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(())
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Result of MAP-based LO selection.
#[derive(Debug, Clone, PartialEq)]
pub struct LoSelection {
    /// 0-based mode whose posterior is sharpest.
    pub mode: usize,
    /// 0-based MAP symbol of that mode; the next LO.
    pub index: usize,
    pub beta: Complex64,
    pub retained: Vec<f64>,
}

/// Picks the mode with the highest MAP probability and its MAP symbol.
pub fn select_lo(per_mode: &[Vec<f64>], constellation: &Constellation) -> LoSelection {
    let (mode, index) = best_mode(per_mode);
    LoSelection { mode, index, beta: constellation.symbol(index), retained: per_mode[mode].clone() }
}

fn best_mode(per_mode: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0, argmax(&per_mode[0]));
    for (s, post) in per_mode.iter().enumerate().skip(1) {
        let m = argmax(post);
        if post[m] > per_mode[best.0][best.1] {
            best = (s, m);
        }
    }
    best
}

/// Receiver state between shots.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    pub per_mode: Vec<Vec<f64>>,
    /// Shared prior for the next shot.
    pub retained: Vec<f64>,
    /// 0-based constellation index of the LO for the next shot.
    pub lo: usize,
    /// Elapsed time including feedback delays.
    pub elapsed: f64,
    pub step: usize,
}

/// Per-shot trajectory entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLog {
    /// 1-based shot number.
    pub step: usize,
    /// Elapsed time after the shot and its feedback delay, clamped at `T`.
    pub t: f64,
    /// 0-based index of the LO used during the shot.
    pub lo_index: usize,
    /// Largest retained posterior after the shot.
    pub max_pr: f64,
    /// Retained posterior of the transmitted symbol after the shot.
    pub true_pr: f64,
    /// LO mismatch `(S/T)·bracket(α_true, β)` for the LO used during the shot.
    pub deviation: f64,
    /// Observation window plus feedback delay consumed by the shot.
    pub shot_elapsed: f64,
    /// Number of modes that clicked.
    pub clicks: usize,
}

/// One recorded click.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClickLog {
    pub step: usize,
    /// 0-based mode.
    pub mode: usize,
    /// Arrival time relative to the start of the shot.
    pub at: f64,
}

/// Full outcome of reading one symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    /// 0-based transmitted symbol.
    pub true_index: usize,
    /// 0-based decided symbol.
    pub decision: usize,
    pub correct: bool,
    pub steps_used: usize,
    pub steps: Vec<StepLog>,
    pub clicks: Vec<ClickLog>,
    pub final_posterior: Vec<f64>,
}

/// Reads one symbol. `streams` holds one detector RNG per mode.
pub fn run_symbol<R: Rng>(
    true_index: usize,
    constellation: &Constellation,
    modes: &[ModeSpec],
    params: &ReceiverParams,
    streams: &mut [R],
) -> Result<TrialRecord> {
    run_symbol_observed(true_index, constellation, modes, params, streams, |_| {})
}

/// As [`run_symbol`], calling `observe` with the receiver state after every
/// shot.
pub fn run_symbol_observed<R: Rng, F: FnMut(&PosteriorState)>(
    true_index: usize,
    constellation: &Constellation,
    modes: &[ModeSpec],
    params: &ReceiverParams,
    streams: &mut [R],
    mut observe: F,
) -> Result<TrialRecord> {
    params.validate()?;
    let m_count = constellation.order();
    if true_index >= m_count {
        return Err(invalid("true_index", format!("{true_index} outside 0..{m_count}")));
    }
    if modes.is_empty() {
        return Err(Error::EmptyInput("modes"));
    }
    if streams.len() != modes.len() {
        return Err(invalid("streams", "need exactly one RNG stream per mode"));
    }
    for mode in modes {
        check_efficiency(mode.efficiency)?;
    }
    if let LoPolicy::Fixed(schedule) = &params.lo_policy {
        if schedule.iter().any(|&i| i >= m_count) {
            return Err(invalid("lo_policy", "fixed schedule index outside constellation"));
        }
    }

    let duration = params.symbol_duration;
    let end_tolerance = duration * 1e-12;
    let truth = constellation.symbol(true_index);
    let symbols = constellation.symbols();
    let s_count = modes.len();

    let uniform = vec![1.0 / m_count as f64; m_count];
    let mut state = PosteriorState {
        per_mode: vec![uniform.clone(); s_count],
        retained: uniform,
        lo: 0,
        elapsed: 0.0,
        step: 0,
    };
    state.lo = match &params.lo_policy {
        LoPolicy::Adaptive => best_mode(&state.per_mode).1,
        LoPolicy::Fixed(schedule) => schedule[0],
    };

    let mut brackets = vec![0.0; m_count];
    let mut log_lik = vec![0.0; m_count];
    let mut arrivals: Vec<Option<f64>> = vec![None; s_count];
    let mut steps = Vec::new();
    let mut clicks = Vec::new();

    while duration - state.elapsed > end_tolerance && state.step < params.max_steps {
        let beta = symbols[state.lo];
        let accelerated = state.elapsed > params.accel_threshold * duration;
        let window = params.time_bin.min(duration - state.elapsed);

        for (s, mode) in modes.iter().enumerate() {
            let rate = mode.efficiency / duration * interference_bracket(truth, beta, params.visibility);
            arrivals[s] = sample_first_click(rate, window, &mut streams[s])
                .map(|tau| quantize(tau, window, params.timing_bins));
        }

        let first = arrivals.iter().flatten().copied().reduce(f64::min);
        let last = arrivals.iter().flatten().copied().reduce(f64::max);
        let observed = match (accelerated, first, last) {
            (true, Some(first), _) => first,
            (false, _, Some(last)) => last,
            _ => window,
        };

        for (b, alpha) in brackets.iter_mut().zip(symbols) {
            *b = interference_bracket(*alpha, beta, params.visibility);
        }

        let step = state.step + 1;
        let mut shot_clicks = 0;
        for (s, mode) in modes.iter().enumerate() {
            let kind = match arrivals[s] {
                Some(at) if at <= observed => {
                    shot_clicks += 1;
                    clicks.push(ClickLog { step, mode: s, at });
                    EventKind::Click { at }
                }
                _ => EventKind::NoClick,
            };
            let scale = mode.efficiency / duration;
            for (ll, b) in log_lik.iter_mut().zip(&brackets) {
                *ll = log_likelihood(scale * b, kind, observed);
            }
            posterior_update_log(&state.retained, &log_lik, &mut state.per_mode[s])?;
        }

        let (best_s, best_m) = best_mode(&state.per_mode);
        match params.retention {
            Retention::BestMode => state.retained.copy_from_slice(&state.per_mode[best_s]),
            Retention::ElementwiseMax => {
                for (m, r) in state.retained.iter_mut().enumerate() {
                    *r = state.per_mode.iter().map(|p| p[m]).fold(0.0, f64::max);
                }
                let total: f64 = state.retained.iter().sum();
                state.retained.iter_mut().for_each(|r| *r /= total);
            }
        }

        let used_lo = state.lo;
        let shot_elapsed = observed + params.feedback_delay;
        state.elapsed += shot_elapsed;
        state.step = step;
        state.lo = match &params.lo_policy {
            LoPolicy::Adaptive => best_m,
            LoPolicy::Fixed(schedule) => schedule[step % schedule.len()],
        };

        let map = argmax(&state.retained);
        steps.push(StepLog {
            step,
            t: state.elapsed.min(duration),
            lo_index: used_lo,
            max_pr: state.retained[map],
            true_pr: state.retained[true_index],
            deviation: deviation_metric(truth, beta, params.visibility, s_count, duration)?,
            shot_elapsed,
            clicks: shot_clicks,
        });
        observe(&state);
    }

    let decision = argmax(&state.retained);
    Ok(TrialRecord {
        true_index,
        decision,
        correct: decision == true_index,
        steps_used: state.step,
        steps,
        clicks,
        final_posterior: state.retained,
    })
}

/// Reports `tau` at the centre of its sub-bin when timing is discretised.
fn quantize(tau: f64, window: f64, bins: Option<usize>) -> f64 {
    match bins {
        None => tau,
        Some(n) => {
            let width = window / n as f64;
            let j = ((tau / width).ceil() as usize).clamp(1, n);
            (j as f64 - 0.5) * width
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{psk_constellation, ris_constellation};
    use crate::optics::mode_set;
    use crate::rng;
    use proptest::prelude::*;

    fn mode(efficiency: f64) -> ModeSpec {
        ModeSpec { index: 1, wavelength: None, source_amplitude: 1.0, efficiency }
    }

    #[test]
    fn zero_rate_never_clicks() {
        let mut r = rng::stream(1, 1);
        for _ in 0..1000 {
            assert_eq!(sample_first_click(0.0, 1e9, &mut r), None);
        }
    }

    #[test]
    fn truncated_mean_for_large_rate_window() {
        let mut r = rng::stream(2, 1);
        let rate = 3.0;
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_first_click(rate, 100.0, &mut r).unwrap();
        }
        let mean = sum / n as f64;
        let sigma = (1.0 / rate) / (n as f64).sqrt();
        assert!((mean - 1.0 / rate).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn likelihood_cases() {
        let a = Complex64::new(1.0, 0.5);
        let p = ReceiverParams::new(1.0, 1.0);
        let no = DetectionEvent::no_click(0, 0.3).unwrap();
        let click = DetectionEvent::click(0, 0.2, 0.3).unwrap();
        assert_eq!(click_likelihood(a, a, &mode(1.0), &no, &p), 1.0);
        assert_eq!(click_likelihood(a, a, &mode(1.0), &click, &p), 0.0);

        // bracket = 1 with α = 1, β = 0; rate 1; click at τ = 1.
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let at_one = DetectionEvent::click(0, 1.0, 2.0).unwrap();
        let l = click_likelihood(one, zero, &mode(1.0), &at_one, &p);
        assert!((l - (-1f64).exp()).abs() < 1e-15);
        assert!((l - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn event_invariants() {
        assert!(DetectionEvent::click(0, 0.0, 1.0).is_err());
        assert!(DetectionEvent::click(0, 1.5, 1.0).is_err());
        assert!(DetectionEvent::no_click(0, 0.0).is_err());
    }

    #[test]
    fn update_examples() {
        let prior = [0.2, 0.3, 0.5];
        let same = posterior_update(&prior, &[0.4, 0.4, 0.4]).unwrap();
        for (a, b) in same.iter().zip(prior) {
            assert!((a - b).abs() < 1e-15);
        }
        let two = posterior_update(&[0.5, 0.5], &[1.0, (-1f64).exp()]).unwrap();
        assert!((two[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((two[1] - 0.268_941_421_369_995_1).abs() < 1e-12);
        assert!(matches!(posterior_update(&prior, &[0.0, 0.0, 0.0]), Err(Error::DegenerateEvidence)));
    }

    #[test]
    fn lo_selection_rules() {
        let c = psk_constellation(6, 1.0).unwrap();
        let single = vec![vec![0.1, 0.5, 0.1, 0.1, 0.1, 0.1]];
        let sel = select_lo(&single, &c);
        assert_eq!((sel.mode, sel.index), (0, 1));
        assert_eq!(sel.retained, single[0]);

        let p1 = vec![0.1, 0.6, 0.1, 0.1, 0.05, 0.05];
        let p2 = vec![0.05, 0.05, 0.05, 0.05, 0.7, 0.1];
        let sel = select_lo(&[p1, p2.clone()], &c);
        assert_eq!((sel.mode, sel.index), (1, 4));
        assert_eq!(sel.beta, c.symbol(4));
        assert_eq!(sel.retained, p2);

        let flat = vec![vec![1.0 / 6.0; 6]; 2];
        let sel = select_lo(&flat, &c);
        assert_eq!((sel.mode, sel.index), (0, 0));
    }

    #[test]
    fn perfect_null_of_first_symbol() {
        let c = ris_constellation(16, 80, 0.6f64.sqrt()).unwrap();
        let modes = mode_set(1, 0.6, &[0.66]).unwrap();
        let params = ReceiverParams::new(1e-3, 1.0);
        let mut streams = rng::mode_streams(5, 1);
        let rec = run_symbol(0, &c, &modes, &params, &mut streams).unwrap();
        assert!(rec.clicks.is_empty());
        assert_eq!(rec.decision, 0);
        assert!(rec.steps.iter().all(|s| s.lo_index == 0 && s.clicks == 0));
        for w in rec.steps.windows(2) {
            assert!(w[1].true_pr > w[0].true_pr);
        }
    }

    #[test]
    fn first_click_flips_binary_posterior() {
        // LO starts on α₁ = +a while α₂ = −a was sent; with V = 1 the
        // hypothesis-1 rate is zero so a single click excludes it.
        let c = psk_constellation(2, 1.0).unwrap();
        let modes = [mode(1.0)];
        let params = ReceiverParams::new(1.0, 1.0);
        let mut streams = rng::mode_streams(8, 1);
        let rec = run_symbol(1, &c, &modes, &params, &mut streams).unwrap();
        let first_click = rec.steps.iter().position(|s| s.clicks > 0).unwrap();
        assert_eq!(rec.steps[first_click].true_pr, 1.0);
        assert_eq!(rec.decision, 1);
    }

    #[test]
    fn window_arithmetic_without_clicks() {
        let c = psk_constellation(4, 1.0).unwrap();
        let modes = [mode(1.0)];
        let mut params = ReceiverParams::new(1.0, 1.0);
        params.feedback_delay = 0.0;
        params.lo_policy = LoPolicy::Fixed(vec![2]);
        let mut streams = rng::mode_streams(3, 1);
        let rec = run_symbol(2, &c, &modes, &params, &mut streams).unwrap();
        assert_eq!(rec.steps_used, 10);
        assert!(rec.clicks.is_empty());
    }

    #[test]
    fn max_steps_stops_early() {
        let c = psk_constellation(4, 1.0).unwrap();
        let mut params = ReceiverParams::new(1.0, 1.0);
        params.max_steps = 3;
        let mut streams = rng::mode_streams(3, 1);
        let rec = run_symbol(0, &c, &[mode(1.0)], &params, &mut streams).unwrap();
        assert_eq!(rec.steps_used, 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = psk_constellation(4, 1.0).unwrap();
        let params = ReceiverParams::new(1.0, 1.2);
        let mut streams = rng::mode_streams(3, 1);
        assert!(run_symbol(0, &c, &[mode(1.0)], &params, &mut streams).is_err());
        let params = ReceiverParams::new(1.0, 0.9);
        assert!(run_symbol(4, &c, &[mode(1.0)], &params, &mut streams).is_err());
        let mut two = rng::mode_streams(3, 2);
        assert!(run_symbol(0, &c, &[mode(1.0)], &params, &mut two).is_err());
    }

    #[test]
    fn accelerated_mode_cuts_window_at_first_click() {
        // Accelerate right after the first shot so every later shot with clicks
        // stops at the earliest arrival; later arrivals are not recorded.
        let c = ris_constellation(16, 800, 1.0).unwrap();
        let modes = mode_set(3, 3.0, &[0.66, 0.46, 0.46]).unwrap();
        let mut params = ReceiverParams::new(1e-5, 0.99);
        params.accel_threshold = 1e-9;
        let mut streams = rng::mode_streams(12, 3);
        let rec = run_symbol(9, &c, &modes, &params, &mut streams).unwrap();
        for step in rec.steps.iter().skip(1) {
            let shot: Vec<_> = rec.clicks.iter().filter(|c| c.step == step.step).collect();
            if let Some(first) = shot.iter().map(|c| c.at).reduce(f64::min) {
                assert!(shot.iter().all(|c| c.at == first));
                assert!((step.shot_elapsed - first - params.feedback_delay).abs() < 1e-18);
            }
        }
    }

    #[test]
    fn elementwise_retention_stays_normalised() {
        let c = ris_constellation(16, 80, 1.0).unwrap();
        let modes = mode_set(3, 1.5, &[0.66, 0.46, 0.46]).unwrap();
        let mut params = ReceiverParams::new(1e-3, 0.997);
        params.retention = Retention::ElementwiseMax;
        let mut streams = rng::mode_streams(4, 3);
        run_symbol_observed(7, &c, &modes, &params, &mut streams, |st| {
            let sum: f64 = st.retained.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        })
        .unwrap();
    }

    #[test]
    fn quantized_clicks_sit_at_bin_centres() {
        assert!((quantize(0.01, 1.0, Some(10)) - 0.05).abs() < 1e-15);
        assert!((quantize(0.1, 1.0, Some(10)) - 0.05).abs() < 1e-15);
        assert!((quantize(0.95, 1.0, Some(10)) - 0.95).abs() < 1e-15);
        assert_eq!(quantize(0.37, 1.0, None), 0.37);
    }

    proptest! {
        #[test]
        fn update_is_scale_invariant(
            lik in prop::collection::vec(0.001..10.0f64, 2..20),
            scale in 1e-6..1e6f64,
        ) {
            let n = lik.len();
            let prior = vec![1.0 / n as f64; n];
            let a = posterior_update(&prior, &lik).unwrap();
            let scaled: Vec<f64> = lik.iter().map(|l| l * scale).collect();
            let b = posterior_update(&prior, &scaled).unwrap();
            prop_assert_eq!(argmax(&a), argmax(&b));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn time_is_monotone_and_bounded(seed in any::<u64>(), truth in 0usize..16, v in 0.99..=1.0f64) {
            let c = ris_constellation(16, 80, 1.0).unwrap();
            let modes = mode_set(2, 1.0, &[0.66, 0.46]).unwrap();
            let params = ReceiverParams::new(2e-5, v);
            let mut streams = rng::mode_streams(seed, 2);
            let mut last = 0.0;
            let bound = params.symbol_duration + params.feedback_delay + params.time_bin;
            let rec = run_symbol_observed(truth, &c, &modes, &params, &mut streams, |st| {
                assert!(st.elapsed - last >= params.feedback_delay - 1e-18);
                assert!(st.elapsed - last <= params.time_bin + params.feedback_delay + 1e-18);
                assert!(st.elapsed <= bound);
                last = st.elapsed;
            }).unwrap();
            let limit = (params.symbol_duration / params.feedback_delay).ceil() as usize + 1;
            prop_assert!(rec.steps_used <= params.max_steps.min(limit));
        }
    }
}
