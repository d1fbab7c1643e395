use proptest::prelude::*;
use rand::Rng;

use risqr::constellation::ris_constellation;
use risqr::harness::{aggregate_trajectories, sweep, ExperimentSpec, Scheme, TruthPolicy};
use risqr::optics::mode_set;
use risqr::quantum_rx::{run_symbol, run_symbol_observed, ReceiverParams};
use risqr::rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Under V = 1 a matched hypothesis has rate 0, so a click during a shot
    /// whose LO was `α_m` rules `m` out for good.
    #[test]
    fn clicks_exclude_the_nulled_hypothesis(seed in any::<u64>(), m_pick in 0usize..2, n0 in 0.2..4.0f64) {
        let m = [16, 64][m_pick];
        let c = ris_constellation(m, 80, n0.sqrt()).unwrap();
        let modes = mode_set(1, n0, &[0.66]).unwrap();
        let params = ReceiverParams::new(1e-3, 1.0);
        let truth = rng::stream(seed, 0).random_range(0..m);
        let mut streams = rng::mode_streams(seed, 1);
        let mut posteriors = Vec::new();
        let rec = run_symbol_observed(truth, &c, &modes, &params, &mut streams, |s| {
            posteriors.push(s.retained.clone())
        })
        .unwrap();
        let mut excluded = Vec::new();
        for (step, post) in rec.steps.iter().zip(&posteriors) {
            if step.clicks > 0 {
                excluded.push(step.lo_index);
            }
            for &x in &excluded {
                prop_assert_eq!(post[x], 0.0);
            }
        }
        // The true symbol can never be excluded.
        prop_assert!(!excluded.contains(&truth));
    }

    /// A trial is a pure function of its streams.
    #[test]
    fn identical_streams_give_identical_trials(seed in any::<u64>()) {
        let c = ris_constellation(16, 80_000, 0.8).unwrap();
        let modes = mode_set(2, 1.28, &[0.66, 0.46]).unwrap();
        let params = ReceiverParams::new(13e-6, 0.9995);
        let a = run_symbol(3, &c, &modes, &params, &mut rng::mode_streams(seed, 2)).unwrap();
        let b = run_symbol(3, &c, &modes, &params, &mut rng::mode_streams(seed, 2)).unwrap();
        prop_assert_eq!(a.final_posterior, b.final_posterior);
        prop_assert_eq!(a.steps_used, b.steps_used);
    }
}

#[test]
fn perfect_visibility_mean_true_posterior_never_falls() {
    let mut spec = ExperimentSpec::new(Scheme::RisQuantum, 16);
    spec.visibility = 1.0;
    spec.k = vec![80_000];
    spec.symbol_duration_us = vec![13.0];
    spec.trials = 500;
    spec.trajectories = true;
    spec.truth = TruthPolicy::Fixed(0);
    let result = sweep(&spec).unwrap();
    let summary = aggregate_trajectories(&result[0].records, 0.1).unwrap();
    assert_eq!(result[0].row.errors, 0);
    for w in summary.curves.windows(2) {
        assert!(w[1].true_pr >= w[0].true_pr, "{} → {}", w[0].true_pr, w[1].true_pr);
    }
}

#[test]
fn sql_error_probability_falls_with_intensity() {
    let mut spec = ExperimentSpec::new(Scheme::RisSql, 16);
    spec.n0 = vec![0.2, 0.5, 1.0, 2.0, 4.0];
    spec.trials = 40_000;
    let rows: Vec<_> = sweep(&spec).unwrap().into_iter().map(|p| p.row.estimate()).collect();
    for w in rows.windows(2) {
        assert!(w[1].p_e <= w[0].p_e || !w[1].separated_from(&w[0]), "{} → {}", w[0].p_e, w[1].p_e);
    }
}

#[test]
fn shot_cost_scales_with_alphabet_and_modes() {
    // Each shot evaluates M·S likelihoods; with a generous window every
    // trial uses at most `max_steps` shots and the run stays bounded.
    for (m, s) in [(16, 1), (64, 3), (256, 7)] {
        let c = ris_constellation(m, 640_000, (1.5 / s as f64).sqrt()).unwrap();
        let modes = mode_set(s, 1.5, &risqr::optics::default_efficiencies(s)).unwrap();
        let params = ReceiverParams::new(30e-6, 0.9995);
        let rec = run_symbol(m - 1, &c, &modes, &params, &mut rng::mode_streams(9, s)).unwrap();
        assert!(rec.steps_used <= params.max_steps);
        assert_eq!(rec.final_posterior.len(), m);
    }
}
