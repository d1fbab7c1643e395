//! Heterodyne (standard quantum limit) baseline receiver.
//!
//! The outcome is `ϑ = √(ξη)·α + δ` with `δ ~ CN(0, 1)`, decided by minimum
//! Euclidean distance to the attenuated constellation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::optics::check_efficiency;
use crate::rng;
use crate::stats::PeEstimate;

/// One heterodyne measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterodyneSample {
    pub outcome: Complex64,
    /// 0-based index of the transmitted symbol.
    pub true_index: usize,
}

/// Noise applied to heterodyne outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeterodyneNoise {
    /// Unit-variance circular Gaussian vacuum noise.
    #[default]
    Vacuum,
    /// Noise forced to zero; useful to check the decision stage alone.
    Noiseless,
}

/// Draws `δ ~ CN(0, 1)`: independent quadratures of variance 1/2 each.
pub fn circular_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Heterodyne outcome for amplitude `alpha` through efficiency `efficiency`.
pub fn heterodyne_sample(alpha: Complex64, efficiency: f64, noise: Complex64) -> Complex64 {
    alpha * efficiency.sqrt() + noise
}

/// Minimum-distance decision against `√(ξη)·α_m`; ties go to the lowest index.
pub fn min_distance_decide(outcome: Complex64, constellation: &Constellation, efficiency: f64) -> usize {
    let gain = efficiency.sqrt();
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (m, alpha) in constellation.symbols().iter().enumerate() {
        let dist = (outcome - alpha * gain).norm_sqr();
        if dist < best_dist {
            best = m;
            best_dist = dist;
        }
    }
    best
}

/// Runs one heterodyne trial with its own seed: draws a uniform symbol, the
/// outcome, and returns the sample and the decided index.
pub fn heterodyne_trial(
    constellation: &Constellation,
    efficiency: f64,
    noise: HeterodyneNoise,
    trial_seed: u64,
) -> (HeterodyneSample, usize) {
    let mut rng = rng::stream(trial_seed, rng::TRUTH_STREAM);
    let true_index = rng.random_range(0..constellation.order());
    let delta = match noise {
        HeterodyneNoise::Vacuum => circular_gaussian(&mut rng),
        HeterodyneNoise::Noiseless => Complex64::new(0.0, 0.0),
    };
    let outcome = heterodyne_sample(constellation.symbol(true_index), efficiency, delta);
    let decided = min_distance_decide(outcome, constellation, efficiency);
    (HeterodyneSample { outcome, true_index }, decided)
}

/// Monte Carlo symbol-error probability of the heterodyne receiver with
/// uniformly drawn symbols. Trials run on the current rayon pool; the result
/// depends only on the inputs and `seed`.
pub fn sql_error_probability(
    constellation: &Constellation,
    efficiency: f64,
    trials: u64,
    noise: HeterodyneNoise,
    seed: u64,
) -> Result<PeEstimate> {
    check_efficiency(efficiency)?;
    if trials == 0 {
        return Err(Error::EmptyInput("trials"));
    }
    let errors = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (sample, decided) =
                heterodyne_trial(constellation, efficiency, noise, rng::trial_seed(seed, 0, i));
            u64::from(decided != sample.true_index)
        })
        .sum::<u64>();
    Ok(PeEstimate::from_counts(errors, trials))
}
