//! Seeded permutation statistics for model validation.
//!
//! Three procedures: an across-subject permutation test on the correlation
//! between predicted and observed mean smoothness, a within-subject
//! permutation test on the trial-series coherence, and a group-level test on
//! the uniformity of a set of per-subject p-values.
//!
//! All p-values carry the plus-one correction `(1 + hits)/(1 + n)`, ties
//! count against the observed statistic, and every iteration draws its RNG
//! from a seed derived as `derive(seed, iteration)` so the loop can be
//! distributed without changing results.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;
use crate::signal::{magnitude_squared_coherence, WelchParams};

/// Which statistic a permutation test ran on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    AbsCorrelation,
    MeanMsc,
    CdfDeviation,
}

/// Outcome of a permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub statistic_kind: StatisticKind,
    #[serde(rename = "observed")]
    pub observed_statistic: f64,
    pub n_permutations: usize,
    pub seed: u64,
    /// `(1 + #{permuted >= observed}) / (1 + n_permutations)`, in (0, 1].
    pub p_value: f64,
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
            context: "pearson".into(),
        });
    }
    if x.len() < 3 {
        return Err(Error::SeriesTooShort {
            got: x.len(),
            need: 3,
            context: "pearson".into(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // constant series leave rounding residue in the squared sums; compare
    // the standard deviation against the value scale
    let degenerate = |s2: f64, mean: f64| (s2 / n).sqrt() <= 1e-12 * (1.0 + mean.abs());
    if degenerate(sxx, mx) {
        return Err(Error::ZeroVariance("pearson x".into()));
    }
    if degenerate(syy, my) {
        return Err(Error::ZeroVariance("pearson y".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn plus_one_p(hits: usize, n: usize) -> f64 {
    (1 + hits) as f64 / (1 + n) as f64
}

/// Across-subject test: does the correlation between predicted and observed
/// per-subject means survive shuffling the subject order of the predictions?
///
/// Statistic is `|ρ|` (two-sided through the modulus); only the predicted
/// values are permuted.
pub fn subject_order_permutation_test(
    predicted_means: &[f64],
    observed_means: &[f64],
    n_permutations: usize,
    seed: u64,
) -> Result<PermutationTestResult> {
    if predicted_means.len() != observed_means.len() {
        return Err(Error::LengthMismatch {
            left: predicted_means.len(),
            right: observed_means.len(),
            context: "subject_order_permutation_test".into(),
        });
    }
    if predicted_means.len() < 5 {
        return Err(Error::TooFewSubjects {
            got: predicted_means.len(),
            need: 5,
        });
    }
    let observed = pearson(predicted_means, observed_means)?.abs();

    let hits: usize = (0..n_permutations as u64)
        .into_par_iter()
        .map(|iter| {
            let mut rng = seeds::rng(seed, iter);
            let mut shuffled = predicted_means.to_vec();
            shuffled.shuffle(&mut rng);
            // variance is permutation-invariant, so pearson cannot fail here
            let stat = pearson(&shuffled, observed_means).unwrap().abs();
            usize::from(stat >= observed)
        })
        .sum();

    Ok(PermutationTestResult {
        statistic_kind: StatisticKind::AbsCorrelation,
        observed_statistic: observed,
        n_permutations,
        seed,
        p_value: plus_one_p(hits, n_permutations),
    })
}

/// Within-subject test: does the mean magnitude-squared coherence between
/// the predicted and observed trial series survive shuffling the trial order
/// of the predictions?
///
/// Coherence is nonnegative, so the test is one-sided on `>= observed`.
pub fn trial_coherence_permutation_test(
    predicted: &[f64],
    observed: &[f64],
    n_permutations: usize,
    seed: u64,
) -> Result<PermutationTestResult> {
    if predicted.len() != observed.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: observed.len(),
            context: "trial_coherence_permutation_test".into(),
        });
    }
    let params = WelchParams::for_trial_series(predicted.len());
    let observed_stat = magnitude_squared_coherence(predicted, observed, params)?.mean_msc;

    let hits: usize = (0..n_permutations as u64)
        .into_par_iter()
        .map(|iter| {
            let mut rng = seeds::rng(seed, iter);
            let mut shuffled = predicted.to_vec();
            shuffled.shuffle(&mut rng);
            let stat = magnitude_squared_coherence(&shuffled, observed, params)
                .expect("permanent: length unchanged by shuffling")
                .mean_msc;
            usize::from(stat >= observed_stat)
        })
        .sum();

    Ok(PermutationTestResult {
        statistic_kind: StatisticKind::MeanMsc,
        observed_statistic: observed_stat,
        n_permutations,
        seed,
        p_value: plus_one_p(hits, n_permutations),
    })
}

/// Number of CDF bins in the group-level uniformity statistic.
pub const GROUP_TEST_BINS: usize = 100;

/// Binned deviation of the empirical CDF of `values` from the standard
/// uniform CDF: `Σ_bins |ECDF(edge) − edge|`.
fn cdf_deviation(values: &[f64], n_bins: usize) -> f64 {
    let n = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut below = 0usize;
    let mut deviation = 0.0;
    for b in 1..=n_bins {
        let edge = b as f64 / n_bins as f64;
        while below < sorted.len() && sorted[below] <= edge {
            below += 1;
        }
        deviation += (below as f64 / n - edge).abs();
    }
    deviation
}

/// Group-level test: are the per-subject p-values uniformly distributed?
///
/// The observed statistic compares the ECDF of `p_values` against the
/// analytic uniform CDF over 100 equally sized bins; the null distribution
/// is the same statistic on freshly drawn uniform samples of the same size.
pub fn group_uniformity_test(
    p_values: &[f64],
    n_bins: usize,
    n_samples: usize,
    seed: u64,
) -> Result<PermutationTestResult> {
    if p_values.len() < 5 {
        return Err(Error::TooFewSubjects {
            got: p_values.len(),
            need: 5,
        });
    }
    for p in p_values {
        if !(*p > 0.0 && *p <= 1.0) {
            return Err(Error::PValueOutOfRange { value: *p });
        }
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be positive".into()));
    }
    let observed = cdf_deviation(p_values, n_bins);
    let n = p_values.len();

    let hits: usize = (0..n_samples as u64)
        .into_par_iter()
        .map(|iter| {
            let mut rng = seeds::rng(seed, iter);
            let draw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            usize::from(cdf_deviation(&draw, n_bins) >= observed)
        })
        .sum();

    Ok(PermutationTestResult {
        statistic_kind: StatisticKind::CdfDeviation,
        observed_statistic: observed,
        n_permutations: n_samples,
        seed,
        p_value: plus_one_p(hits, n_samples),
    })
}
