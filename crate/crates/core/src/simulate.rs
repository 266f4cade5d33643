//! Ground-truth synthetic data: minimum-jerk trajectories, band-structured
//! EEG-like signals, and hierarchical feature→smoothness cohorts.
//!
//! Everything is generated from derived seeds so cohorts are bit-identical
//! across runs and across worker counts, and every generator returns its
//! ground truth so downstream modules can be checked against it.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{EegRecording, FeatureTensor};
use crate::kinematics::Trajectory;
use crate::seeds;
use crate::signal::{BandDefinition, BandName};
use crate::transfer::SubjectData;

/// Configuration of a synthetic cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n_subjects: usize,
    /// Per-subject trial counts are drawn uniformly from this inclusive
    /// range (the post-exclusion range seen in practice).
    pub min_trials: usize,
    pub max_trials: usize,
    pub n_channels: usize,
    pub bands: Vec<BandDefinition>,
    pub k_update: usize,
    /// Scale of the nonzero population-mean weights.
    pub weight_mean_scale: f64,
    /// Per-coordinate variance of subject weights around the population
    /// mean (diagonal covariance).
    pub weight_cov: f64,
    /// Observation noise on log-smoothness.
    pub noise_std: f64,
    /// Fraction of population-mean weights that are nonzero.
    pub sparsity: f64,
    /// When set, nonzero population weights are restricted to these bands.
    pub sparsity_bands: Option<Vec<BandName>>,
    /// Rank of the shared low-rank factor behind cross-feature correlation;
    /// 0 gives independent features.
    pub factor_rank: usize,
    /// Population intercept, log-smoothness units.
    pub intercept: f64,
    /// Across-subject standard deviation of the per-subject intercept;
    /// models the spread in baseline smoothness between subjects. 0 gives a
    /// fully shared intercept.
    pub intercept_spread: f64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_subjects: 26,
            min_trials: 89,
            max_trials: 98,
            n_channels: 118,
            bands: BandDefinition::canonical_five(),
            k_update: 20,
            weight_mean_scale: 0.1,
            weight_cov: 0.05,
            noise_std: 0.5,
            sparsity: 0.05,
            sparsity_bands: None,
            factor_rank: 30,
            intercept: 3.0,
            intercept_spread: 1.5,
            seed: 14,
        }
    }
}

impl CohortConfig {
    pub fn feature_dim(&self) -> usize {
        self.n_channels * self.bands.len()
    }

    fn validate(&self) -> Result<()> {
        if self.n_subjects == 0
            || self.min_trials == 0
            || self.n_channels == 0
            || self.bands.is_empty()
        {
            return Err(Error::InvalidParameter(
                "cohort counts must all be at least 1".into(),
            ));
        }
        if self.min_trials > self.max_trials {
            return Err(Error::InvalidParameter(format!(
                "min_trials {} > max_trials {}",
                self.min_trials, self.max_trials
            )));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sparsity must be in (0, 1], got {}",
                self.sparsity
            )));
        }
        if self.weight_cov < 0.0 || self.weight_mean_scale < 0.0 || self.intercept_spread < 0.0 {
            return Err(Error::InvalidParameter(
                "weight and intercept scales must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One synthetic subject with its generative ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub subject_id: String,
    pub features: FeatureTensor,
    pub log_narj: Array1<f64>,
    /// The weights that actually generated `log_narj`, flattened
    /// channel-major.
    pub true_weights: Array1<f64>,
    /// The intercept that actually generated `log_narj`.
    pub true_intercept: f64,
}

/// A full synthetic cohort plus population-level ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub subjects: Vec<SyntheticSubject>,
    /// Population mean weights the subjects were drawn around.
    pub population_weights: Array1<f64>,
    pub intercept: f64,
    pub config: CohortConfig,
}

impl SyntheticCohort {
    /// Flattened view consumed by the transfer module.
    pub fn to_subject_data(&self) -> Vec<SubjectData> {
        self.subjects
            .iter()
            .map(|s| SubjectData {
                subject_id: s.subject_id.clone(),
                features: s.features.flatten_trials(),
                log_narj: s.log_narj.clone(),
            })
            .collect()
    }
}

/// Minimum-jerk point-to-point reach with optional position noise.
///
/// Each axis follows `p(τ) = p0 + Δp · (10τ³ − 15τ⁴ + 6τ⁵)` with
/// `τ = t / duration`.
pub fn gen_min_jerk_trajectory(
    duration_s: f64,
    start: [f64; 3],
    end: [f64; 3],
    sample_rate: f64,
    noise_std_m: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(duration_s > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration ({duration_s}) and sample rate ({sample_rate}) must be positive"
        )));
    }
    if noise_std_m < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise_std_m must be >= 0, got {noise_std_m}"
        )));
    }
    let n = (duration_s * sample_rate).round() as usize + 1;
    let mut rng = seeds::rng_tagged(seed, "min_jerk");
    let samples: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let tau = (i as f64 / sample_rate) / duration_s;
            let shape = 10.0 * tau.powi(3) - 15.0 * tau.powi(4) + 6.0 * tau.powi(5);
            let mut p = [0.0; 3];
            for a in 0..3 {
                p[a] = start[a] + (end[a] - start[a]) * shape;
                if noise_std_m > 0.0 {
                    p[a] += noise_std_m * rng.sample::<f64, _>(StandardNormal);
                }
            }
            p
        })
        .collect();
    Trajectory::new(sample_rate, 0.0, samples)
}

/// Band-structured multichannel signal: per channel, one sinusoid at each
/// band's center frequency with a random phase, plus unit white noise.
pub fn gen_synthetic_eeg(
    bands: &[BandDefinition],
    band_amplitudes: &[f64],
    n_channels: usize,
    duration_s: f64,
    fs: f64,
    seed: u64,
) -> Result<EegRecording> {
    if bands.len() != band_amplitudes.len() {
        return Err(Error::LengthMismatch {
            left: bands.len(),
            right: band_amplitudes.len(),
            context: "gen_synthetic_eeg bands vs amplitudes".into(),
        });
    }
    for band in bands {
        if band.hi_hz >= fs / 2.0 {
            return Err(Error::BandAboveNyquist {
                band: band.name.to_string(),
                hi_hz: band.hi_hz,
                nyquist_hz: fs / 2.0,
            });
        }
    }
    let n = (duration_s * fs).round() as usize;
    let labels: Vec<String> = if n_channels == 118 {
        crate::features::canonical_channels()
    } else {
        (0..n_channels).map(|i| format!("ch{:03}", i + 1)).collect()
    };
    let centers: Vec<f64> = bands.iter().map(|b| 0.5 * (b.lo_hz + b.hi_hz)).collect();

    let mut data = Array2::<f64>::zeros((n_channels, n));
    for c in 0..n_channels {
        let mut rng = seeds::rng(seeds::derive_tagged(seed, "eeg"), c as u64);
        let phases: Vec<f64> = centers
            .iter()
            .map(|_| rng.gen_range(0.0..(2.0 * std::f64::consts::PI)))
            .collect();
        for s in 0..n {
            let t = s as f64 / fs;
            let mut v: f64 = rng.sample(StandardNormal);
            for (b, &f_center) in centers.iter().enumerate() {
                v += band_amplitudes[b]
                    * (2.0 * std::f64::consts::PI * f_center * t + phases[b]).sin();
            }
            data[[c, s]] = v;
        }
    }
    EegRecording::new(fs, labels, data, vec![])
}

/// Exponential adaptation of log-smoothness over trials:
/// `y_t = final + (initial − final) · exp(−t/τ) + noise`.
pub fn gen_adaptation_curve(
    n_trials: usize,
    initial_level: f64,
    final_level: f64,
    time_constant_trials: f64,
    noise_std: f64,
    seed: u64,
) -> Result<Array1<f64>> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be >= 1".into()));
    }
    if !(time_constant_trials > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time constant must be positive, got {time_constant_trials}"
        )));
    }
    let mut rng = seeds::rng_tagged(seed, "adaptation");
    Ok(Array1::from_shape_fn(n_trials, |t| {
        let decay = (-(t as f64) / time_constant_trials).exp();
        let noise = if noise_std > 0.0 {
            noise_std * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        final_level + (initial_level - final_level) * decay + noise
    }))
}

/// Indices of features allowed to carry population weight.
fn support_candidates(config: &CohortConfig) -> Vec<usize> {
    let n_bands = config.bands.len();
    match &config.sparsity_bands {
        None => (0..config.feature_dim()).collect(),
        Some(allowed) => (0..config.feature_dim())
            .filter(|flat| {
                let band = config.bands[flat % n_bands].name;
                allowed.contains(&band)
            })
            .collect(),
    }
}

/// Generate a hierarchical cohort: population weights are drawn once
/// (sparse), subject weights scatter around them, features share a low-rank
/// factor structure, and targets are linear in the features plus noise.
pub fn gen_cohort(config: &CohortConfig) -> Result<SyntheticCohort> {
    config.validate()?;
    let f = config.feature_dim();
    let n_bands = config.bands.len();

    // population-level draws
    let mut pop_rng = seeds::rng_tagged(config.seed, "population");
    let candidates = support_candidates(config);
    let n_nonzero = ((f as f64 * config.sparsity).round() as usize)
        .clamp(1, candidates.len());
    let mut pool = candidates;
    let mut support = Vec::with_capacity(n_nonzero);
    for _ in 0..n_nonzero {
        let pick = pop_rng.gen_range(0..pool.len());
        support.push(pool.swap_remove(pick));
    }
    let mut population_weights = Array1::<f64>::zeros(f);
    for &idx in &support {
        population_weights[idx] =
            config.weight_mean_scale * pop_rng.sample::<f64, _>(StandardNormal);
    }

    // shared factor loadings; entries scaled so per-feature variance is
    // about one, dominated by the shared factors the way volume conduction
    // dominates scalp recordings
    const FACTOR_VARIANCE_SHARE: f64 = 0.8;
    let (loadings, diag_std) = if config.factor_rank > 0 {
        let scale = (FACTOR_VARIANCE_SHARE / config.factor_rank as f64).sqrt();
        (
            Some(Array2::<f64>::from_shape_fn(
                (f, config.factor_rank),
                |_| scale * pop_rng.sample::<f64, _>(StandardNormal),
            )),
            (1.0 - FACTOR_VARIANCE_SHARE).sqrt(),
        )
    } else {
        (None, 1.0)
    };

    let subject_seed = seeds::derive_tagged(config.seed, "subject");
    let subjects: Vec<SyntheticSubject> = (0..config.n_subjects)
        .into_par_iter()
        .map(|s| {
            let mut rng = seeds::rng(subject_seed, s as u64);
            let n_trials = rng.gen_range(config.min_trials..=config.max_trials);

            let w_std = config.weight_cov.sqrt();
            let true_weights = Array1::from_shape_fn(f, |j| {
                population_weights[j] + w_std * rng.sample::<f64, _>(StandardNormal)
            });
            let true_intercept = config.intercept
                + config.intercept_spread * rng.sample::<f64, _>(StandardNormal);

            let mut flat = Array2::<f64>::zeros((n_trials, f));
            for t in 0..n_trials {
                if let Some(lambda) = &loadings {
                    let z = Array1::from_shape_fn(config.factor_rank, |_| {
                        rng.sample::<f64, _>(StandardNormal)
                    });
                    let shared = lambda.dot(&z);
                    for j in 0..f {
                        flat[[t, j]] = shared[j] + diag_std * rng.sample::<f64, _>(StandardNormal);
                    }
                } else {
                    for j in 0..f {
                        flat[[t, j]] = diag_std * rng.sample::<f64, _>(StandardNormal);
                    }
                }
            }

            let log_narj = Array1::from_shape_fn(n_trials, |t| {
                let signal: f64 = flat.row(t).dot(&true_weights);
                let noise = if config.noise_std > 0.0 {
                    config.noise_std * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                signal + true_intercept + noise
            });

            let mut values = Array3::<f64>::zeros((n_trials, config.n_channels, n_bands));
            for t in 0..n_trials {
                for j in 0..f {
                    values[[t, j / n_bands, j % n_bands]] = flat[[t, j]];
                }
            }
            let channel_labels: Vec<String> = if config.n_channels == 118 {
                crate::features::canonical_channels()
            } else {
                (0..config.n_channels)
                    .map(|i| format!("ch{:03}", i + 1))
                    .collect()
            };

            SyntheticSubject {
                subject_id: format!("s{:02}", s + 1),
                features: FeatureTensor {
                    trial_ids: (1..=n_trials as u64).collect(),
                    values,
                    channel_labels,
                    band_defs: config.bands.clone(),
                },
                log_narj,
                true_weights,
                true_intercept,
            }
        })
        .collect();

    Ok(SyntheticCohort {
        subjects,
        population_weights,
        intercept: config.intercept,
        config: config.clone(),
    })
}
