//! Transfer-learned regression: per-subject ridge fits, a pooled
//! across-subject prior, MAP personalization from a handful of trials, and
//! leave-one-subject-out evaluation.
//!
//! The scheme is a two-level linear-Gaussian hierarchy. Each subject's
//! weight vector is modeled as a draw around a population mean; the prior
//! for a held-out subject pools the fitted weights of everyone else, and
//! personalization is the MAP update of that prior given the subject's
//! first `k` trials:
//!
//! ```text
//! w_map = (XᵀX/σ² + Σ⁻¹)⁻¹ (Xᵀ(y − b)/σ² + Σ⁻¹μ)
//! ```
//!
//! Internally the update is evaluated through the algebraically identical
//! kernel form `w_map = μ + ΣXᵀ(XΣXᵀ + σ²I)⁻¹(y − b − Xμ)`, which needs no
//! Σ⁻¹, stays stable as σ² → 0, and factorizes a k×k matrix instead of an
//! F×F one (k = 20 update trials against F = 590 features).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, Cholesky};

/// Floor applied to pooled noise variance and to feature scales.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Per-feature centering and scaling recorded at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    /// Identity transform for models expressed directly in raw feature space.
    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            scales: vec![1.0; dim],
        }
    }

    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows() as f64;
        let means: Vec<f64> = x.axis_iter(Axis(1)).map(|col| col.sum() / n).collect();
        let scales: Vec<f64> = x
            .axis_iter(Axis(1))
            .zip(&means)
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > VARIANCE_FLOOR {
                    s
                } else {
                    1.0 // constant feature: leave it unscaled, ridge zeroes it
                }
            })
            .collect();
        Self { means, scales }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

/// A linear decoder: standardized features to log-smoothness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub standardization: Standardization,
}

impl LinearModel {
    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    /// Predicted log-smoothness per trial.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.feature_dim() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.feature_dim(),
                x.ncols()
            )));
        }
        let xs = self.standardization.apply(x);
        Ok(xs.dot(&self.weights) + self.intercept)
    }

    /// Equivalent weights and intercept in raw (unstandardized) feature
    /// space: `y = x·w_raw + b_raw`.
    pub fn raw_weights(&self) -> (Array1<f64>, f64) {
        let w_raw = Array1::from_iter(
            self.weights
                .iter()
                .zip(&self.standardization.scales)
                .map(|(w, s)| w / s),
        );
        let offset: f64 = self
            .weights
            .iter()
            .zip(&self.standardization.means)
            .zip(&self.standardization.scales)
            .map(|((w, m), s)| w * m / s)
            .sum();
        (w_raw, self.intercept - offset)
    }
}

/// A per-subject ridge fit plus the bookkeeping the prior pools later.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub model: LinearModel,
    /// Residual variance on the fit's own training data,
    /// degrees-of-freedom adjusted: `‖r‖² / (n − tr(H))` with `H` the ridge
    /// smoother matrix. The raw mean square would vanish for strongly
    /// underdetermined fits and starve the personalization update of its
    /// noise term.
    pub residual_variance: f64,
    pub n_trials: usize,
}

/// How the prior covariance is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaEncoding {
    Diag,
    Dense,
}

/// Across-subject weight covariance of a prior.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSigma {
    /// Per-feature variances (off-diagonals dropped).
    Diagonal(Array1<f64>),
    /// Full shrunk covariance.
    Dense(Array2<f64>),
}

impl PriorSigma {
    pub fn encoding(&self) -> SigmaEncoding {
        match self {
            PriorSigma::Diagonal(_) => SigmaEncoding::Diag,
            PriorSigma::Dense(_) => SigmaEncoding::Dense,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PriorSigma::Diagonal(d) => d.len(),
            PriorSigma::Dense(m) => m.nrows(),
        }
    }

    /// `X · Σ` for a trials × F matrix.
    fn right_multiply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            PriorSigma::Diagonal(d) => {
                let mut out = x.to_owned();
                for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
                    col.mapv_inplace(|v| v * d[j]);
                }
                out
            }
            PriorSigma::Dense(m) => x.dot(m),
        }
    }
}

/// Pooled across-subject model: population mean weights, weight covariance,
/// residual noise, and the pooled intercept used for baseline predictions.
#[derive(Debug, Clone)]
pub struct PriorModel {
    /// Across-subject mean weights, raw feature space.
    pub mu: Array1<f64>,
    pub sigma: PriorSigma,
    /// Pooled residual variance of the contributing fits.
    pub noise_variance: f64,
    /// Pooled intercept (mean of contributing raw-space intercepts).
    pub intercept: f64,
    pub contributing_subjects: usize,
}

impl PriorModel {
    pub fn feature_dim(&self) -> usize {
        self.mu.len()
    }

    /// The unadapted baseline: predict with the population mean weights.
    pub fn as_linear_model(&self) -> LinearModel {
        LinearModel {
            weights: self.mu.clone(),
            intercept: self.intercept,
            standardization: Standardization::identity(self.mu.len()),
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.as_linear_model().predict(x)
    }
}

/// A prior after its MAP weight update on one subject's first trials.
#[derive(Debug, Clone)]
pub struct PersonalizedModel {
    pub base: LinearModel,
    /// Identifier of the prior this model was updated from.
    pub prior_ref: String,
    pub n_update_trials: usize,
}

impl PersonalizedModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.base.predict(x)
    }
}

/// Hyperparameters of the transfer scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    /// Ridge penalty on standardized features.
    pub lambda: f64,
    /// Shrinkage of the prior covariance toward its diagonal, in [0, 1].
    pub gamma: f64,
    /// Floor added to the prior covariance diagonal.
    pub epsilon_sigma: f64,
    /// Trials used for personalization.
    pub k_update: usize,
    pub sigma_encoding: SigmaEncoding,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            gamma: 0.9,
            epsilon_sigma: 1e-6,
            k_update: 20,
            sigma_encoding: SigmaEncoding::Dense,
        }
    }
}

fn check_finite_matrix(x: ArrayView2<'_, f64>, context: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: context.into(),
        });
    }
    Ok(())
}

fn check_finite_vector(y: ArrayView1<'_, f64>, context: &str) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: context.into(),
        });
    }
    Ok(())
}

/// Closed-form ridge regression with internal feature standardization and an
/// unpenalized intercept.
///
/// With standardized (zero-mean) columns the intercept decouples to
/// `mean(y)` and the weights solve `(XᵀX + λI) w = Xᵀ(y − ȳ)`. When there
/// are fewer trials than features and `λ > 0`, the identical dual form
/// `w = Xᵀ(XXᵀ + λI)⁻¹(y − ȳ)` is used instead, factorizing the smaller
/// Gram matrix. A rank-deficient system at `λ = 0` is reported, not
/// silently pseudo-inverted.
pub fn fit_subject_ridge(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
) -> Result<RidgeFit> {
    let n = x.nrows();
    let f = x.ncols();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "ridge fit needs at least 2 trials, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
            context: "ridge fit targets".into(),
        });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    check_finite_matrix(x, "ridge features")?;
    check_finite_vector(y, "ridge targets")?;

    let standardization = Standardization::fit(x);
    let xs = standardization.apply(x);
    let intercept = y.sum() / n as f64;
    let yc = y.to_owned() - intercept;

    // effective degrees of freedom tr(H) fall out of the same factorization:
    // primal df = F − λ·tr(A⁻¹), dual df = n − λ·tr(S⁻¹)
    let (weights, dof) = if lambda > 0.0 && n < f {
        // dual form: factorize the n×n kernel instead of the F×F Gram
        let mut k = xs.dot(&xs.t());
        for i in 0..n {
            k[[i, i]] += lambda;
        }
        symmetrize(&mut k);
        let chol = Cholesky::new(k.view()).map_err(promote_rank_error)?;
        let alpha = chol.solve(&yc);
        (xs.t().dot(&alpha), n as f64 - lambda * chol.inverse_trace())
    } else {
        let mut gram = xs.t().dot(&xs);
        for j in 0..f {
            gram[[j, j]] += lambda;
        }
        symmetrize(&mut gram);
        let rhs = xs.t().dot(&yc);
        let chol = Cholesky::new(gram.view()).map_err(promote_rank_error)?;
        let dof = if lambda > 0.0 {
            f as f64 - lambda * chol.inverse_trace()
        } else {
            f as f64
        };
        (chol.solve(&rhs), dof)
    };

    let residuals = &yc - &xs.dot(&weights);
    let residual_variance = (residuals.iter().map(|r| r * r).sum::<f64>()
        / (n as f64 - dof).max(1.0))
    .max(VARIANCE_FLOOR);

    Ok(RidgeFit {
        model: LinearModel {
            weights,
            intercept,
            standardization,
        },
        residual_variance,
        n_trials: n,
    })
}

fn promote_rank_error(err: Error) -> Error {
    match err {
        Error::NotPositiveDefinite { column } => Error::RankDeficient { column },
        other => other,
    }
}

/// Pool per-subject fits into a prior.
///
/// Weights are pooled in raw feature space so that vectors fit under
/// different per-subject standardizations stay commensurable: `mu` is their
/// mean, `sigma` the shrunk empirical covariance
/// `γ·diag(var) + (1−γ)·cov + ε·I`, and the noise term the trial-weighted
/// pool of training residual variances.
pub fn fit_prior(fits: &[&RidgeFit], config: &TransferConfig) -> Result<PriorModel> {
    if fits.len() < 2 {
        return Err(Error::TooFewSubjects {
            got: fits.len(),
            need: 2,
        });
    }
    if !(0.0..=1.0).contains(&config.gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be in [0, 1], got {}",
            config.gamma
        )));
    }
    let f = fits[0].model.feature_dim();
    for fit in fits {
        if fit.model.feature_dim() != f {
            return Err(Error::DimensionMismatch(format!(
                "contributing model has {} features, expected {f}",
                fit.model.feature_dim()
            )));
        }
    }

    let m = fits.len();
    let mut w = Array2::<f64>::zeros((m, f));
    let mut intercepts = Array1::<f64>::zeros(m);
    for (i, fit) in fits.iter().enumerate() {
        let (w_raw, b_raw) = fit.model.raw_weights();
        w.row_mut(i).assign(&w_raw);
        intercepts[i] = b_raw;
    }

    let mu = w.sum_axis(Axis(0)) / m as f64;
    let centered = &w - &mu.view().insert_axis(Axis(0));
    let denom = (m - 1) as f64;
    let variances: Array1<f64> = centered
        .axis_iter(Axis(1))
        .map(|col| col.iter().map(|v| v * v).sum::<f64>() / denom)
        .collect();

    let sigma = match config.sigma_encoding {
        SigmaEncoding::Diag => PriorSigma::Diagonal(variances + config.epsilon_sigma),
        SigmaEncoding::Dense => {
            // blend toward the diagonal; the blend keeps the empirical
            // diagonal intact, the epsilon floor bounds the spectrum away
            // from zero
            let mut cov = centered.t().dot(&centered) / denom;
            cov *= 1.0 - config.gamma;
            for j in 0..f {
                cov[[j, j]] += config.gamma * variances[j] + config.epsilon_sigma;
            }
            symmetrize(&mut cov);
            PriorSigma::Dense(cov)
        }
    };

    let total_trials: usize = fits.iter().map(|fit| fit.n_trials).sum();
    let noise_variance = (fits
        .iter()
        .map(|fit| fit.residual_variance * fit.n_trials as f64)
        .sum::<f64>()
        / total_trials as f64)
        .max(VARIANCE_FLOOR);

    Ok(PriorModel {
        mu,
        sigma,
        noise_variance,
        intercept: intercepts.sum() / m as f64,
        contributing_subjects: m,
    })
}

/// MAP update of a prior from the subject's first `k` trials.
///
/// The intercept is set to the prior-residual mean `mean(y − Xμ)`, then the
/// weights get the MAP update under `y ~ N(Xw + b, σ²I)`, `w ~ N(μ, Σ)`.
/// `k = 0` is the continuity anchor: the prior mean model is returned
/// unchanged.
pub fn personalize(
    prior: &PriorModel,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    prior_ref: &str,
) -> Result<PersonalizedModel> {
    let k = x.nrows();
    let f = prior.feature_dim();
    if k == 0 {
        return Ok(PersonalizedModel {
            base: prior.as_linear_model(),
            prior_ref: prior_ref.to_string(),
            n_update_trials: 0,
        });
    }
    if x.ncols() != f {
        return Err(Error::DimensionMismatch(format!(
            "update features have {} columns, prior expects {f}",
            x.ncols()
        )));
    }
    if y.len() != k {
        return Err(Error::LengthMismatch {
            left: k,
            right: y.len(),
            context: "personalization targets".into(),
        });
    }
    if prior.sigma.dim() != f {
        return Err(Error::DimensionMismatch(format!(
            "prior sigma has dim {}, mu has {f}",
            prior.sigma.dim()
        )));
    }
    check_finite_matrix(x, "personalization features")?;
    check_finite_vector(y, "personalization targets")?;

    let prior_fit = x.dot(&prior.mu);
    let intercept = (y.to_owned() - &prior_fit).sum() / k as f64;
    let residual = y.to_owned() - prior_fit - intercept;

    // kernel-form MAP update: δ = ΣXᵀ (XΣXᵀ + σ²I)⁻¹ r
    let xsigma = prior.sigma.right_multiply(x);
    let mut kernel = xsigma.dot(&x.t());
    for i in 0..k {
        kernel[[i, i]] += prior.noise_variance;
    }
    symmetrize(&mut kernel);
    let alpha = Cholesky::new(kernel.view())?.solve(&residual);
    let weights = prior.mu.clone() + xsigma.t().dot(&alpha);

    Ok(PersonalizedModel {
        base: LinearModel {
            weights,
            intercept,
            standardization: Standardization::identity(f),
        },
        prior_ref: prior_ref.to_string(),
        n_update_trials: k,
    })
}

/// One subject's flattened features and targets.
#[derive(Debug, Clone)]
pub struct SubjectData {
    pub subject_id: String,
    /// trials × F, flattened channel-major.
    pub features: Array2<f64>,
    /// One log-smoothness value per trial.
    pub log_narj: Array1<f64>,
}

/// Held-out predictions for one leave-one-subject-out fold.
#[derive(Debug)]
pub struct LosoFold {
    pub subject_id: String,
    pub prior: PriorModel,
    pub personalized: PersonalizedModel,
    /// Predictions on the evaluation trials (everything after the first
    /// `k_update`).
    pub prior_predictions: Array1<f64>,
    pub personalized_predictions: Array1<f64>,
    pub observed: Array1<f64>,
}

/// Leave-one-subject-out evaluation over a cohort.
///
/// Each subject's ridge fit depends only on their own trials, so the 26
/// fits are computed once and each fold pools the other 25 into its prior.
/// Folds are independent and run in parallel; results are deterministic
/// regardless of worker count.
pub fn loso_evaluate(cohort: &[SubjectData], config: &TransferConfig) -> Result<Vec<LosoFold>> {
    if cohort.len() < 3 {
        return Err(Error::TooFewSubjects {
            got: cohort.len(),
            need: 3,
        });
    }
    let f = cohort[0].features.ncols();
    for s in cohort {
        if s.features.ncols() != f {
            return Err(Error::DimensionMismatch(format!(
                "subject {} has {} features, expected {f}",
                s.subject_id,
                s.features.ncols()
            )));
        }
        if s.features.nrows() != s.log_narj.len() {
            return Err(Error::LengthMismatch {
                left: s.features.nrows(),
                right: s.log_narj.len(),
                context: format!("subject {} trials", s.subject_id),
            });
        }
        if s.features.nrows() <= config.k_update {
            return Err(Error::TooFewTrials {
                subject: s.subject_id.clone(),
                trials: s.features.nrows(),
                k_update: config.k_update,
            });
        }
    }

    let fits: Vec<RidgeFit> = cohort
        .par_iter()
        .map(|s| fit_subject_ridge(s.features.view(), s.log_narj.view(), config.lambda))
        .collect::<Result<_>>()?;

    (0..cohort.len())
        .into_par_iter()
        .map(|hold_out| {
            let subject = &cohort[hold_out];
            let others: Vec<&RidgeFit> = fits
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != hold_out)
                .map(|(_, fit)| fit)
                .collect();
            let prior = fit_prior(&others, config)?;

            let k = config.k_update;
            let x_update = subject.features.slice(ndarray::s![..k, ..]);
            let y_update = subject.log_narj.slice(ndarray::s![..k]);
            let prior_ref = format!("loso:hold_out={}", subject.subject_id);
            let personalized = personalize(&prior, x_update, y_update, &prior_ref)?;

            let x_eval = subject.features.slice(ndarray::s![k.., ..]);
            let observed = subject.log_narj.slice(ndarray::s![k..]).to_owned();
            let prior_predictions = prior.predict(x_eval)?;
            let personalized_predictions = personalized.predict(x_eval)?;

            Ok(LosoFold {
                subject_id: subject.subject_id.clone(),
                prior,
                personalized,
                prior_predictions,
                personalized_predictions,
                observed,
            })
        })
        .collect()
}
