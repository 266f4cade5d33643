//! Encoding topographies: the interpretable forward view of a decoder.
//!
//! A decoding model's weights say little about where predictive information
//! sits; correlating the model's predictions with each raw channel × band
//! feature does. The per-subject maps and their mean are exported as plain
//! numeric tables for topographic plotting.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::signal::BandName;
use crate::stats::pearson;

/// Per-channel, per-band correlation between predictions and features.
#[derive(Debug, Clone)]
pub struct EncodingTopography {
    /// channels × bands, Pearson ρ in [−1, 1].
    pub values: Array2<f64>,
    /// Entries whose feature had zero variance across trials (ρ set to 0).
    pub zero_variance: Array2<bool>,
    pub channel_labels: Vec<String>,
    pub band_names: Vec<BandName>,
    pub subject_id: String,
}

impl EncodingTopography {
    pub fn n_channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_bands(&self) -> usize {
        self.values.ncols()
    }

    /// Row-major flattened view (channel-major, matching the feature
    /// flattening order).
    pub fn flattened(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }

    /// The (channel, band) entry with the largest |ρ|.
    pub fn peak_entry(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, 0.0f64);
        for ((c, b), v) in self.values.indexed_iter() {
            if v.abs() > best.2.abs() {
                best = (c, b, *v);
            }
        }
        best
    }
}

/// Correlate predictions with every individual feature.
///
/// Zero-variance features cannot be correlated; their entries are 0 and
/// flagged.
pub fn encoding_topography(
    predictions: &[f64],
    features: &FeatureTensor,
    subject_id: &str,
) -> Result<EncodingTopography> {
    let n_trials = features.n_trials();
    if predictions.len() != n_trials {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: n_trials,
            context: "encoding_topography predictions vs trials".into(),
        });
    }
    if n_trials < 3 {
        return Err(Error::SeriesTooShort {
            got: n_trials,
            need: 3,
            context: "encoding_topography".into(),
        });
    }
    let mean = predictions.iter().sum::<f64>() / n_trials as f64;
    if predictions.iter().all(|p| (p - mean).abs() < 1e-300) {
        return Err(Error::ZeroVariance("encoding predictions".into()));
    }

    let (c, b) = (features.n_channels(), features.n_bands());
    let mut values = Array2::<f64>::zeros((c, b));
    let mut zero_variance = Array2::from_elem((c, b), false);
    let mut column = vec![0.0; n_trials];
    for ci in 0..c {
        for bi in 0..b {
            for t in 0..n_trials {
                column[t] = features.values[[t, ci, bi]];
            }
            match pearson(predictions, &column) {
                Ok(rho) => values[[ci, bi]] = rho,
                Err(Error::ZeroVariance(_)) => {
                    values[[ci, bi]] = 0.0;
                    zero_variance[[ci, bi]] = true;
                }
                Err(e) => return Err(e),
            }
        }
    }

    Ok(EncodingTopography {
        values,
        zero_variance,
        channel_labels: features.channel_labels.clone(),
        band_names: features.band_defs.iter().map(|b| b.name).collect(),
        subject_id: subject_id.to_string(),
    })
}

/// Elementwise mean of per-subject topographies (mean of correlations, not
/// correlation of pooled data). Entries flagged in any contributor stay
/// flagged.
pub fn mean_topography(topos: &[EncodingTopography]) -> Result<EncodingTopography> {
    let first = topos.first().ok_or_else(|| {
        Error::InvalidParameter("mean_topography needs at least one topography".into())
    })?;
    let shape = (first.n_channels(), first.n_bands());
    for t in topos {
        if (t.n_channels(), t.n_bands()) != shape || t.channel_labels != first.channel_labels {
            return Err(Error::DimensionMismatch(
                "topographies differ in shape or label order".into(),
            ));
        }
    }
    let mut values = Array2::<f64>::zeros(shape);
    let mut zero_variance = Array2::from_elem(shape, false);
    for t in topos {
        values += &t.values;
        zero_variance.zip_mut_with(&t.zero_variance, |a, b| *a = *a || *b);
    }
    values /= topos.len() as f64;
    Ok(EncodingTopography {
        values,
        zero_variance,
        channel_labels: first.channel_labels.clone(),
        band_names: first.band_names.clone(),
        subject_id: "mean".to_string(),
    })
}

/// Mean pairwise cosine similarity between subjects' flattened
/// topographies; low values quantify across-subject heterogeneity.
pub fn mean_pairwise_cosine(topos: &[EncodingTopography]) -> Result<f64> {
    if topos.len() < 2 {
        return Err(Error::TooFewSubjects {
            got: topos.len(),
            need: 2,
        });
    }
    let flat: Vec<Vec<f64>> = topos.iter().map(|t| t.flattened()).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..flat.len() {
        for j in (i + 1)..flat.len() {
            total += cosine(&flat[i], &flat[j]);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
