//! The pipeline summary schema.
//!
//! One self-contained JSON document per run: provenance (full config, seed,
//! input hashes), across-subject test results for both models, per-subject
//! series and coherence tests, group-level uniformity tests, mean coherence,
//! topography heterogeneity, and the mean encoding topography. Strictly
//! versioned; unknown fields are rejected on read so schema drift fails
//! loudly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use neuroreach_core::stats::PermutationTestResult;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    /// The full effective run configuration.
    pub config: RunConfig,
    /// SHA-256 of every input file (path → hex digest); for simulated runs
    /// the single entry "cohort_config" hashes the generating config.
    pub input_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPair<T> {
    pub personalized: T,
    pub prior: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectSummary {
    pub id: String,
    pub n_trials: usize,
    pub k_update: usize,
    /// Complete observed log-smoothness series (update + evaluation trials).
    pub observed_all: Vec<f64>,
    /// Predictions on the evaluation trials (after the first `k_update`).
    pub personalized_pred: Vec<f64>,
    pub prior_pred: Vec<f64>,
    /// Means over the evaluation window (last `eval_window` trials).
    pub observed_mean_last: f64,
    pub personalized_mean_last: f64,
    pub prior_mean_last: f64,
    pub mse: ModelPair<f64>,
    pub coherence: ModelPair<PermutationTestResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupLevel {
    pub personalized: PermutationTestResult,
    pub prior: PermutationTestResult,
    /// Reference CDF used for the observed statistic (the null distribution
    /// always uses sampled uniform draws).
    pub observed_statistic_reference: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heterogeneity {
    pub mean_pairwise_cosine: f64,
    pub n_subjects: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanTopography {
    pub channel_labels: Vec<String>,
    pub bands: Vec<String>,
    /// channels × bands.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub schema_version: u32,
    pub provenance: Provenance,
    /// Subject-order permutation tests on the across-subject correlation of
    /// evaluation-window means.
    pub across_subject: ModelPair<PermutationTestResult>,
    pub per_subject: Vec<SubjectSummary>,
    pub group_level: GroupLevel,
    pub mean_coherence: ModelPair<f64>,
    pub heterogeneity: Heterogeneity,
    pub mean_topography: MeanTopography,
}

impl Summary {
    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
