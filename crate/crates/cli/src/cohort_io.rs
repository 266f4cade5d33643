//! Cohort directory layout.
//!
//! A cohort directory holds one feature tensor and one targets file per
//! subject:
//!
//! ```text
//! cohort/
//!   s01_features.bin        little-endian f64, trial-major
//!   s01_features.bin.json   sidecar: trial ids, labels, bands, order
//!   s01_targets.json        per-trial log-smoothness
//!   ...
//!   ground_truth.json       present for simulated cohorts only
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use neuroreach_core::features::FeatureTensor;
use neuroreach_core::io::{
    read_feature_tensor, read_targets, write_feature_tensor, write_targets, TargetsFile,
};
use neuroreach_core::simulate::SyntheticCohort;
use neuroreach_core::transfer::SubjectData;

/// Ground truth written next to simulated cohorts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub population_weights: Vec<f64>,
    pub intercept: f64,
    pub subject_weights: BTreeMap<String, Vec<f64>>,
    pub subject_intercepts: BTreeMap<String, f64>,
}

pub struct CohortSubjectFiles {
    pub subject_id: String,
    pub features: FeatureTensor,
    pub targets: TargetsFile,
}

fn features_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}_features.bin"))
}

fn targets_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}_targets.json"))
}

/// Write a simulated cohort in the on-disk layout, including ground truth.
pub fn write_cohort(dir: &Path, cohort: &SyntheticCohort) -> anyhow::Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create cohort directory {}", dir.display()))?;
    for subject in &cohort.subjects {
        write_feature_tensor(&features_path(dir, &subject.subject_id), &subject.features)?;
        write_targets(
            &targets_path(dir, &subject.subject_id),
            &TargetsFile {
                subject_id: subject.subject_id.clone(),
                trial_ids: subject.features.trial_ids.clone(),
                log_narj: subject.log_narj.to_vec(),
            },
        )?;
    }
    let truth = GroundTruth {
        population_weights: cohort.population_weights.to_vec(),
        intercept: cohort.intercept,
        subject_weights: cohort
            .subjects
            .iter()
            .map(|s| (s.subject_id.clone(), s.true_weights.to_vec()))
            .collect(),
        subject_intercepts: cohort
            .subjects
            .iter()
            .map(|s| (s.subject_id.clone(), s.true_intercept))
            .collect(),
    };
    let path = dir.join("ground_truth.json");
    fs::write(&path, serde_json::to_string_pretty(&truth)?)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Subject ids present in a cohort directory, sorted.
pub fn list_subjects(dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut ids = Vec::new();
    let entries = fs::read_dir(dir)
        .with_context(|| format!("cannot read cohort directory {}", dir.display()))?;
    for entry in entries {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix("_features.bin") {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    if ids.is_empty() {
        bail!(
            "no subjects found in {} (expected <id>_features.bin files)",
            dir.display()
        );
    }
    Ok(ids)
}

/// Load one subject's features and targets, cross-checking trial ids.
pub fn load_subject(dir: &Path, id: &str) -> anyhow::Result<CohortSubjectFiles> {
    let features = read_feature_tensor(&features_path(dir, id))?;
    let targets = read_targets(&targets_path(dir, id))?;
    if targets.trial_ids != features.trial_ids {
        bail!("subject {id}: targets and features disagree on trial ids");
    }
    if targets.log_narj.len() != features.n_trials() {
        bail!(
            "subject {id}: {} targets for {} trials",
            targets.log_narj.len(),
            features.n_trials()
        );
    }
    Ok(CohortSubjectFiles {
        subject_id: id.to_string(),
        features,
        targets,
    })
}

/// Load a whole cohort directory.
pub fn load_cohort(dir: &Path) -> anyhow::Result<Vec<CohortSubjectFiles>> {
    list_subjects(dir)?
        .iter()
        .map(|id| load_subject(dir, id))
        .collect()
}

impl CohortSubjectFiles {
    pub fn to_subject_data(&self) -> SubjectData {
        SubjectData {
            subject_id: self.subject_id.clone(),
            features: self.features.flatten_trials(),
            log_narj: Array1::from_vec(self.targets.log_narj.clone()),
        }
    }
}
