//! The shared evaluation machinery behind `evaluate` and `pipeline`:
//! leave-one-subject-out fits, the three statistical procedures, encoding
//! topographies, and summary assembly.

use std::collections::BTreeMap;

use anyhow::Context;
use ndarray::s;

use neuroreach_core::encoding::{
    encoding_topography, mean_pairwise_cosine, mean_topography, EncodingTopography,
};
use neuroreach_core::features::FeatureTensor;
use neuroreach_core::seeds;
use neuroreach_core::stats::{
    group_uniformity_test, subject_order_permutation_test, trial_coherence_permutation_test,
    GROUP_TEST_BINS,
};
use neuroreach_core::transfer::{loso_evaluate, LosoFold};

use crate::cohort_io::CohortSubjectFiles;
use crate::config::RunConfig;
use crate::summary::{
    GroupLevel, Heterogeneity, MeanTopography, ModelPair, Provenance, SubjectSummary, Summary,
    SCHEMA_VERSION,
};

/// Everything the pipeline produces in memory before anything is written.
pub struct AnalysisOutput {
    pub summary: Summary,
    pub folds: Vec<LosoFold>,
    pub topographies: Vec<EncodingTopography>,
    pub mean_topo: EncodingTopography,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Feature tensor restricted to the evaluation trials (after `k_update`).
fn eval_tensor(features: &FeatureTensor, k_update: usize) -> FeatureTensor {
    FeatureTensor {
        trial_ids: features.trial_ids[k_update..].to_vec(),
        values: features.values.slice(s![k_update.., .., ..]).to_owned(),
        channel_labels: features.channel_labels.clone(),
        band_defs: features.band_defs.clone(),
    }
}

pub fn run_analysis(
    subjects: &[CohortSubjectFiles],
    config: &RunConfig,
    input_hashes: BTreeMap<String, String>,
) -> anyhow::Result<AnalysisOutput> {
    let transfer_cfg = config.transfer_config()?;
    let seed = config.effective_seed();
    let n_perm = config.stats.n_permutations;

    let data: Vec<_> = subjects.iter().map(|s| s.to_subject_data()).collect();
    let folds = loso_evaluate(&data, &transfer_cfg).context("leave-one-subject-out fit")?;

    // per-subject evaluation-window means and coherence tests
    let window = config.evaluation.eval_window;
    let mut observed_means = Vec::with_capacity(folds.len());
    let mut personalized_means = Vec::with_capacity(folds.len());
    let mut prior_means = Vec::with_capacity(folds.len());
    let mut per_subject = Vec::with_capacity(folds.len());
    let mut topographies = Vec::with_capacity(folds.len());

    let coherence_seed_pers = seeds::derive_tagged(seed, "coherence:personalized");
    let coherence_seed_prior = seeds::derive_tagged(seed, "coherence:prior");

    for (idx, (fold, subject)) in folds.iter().zip(subjects).enumerate() {
        let observed = fold.observed.as_slice().expect("contiguous");
        let pers = fold.personalized_predictions.as_slice().expect("contiguous");
        let prior = fold.prior_predictions.as_slice().expect("contiguous");

        let tail = observed.len().saturating_sub(window);
        observed_means.push(mean(&observed[tail..]));
        personalized_means.push(mean(&pers[tail..]));
        prior_means.push(mean(&prior[tail..]));

        let coh_pers = trial_coherence_permutation_test(
            pers,
            observed,
            n_perm,
            seeds::derive(coherence_seed_pers, idx as u64),
        )
        .with_context(|| format!("coherence test, subject {}", fold.subject_id))?;
        let coh_prior = trial_coherence_permutation_test(
            prior,
            observed,
            n_perm,
            seeds::derive(coherence_seed_prior, idx as u64),
        )
        .with_context(|| format!("coherence test, subject {}", fold.subject_id))?;

        let eval_features = eval_tensor(&subject.features, transfer_cfg.k_update);
        let topo = encoding_topography(pers, &eval_features, &fold.subject_id)
            .with_context(|| format!("encoding topography, subject {}", fold.subject_id))?;

        per_subject.push(SubjectSummary {
            id: fold.subject_id.clone(),
            n_trials: subject.targets.log_narj.len(),
            k_update: transfer_cfg.k_update,
            observed_all: subject.targets.log_narj.clone(),
            personalized_pred: pers.to_vec(),
            prior_pred: prior.to_vec(),
            observed_mean_last: *observed_means.last().unwrap(),
            personalized_mean_last: *personalized_means.last().unwrap(),
            prior_mean_last: *prior_means.last().unwrap(),
            mse: ModelPair {
                personalized: mse(pers, observed),
                prior: mse(prior, observed),
            },
            coherence: ModelPair {
                personalized: coh_pers,
                prior: coh_prior,
            },
        });
        topographies.push(topo);
    }

    // across-subject tests on the evaluation-window means
    let across_personalized = subject_order_permutation_test(
        &personalized_means,
        &observed_means,
        n_perm,
        seeds::derive_tagged(seed, "subject_order:personalized"),
    )
    .context("across-subject test, personalized")?;
    let across_prior = subject_order_permutation_test(
        &prior_means,
        &observed_means,
        n_perm,
        seeds::derive_tagged(seed, "subject_order:prior"),
    )
    .context("across-subject test, prior")?;

    // group-level uniformity of the per-subject coherence p-values
    let p_personalized: Vec<f64> = per_subject
        .iter()
        .map(|s| s.coherence.personalized.p_value)
        .collect();
    let p_prior: Vec<f64> = per_subject.iter().map(|s| s.coherence.prior.p_value).collect();
    let group_personalized = group_uniformity_test(
        &p_personalized,
        GROUP_TEST_BINS,
        config.stats.n_group_samples,
        seeds::derive_tagged(seed, "group:personalized"),
    )
    .context("group test, personalized")?;
    let group_prior = group_uniformity_test(
        &p_prior,
        GROUP_TEST_BINS,
        config.stats.n_group_samples,
        seeds::derive_tagged(seed, "group:prior"),
    )
    .context("group test, prior")?;

    let mean_topo = mean_topography(&topographies)?;
    let heterogeneity = Heterogeneity {
        mean_pairwise_cosine: mean_pairwise_cosine(&topographies)?,
        n_subjects: topographies.len(),
    };

    let mean_coherence = ModelPair {
        personalized: mean(&per_subject.iter().map(|s| s.coherence.personalized.observed_statistic).collect::<Vec<_>>()),
        prior: mean(&per_subject.iter().map(|s| s.coherence.prior.observed_statistic).collect::<Vec<_>>()),
    };

    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            seed,
            config: config.clone(),
            input_hashes,
        },
        across_subject: ModelPair {
            personalized: across_personalized,
            prior: across_prior,
        },
        per_subject,
        group_level: GroupLevel {
            personalized: group_personalized,
            prior: group_prior,
            observed_statistic_reference: "analytic_uniform_cdf".to_string(),
        },
        mean_coherence,
        heterogeneity,
        mean_topography: MeanTopography {
            channel_labels: mean_topo.channel_labels.clone(),
            bands: mean_topo.band_names.iter().map(|b| b.to_string()).collect(),
            values: (0..mean_topo.n_channels())
                .map(|c| mean_topo.values.row(c).to_vec())
                .collect(),
        },
    };

    Ok(AnalysisOutput {
        summary,
        folds,
        topographies,
        mean_topo,
    })
}
