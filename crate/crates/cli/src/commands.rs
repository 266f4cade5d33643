//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use neuroreach_core::features::{
    artifact_removal_hook, build_feature_tensor, common_average_reference,
    extract_all_go_windows, select_channels, ArtifactStrategy,
};
use neuroreach_core::io::{
    read_eeg_bin, read_eeg_csv, read_trajectory_csv, write_feature_tensor,
    write_model, write_targets, write_topography_csv, ModelFile, ModelProvenance, TargetsFile,
};
use neuroreach_core::kinematics::{narj, TrialStatus};
use neuroreach_core::simulate::gen_cohort;
use neuroreach_core::stats::pearson;
use neuroreach_core::transfer::{fit_prior, fit_subject_ridge, RidgeFit};

use crate::analysis::{run_analysis, AnalysisOutput};
use crate::cohort_io::{load_cohort, write_cohort, CohortSubjectFiles};
use crate::config::RunConfig;
use crate::summary::Summary;

// ------------------------------------------------------------------- helpers

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn sha256_str(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Hash every regular file in a cohort directory, keyed by file name.
fn hash_input_dir(dir: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let mut hashes = BTreeMap::new();
    for entry in fs::read_dir(dir)
        .with_context(|| format!("cannot read input directory {}", dir.display()))?
    {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            let name = entry.file_name().to_string_lossy().into_owned();
            hashes.insert(name, sha256_file(&entry.path())?);
        }
    }
    Ok(hashes)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------- narj

/// One line of the smoothness report.
#[derive(Debug, Serialize, Deserialize)]
pub struct NarjRecord {
    pub trial_id: String,
    /// Success/failure classification; absent when only a go-phase
    /// trajectory is available (no planning data or target to validate).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<TrialStatus>,
    pub narj: f64,
    pub log_narj: Option<f64>,
    pub duration_s: f64,
}

pub fn cmd_narj(
    files: &[PathBuf],
    out: Option<&Path>,
    targets_out: Option<&Path>,
    subject: &str,
) -> anyhow::Result<()> {
    if files.is_empty() {
        bail!("no trajectory files given");
    }
    let mut records = Vec::with_capacity(files.len());
    for file in files {
        let traj = read_trajectory_csv(file)?;
        let score = narj(&traj)?;
        let trial_id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        records.push(NarjRecord {
            trial_id,
            status: None,
            narj: score.narj,
            log_narj: score.log_narj,
            duration_s: score.duration_s,
        });
    }
    let json = serde_json::to_string_pretty(&records)?;
    match out {
        Some(path) => {
            fs::write(path, &json).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => println!("{json}"),
    }
    if let Some(path) = targets_out {
        let log_narj: Vec<f64> = records
            .iter()
            .map(|r| {
                r.log_narj.ok_or_else(|| {
                    anyhow::anyhow!("trial {}: zero smoothness score has no log", r.trial_id)
                })
            })
            .collect::<anyhow::Result<_>>()?;
        write_targets(
            path,
            &TargetsFile {
                subject_id: subject.to_string(),
                trial_ids: (1..=records.len() as u64).collect(),
                log_narj,
            },
        )?;
    }
    eprintln!("{} trajectories scored", records.len());
    Ok(())
}

// ------------------------------------------------------------------ simulate

pub fn cmd_simulate(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let cohort_cfg = config.cohort_config()?;
    let cohort = gen_cohort(&cohort_cfg)?;
    write_cohort(out, &cohort)?;
    write_json(&out.join("cohort_config.json"), &cohort_cfg)?;
    eprintln!(
        "cohort written to {}: {} subjects, {} features each",
        out.display(),
        cohort.subjects.len(),
        cohort_cfg.feature_dim()
    );
    Ok(())
}

// ------------------------------------------------------------------ features

pub fn cmd_features(
    input: &Path,
    out: &Path,
    config: &RunConfig,
    channels: Option<&Path>,
) -> anyhow::Result<()> {
    let keep: Option<Vec<String>> = match channels {
        Some(path) => Some(
            fs::read_to_string(path)
                .with_context(|| format!("cannot read channel list {}", path.display()))?
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect(),
        ),
        None => None,
    };

    let mut inputs: Vec<PathBuf> = Vec::new();
    if input.is_dir() {
        for entry in fs::read_dir(input)? {
            let path = entry?.path();
            match path.extension().and_then(|e| e.to_str()) {
                Some("csv") | Some("bin") => inputs.push(path),
                _ => {}
            }
        }
        inputs.sort();
        if inputs.is_empty() {
            bail!("no .csv or .bin EEG files in {}", input.display());
        }
    } else {
        inputs.push(input.to_path_buf());
    }

    fs::create_dir_all(out)?;
    let bands = config.bands.to_band_defs()?;
    let welch = config.welch_params()?;
    for path in &inputs {
        let rec = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => read_eeg_csv(path)?,
            Some("bin") => read_eeg_bin(path)?,
            other => bail!("{}: unsupported extension {other:?}", path.display()),
        };
        let rec = match &keep {
            Some(labels) => select_channels(&rec, labels)?,
            None => rec,
        };
        let rec = common_average_reference(&rec)?;
        let rec = artifact_removal_hook(&rec, ArtifactStrategy::Passthrough)?;
        let windows = extract_all_go_windows(&rec)?;
        if windows.is_empty() {
            bail!("{}: no trial markers in the sidecar", path.display());
        }
        let tensor = build_feature_tensor(&windows, &bands, welch)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "features".into());
        let out_path = out.join(format!("{stem}_features.bin"));
        write_feature_tensor(&out_path, &tensor)?;
        eprintln!(
            "{}: {} trials x {} channels x {} bands -> {}",
            path.display(),
            tensor.n_trials(),
            tensor.n_channels(),
            tensor.n_bands(),
            out_path.display()
        );
    }
    Ok(())
}

// --------------------------------------------------------------------- train

pub fn cmd_train(
    input: &Path,
    out: &Path,
    config: &RunConfig,
    exclude: Option<&str>,
) -> anyhow::Result<()> {
    let cohort = load_cohort(input)?;
    let transfer_cfg = config.transfer_config()?;
    fs::create_dir_all(out)?;
    let provenance = ModelProvenance {
        seed: config.effective_seed(),
        lambda: transfer_cfg.lambda,
        gamma: transfer_cfg.gamma,
        k_update: transfer_cfg.k_update,
    };

    let mut fits: Vec<(String, RidgeFit)> = Vec::new();
    for subject in &cohort {
        let data = subject.to_subject_data();
        let fit = fit_subject_ridge(data.features.view(), data.log_narj.view(), transfer_cfg.lambda)
            .with_context(|| format!("ridge fit, subject {}", subject.subject_id))?;
        write_model(
            &out.join(format!("{}_model.json", subject.subject_id)),
            &ModelFile::from_linear(&fit.model, provenance.clone()),
        )?;
        fits.push((subject.subject_id.clone(), fit));
    }

    let contributors: Vec<&RidgeFit> = fits
        .iter()
        .filter(|(id, _)| Some(id.as_str()) != exclude)
        .map(|(_, fit)| fit)
        .collect();
    let prior = fit_prior(&contributors, &transfer_cfg)?;
    write_model(
        &out.join("prior_model.json"),
        &ModelFile::from_prior(&prior, provenance),
    )?;
    eprintln!(
        "{} subject models + pooled prior ({} contributors) written to {}",
        fits.len(),
        prior.contributing_subjects,
        out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ evaluate

/// Per-subject predictions written by `evaluate` and `pipeline`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionsFile {
    pub subject_id: String,
    pub k_update: usize,
    /// Trial ids of the evaluation trials (after the first `k_update`).
    pub trial_ids: Vec<u64>,
    pub observed: Vec<f64>,
    pub personalized: Vec<f64>,
    pub prior: Vec<f64>,
}

fn write_predictions(
    dir: &Path,
    subjects: &[CohortSubjectFiles],
    output: &AnalysisOutput,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    for (fold, subject) in output.folds.iter().zip(subjects) {
        let k = subject
            .features
            .trial_ids
            .len()
            .saturating_sub(fold.observed.len());
        write_json(
            &dir.join(format!("{}.json", fold.subject_id)),
            &PredictionsFile {
                subject_id: fold.subject_id.clone(),
                k_update: k,
                trial_ids: subject.features.trial_ids[k..].to_vec(),
                observed: fold.observed.to_vec(),
                personalized: fold.personalized_predictions.to_vec(),
                prior: fold.prior_predictions.to_vec(),
            },
        )?;
    }
    Ok(())
}

/// Compact per-subject metrics written by `evaluate`.
#[derive(Debug, Serialize, Deserialize)]
struct EvaluationReport {
    provenance: crate::summary::Provenance,
    k_update: usize,
    subjects: Vec<EvaluationSubject>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EvaluationSubject {
    id: String,
    n_eval_trials: usize,
    mse_personalized: f64,
    mse_prior: f64,
    rho_personalized: f64,
    rho_prior: f64,
}

pub fn cmd_evaluate(input: &Path, out: &Path, config: &RunConfig) -> anyhow::Result<()> {
    let cohort = load_cohort(input)?;
    let hashes = hash_input_dir(input)?;
    let output = run_analysis(&cohort, config, hashes)?;
    fs::create_dir_all(out)?;
    write_predictions(&out.join("predictions"), &cohort, &output)?;

    let report = EvaluationReport {
        provenance: output.summary.provenance.clone(),
        k_update: config.transfer.k_update,
        subjects: output
            .folds
            .iter()
            .zip(&output.summary.per_subject)
            .map(|(fold, s)| EvaluationSubject {
                id: s.id.clone(),
                n_eval_trials: fold.observed.len(),
                mse_personalized: s.mse.personalized,
                mse_prior: s.mse.prior,
                rho_personalized: pearson(
                    fold.personalized_predictions.as_slice().unwrap(),
                    fold.observed.as_slice().unwrap(),
                )
                .unwrap_or(0.0),
                rho_prior: pearson(
                    fold.prior_predictions.as_slice().unwrap(),
                    fold.observed.as_slice().unwrap(),
                )
                .unwrap_or(0.0),
            })
            .collect(),
    };
    write_json(&out.join("evaluation.json"), &report)?;
    eprintln!(
        "evaluation of {} subjects written to {}",
        report.subjects.len(),
        out.display()
    );
    Ok(())
}

// -------------------------------------------------------------------- encode

pub fn cmd_encode(
    input: &Path,
    predictions: &Path,
    out: &Path,
    against_observed: bool,
) -> anyhow::Result<()> {
    use neuroreach_core::encoding::{encoding_topography, mean_topography};

    let cohort = load_cohort(input)?;
    fs::create_dir_all(out)?;
    let mut topos = Vec::new();
    for subject in &cohort {
        let pred_path = predictions.join(format!("{}.json", subject.subject_id));
        let pred: PredictionsFile = serde_json::from_str(
            &fs::read_to_string(&pred_path)
                .with_context(|| format!("cannot read {}", pred_path.display()))?,
        )
        .with_context(|| format!("cannot parse {}", pred_path.display()))?;
        let k = pred.k_update;
        let eval_features = neuroreach_core::features::FeatureTensor {
            trial_ids: subject.features.trial_ids[k..].to_vec(),
            values: subject.features.values.slice(ndarray::s![k.., .., ..]).to_owned(),
            channel_labels: subject.features.channel_labels.clone(),
            band_defs: subject.features.band_defs.clone(),
        };
        let series = if against_observed {
            &pred.observed
        } else {
            &pred.personalized
        };
        let topo = encoding_topography(series, &eval_features, &subject.subject_id)?;
        write_topography_csv(&out.join(format!("{}.csv", subject.subject_id)), &topo)?;
        topos.push(topo);
    }
    let mean = mean_topography(&topos)?;
    write_topography_csv(&out.join("mean.csv"), &mean)?;
    eprintln!(
        "{} topographies + mean written to {}",
        topos.len(),
        out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ pipeline

/// The three statistical test report files.
fn write_test_reports(dir: &Path, summary: &Summary) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("across_subject.json"), &summary.across_subject)?;
    #[derive(Serialize)]
    struct CoherenceRow<'a> {
        id: &'a str,
        personalized: &'a neuroreach_core::stats::PermutationTestResult,
        prior: &'a neuroreach_core::stats::PermutationTestResult,
    }
    let rows: Vec<CoherenceRow<'_>> = summary
        .per_subject
        .iter()
        .map(|s| CoherenceRow {
            id: &s.id,
            personalized: &s.coherence.personalized,
            prior: &s.coherence.prior,
        })
        .collect();
    write_json(&dir.join("coherence_by_subject.json"), &rows)?;
    write_json(&dir.join("group_level.json"), &summary.group_level)?;
    Ok(())
}

pub fn cmd_pipeline(
    input: Option<&Path>,
    simulate: bool,
    out: &Path,
    config: &RunConfig,
) -> anyhow::Result<()> {
    fs::create_dir_all(out)?;

    let (cohort, hashes) = if simulate {
        let cohort_cfg = config.cohort_config()?;
        let generated = gen_cohort(&cohort_cfg)?;
        let cohort_dir = out.join("cohort");
        write_cohort(&cohort_dir, &generated)?;
        write_json(&out.join("cohort_config.json"), &cohort_cfg)?;
        let mut hashes = BTreeMap::new();
        hashes.insert(
            "cohort_config".to_string(),
            sha256_str(&serde_json::to_string(&cohort_cfg)?),
        );
        (load_cohort(&cohort_dir)?, hashes)
    } else {
        let dir = input.ok_or_else(|| {
            anyhow::anyhow!("pipeline needs --input DIR or --simulate")
        })?;
        (load_cohort(dir)?, hash_input_dir(dir)?)
    };

    let output = run_analysis(&cohort, config, hashes)?;

    write_predictions(&out.join("predictions"), &cohort, &output)?;
    write_test_reports(&out.join("tests"), &output.summary)?;

    let topo_dir = out.join("topographies");
    fs::create_dir_all(&topo_dir)?;
    for topo in &output.topographies {
        write_topography_csv(&topo_dir.join(format!("{}.csv", topo.subject_id)), topo)?;
    }
    write_topography_csv(&topo_dir.join("mean.csv"), &output.mean_topo)?;

    let summary_path = out.join("summary.json");
    fs::write(&summary_path, output.summary.to_json()?)
        .with_context(|| format!("cannot write {}", summary_path.display()))?;

    let s = &output.summary;
    eprintln!(
        "pipeline done: {} subjects | across-subject rho {:.3} (p={:.4}) personalized vs {:.3} (p={:.4}) prior | group p {:.3} vs {:.3} | mean coherence {:.3} vs {:.3}",
        s.per_subject.len(),
        s.across_subject.personalized.observed_statistic,
        s.across_subject.personalized.p_value,
        s.across_subject.prior.observed_statistic,
        s.across_subject.prior.p_value,
        s.group_level.personalized.p_value,
        s.group_level.prior.p_value,
        s.mean_coherence.personalized,
        s.mean_coherence.prior,
    );
    eprintln!("summary written to {}", summary_path.display());
    Ok(())
}

// -------------------------------------------------------------------- report

fn write_csv(path: &Path, header: &str, rows: &[String]) -> anyhow::Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn cmd_report(summary_path: &Path, out: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(summary_path)
        .with_context(|| format!("cannot read {}", summary_path.display()))?;
    let summary = Summary::from_json(&text)
        .with_context(|| format!("cannot parse {}", summary_path.display()))?;
    fs::create_dir_all(out)?;

    // 1. performance over trials, averaged across subjects up to the
    //    shortest subject
    let min_trials = summary
        .per_subject
        .iter()
        .map(|s| s.observed_all.len())
        .min()
        .unwrap_or(0);
    let n_subj = summary.per_subject.len();
    let mut rows = Vec::with_capacity(min_trials);
    for t in 0..min_trials {
        let values: Vec<f64> = summary.per_subject.iter().map(|s| s.observed_all[t]).collect();
        let mean = values.iter().sum::<f64>() / n_subj as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_subj as f64;
        rows.push(format!("{},{},{},{}", t + 1, mean, var.sqrt(), n_subj));
    }
    write_csv(
        &out.join("performance_over_trials.csv"),
        "trial,mean_log_narj,std_log_narj,n_subjects",
        &rows,
    )?;

    // 2. predicted vs observed evaluation-window means
    let rows: Vec<String> = summary
        .per_subject
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{}",
                s.id, s.observed_mean_last, s.personalized_mean_last, s.prior_mean_last
            )
        })
        .collect();
    write_csv(
        &out.join("predicted_vs_observed.csv"),
        "subject,observed_mean,personalized_mean,prior_mean",
        &rows,
    )?;

    // 3. coherence per subject
    let rows: Vec<String> = summary
        .per_subject
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{},{}",
                s.id,
                s.coherence.personalized.observed_statistic,
                s.coherence.personalized.p_value,
                s.coherence.prior.observed_statistic,
                s.coherence.prior.p_value
            )
        })
        .collect();
    write_csv(
        &out.join("coherence_by_subject.csv"),
        "subject,personalized_coherence,personalized_p,prior_coherence,prior_p",
        &rows,
    )?;

    // 4. per-trial prediction traces
    let mut rows = Vec::new();
    for s in &summary.per_subject {
        let offset = s.k_update;
        for (i, ((obs, pers), prior)) in s.observed_all[offset..]
            .iter()
            .zip(&s.personalized_pred)
            .zip(&s.prior_pred)
            .enumerate()
        {
            rows.push(format!("{},{},{},{},{}", s.id, offset + i + 1, obs, pers, prior));
        }
    }
    write_csv(
        &out.join("trial_predictions.csv"),
        "subject,trial,observed,personalized,prior",
        &rows,
    )?;

    // 5. mean topography
    let band_header = summary.mean_topography.bands.join(",");
    let rows: Vec<String> = summary
        .mean_topography
        .channel_labels
        .iter()
        .zip(&summary.mean_topography.values)
        .map(|(label, values)| {
            let mut row = label.clone();
            for v in values {
                row.push(',');
                row.push_str(&v.to_string());
            }
            row
        })
        .collect();
    write_csv(
        &out.join("mean_topography.csv"),
        &format!("channel,{band_header}"),
        &rows,
    )?;

    // human-readable digest
    println!("subjects: {}", summary.per_subject.len());
    println!(
        "across-subject |rho|: personalized {:.3} (p = {:.4}), prior {:.3} (p = {:.4})",
        summary.across_subject.personalized.observed_statistic,
        summary.across_subject.personalized.p_value,
        summary.across_subject.prior.observed_statistic,
        summary.across_subject.prior.p_value
    );
    println!(
        "mean coherence: personalized {:.3}, prior {:.3}",
        summary.mean_coherence.personalized, summary.mean_coherence.prior
    );
    println!(
        "group-level uniformity p: personalized {:.3}, prior {:.3}",
        summary.group_level.personalized.p_value, summary.group_level.prior.p_value
    );
    println!(
        "topography heterogeneity (mean pairwise cosine over {} subjects): {:.3}",
        summary.heterogeneity.n_subjects, summary.heterogeneity.mean_pairwise_cosine
    );
    println!("5 CSV files written to {}", out.display());
    Ok(())
}

