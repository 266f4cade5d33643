//! File formats shared by the CLI, the simulator, and external tooling.
//!
//! - Trajectories: CSV with header `t,x,y,z` (seconds, meters, monotone t).
//! - EEG: CSV (header row of channel labels, one sample per line) or flat
//!   binary (one frame per sample, each frame `n_channels` little-endian
//!   f32 values in label order), both with a JSON sidecar carrying sample
//!   rate, labels, and trial markers.
//! - Feature tensors: flat binary of little-endian f64 values, trial-major
//!   with the channel-major per-trial flattening, plus a JSON sidecar.
//! - Models: a single JSON schema covering plain, prior, and personalized
//!   models.
//! - Topographies: one CSV per subject, rows = channels, columns = bands.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{EegRecording, FeatureTensor, TrialMarker, FLATTENING_ORDER};
use crate::kinematics::Trajectory;
use crate::signal::{BandDefinition, BandName};
use crate::transfer::{
    LinearModel, PersonalizedModel, PriorModel, PriorSigma, SigmaEncoding, Standardization,
};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

// ---------------------------------------------------------------- trajectory

/// Relative jitter tolerated between time steps before a file is rejected
/// as non-uniformly sampled.
const DT_JITTER_TOLERANCE: f64 = 1e-3;

/// Read a `t,x,y,z` CSV. The sample rate is inferred from the time column,
/// which must be strictly monotone and uniform to within a small jitter.
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?;
    let header_fields: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if header_fields != ["t", "x", "y", "z"] {
        return Err(parse_err(
            path,
            1,
            format!("expected header t,x,y,z, got {header:?}"),
        ));
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let mut values = [0.0f64; 4];
        for (i, field) in fields.iter().enumerate() {
            values[i] = field.parse::<f64>().map_err(|e| {
                parse_err(path, line_no, format!("bad number {field:?}: {e}"))
            })?;
        }
        if let Some(last) = times.last() {
            if values[0] <= *last {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("time column not strictly increasing at t={}", values[0]),
                ));
            }
        }
        times.push(values[0]);
        samples.push([values[1], values[2], values[3]]);
    }
    if samples.len() < Trajectory::MIN_SAMPLES {
        return Err(format_err(
            path,
            format!(
                "{} samples, need at least {}",
                samples.len(),
                Trajectory::MIN_SAMPLES
            ),
        ));
    }

    let span = times[times.len() - 1] - times[0];
    let dt = span / (times.len() - 1) as f64;
    for (i, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if ((step - dt) / dt).abs() > DT_JITTER_TOLERANCE {
            return Err(parse_err(
                path,
                i + 3,
                format!("non-uniform sampling: step {step} vs mean {dt}"),
            ));
        }
    }
    Trajectory::new(1.0 / dt, times[0], samples)
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>, s: String| -> Result<()> {
        w.write_all(s.as_bytes()).map_err(|e| io_err(path, e))
    };
    write(&mut w, "t,x,y,z\n".to_string())?;
    let dt = traj.dt();
    for (i, p) in traj.samples().iter().enumerate() {
        write(
            &mut w,
            format!("{},{},{},{}\n", traj.t0() + i as f64 * dt, p[0], p[1], p[2]),
        )?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

// ----------------------------------------------------------------------- EEG

/// Sidecar metadata for EEG files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EegSidecar {
    pub sample_rate: f64,
    /// Required for binary files; optional for CSV (the header wins).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default)]
    pub markers: Vec<TrialMarker>,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    std::path::PathBuf::from(p)
}

pub fn read_eeg_sidecar(data_path: &Path) -> Result<EegSidecar> {
    let path = sidecar_path(data_path);
    let content = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&content).map_err(|e| format_err(&path, e.to_string()))
}

fn write_eeg_sidecar(data_path: &Path, sidecar: &EegSidecar) -> Result<()> {
    let path = sidecar_path(data_path);
    let json = serde_json::to_string_pretty(sidecar)
        .map_err(|e| format_err(&path, e.to_string()))?;
    fs::write(&path, json).map_err(|e| io_err(&path, e))
}

/// Read an EEG CSV (header row of channel labels, one sample per line) and
/// its `<file>.json` sidecar.
pub fn read_eeg_csv(path: &Path) -> Result<EegRecording> {
    let sidecar = read_eeg_sidecar(path)?;
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?;
    let labels: Vec<String> = header.trim().split(',').map(|s| s.trim().to_string()).collect();
    if labels.is_empty() || labels.iter().any(|l| l.is_empty()) {
        return Err(parse_err(path, 1, "empty channel label in header"));
    }
    if let Some(sidecar_labels) = &sidecar.labels {
        if *sidecar_labels != labels {
            return Err(format_err(
                path,
                "sidecar labels disagree with the CSV header",
            ));
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != labels.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {} fields, got {}", labels.len(), fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(fields.len());
        for field in fields {
            row.push(field.parse::<f64>().map_err(|e| {
                parse_err(path, line_no, format!("bad number {field:?}: {e}"))
            })?);
        }
        rows.push(row);
    }
    let n_samples = rows.len();
    let mut data = Array2::<f64>::zeros((labels.len(), n_samples));
    for (s, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            data[[c, s]] = *v;
        }
    }
    EegRecording::new(sidecar.sample_rate, labels, data, sidecar.markers)
}

pub fn write_eeg_csv(path: &Path, rec: &EegRecording) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut out = rec.channel_labels().join(",");
    out.push('\n');
    w.write_all(out.as_bytes()).map_err(|e| io_err(path, e))?;
    for s in 0..rec.n_samples() {
        let mut line = String::new();
        for c in 0..rec.n_channels() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&format!("{}", rec.data()[[c, s]]));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    write_eeg_sidecar(
        path,
        &EegSidecar {
            sample_rate: rec.sample_rate(),
            labels: None,
            markers: rec.trial_markers().to_vec(),
        },
    )
}

/// Read flat binary EEG: one frame per sample, each frame `n_channels`
/// little-endian f32 values in sidecar label order.
pub fn read_eeg_bin(path: &Path) -> Result<EegRecording> {
    let sidecar = read_eeg_sidecar(path)?;
    let labels = sidecar
        .labels
        .clone()
        .ok_or_else(|| format_err(path, "binary EEG needs labels in the sidecar"))?;
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let n_ch = labels.len();
    if n_ch == 0 {
        return Err(format_err(path, "sidecar has no labels"));
    }
    let frame_bytes = n_ch * 4;
    if bytes.len() % frame_bytes != 0 {
        return Err(format_err(
            path,
            format!(
                "file size {} is not a multiple of the frame size {frame_bytes}",
                bytes.len()
            ),
        ));
    }
    let n_samples = bytes.len() / frame_bytes;
    let mut data = Array2::<f64>::zeros((n_ch, n_samples));
    for s in 0..n_samples {
        for c in 0..n_ch {
            let off = (s * n_ch + c) * 4;
            let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            data[[c, s]] = f64::from(v);
        }
    }
    EegRecording::new(sidecar.sample_rate, labels, data, sidecar.markers)
}

pub fn write_eeg_bin(path: &Path, rec: &EegRecording) -> Result<()> {
    let mut bytes = Vec::with_capacity(rec.n_samples() * rec.n_channels() * 4);
    for s in 0..rec.n_samples() {
        for c in 0..rec.n_channels() {
            bytes.extend_from_slice(&(rec.data()[[c, s]] as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    write_eeg_sidecar(
        path,
        &EegSidecar {
            sample_rate: rec.sample_rate(),
            labels: Some(rec.channel_labels().to_vec()),
            markers: rec.trial_markers().to_vec(),
        },
    )
}

// ------------------------------------------------------------ feature tensor

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: BandName,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub trial_ids: Vec<u64>,
    pub labels: Vec<String>,
    pub bands: Vec<BandSpec>,
    pub flattening_order: String,
    pub dtype: String,
}

/// Write a feature tensor as flat binary (little-endian f64, trial-major,
/// channel-major within each trial) plus its sidecar.
pub fn write_feature_tensor(path: &Path, tensor: &FeatureTensor) -> Result<()> {
    let flat = tensor.flatten_trials();
    let mut bytes = Vec::with_capacity(flat.len() * 8);
    for v in flat.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    let sidecar = FeatureSidecar {
        trial_ids: tensor.trial_ids.clone(),
        labels: tensor.channel_labels.clone(),
        bands: tensor
            .band_defs
            .iter()
            .map(|b| BandSpec {
                name: b.name,
                lo_hz: b.lo_hz,
                hi_hz: b.hi_hz,
            })
            .collect(),
        flattening_order: FLATTENING_ORDER.to_string(),
        dtype: "f64_le".to_string(),
    };
    let sidecar_file = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| format_err(&sidecar_file, e.to_string()))?;
    fs::write(&sidecar_file, json).map_err(|e| io_err(&sidecar_file, e))
}

pub fn read_feature_tensor(path: &Path) -> Result<FeatureTensor> {
    let sidecar_file = sidecar_path(path);
    let sidecar: FeatureSidecar = serde_json::from_str(
        &fs::read_to_string(&sidecar_file).map_err(|e| io_err(&sidecar_file, e))?,
    )
    .map_err(|e| format_err(&sidecar_file, e.to_string()))?;
    if sidecar.flattening_order != FLATTENING_ORDER {
        return Err(format_err(
            &sidecar_file,
            format!(
                "unsupported flattening order {:?}, expected {FLATTENING_ORDER:?}",
                sidecar.flattening_order
            ),
        ));
    }
    if sidecar.dtype != "f64_le" {
        return Err(format_err(
            &sidecar_file,
            format!("unsupported dtype {:?}", sidecar.dtype),
        ));
    }
    let bands: Vec<BandDefinition> = sidecar
        .bands
        .iter()
        .map(|b| BandDefinition::new(b.name, b.lo_hz, b.hi_hz))
        .collect::<Result<_>>()?;

    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let n_trials = sidecar.trial_ids.len();
    let n_ch = sidecar.labels.len();
    let n_bands = bands.len();
    let expected = n_trials * n_ch * n_bands * 8;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("file has {} bytes, sidecar implies {expected}", bytes.len()),
        ));
    }
    let mut values = Array3::<f64>::zeros((n_trials, n_ch, n_bands));
    for t in 0..n_trials {
        for c in 0..n_ch {
            for b in 0..n_bands {
                let off = ((t * n_ch + c) * n_bands + b) * 8;
                values[[t, c, b]] =
                    f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            }
        }
    }
    Ok(FeatureTensor {
        trial_ids: sidecar.trial_ids,
        values,
        channel_labels: sidecar.labels,
        band_defs: bands,
    })
}

// ------------------------------------------------------------------- targets

/// Per-subject target series stored next to the feature tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetsFile {
    pub subject_id: String,
    pub trial_ids: Vec<u64>,
    pub log_narj: Vec<f64>,
}

pub fn write_targets(path: &Path, targets: &TargetsFile) -> Result<()> {
    let json = serde_json::to_string_pretty(targets)
        .map_err(|e| format_err(path, e.to_string()))?;
    fs::write(path, json).map_err(|e| io_err(path, e))
}

pub fn read_targets(path: &Path) -> Result<TargetsFile> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&content).map_err(|e| format_err(path, e.to_string()))
}

// -------------------------------------------------------------------- models

/// Serialized prior section of a model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorSection {
    pub mu: Vec<f64>,
    pub sigma_encoding: SigmaEncoding,
    /// Length F for `diag`, F·F row-major for `dense`.
    pub sigma: Vec<f64>,
    pub noise_variance: f64,
    pub intercept: f64,
    pub contributing_subjects: usize,
}

/// Provenance block every model file carries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub seed: u64,
    pub lambda: f64,
    pub gamma: f64,
    pub k_update: usize,
}

/// On-disk model schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub feature_dim: usize,
    pub flattening_order: String,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardization: Standardization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSection>,
    pub provenance: ModelProvenance,
}

impl ModelFile {
    pub fn from_linear(model: &LinearModel, provenance: ModelProvenance) -> Self {
        Self {
            feature_dim: model.feature_dim(),
            flattening_order: FLATTENING_ORDER.to_string(),
            weights: model.weights.to_vec(),
            intercept: model.intercept,
            standardization: model.standardization.clone(),
            prior: None,
            provenance,
        }
    }

    /// A prior model file: the predictable part is the prior-mean linear
    /// model, the prior block carries the full pooled state.
    pub fn from_prior(prior: &PriorModel, provenance: ModelProvenance) -> Self {
        let linear = prior.as_linear_model();
        let sigma = match &prior.sigma {
            PriorSigma::Diagonal(d) => d.to_vec(),
            PriorSigma::Dense(m) => m.iter().copied().collect(),
        };
        Self {
            feature_dim: prior.feature_dim(),
            flattening_order: FLATTENING_ORDER.to_string(),
            weights: linear.weights.to_vec(),
            intercept: linear.intercept,
            standardization: linear.standardization,
            prior: Some(PriorSection {
                mu: prior.mu.to_vec(),
                sigma_encoding: prior.sigma.encoding(),
                sigma,
                noise_variance: prior.noise_variance,
                intercept: prior.intercept,
                contributing_subjects: prior.contributing_subjects,
            }),
            provenance,
        }
    }

    pub fn from_personalized(model: &PersonalizedModel, provenance: ModelProvenance) -> Self {
        Self::from_linear(&model.base, provenance)
    }

    pub fn to_linear(&self) -> Result<LinearModel> {
        if self.standardization.dim() != self.feature_dim
            || self.weights.len() != self.feature_dim
        {
            return Err(Error::DimensionMismatch(format!(
                "model file: {} weights, {} standardization entries, feature_dim {}",
                self.weights.len(),
                self.standardization.dim(),
                self.feature_dim
            )));
        }
        Ok(LinearModel {
            weights: Array1::from_vec(self.weights.clone()),
            intercept: self.intercept,
            standardization: self.standardization.clone(),
        })
    }

    pub fn to_prior(&self) -> Result<PriorModel> {
        let section = self.prior.as_ref().ok_or_else(|| {
            Error::InvalidParameter("model file has no prior section".into())
        })?;
        let f = self.feature_dim;
        if section.mu.len() != f {
            return Err(Error::DimensionMismatch(format!(
                "prior mu has {} entries, feature_dim {f}",
                section.mu.len()
            )));
        }
        let sigma = match section.sigma_encoding {
            SigmaEncoding::Diag => {
                if section.sigma.len() != f {
                    return Err(Error::DimensionMismatch(format!(
                        "diag sigma has {} entries, expected {f}",
                        section.sigma.len()
                    )));
                }
                PriorSigma::Diagonal(Array1::from_vec(section.sigma.clone()))
            }
            SigmaEncoding::Dense => {
                if section.sigma.len() != f * f {
                    return Err(Error::DimensionMismatch(format!(
                        "dense sigma has {} entries, expected {}",
                        section.sigma.len(),
                        f * f
                    )));
                }
                PriorSigma::Dense(
                    Array2::from_shape_vec((f, f), section.sigma.clone())
                        .expect("length checked above"),
                )
            }
        };
        Ok(PriorModel {
            mu: Array1::from_vec(section.mu.clone()),
            sigma,
            noise_variance: section.noise_variance,
            intercept: section.intercept,
            contributing_subjects: section.contributing_subjects,
        })
    }
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    let json = serde_json::to_string_pretty(model)
        .map_err(|e| format_err(path, e.to_string()))?;
    fs::write(path, json).map_err(|e| io_err(path, e))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&content).map_err(|e| format_err(path, e.to_string()))
}

// -------------------------------------------------------------- topographies

/// Write one topography as CSV: rows = channel labels, columns = band names.
pub fn write_topography_csv(
    path: &Path,
    topo: &crate::encoding::EncodingTopography,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("channel");
    for band in &topo.band_names {
        header.push(',');
        header.push_str(band.as_str());
    }
    header.push('\n');
    w.write_all(header.as_bytes()).map_err(|e| io_err(path, e))?;
    for (c, label) in topo.channel_labels.iter().enumerate() {
        let mut line = label.clone();
        for b in 0..topo.n_bands() {
            line.push(',');
            line.push_str(&format!("{}", topo.values[[c, b]]));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
