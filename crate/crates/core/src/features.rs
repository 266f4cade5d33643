//! EEG feature extraction: from raw multichannel recordings to per-trial
//! channel × band log-bandpower tensors.
//!
//! The canonical configuration keeps 118 channels and the five canonical
//! bands, giving 590 features per trial. Flattening order is channel-major
//! (`c * n_bands + b`) everywhere; model weights are only portable across
//! files that agree on it.

use ndarray::{Array2, Array3, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{log_bandpower, BandDefinition, WelchParams};

/// The identifier recorded in flattening-order metadata.
pub const FLATTENING_ORDER: &str = "channel_major";

/// Names of the 118-channel subset shipped with the crate (10-5 system).
pub fn canonical_channels() -> Vec<String> {
    include_str!("../data/channels_118.txt")
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Marker for one trial inside a continuous recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialMarker {
    pub trial_id: u64,
    /// Sample index of trial onset (start of the task baseline).
    pub onset_sample: usize,
}

/// A multichannel EEG recording: channels × samples plus metadata.
#[derive(Debug, Clone)]
pub struct EegRecording {
    sample_rate: f64,
    channel_labels: Vec<String>,
    /// channels × samples, microvolts.
    data: Array2<f64>,
    trial_markers: Vec<TrialMarker>,
    provenance: Vec<String>,
}

impl EegRecording {
    pub fn new(
        sample_rate: f64,
        channel_labels: Vec<String>,
        data: Array2<f64>,
        trial_markers: Vec<TrialMarker>,
    ) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample_rate must be positive, got {sample_rate}"
            )));
        }
        if channel_labels.len() != data.nrows() {
            return Err(Error::InconsistentLayout(format!(
                "{} labels for {} data rows",
                channel_labels.len(),
                data.nrows()
            )));
        }
        {
            let mut sorted = channel_labels.clone();
            sorted.sort();
            for pair in sorted.windows(2) {
                if pair[0] == pair[1] {
                    return Err(Error::InconsistentLayout(format!(
                        "duplicate channel label {}",
                        pair[0]
                    )));
                }
            }
        }
        for m in &trial_markers {
            if m.onset_sample >= data.ncols() {
                return Err(Error::InvalidParameter(format!(
                    "trial {} onset sample {} beyond recording length {}",
                    m.trial_id,
                    m.onset_sample,
                    data.ncols()
                )));
            }
        }
        Ok(Self {
            sample_rate,
            channel_labels,
            data,
            trial_markers,
            provenance: Vec::new(),
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn trial_markers(&self) -> &[TrialMarker] {
        &self.trial_markers
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn channel(&self, idx: usize) -> ArrayView1<'_, f64> {
        self.data.row(idx)
    }

    /// Processing steps applied so far, oldest first.
    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    fn with_provenance(mut self, entry: String) -> Self {
        self.provenance.push(entry);
        self
    }
}

/// Go-phase extraction window, seconds relative to trial onset. 7.5 s is the
/// earliest possible go onset and the phase lasts at most 10 s.
pub const GO_WINDOW_START_S: f64 = 7.5;
pub const GO_WINDOW_LEN_S: f64 = 10.0;

/// Artifact-removal strategies. Component-based cleaning needs manual
/// review, so the only built-in strategy passes data through unchanged and
/// records itself in the provenance for downstream transparency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactStrategy {
    Passthrough,
}

impl std::str::FromStr for ArtifactStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passthrough" => Ok(ArtifactStrategy::Passthrough),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

/// Restrict and reorder channels to exactly the `keep` list.
pub fn select_channels(rec: &EegRecording, keep: &[String]) -> Result<EegRecording> {
    let mut rows = Vec::with_capacity(keep.len());
    for label in keep {
        let idx = rec
            .channel_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownChannel(label.clone()))?;
        rows.push(idx);
    }
    let mut data = Array2::<f64>::zeros((keep.len(), rec.n_samples()));
    for (out_row, src_row) in rows.iter().enumerate() {
        data.row_mut(out_row).assign(&rec.data.row(*src_row));
    }
    let mut out = EegRecording {
        sample_rate: rec.sample_rate,
        channel_labels: keep.to_vec(),
        data,
        trial_markers: rec.trial_markers.clone(),
        provenance: rec.provenance.clone(),
    };
    out.provenance.push(format!("select_channels={}", keep.len()));
    Ok(out)
}

/// Subtract the cross-channel mean from every sample column.
pub fn common_average_reference(rec: &EegRecording) -> Result<EegRecording> {
    if rec.n_channels() < 2 {
        return Err(Error::InvalidParameter(
            "common average reference needs at least 2 channels".into(),
        ));
    }
    let mut data = rec.data.clone();
    let n_ch = data.nrows() as f64;
    for mut col in data.columns_mut() {
        let mean = col.sum() / n_ch;
        col.mapv_inplace(|v| v - mean);
    }
    Ok(EegRecording {
        sample_rate: rec.sample_rate,
        channel_labels: rec.channel_labels.clone(),
        data,
        trial_markers: rec.trial_markers.clone(),
        provenance: rec.provenance.clone(),
    }
    .with_provenance("common_average_reference".into()))
}

/// Cut the go-phase window of one trial: `[onset + 7.5 s, onset + 17.5 s)`.
pub fn extract_go_window(rec: &EegRecording, trial_id: u64) -> Result<EegRecording> {
    let marker = rec
        .trial_markers
        .iter()
        .find(|m| m.trial_id == trial_id)
        .ok_or_else(|| Error::InvalidParameter(format!("no marker for trial {trial_id}")))?;
    let start = marker.onset_sample + (GO_WINDOW_START_S * rec.sample_rate).round() as usize;
    let len = (GO_WINDOW_LEN_S * rec.sample_rate).round() as usize;
    let end = start + len;
    if end > rec.n_samples() {
        return Err(Error::WindowOutOfBounds {
            trial_id,
            start,
            end,
            len: rec.n_samples(),
        });
    }
    let data = rec.data.slice(ndarray::s![.., start..end]).to_owned();
    Ok(EegRecording {
        sample_rate: rec.sample_rate,
        channel_labels: rec.channel_labels.clone(),
        data,
        trial_markers: vec![],
        provenance: rec.provenance.clone(),
    }
    .with_provenance(format!("go_window=trial:{trial_id}")))
}

/// Go-phase windows of every marked trial, in marker order.
pub fn extract_all_go_windows(rec: &EegRecording) -> Result<Vec<(u64, EegRecording)>> {
    rec.trial_markers
        .iter()
        .map(|m| Ok((m.trial_id, extract_go_window(rec, m.trial_id)?)))
        .collect()
}

/// Extension point for artifact removal. `Passthrough` returns the data
/// bit-identical and records the strategy tag in the provenance.
pub fn artifact_removal_hook(
    rec: &EegRecording,
    strategy: ArtifactStrategy,
) -> Result<EegRecording> {
    match strategy {
        ArtifactStrategy::Passthrough => Ok(rec
            .clone()
            .with_provenance("artifact_removal=passthrough".into())),
    }
}

/// Per-trial log-bandpower features: trials × channels × bands.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub trial_ids: Vec<u64>,
    /// trials × channels × bands, natural-log power.
    pub values: Array3<f64>,
    pub channel_labels: Vec<String>,
    pub band_defs: Vec<BandDefinition>,
}

impl FeatureTensor {
    pub fn n_trials(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn n_channels(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn n_bands(&self) -> usize {
        self.values.shape()[2]
    }

    /// Features per trial after flattening.
    pub fn feature_dim(&self) -> usize {
        self.n_channels() * self.n_bands()
    }

    /// Flatten to trials × (channels · bands), channel-major.
    pub fn flatten_trials(&self) -> Array2<f64> {
        let (t, c, b) = (self.n_trials(), self.n_channels(), self.n_bands());
        let mut out = Array2::<f64>::zeros((t, c * b));
        for ti in 0..t {
            for ci in 0..c {
                for bi in 0..b {
                    out[[ti, ci * b + bi]] = self.values[[ti, ci, bi]];
                }
            }
        }
        out
    }

    /// Map a flat feature index back to (channel, band).
    pub fn unflatten_index(&self, flat: usize) -> (usize, usize) {
        (flat / self.n_bands(), flat % self.n_bands())
    }
}

/// Compute the feature tensor from per-trial go-phase windows.
///
/// All windows must share channel layout and sample rate; trial order is
/// preserved.
pub fn build_feature_tensor(
    windows: &[(u64, EegRecording)],
    bands: &[BandDefinition],
    welch: WelchParams,
) -> Result<FeatureTensor> {
    if bands.is_empty() {
        return Err(Error::InvalidParameter("no bands given".into()));
    }
    let (channel_labels, sample_rate) = match windows.first() {
        Some((_, w)) => (w.channel_labels.clone(), w.sample_rate),
        None => {
            return Ok(FeatureTensor {
                trial_ids: vec![],
                values: Array3::zeros((0, 0, bands.len())),
                channel_labels: vec![],
                band_defs: bands.to_vec(),
            })
        }
    };
    for (id, w) in windows {
        if w.channel_labels != channel_labels {
            return Err(Error::InconsistentLayout(format!(
                "trial {id} has a different channel layout"
            )));
        }
        if w.sample_rate != sample_rate {
            return Err(Error::InconsistentLayout(format!(
                "trial {id} has sample rate {} vs {}",
                w.sample_rate, sample_rate
            )));
        }
    }

    let n_trials = windows.len();
    let n_ch = channel_labels.len();
    let mut values = Array3::<f64>::zeros((n_trials, n_ch, bands.len()));
    for (ti, (_, w)) in windows.iter().enumerate() {
        for ci in 0..n_ch {
            let x = w.channel(ci).to_vec();
            for (bi, band) in bands.iter().enumerate() {
                values[[ti, ci, bi]] = log_bandpower(&x, sample_rate, band, welch)?;
            }
        }
    }
    Ok(FeatureTensor {
        trial_ids: windows.iter().map(|(id, _)| *id).collect(),
        values,
        channel_labels,
        band_defs: bands.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn toy_recording(n_ch: usize, n_samples: usize) -> EegRecording {
        let data = Array2::from_shape_fn((n_ch, n_samples), |(c, s)| {
            ((c * 31 + s * 7) % 13) as f64 - 6.0
        });
        let labels = (0..n_ch).map(|i| format!("ch{i:03}")).collect();
        EegRecording::new(500.0, labels, data, vec![]).unwrap()
    }

    #[test]
    fn canonical_channel_list_has_118_unique_names() {
        let chans = canonical_channels();
        assert_eq!(chans.len(), 118);
        let mut sorted = chans.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 118);
    }

    #[test]
    fn select_all_channels_is_identity() {
        let rec = toy_recording(4, 50);
        let keep: Vec<String> = rec.channel_labels().to_vec();
        let out = select_channels(&rec, &keep).unwrap();
        assert_eq!(out.channel_labels(), rec.channel_labels());
        assert_eq!(out.data(), rec.data());
    }

    #[test]
    fn select_channels_reorders_rows() {
        let rec = toy_recording(4, 20);
        let keep = vec!["ch002".to_string(), "ch000".to_string()];
        let out = select_channels(&rec, &keep).unwrap();
        assert_eq!(out.n_channels(), 2);
        assert_eq!(out.channel(0), rec.channel(2));
        assert_eq!(out.channel(1), rec.channel(0));
    }

    #[test]
    fn select_unknown_channel_is_an_error() {
        let rec = toy_recording(3, 20);
        let err = select_channels(&rec, &["nope".to_string()]).unwrap_err();
        assert!(matches!(err, Error::UnknownChannel(l) if l == "nope"));
    }

    #[test]
    fn car_leaves_antisymmetric_pair_unchanged() {
        let mut data = Array2::zeros((2, 30));
        for s in 0..30 {
            let v = (s as f64 * 0.3).sin();
            data[[0, s]] = v;
            data[[1, s]] = -v;
        }
        let rec =
            EegRecording::new(500.0, vec!["a".into(), "b".into()], data.clone(), vec![]).unwrap();
        let out = common_average_reference(&rec).unwrap();
        assert_eq!(out.data(), &data);
    }

    #[test]
    fn car_zeroes_identical_channels_and_column_means() {
        let base: Vec<f64> = (0..40).map(|s| (s as f64).cos()).collect();
        let data = Array2::from_shape_fn((3, 40), |(_, s)| base[s]);
        let rec = EegRecording::new(
            500.0,
            vec!["a".into(), "b".into(), "c".into()],
            data,
            vec![],
        )
        .unwrap();
        let out = common_average_reference(&rec).unwrap();
        assert!(out.data().iter().all(|v| v.abs() < 1e-12));

        // arbitrary matrix: column means vanish
        let rec = toy_recording(4, 100);
        let out = common_average_reference(&rec).unwrap();
        for col in out.data().columns() {
            assert_abs_diff_eq!(col.sum() / 4.0, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn car_is_idempotent() {
        let rec = toy_recording(5, 64);
        let once = common_average_reference(&rec).unwrap();
        let twice = common_average_reference(&once).unwrap();
        for (a, b) in once.data().iter().zip(twice.data().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn car_rejects_single_channel() {
        let rec = EegRecording::new(
            500.0,
            vec!["only".into()],
            Array2::zeros((1, 10)),
            vec![],
        )
        .unwrap();
        assert!(common_average_reference(&rec).is_err());
    }

    fn recording_with_trials(n_samples: usize, onsets: &[usize]) -> EegRecording {
        let data = Array2::from_shape_fn((2, n_samples), |(c, s)| (c + s) as f64);
        let markers = onsets
            .iter()
            .enumerate()
            .map(|(i, o)| TrialMarker {
                trial_id: i as u64 + 1,
                onset_sample: *o,
            })
            .collect();
        EegRecording::new(500.0, vec!["a".into(), "b".into()], data, markers).unwrap()
    }

    #[test]
    fn go_window_starts_at_7500ms() {
        let rec = recording_with_trials(9000, &[0]);
        let win = extract_go_window(&rec, 1).unwrap();
        assert_eq!(win.n_samples(), 5000);
        // window [3750, 8750); data value at column s is c + s
        assert_eq!(win.data()[[0, 0]], 3750.0);
        assert_eq!(win.data()[[0, 4999]], 8749.0);
    }

    #[test]
    fn go_window_out_of_bounds_is_an_error() {
        let rec = recording_with_trials(8000, &[0]);
        assert!(matches!(
            extract_go_window(&rec, 1),
            Err(Error::WindowOutOfBounds { .. })
        ));
    }

    #[test]
    fn back_to_back_trials_have_disjoint_windows() {
        // onsets 10000 samples apart: windows [3750,8750) and [13750,18750)
        let rec = recording_with_trials(20000, &[0, 10000]);
        let wins = extract_all_go_windows(&rec).unwrap();
        assert_eq!(wins.len(), 2);
        assert_eq!(wins[0].1.n_samples(), 5000);
        assert_eq!(wins[1].1.n_samples(), 5000);
        assert_eq!(wins[0].1.data()[[0, 4999]], 8749.0);
        assert_eq!(wins[1].1.data()[[0, 0]], 13750.0);
    }

    #[test]
    fn passthrough_hook_keeps_data_and_records_provenance() {
        let rec = toy_recording(3, 50);
        let out = artifact_removal_hook(&rec, ArtifactStrategy::Passthrough).unwrap();
        assert_eq!(out.data(), rec.data());
        assert!(out
            .provenance()
            .iter()
            .any(|p| p == "artifact_removal=passthrough"));
    }

    #[test]
    fn unknown_strategy_name_is_an_error() {
        let err = "ica".parse::<ArtifactStrategy>().unwrap_err();
        assert!(matches!(err, Error::UnknownStrategy(s) if s == "ica"));
    }

    #[test]
    fn feature_tensor_separates_active_and_silent_channels() {
        let fs = 500.0;
        let n = 2500;
        let mut data = Array2::<f64>::zeros((2, n));
        for s in 0..n {
            data[[0, s]] = (2.0 * std::f64::consts::PI * 10.0 * s as f64 / fs).sin();
        }
        let win = EegRecording::new(fs, vec!["act".into(), "sil".into()], data, vec![]).unwrap();
        let tensor = build_feature_tensor(
            &[(1, win)],
            &BandDefinition::canonical_five(),
            WelchParams::eeg_default(),
        )
        .unwrap();
        let alpha_active = tensor.values[[0, 0, 2]];
        let alpha_silent = tensor.values[[0, 1, 2]];
        assert!(
            alpha_active - alpha_silent >= 10.0,
            "active {alpha_active} vs silent {alpha_silent}"
        );
    }

    #[test]
    fn empty_window_list_gives_empty_tensor() {
        let tensor = build_feature_tensor(
            &[],
            &BandDefinition::canonical_five(),
            WelchParams::eeg_default(),
        )
        .unwrap();
        assert_eq!(tensor.n_trials(), 0);
        assert_eq!(tensor.n_bands(), 5);
    }

    #[test]
    fn canonical_run_is_590_dimensional() {
        let labels = canonical_channels();
        let data = Array2::<f64>::zeros((118, 600));
        let win = EegRecording::new(500.0, labels, data, vec![]).unwrap();
        let tensor = build_feature_tensor(
            &[(1, win.clone()), (2, win)],
            &BandDefinition::canonical_five(),
            WelchParams::eeg_default(),
        )
        .unwrap();
        assert_eq!(tensor.feature_dim(), 590);
        assert_eq!(tensor.flatten_trials().shape(), &[2, 590]);
        assert!(tensor.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn inconsistent_layouts_are_rejected() {
        let a = toy_recording(3, 600);
        let mut b = toy_recording(3, 600);
        b.channel_labels[0] = "other".into();
        let err = build_feature_tensor(
            &[(1, a), (2, b)],
            &BandDefinition::canonical_five(),
            WelchParams::eeg_default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentLayout(_)));
    }

    #[test]
    fn flattening_is_channel_major() {
        let labels = vec!["c0".to_string(), "c1".to_string()];
        let mut values = Array3::<f64>::zeros((1, 2, 3));
        for c in 0..2 {
            for b in 0..3 {
                values[[0, c, b]] = (c * 3 + b) as f64;
            }
        }
        let tensor = FeatureTensor {
            trial_ids: vec![1],
            values,
            channel_labels: labels,
            band_defs: BandDefinition::canonical_five()[..3].to_vec(),
        };
        let flat = tensor.flatten_trials();
        for i in 0..6 {
            assert_eq!(flat[[0, i]], i as f64);
            assert_eq!(tensor.unflatten_index(i), (i / 3, i % 3));
        }
    }
}
