//! Spectral estimation primitives: Welch PSD, band-integrated log-power,
//! and magnitude-squared coherence.
//!
//! All estimators share the same segmentation scheme: Hann-windowed segments
//! with per-segment mean removal, averaged one-sided spectra scaled so the
//! integral over frequency approximates the signal variance.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additive floor on integrated band power before taking the log, in squared
/// signal units. Keeps `log_bandpower` finite for silent inputs.
pub const POWER_FLOOR: f64 = 1e-12;

/// Canonical EEG band names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    HighGamma,
}

impl BandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::HighGamma => "high_gamma",
        }
    }
}

impl std::fmt::Display for BandName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BandName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(BandName::Delta),
            "theta" => Ok(BandName::Theta),
            "alpha" => Ok(BandName::Alpha),
            "beta" => Ok(BandName::Beta),
            "high_gamma" => Ok(BandName::HighGamma),
            other => Err(Error::InvalidParameter(format!("unknown band name: {other}"))),
        }
    }
}

/// A frequency band `[lo_hz, hi_hz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub name: BandName,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl BandDefinition {
    pub fn new(name: BandName, lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if !(lo_hz > 0.0 && lo_hz < hi_hz) && lo_hz.is_finite() && hi_hz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "band {name}: need 0 < lo ({lo_hz}) < hi ({hi_hz})"
            )));
        }
        if !(lo_hz.is_finite() && hi_hz.is_finite()) || lo_hz <= 0.0 || lo_hz >= hi_hz {
            return Err(Error::InvalidParameter(format!(
                "band {name}: need 0 < lo ({lo_hz}) < hi ({hi_hz})"
            )));
        }
        // mains notch region: the canonical set leaves 30-60 Hz out because
        // of 50 Hz line noise; other mains frequencies exist, so only warn
        if lo_hz < 51.0 && hi_hz > 49.0 {
            log::warn!(
                "band {name} [{lo_hz}, {hi_hz}) Hz overlaps the 49-51 Hz power-line region"
            );
        }
        Ok(Self { name, lo_hz, hi_hz })
    }

    /// The canonical five bands: delta 1–4, theta 4–8, alpha 8–13, beta
    /// 13–30, high gamma 60–90 Hz.
    pub fn canonical_five() -> Vec<BandDefinition> {
        vec![
            BandDefinition::new(BandName::Delta, 1.0, 4.0).unwrap(),
            BandDefinition::new(BandName::Theta, 4.0, 8.0).unwrap(),
            BandDefinition::new(BandName::Alpha, 8.0, 13.0).unwrap(),
            BandDefinition::new(BandName::Beta, 13.0, 30.0).unwrap(),
            BandDefinition::new(BandName::HighGamma, 60.0, 90.0).unwrap(),
        ]
    }
}

/// Welch segmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchParams {
    pub segment_len: usize,
    /// Fraction of each segment shared with the next, in [0, 1).
    pub overlap_fraction: f64,
}

impl WelchParams {
    pub fn new(segment_len: usize, overlap_fraction: f64) -> Result<Self> {
        if segment_len < 8 {
            return Err(Error::InvalidParameter(format!(
                "segment_len must be at least 8, got {segment_len}"
            )));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(Error::InvalidParameter(format!(
                "overlap_fraction must be in [0, 1), got {overlap_fraction}"
            )));
        }
        Ok(Self {
            segment_len,
            overlap_fraction,
        })
    }

    /// Default segmentation for EEG feature extraction: 1 s segments at
    /// 500 Hz with 50% overlap (1 Hz resolution, enough for the delta band).
    pub fn eeg_default() -> Self {
        Self {
            segment_len: 500,
            overlap_fraction: 0.5,
        }
    }

    /// Segmentation for short per-trial series (~70-80 points): segments of
    /// at most 32 samples, never longer than half the series.
    pub fn for_trial_series(n: usize) -> Self {
        Self {
            segment_len: 32.min(n / 2).max(2),
            overlap_fraction: 0.5,
        }
    }

    pub fn hop(&self) -> usize {
        (self.segment_len as f64 * (1.0 - self.overlap_fraction)).round() as usize
    }

    pub fn num_segments(&self, signal_len: usize) -> usize {
        if signal_len < self.segment_len {
            return 0;
        }
        (signal_len - self.segment_len) / self.hop().max(1) + 1
    }
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    /// Power density, signal-units²/Hz; same length as `freqs_hz`.
    pub power: Vec<f64>,
    pub segment_len: usize,
    pub overlap_fraction: f64,
}

impl PsdEstimate {
    /// Frequency resolution between bins.
    pub fn df(&self) -> f64 {
        self.freqs_hz[1] - self.freqs_hz[0]
    }

    /// Total power, `∫ PSD df`; approximates the signal variance.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.df()
    }

    /// Power integrated over `[lo_hz, hi_hz)`.
    pub fn band_power(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        self.freqs_hz
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo_hz && **f < hi_hz)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.df()
    }
}

fn fft_for_len(n: usize) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| FftPlanner::<f64>::new().plan_fft_forward(n))
        .clone()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / n as f64;
            let s = x.sin();
            s * s
        })
        .collect()
}

/// Hann-windowed, mean-removed FFTs of each Welch segment of `x`.
fn segment_spectra(x: &[f64], params: WelchParams) -> Vec<Vec<Complex64>> {
    let seg = params.segment_len;
    let hop = params.hop().max(1);
    let window = hann(seg);
    let fft = fft_for_len(seg);
    let n_seg = params.num_segments(x.len());
    let mut spectra = Vec::with_capacity(n_seg);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for s in 0..n_seg {
        let chunk = &x[s * hop..s * hop + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        let mut buf: Vec<Complex64> = chunk
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        fft.process_with_scratch(&mut buf, &mut scratch);
        buf.truncate(seg / 2 + 1);
        spectra.push(buf);
    }
    spectra
}

fn one_sided_scale(seg: usize, fs: f64, window: &[f64]) -> (f64, f64) {
    let s2: f64 = window.iter().map(|w| w * w).sum();
    let interior = 2.0 / (fs * s2);
    let edge = 1.0 / (fs * s2); // DC and Nyquist bins are not doubled
    let _ = seg;
    (interior, edge)
}

/// Welch-averaged one-sided power spectral density.
///
/// Hann window, per-segment mean removal, scaled so `∫ PSD df` approximates
/// the signal variance.
pub fn welch_psd(x: &[f64], fs: f64, params: WelchParams) -> Result<PsdEstimate> {
    if !(fs > 0.0) || !fs.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sample rate must be positive, got {fs}"
        )));
    }
    let seg = params.segment_len;
    if x.len() < seg {
        return Err(Error::SeriesTooShort {
            got: x.len(),
            need: seg,
            context: "welch_psd (one full segment)".into(),
        });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("welch_psd input at index {i}"),
        });
    }

    let window = hann(seg);
    let (scale, edge_scale) = one_sided_scale(seg, fs, &window);
    let spectra = segment_spectra(x, params);
    let n_seg = spectra.len() as f64;
    let n_bins = seg / 2 + 1;

    let mut power = vec![0.0; n_bins];
    for spec in &spectra {
        for (k, c) in spec.iter().enumerate() {
            power[k] += c.norm_sqr();
        }
    }
    let nyquist_bin = if seg % 2 == 0 { Some(n_bins - 1) } else { None };
    for (k, p) in power.iter_mut().enumerate() {
        let s = if k == 0 || Some(k) == nyquist_bin {
            edge_scale
        } else {
            scale
        };
        *p = *p / n_seg * s;
    }

    let df = fs / seg as f64;
    Ok(PsdEstimate {
        freqs_hz: (0..n_bins).map(|k| k as f64 * df).collect(),
        power,
        segment_len: seg,
        overlap_fraction: params.overlap_fraction,
    })
}

/// Natural log of the power integrated over a band, floored at
/// [`POWER_FLOOR`].
pub fn log_bandpower(x: &[f64], fs: f64, band: &BandDefinition, params: WelchParams) -> Result<f64> {
    let nyquist = fs / 2.0;
    if band.hi_hz >= nyquist {
        return Err(Error::BandAboveNyquist {
            band: band.name.to_string(),
            hi_hz: band.hi_hz,
            nyquist_hz: nyquist,
        });
    }
    let psd = welch_psd(x, fs, params)?;
    Ok((psd.band_power(band.lo_hz, band.hi_hz) + POWER_FLOOR).ln())
}

/// Magnitude-squared coherence between two equal-length series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceEstimate {
    pub freqs: Vec<f64>,
    /// Per-frequency MSC in [0, 1]; same length as `freqs`.
    pub msc: Vec<f64>,
    /// Unweighted mean over all non-DC bins.
    pub mean_msc: f64,
    pub segments: usize,
}

/// Welch magnitude-squared coherence, `|Pxy|² / (Pxx · Pyy)` per bin, with
/// the scalar summary taken as the mean over non-DC bins.
///
/// Frequencies are reported as cycles per sample (the series index is the
/// time axis); callers working in trials just read them as cycles per trial.
pub fn magnitude_squared_coherence(
    x: &[f64],
    y: &[f64],
    params: WelchParams,
) -> Result<CoherenceEstimate> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
            context: "magnitude_squared_coherence".into(),
        });
    }
    if x.len() < 2 * params.segment_len {
        return Err(Error::SeriesTooShort {
            got: x.len(),
            need: 2 * params.segment_len,
            context: "magnitude_squared_coherence (two averaged segments)".into(),
        });
    }
    for (name, s) in [("x", x), ("y", y)] {
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("magnitude_squared_coherence {name} at index {i}"),
            });
        }
    }

    let sx = segment_spectra(x, params);
    let sy = segment_spectra(y, params);
    let n_seg = sx.len();
    debug_assert!(n_seg >= 2);
    let n_bins = params.segment_len / 2 + 1;

    let mut pxx = vec![0.0; n_bins];
    let mut pyy = vec![0.0; n_bins];
    let mut pxy = vec![Complex64::default(); n_bins];
    for (a, b) in sx.iter().zip(&sy) {
        for k in 0..n_bins {
            pxx[k] += a[k].norm_sqr();
            pyy[k] += b[k].norm_sqr();
            pxy[k] += a[k].conj() * b[k];
        }
    }

    let msc: Vec<f64> = (0..n_bins)
        .map(|k| {
            let denom = pxx[k] * pyy[k];
            if denom <= 0.0 {
                0.0
            } else {
                (pxy[k].norm_sqr() / denom).clamp(0.0, 1.0)
            }
        })
        .collect();
    let mean_msc = msc[1..].iter().sum::<f64>() / (n_bins - 1) as f64;

    Ok(CoherenceEstimate {
        freqs: (0..n_bins)
            .map(|k| k as f64 / params.segment_len as f64)
            .collect(),
        msc,
        mean_msc,
        segments: n_seg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sine(freq: f64, fs: f64, n: usize, amp: f64, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / fs + phase).sin())
            .collect()
    }

    #[test]
    fn psd_peak_and_total_power_of_sine() {
        let fs = 500.0;
        let x = sine(10.0, fs, 5000, 1.0, 0.0);
        let psd = welch_psd(&x, fs, WelchParams::eeg_default()).unwrap();
        let peak = psd
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_abs_diff_eq!(psd.freqs_hz[peak], 10.0, epsilon = psd.df() / 2.0);
        // Parseval: a unit sine carries power 1/2
        assert_relative_eq!(psd.total_power(), 0.5, max_relative = 0.03);
    }

    #[test]
    fn psd_of_silence_is_zero() {
        let psd = welch_psd(&vec![0.0; 2000], 500.0, WelchParams::eeg_default()).unwrap();
        assert!(psd.power.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn psd_of_white_noise_integrates_to_variance() {
        let fs = 500.0;
        for seed in 0..20u64 {
            let mut rng = crate::seeds::rng(seed, 7);
            let x: Vec<f64> = (0..5000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let psd = welch_psd(&x, fs, WelchParams::eeg_default()).unwrap();
            assert_relative_eq!(psd.total_power(), 1.0, max_relative = 0.10);
        }
    }

    #[test]
    fn psd_scales_quadratically() {
        let mut rng = crate::seeds::rng(3, 1);
        let x: Vec<f64> = (0..1000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x3: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let params = WelchParams::new(128, 0.5).unwrap();
        let a = welch_psd(&x, 100.0, params).unwrap();
        let b = welch_psd(&x3, 100.0, params).unwrap();
        for (pa, pb) in a.power.iter().zip(&b.power) {
            assert_relative_eq!(*pb, 9.0 * *pa, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_short_input() {
        assert!(matches!(
            welch_psd(&[0.0; 100], 500.0, WelchParams::eeg_default()),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn alpha_sine_dominates_other_bands() {
        let fs = 500.0;
        let x = sine(10.0, fs, 5000, 1.0, 0.3);
        let params = WelchParams::eeg_default();
        let bands = BandDefinition::canonical_five();
        let powers: Vec<f64> = bands
            .iter()
            .map(|b| log_bandpower(&x, fs, b, params).unwrap())
            .collect();
        let alpha = powers[2];
        for (i, p) in powers.iter().enumerate() {
            if i != 2 {
                assert!(
                    alpha - p >= 4.0,
                    "alpha {alpha} should exceed {} ({p}) by >= 4 ln-units",
                    bands[i].name
                );
            }
        }
    }

    #[test]
    fn silent_channel_hits_power_floor() {
        let band = BandDefinition::canonical_five()[2].clone();
        let lp = log_bandpower(&vec![0.0; 2000], 500.0, &band, WelchParams::eeg_default()).unwrap();
        assert_abs_diff_eq!(lp, POWER_FLOOR.ln(), epsilon = 1e-12);
    }

    #[test]
    fn delta_and_gamma_capture_their_tones_equally() {
        let fs = 500.0;
        let n = 5000;
        let x: Vec<f64> = sine(2.0, fs, n, 1.0, 0.0)
            .iter()
            .zip(sine(70.0, fs, n, 1.0, 1.1))
            .map(|(a, b)| a + b)
            .collect();
        let params = WelchParams::eeg_default();
        let bands = BandDefinition::canonical_five();
        let delta = log_bandpower(&x, fs, &bands[0], params).unwrap();
        let gamma = log_bandpower(&x, fs, &bands[4], params).unwrap();
        assert_abs_diff_eq!(delta, gamma, epsilon = 0.1);
    }

    #[test]
    fn log_bandpower_scaling_law() {
        let fs = 500.0;
        let x = sine(10.0, fs, 4000, 1.0, 0.0);
        let x2: Vec<f64> = x.iter().map(|v| 7.0 * v).collect();
        let band = BandDefinition::canonical_five()[2].clone();
        let params = WelchParams::eeg_default();
        let a = log_bandpower(&x, fs, &band, params).unwrap();
        let b = log_bandpower(&x2, fs, &band, params).unwrap();
        assert_abs_diff_eq!(b - a, 2.0 * 7.0f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn band_above_nyquist_is_an_error() {
        let band = BandDefinition::new(BandName::HighGamma, 60.0, 90.0).unwrap();
        assert!(matches!(
            log_bandpower(&[0.0; 600], 100.0, &band, WelchParams::new(64, 0.5).unwrap()),
            Err(Error::BandAboveNyquist { .. })
        ));
    }

    #[test]
    fn coherence_of_identical_signals_is_one() {
        let mut rng = crate::seeds::rng(11, 0);
        let x: Vec<f64> = (0..96).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let est = magnitude_squared_coherence(&x, &x, WelchParams::for_trial_series(96)).unwrap();
        assert!(est.segments >= 2);
        for m in &est.msc[1..] {
            assert_abs_diff_eq!(*m, 1.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(est.mean_msc, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn coherence_invariant_under_affine_map() {
        let mut rng = crate::seeds::rng(12, 0);
        let x: Vec<f64> = (0..96).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let est = magnitude_squared_coherence(&x, &y, WelchParams::for_trial_series(96)).unwrap();
        assert_abs_diff_eq!(est.mean_msc, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn coherence_bounded_in_unit_interval() {
        let mut rng = crate::seeds::rng(13, 0);
        for _ in 0..10 {
            let x: Vec<f64> = (0..80).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let y: Vec<f64> = (0..80).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let est =
                magnitude_squared_coherence(&x, &y, WelchParams::for_trial_series(80)).unwrap();
            for m in &est.msc {
                assert!((0.0..=1.0).contains(m));
            }
        }
    }

    #[test]
    fn coherence_matches_naive_dft_oracle() {
        // independent route: direct O(n²) DFT per segment
        fn naive_msc(x: &[f64], y: &[f64], params: WelchParams) -> f64 {
            let seg = params.segment_len;
            let hop = params.hop();
            let n_seg = params.num_segments(x.len());
            let n_bins = seg / 2 + 1;
            let window: Vec<f64> = (0..seg)
                .map(|i| {
                    let s = (std::f64::consts::PI * i as f64 / seg as f64).sin();
                    s * s
                })
                .collect();
            let dft = |chunk: &[f64]| -> Vec<Complex64> {
                let mean = chunk.iter().sum::<f64>() / seg as f64;
                let w: Vec<f64> = chunk
                    .iter()
                    .zip(&window)
                    .map(|(v, win)| (v - mean) * win)
                    .collect();
                (0..n_bins)
                    .map(|k| {
                        let mut acc = Complex64::default();
                        for (t, v) in w.iter().enumerate() {
                            let ang = -2.0 * std::f64::consts::PI * k as f64 * t as f64
                                / seg as f64;
                            acc += Complex64::new(ang.cos(), ang.sin()) * *v;
                        }
                        acc
                    })
                    .collect()
            };
            let mut pxx = vec![0.0; n_bins];
            let mut pyy = vec![0.0; n_bins];
            let mut pxy = vec![Complex64::default(); n_bins];
            for s in 0..n_seg {
                let a = dft(&x[s * hop..s * hop + seg]);
                let b = dft(&y[s * hop..s * hop + seg]);
                for k in 0..n_bins {
                    pxx[k] += a[k].norm_sqr();
                    pyy[k] += b[k].norm_sqr();
                    pxy[k] += a[k].conj() * b[k];
                }
            }
            let msc: Vec<f64> = (0..n_bins)
                .map(|k| {
                    let d = pxx[k] * pyy[k];
                    if d <= 0.0 { 0.0 } else { pxy[k].norm_sqr() / d }
                })
                .collect();
            msc[1..].iter().sum::<f64>() / (n_bins - 1) as f64
        }

        let params = WelchParams::for_trial_series(96);
        let mut sum_impl = 0.0;
        let mut sum_oracle = 0.0;
        let draws = 200;
        for seed in 0..draws {
            let mut rng = crate::seeds::rng(seed, 21);
            let x: Vec<f64> = (0..96).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let y: Vec<f64> = (0..96).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let got = magnitude_squared_coherence(&x, &y, params).unwrap().mean_msc;
            let want = naive_msc(&x, &y, params);
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
            sum_impl += got;
            sum_oracle += want;
        }
        // sanity: for independent noise the mean MSC sits well below 1
        assert_abs_diff_eq!(sum_impl / draws as f64, sum_oracle / draws as f64, epsilon = 1e-9);
        assert!(sum_impl / (draws as f64) < 0.7);
    }

    #[test]
    fn coherence_length_mismatch_and_short_series() {
        let x = vec![0.0; 64];
        let y = vec![0.0; 60];
        assert!(matches!(
            magnitude_squared_coherence(&x, &y, WelchParams::for_trial_series(64)),
            Err(Error::LengthMismatch { .. })
        ));
        let z = vec![0.0; 63];
        assert!(matches!(
            magnitude_squared_coherence(&z, &z, WelchParams::new(32, 0.5).unwrap()),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn canonical_bands_have_expected_edges() {
        let bands = BandDefinition::canonical_five();
        let edges: Vec<(f64, f64)> = bands.iter().map(|b| (b.lo_hz, b.hi_hz)).collect();
        assert_eq!(
            edges,
            vec![(1.0, 4.0), (4.0, 8.0), (8.0, 13.0), (13.0, 30.0), (60.0, 90.0)]
        );
    }
}
