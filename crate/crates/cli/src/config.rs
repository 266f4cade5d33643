//! Run configuration: a single TOML file with documented keys, every value
//! overridable by command-line flags (flags win). The full effective config
//! is serialized into every report for provenance.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use neuroreach_core::signal::{BandDefinition, BandName, WelchParams};
use neuroreach_core::simulate::CohortConfig;
use neuroreach_core::transfer::{SigmaEncoding, TransferConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsSection {
    pub delta: [f64; 2],
    pub theta: [f64; 2],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub high_gamma: [f64; 2],
}

impl Default for BandsSection {
    fn default() -> Self {
        Self {
            delta: [1.0, 4.0],
            theta: [4.0, 8.0],
            alpha: [8.0, 13.0],
            beta: [13.0, 30.0],
            high_gamma: [60.0, 90.0],
        }
    }
}

impl BandsSection {
    pub fn to_band_defs(&self) -> anyhow::Result<Vec<BandDefinition>> {
        let spec = [
            (BandName::Delta, self.delta),
            (BandName::Theta, self.theta),
            (BandName::Alpha, self.alpha),
            (BandName::Beta, self.beta),
            (BandName::HighGamma, self.high_gamma),
        ];
        spec.iter()
            .map(|(name, [lo, hi])| Ok(BandDefinition::new(*name, *lo, *hi)?))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchSection {
    pub segment_len: usize,
    pub overlap_fraction: f64,
}

impl Default for WelchSection {
    fn default() -> Self {
        Self {
            segment_len: 500,
            overlap_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSection {
    pub lambda: f64,
    pub gamma: f64,
    pub epsilon_sigma: f64,
    pub k_update: usize,
    /// "dense" or "diag"
    pub sigma_encoding: String,
}

impl Default for TransferSection {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            gamma: 0.9,
            epsilon_sigma: 1e-6,
            k_update: 20,
            sigma_encoding: "dense".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Per-subject means are taken over the last this-many trials.
    pub eval_window: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self { eval_window: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub n_permutations: usize,
    pub n_group_samples: usize,
}

impl Default for StatsSection {
    fn default() -> Self {
        Self {
            n_permutations: 10_000,
            n_group_samples: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n_subjects: usize,
    pub min_trials: usize,
    pub max_trials: usize,
    pub n_channels: usize,
    pub weight_mean_scale: f64,
    pub weight_cov: f64,
    pub noise_std: f64,
    pub sparsity: f64,
    /// Restrict nonzero population weights to these bands, e.g.
    /// ["alpha", "beta", "high_gamma"]. Empty = no restriction.
    pub sparsity_bands: Vec<String>,
    pub factor_rank: usize,
    pub intercept: f64,
    pub intercept_spread: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let c = CohortConfig::default();
        Self {
            n_subjects: c.n_subjects,
            min_trials: c.min_trials,
            max_trials: c.max_trials,
            n_channels: c.n_channels,
            weight_mean_scale: c.weight_mean_scale,
            weight_cov: c.weight_cov,
            noise_std: c.noise_std,
            sparsity: c.sparsity,
            sparsity_bands: vec![],
            factor_rank: c.factor_rank,
            intercept: c.intercept,
            intercept_spread: c.intercept_spread,
        }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub bands: BandsSection,
    pub welch: WelchSection,
    pub transfer: TransferSection,
    pub evaluation: EvaluationSection,
    pub stats: StatsSection,
    pub simulate: SimulateSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&content)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.bands.to_band_defs()?;
        self.welch_params()?;
        self.transfer_config()?;
        if self.evaluation.eval_window == 0 {
            bail!("evaluation.eval_window must be at least 1");
        }
        if self.stats.n_permutations == 0 || self.stats.n_group_samples == 0 {
            bail!("stats counts must be at least 1");
        }
        Ok(())
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(14)
    }

    pub fn welch_params(&self) -> anyhow::Result<WelchParams> {
        Ok(WelchParams::new(
            self.welch.segment_len,
            self.welch.overlap_fraction,
        )?)
    }

    pub fn transfer_config(&self) -> anyhow::Result<TransferConfig> {
        let sigma_encoding = match self.transfer.sigma_encoding.as_str() {
            "dense" => SigmaEncoding::Dense,
            "diag" => SigmaEncoding::Diag,
            other => bail!("transfer.sigma_encoding must be \"dense\" or \"diag\", got {other:?}"),
        };
        Ok(TransferConfig {
            lambda: self.transfer.lambda,
            gamma: self.transfer.gamma,
            epsilon_sigma: self.transfer.epsilon_sigma,
            k_update: self.transfer.k_update,
            sigma_encoding,
        })
    }

    pub fn cohort_config(&self) -> anyhow::Result<CohortConfig> {
        let sparsity_bands = if self.simulate.sparsity_bands.is_empty() {
            None
        } else {
            Some(
                self.simulate
                    .sparsity_bands
                    .iter()
                    .map(|s| s.parse::<BandName>().map_err(anyhow::Error::from))
                    .collect::<anyhow::Result<Vec<_>>>()?,
            )
        };
        Ok(CohortConfig {
            n_subjects: self.simulate.n_subjects,
            min_trials: self.simulate.min_trials,
            max_trials: self.simulate.max_trials,
            n_channels: self.simulate.n_channels,
            bands: self.bands.to_band_defs()?,
            k_update: self.transfer.k_update,
            weight_mean_scale: self.simulate.weight_mean_scale,
            weight_cov: self.simulate.weight_cov,
            noise_std: self.simulate.noise_std,
            sparsity: self.simulate.sparsity,
            sparsity_bands,
            factor_rank: self.simulate.factor_rank,
            intercept: self.simulate.intercept,
            intercept_spread: self.simulate.intercept_spread,
            seed: self.effective_seed(),
        })
    }
}
