//! Offline analysis pipeline for predicting single-trial movement smoothness
//! from EEG band-power features.
//!
//! The crate is organized around the stages of the analysis:
//!
//! - [`kinematics`] — jerk-based smoothness (NARJ) and trial validation from
//!   3D reach trajectories.
//! - [`signal`] — Welch PSD, band-integrated log-power, magnitude-squared
//!   coherence.
//! - [`features`] — raw EEG recordings to per-trial channel × band
//!   log-bandpower tensors.
//! - [`transfer`] — per-subject ridge regression, a pooled prior over
//!   subjects, MAP personalization from the first trials, and
//!   leave-one-subject-out evaluation.
//! - [`stats`] — seeded permutation tests: across-subject correlation,
//!   within-subject trial coherence, group-level p-value uniformity.
//! - [`encoding`] — encoding topographies (feature–prediction correlations).
//! - [`simulate`] — ground-truth synthetic trajectories, EEG-like signals,
//!   and hierarchical cohorts.
//! - [`io`] — the file formats shared by the CLI and the simulator.

pub mod encoding;
pub mod error;
pub mod features;
pub mod io;
pub mod kinematics;
pub mod linalg;
pub mod seeds;
pub mod signal;
pub mod simulate;
pub mod stats;
pub mod transfer;

pub use error::{Error, ErrorCategory, Result};
