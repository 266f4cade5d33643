//! Jerk-based movement smoothness and trial validation.
//!
//! A reaching movement is scored by its normalized averaged rectified jerk:
//! the duration-cubed-scaled time-average of the jerk magnitude, where jerk
//! is the third time-derivative of position. Lower values mean smoother
//! movements. Trials are classified as successful or failed according to the
//! planning-displacement and reach-timeout rules of the recording protocol.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planning-phase displacement beyond this many meters fails the trial.
pub const PLANNING_DISPLACEMENT_LIMIT_M: f64 = 0.04;
/// The target counts as reached once the residual distance drops below this.
pub const REACH_RESIDUAL_LIMIT_M: f64 = 0.035;
/// Maximum duration of the go phase in seconds.
pub const GO_PHASE_TIMEOUT_S: f64 = 10.0;

/// Time-stamped 3D positions at a fixed sample rate.
#[derive(Debug, Clone)]
pub struct Trajectory {
    sample_rate: f64,
    t0: f64,
    samples: Vec<[f64; 3]>,
}

impl Trajectory {
    /// Minimum number of samples: third-derivative estimation needs 4 points.
    pub const MIN_SAMPLES: usize = 4;

    pub fn new(sample_rate: f64, t0: f64, samples: Vec<[f64; 3]>) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample_rate must be positive and finite, got {sample_rate}"
            )));
        }
        if samples.len() < Self::MIN_SAMPLES {
            return Err(Error::TrajectoryTooShort {
                got: samples.len(),
                need: Self::MIN_SAMPLES,
            });
        }
        if !t0.is_finite() {
            return Err(Error::NonFinite {
                context: "trajectory start time".into(),
            });
        }
        for (i, p) in samples.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("trajectory sample {i}"),
                });
            }
        }
        Ok(Self {
            sample_rate,
            t0,
            samples,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Time spanned by the samples, `(n − 1) / fs`.
    pub fn duration_s(&self) -> f64 {
        (self.len() - 1) as f64 / self.sample_rate
    }
}

/// Smoothness score for one movement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NarjScore {
    /// Duration-cubed-scaled mean rectified jerk magnitude, dimensionless.
    pub narj: f64,
    /// Natural log of `narj`; `None` when the jerk is identically zero.
    pub log_narj: Option<f64>,
    /// Movement duration in seconds.
    pub duration_s: f64,
}

/// Trial classification per the protocol rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Success,
    FailedPlanningMove,
    FailedTimeout,
}

/// Outcome of validating one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub status: TrialStatus,
    /// Maximum displacement from the planning-phase start, meters.
    pub planning_displacement_m: f64,
    /// Smallest distance to the target reached during the go phase, meters.
    pub reach_residual_m: f64,
    /// Time from go onset until the target was reached, seconds;
    /// the full timeout for trials that never reach it.
    pub go_duration_s: f64,
}

/// Finite-difference weights on an arbitrary stencil (Fornberg's recursion).
///
/// Returns weights `w` such that `sum_i w[i] * f(xs[i])` approximates the
/// `m`-th derivative of `f` at `x0`, exact for polynomials of degree
/// `xs.len() - 1`.
fn fd_weights(m: usize, x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert!(n > m, "stencil must have more points than derivative order");
    // c[k][i]: weight of point i for the k-th derivative
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c[m].clone()
}

/// Numerical derivative of a uniformly sampled series.
///
/// Interior points use a symmetric central stencil; points too close to an
/// edge fall back to one-sided stencils anchored at that edge. Both stencil
/// families carry enough points to be exact (to rounding) for polynomials of
/// degree `order + 1`. Output has the same length as the input.
pub fn finite_difference(series: &[f64], order: usize, dt: f64) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "derivative order must be positive".into(),
        ));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    // one-sided stencils need order + 2 points for degree order + 1 exactness
    let edge_pts = order + 2;
    if series.len() <= order || series.len() < edge_pts {
        return Err(Error::SeriesTooShort {
            got: series.len(),
            need: edge_pts,
            context: format!("order-{order} finite difference"),
        });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("finite_difference input at index {i}"),
        });
    }

    let n = series.len();
    // symmetric central stencil: smallest odd point count >= order + 2,
    // which by symmetry is exact for degree order + 1
    let central_pts = if (order + 2) % 2 == 1 {
        order + 2
    } else {
        order + 3
    };
    let half = central_pts / 2;

    // Weights are built on the integer grid and the dt^order division is
    // applied once per sample. Grid-unit weights come out as exact dyadic
    // rationals for the low orders used here, so polynomial cancellation is
    // exact and a constant series differentiates to exactly zero.
    let h_pow = dt.powi(order as i32);
    let central_w = fd_weights(
        order,
        0.0,
        &(0..central_pts)
            .map(|i| i as f64 - half as f64)
            .collect::<Vec<_>>(),
    );
    let edge_xs: Vec<f64> = (0..edge_pts).map(|i| i as f64).collect();

    let mut out = vec![0.0; n];
    for i in 0..n {
        let acc: f64 = if i >= half && i + half < n {
            central_w
                .iter()
                .enumerate()
                .map(|(k, w)| w * series[i + k - half])
                .sum()
        } else if i < half {
            // one-sided from the left edge, evaluated at grid position i
            let w = fd_weights(order, i as f64, &edge_xs);
            w.iter().zip(&series[..edge_pts]).map(|(w, v)| w * v).sum()
        } else {
            // one-sided from the right edge
            let start = n - edge_pts;
            let w = fd_weights(order, (i - start) as f64, &edge_xs);
            w.iter().zip(&series[start..]).map(|(w, v)| w * v).sum()
        };
        out[i] = acc / h_pow;
    }
    Ok(out)
}

/// Per-sample jerk (third derivative of position) along each axis, m/s³.
pub fn compute_jerk(traj: &Trajectory) -> Result<Vec<[f64; 3]>> {
    let n = traj.len();
    let dt = traj.dt();
    let mut axes = Vec::with_capacity(3);
    for axis in 0..3 {
        let series: Vec<f64> = traj.samples().iter().map(|p| p[axis]).collect();
        axes.push(finite_difference(&series, 3, dt)?);
    }
    Ok((0..n).map(|i| [axes[0][i], axes[1][i], axes[2][i]]).collect())
}

/// Samples at each edge whose jerk comes from one-sided stencils; these are
/// noisier and are excluded from the smoothness average.
pub const JERK_BOUNDARY_SAMPLES: usize = 2;

/// Normalized averaged rectified jerk of a go-phase trajectory.
///
/// `narj = T³ · mean(|jerk|)` with the mean taken over interior samples,
/// which makes the score independent of the sample rate.
pub fn narj(traj: &Trajectory) -> Result<NarjScore> {
    let jerk = compute_jerk(traj)?;
    let n = jerk.len();
    let lo = JERK_BOUNDARY_SAMPLES;
    let hi = n.saturating_sub(JERK_BOUNDARY_SAMPLES);
    if hi <= lo {
        return Err(Error::TrajectoryTooShort {
            got: n,
            need: 2 * JERK_BOUNDARY_SAMPLES + 1,
        });
    }
    let mean_rectified = jerk[lo..hi]
        .iter()
        .map(|j| (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]).sqrt())
        .sum::<f64>()
        / (hi - lo) as f64;
    let duration = traj.duration_s();
    let narj = duration.powi(3) * mean_rectified;
    Ok(NarjScore {
        narj,
        log_narj: (narj > 0.0).then(|| narj.ln()),
        duration_s: duration,
    })
}

/// Map a smoothness value onto the 0–100 feedback range shown to subjects.
///
/// Affine inverted map over `[cohort_min, cohort_max]`: the smoothest
/// movement in the fitted range scores 100, the roughest 0. Values outside
/// the range are clamped.
pub fn feedback_score(narj_value: f64, cohort_min: f64, cohort_max: f64) -> Result<f64> {
    if !narj_value.is_finite() {
        return Err(Error::NonFinite {
            context: "feedback_score narj_value".into(),
        });
    }
    if !(cohort_min < cohort_max) {
        return Err(Error::InvalidParameter(format!(
            "cohort_min ({cohort_min}) must be below cohort_max ({cohort_max})"
        )));
    }
    let clamped = narj_value.clamp(cohort_min, cohort_max);
    // the ratio can round an ulp past the endpoints
    Ok((100.0 * (cohort_max - clamped) / (cohort_max - cohort_min)).clamp(0.0, 100.0))
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Classify a trial from its planning- and go-phase trajectories.
///
/// A trial fails if the arm moved more than 4 cm during planning, or if the
/// residual distance to the target never dropped below 3.5 cm within the
/// 10 s go phase. Planning failure takes precedence.
pub fn validate_trial(
    planning: &Trajectory,
    go: &Trajectory,
    target: [f64; 3],
) -> Result<TrialOutcome> {
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "trial target".into(),
        });
    }

    let start = planning.samples()[0];
    let planning_displacement_m = planning
        .samples()
        .iter()
        .map(|p| dist3(*p, start))
        .fold(0.0, f64::max);

    // residuals over the go phase, restricted to the protocol timeout
    let max_go_samples = ((GO_PHASE_TIMEOUT_S * go.sample_rate()).floor() as usize + 1)
        .min(go.len());
    let mut reach_residual_m = f64::INFINITY;
    let mut reached_at: Option<usize> = None;
    for (i, p) in go.samples()[..max_go_samples].iter().enumerate() {
        let d = dist3(*p, target);
        if d < reach_residual_m {
            reach_residual_m = d;
        }
        if reached_at.is_none() && d < REACH_RESIDUAL_LIMIT_M {
            reached_at = Some(i);
        }
    }

    let (status, go_duration_s) = if planning_displacement_m > PLANNING_DISPLACEMENT_LIMIT_M {
        (
            TrialStatus::FailedPlanningMove,
            reached_at.map_or(GO_PHASE_TIMEOUT_S, |i| i as f64 / go.sample_rate()),
        )
    } else if let Some(i) = reached_at {
        (TrialStatus::Success, i as f64 / go.sample_rate())
    } else {
        (TrialStatus::FailedTimeout, GO_PHASE_TIMEOUT_S)
    };

    Ok(TrialOutcome {
        status,
        planning_displacement_m,
        reach_residual_m,
        go_duration_s,
    })
}
