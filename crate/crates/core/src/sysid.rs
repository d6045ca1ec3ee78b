//! Rotor-drag coefficient identification.
//!
//! Under the drag model the horizontal accelerometer readings are
//! `a = −(k1/m)·v` in the body frame, so a single least-squares slope through
//! the origin, pooled over both axes, recovers `k1/m`.

use crate::error::{Error, Result};
use crate::eval::interpolate_truth;
use crate::sensors::ImuLog;
use crate::truth::TruthTrajectory;

/// Minimum number of paired samples.
pub const MIN_SAMPLES: usize = 100;

/// Minimum pooled `Σv²` over both axes ((m/s)²).
pub const MIN_EXCITATION: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub k1_over_m: f64,
    pub k1: f64,
    /// RMS of `a + (k1/m)·v` over both axes (m/s²).
    pub residual_rms: f64,
    pub r2: f64,
    pub count: usize,
    /// Single-axis slopes, when that axis carries any velocity.
    pub kx: Option<f64>,
    pub ky: Option<f64>,
}

fn slope(sav: f64, svv: f64) -> Option<f64> {
    (svv > 0.0).then(|| -sav / svv)
}

pub fn fit_k1(log: &ImuLog, truth: &TruthTrajectory, m: f64) -> Result<FitResult> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::invalid("m", format!("must be > 0, got {m}")));
    }
    if log.is_empty() {
        return Err(Error::Empty("IMU log"));
    }
    if truth.is_empty() {
        return Err(Error::Empty("truth trajectory"));
    }

    let mut pairs = Vec::with_capacity(log.len());
    for s in &log.samples {
        if let Some(tr) = interpolate_truth(truth, s.t) {
            let vb = tr.body_velocity()?;
            pairs.push(([s.accel.x, s.accel.y], [vb.x, vb.y]));
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoOverlap(format!(
            "IMU [{:.3}, {:.3}] s vs truth [{:.3}, {:.3}] s",
            log.samples[0].t,
            log.samples[log.len() - 1].t,
            truth.states[0].t,
            truth.states[truth.len() - 1].t
        )));
    }
    if pairs.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            count: pairs.len(),
            required: MIN_SAMPLES,
        });
    }

    let mut sav = [0.0; 2];
    let mut svv = [0.0; 2];
    for (a, v) in &pairs {
        for k in 0..2 {
            sav[k] += a[k] * v[k];
            svv[k] += v[k] * v[k];
        }
    }
    let sum_v2 = svv[0] + svv[1];
    if !(sum_v2 >= MIN_EXCITATION) {
        return Err(Error::InsufficientExcitation {
            sum_v2,
            threshold: MIN_EXCITATION,
        });
    }
    let kappa = -(sav[0] + sav[1]) / sum_v2;
    if !(kappa > 0.0) {
        return Err(Error::invalid(
            "k1_over_m",
            format!("fitted drag ratio {kappa} is not positive"),
        ));
    }

    let n2 = (2 * pairs.len()) as f64;
    let mean_a = pairs.iter().map(|(a, _)| a[0] + a[1]).sum::<f64>() / n2;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (a, v) in &pairs {
        for k in 0..2 {
            ss_res += (a[k] + kappa * v[k]).powi(2);
            ss_tot += (a[k] - mean_a).powi(2);
        }
    }
    Ok(FitResult {
        k1_over_m: kappa,
        k1: kappa * m,
        residual_rms: (ss_res / n2).sqrt(),
        r2: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        count: pairs.len(),
        kx: slope(sav[0], svv[0]),
        ky: slope(sav[1], svv[1]),
    })
}
