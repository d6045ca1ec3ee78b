//! Conventional IMU estimator used as the comparison baseline.
//!
//! Attitude integrates raw gyro rates and is pulled toward the tilt implied
//! by the accelerometer under the assumption that it senses gravity only.
//! Velocity integrates gravity-compensated specific force in the earth
//! frame and is reported in the body frame.

use crate::ekf::MAX_GAP_FACTOR;
use crate::error::{Error, Result};
use crate::estimate::{EstimateStep, EstimateTrajectory, EstimatorKind};
use crate::geom::{euler_rate_map, euler_to_rotation, wrap_angle, BodyRates, EulerAttitude, Vec3, Vec6};
use crate::geom::GRAVITY;
use crate::sensors::ImuLog;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericConfig {
    /// Complementary blend rate toward the accelerometer tilt (1/s).
    pub alpha: f64,
    pub g: f64,
    /// Nominal sample period (s).
    pub ts: f64,
}

impl Default for GenericConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            g: GRAVITY,
            ts: crate::ekf::NOMINAL_TS,
        }
    }
}

impl GenericConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::invalid("g", "must be > 0"));
        }
        if !(self.ts > 0.0 && self.ts <= 0.1) {
            return Err(Error::invalid("ts", "must lie in (0, 0.1]"));
        }
        Ok(())
    }
}

/// Roll and pitch implied by a specific-force reading that is assumed to be
/// pure gravity. A level vehicle reads `(0, 0, −g)`.
pub fn accel_attitude(accel: &Vec3, g: f64) -> Result<(f64, f64)> {
    let magnitude = accel.norm();
    if !(magnitude > 0.5 * g) {
        return Err(Error::LowMagnitude { magnitude });
    }
    let phi = (-accel.y).atan2(-accel.z);
    let theta = accel.x.atan2((accel.y * accel.y + accel.z * accel.z).sqrt());
    Ok((phi, theta))
}

fn propagate_attitude(att: &EulerAttitude, rates: &BodyRates, h: f64) -> Result<EulerAttitude> {
    let k1 = euler_rate_map(att, rates)?;
    let mid = EulerAttitude {
        phi: att.phi + 0.5 * h * k1[0],
        theta: att.theta + 0.5 * h * k1[1],
        psi: att.psi + 0.5 * h * k1[2],
    };
    let k2 = euler_rate_map(&mid, rates)?;
    let next = EulerAttitude::new(att.phi + h * k2[0], att.theta + h * k2[1], att.psi + h * k2[2]);
    next.check_guard()?;
    Ok(next)
}

fn record(att: &EulerAttitude, vel_e: &Vec3, t: f64) -> Result<EstimateStep> {
    let vb = euler_to_rotation(att)?.transpose() * vel_e;
    Ok(EstimateStep {
        t,
        x: Vec6::new(att.phi, att.theta, 0.0, 0.0, vb.x, vb.y),
        p: None,
        innovation: None,
    })
}

pub fn run_generic(log: &ImuLog, cfg: &GenericConfig) -> Result<EstimateTrajectory> {
    cfg.validate()?;
    let first = log.samples.first().ok_or(Error::Empty("IMU log"))?;
    log.check_monotonic()?;

    let (phi0, theta0) = accel_attitude(&first.accel, cfg.g).unwrap_or((0.0, 0.0));
    let mut att = EulerAttitude::new(phi0, theta0, 0.0);
    let mut vel_e = Vec3::zeros();
    let gravity = Vec3::new(0.0, 0.0, cfg.g);
    let mut steps = Vec::with_capacity(log.len());
    steps.push(record(&att, &vel_e, first.t).map_err(|e| e.at_sample(0))?);

    let max_gap = MAX_GAP_FACTOR * cfg.ts * (1.0 + 1e-9);
    for (i, w) in log.samples.windows(2).enumerate() {
        let index = i + 1;
        let (prev, cur) = (&w[0], &w[1]);
        let dt = cur.t - prev.t;
        if dt > max_gap {
            return Err(Error::TimeGap {
                index,
                gap: dt,
                max: MAX_GAP_FACTOR * cfg.ts,
            });
        }
        let mut step = || -> Result<()> {
            let r = euler_to_rotation(&att)?;
            vel_e += (r * prev.accel + gravity) * dt;

            let rates = BodyRates::new(prev.gyro.x, prev.gyro.y, prev.gyro.z);
            let n_sub = ((dt / cfg.ts) - 1e-9).ceil().max(1.0) as usize;
            let h = dt / n_sub as f64;
            for _ in 0..n_sub {
                att = propagate_attitude(&att, &rates, h)?;
            }

            if let Ok((phi_acc, theta_acc)) = accel_attitude(&cur.accel, cfg.g) {
                let gain = (cfg.alpha * dt).min(1.0);
                att.phi = wrap_angle(att.phi + gain * wrap_angle(phi_acc - att.phi));
                att.theta += gain * (theta_acc - att.theta);
            }
            steps.push(record(&att, &vel_e, cur.t)?);
            Ok(())
        };
        step().map_err(|e| e.at_sample(index))?;
    }

    Ok(EstimateTrajectory {
        kind: EstimatorKind::Generic,
        steps,
        health: None,
    })
}
