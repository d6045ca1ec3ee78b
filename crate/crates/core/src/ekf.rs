//! Six-state drag-aware extended Kalman filter.
//!
//! State `x = (φ, θ, βgx, βgy, vbx, vby)`. The process model propagates roll
//! and pitch from bias-corrected gyros, decays the x/y gyro biases as
//! first-order Gauss–Markov processes, and drives the body-frame horizontal
//! velocities with the gravity tilt term minus rotor drag. The horizontal
//! accelerometers observe velocity linearly: `a = −(k1/m)·v + noise`.
//!
//! The z gyro bias is not a state and is taken as zero; z-axis gyro data must
//! be calibrated beforehand.

use nalgebra::{Matrix2, SMatrix, Vector2};

use crate::error::{Error, Result};
use crate::estimate::{idx, CovarianceHealth, EstimateStep, EstimateTrajectory, EstimatorKind};
use crate::geom::{max_asymmetry, min_eigenvalue, symmetrize, wrap_angle, BodyRates, Mat6, Vec6};
use crate::geom::{GRAVITY, THETA_GUARD};
use crate::sensors::{ImuLog, NoiseConfig};

type Mat2x6 = SMatrix<f64, 2, 6>;

/// Nominal filter period (s), one IMU sample at 200 Hz.
pub const NOMINAL_TS: f64 = 1.0 / 200.0;

/// Largest sample gap, in nominal periods, that the filter bridges.
pub const MAX_GAP_FACTOR: f64 = 10.0;

/// How the discrete process noise is formed from the continuous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseDiscretization {
    /// `(Qc + A·Qc·Aᵀ)·Ts/2`.
    Trapezoid,
    /// `Qc·Ts`.
    ZerothOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub k1: f64,
    pub m: f64,
    pub g: f64,
    /// Gyro bias time constants `[x, y]` (s).
    pub tau_g: [f64; 2],
    /// Continuous process-noise densities for
    /// `(w_gx, w_gy, w_βgx, w_βgy, w_αx, w_αy)`.
    pub w: [f64; 6],
    /// Accelerometer measurement variances `[x, y]` (m²/s⁴).
    pub r: [f64; 2],
    pub x0: Vec6,
    /// Initial covariance diagonal.
    pub p0: [f64; 6],
    /// Nominal sample period (s).
    pub ts: f64,
    pub discretization: NoiseDiscretization,
    /// Predict fails once `trace(P)` exceeds this.
    pub trace_ceiling: f64,
}

/// Default model-error density for the velocity equations ((m/s²)²/Hz).
pub const DEFAULT_VELOCITY_MODEL_DENSITY: f64 = 2.5e-3;

impl Default for FilterConfig {
    fn default() -> Self {
        let deg5 = 5f64.to_radians();
        let mut cfg = Self {
            k1: 0.57,
            m: 0.42,
            g: GRAVITY,
            tau_g: [100.0; 2],
            w: [0.0; 6],
            r: [0.0; 2],
            x0: Vec6::zeros(),
            p0: [
                deg5 * deg5,
                deg5 * deg5,
                0.02 * 0.02,
                0.02 * 0.02,
                0.5 * 0.5,
                0.5 * 0.5,
            ],
            ts: NOMINAL_TS,
            discretization: NoiseDiscretization::Trapezoid,
            trace_ceiling: 1e6,
        };
        cfg.match_noise(&NoiseConfig::default());
        cfg
    }
}

impl FilterConfig {
    /// Config whose sensor noise terms equal those of a synthesis model.
    pub fn matched_to(noise: &NoiseConfig) -> Self {
        let mut cfg = Self::default();
        cfg.match_noise(noise);
        cfg
    }

    /// Copies gyro, bias and accelerometer noise from a synthesis model.
    ///
    /// Per-sample gyro noise `σg` becomes the density `σg²·Ts`; the bias
    /// driving density and time constant carry over; accelerometer noise
    /// becomes `R`. Zero sigmas are floored at a tiny positive variance.
    pub fn match_noise(&mut self, noise: &NoiseConfig) {
        const FLOOR: f64 = 1e-12;
        for a in 0..2 {
            self.w[a] = (noise.sigma_g[a].powi(2) * self.ts).max(FLOOR);
            self.w[2 + a] = noise.sigma_bg[a].powi(2).max(FLOOR);
            self.w[4 + a] = DEFAULT_VELOCITY_MODEL_DENSITY;
            self.tau_g[a] = noise.tau_g[a];
            self.r[a] = noise.sigma_a[a].powi(2).max(FLOOR);
        }
    }

    pub fn drag_ratio(&self) -> f64 {
        self.k1 / self.m
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be > 0, got {v}")))
            }
        };
        positive("k1", self.k1)?;
        positive("m", self.m)?;
        positive("g", self.g)?;
        positive("tau_gx", self.tau_g[0])?;
        positive("tau_gy", self.tau_g[1])?;
        for (i, v) in self.w.iter().enumerate() {
            positive(&format!("w[{i}]"), *v)?;
        }
        positive("r_ax", self.r[0])?;
        positive("r_ay", self.r[1])?;
        for (i, v) in self.p0.iter().enumerate() {
            positive(&format!("p0[{i}]"), *v)?;
        }
        if !(self.ts > 0.0 && self.ts <= 0.1) {
            return Err(Error::invalid("ts", format!("must lie in (0, 0.1], got {}", self.ts)));
        }
        positive("trace_ceiling", self.trace_ceiling)?;
        if self.x0.iter().any(|v| !v.is_finite()) || self.x0[idx::THETA].abs() > THETA_GUARD {
            return Err(Error::invalid("x0", "non-finite or beyond the pitch guard"));
        }
        Ok(())
    }

    pub fn measurement_matrix(&self) -> Mat2x6 {
        let mut h = Mat2x6::zeros();
        h[(0, idx::VBX)] = -self.drag_ratio();
        h[(1, idx::VBY)] = -self.drag_ratio();
        h
    }

    /// Scales `P0`, `W` and `R` by a common factor.
    pub fn scaled_noise(&self, factor: f64) -> Self {
        let mut out = *self;
        out.p0.iter_mut().for_each(|v| *v *= factor);
        out.w.iter_mut().for_each(|v| *v *= factor);
        out.r.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub x: Vec6,
    pub p: Mat6,
    pub t: f64,
}

impl FilterState {
    pub fn initial(cfg: &FilterConfig, t: f64) -> Self {
        Self {
            x: cfg.x0,
            p: Mat6::from_diagonal(&Vec6::from(cfg.p0)),
            t,
        }
    }

    pub fn check(&self) -> Result<()> {
        check_theta(self.x[idx::THETA])?;
        if self.p.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min_eigenvalue(&self.p),
            });
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() > THETA_GUARD {
        return Err(Error::SingularAttitude {
            theta,
            limit: THETA_GUARD,
        });
    }
    Ok(())
}

/// Noise-free process model `ẋ = f(x, u)`.
pub fn process_derivative(x: &Vec6, gyro: &BodyRates, cfg: &FilterConfig) -> Result<Vec6> {
    let (phi, theta) = (x[idx::PHI], x[idx::THETA]);
    check_theta(theta)?;
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let tt = st / ct;
    let p = gyro.wx - x[idx::BGX];
    let q = gyro.wy - x[idx::BGY];
    let r = gyro.wz;
    let kappa = cfg.drag_ratio();
    Ok(Vec6::new(
        p + tt * cf * r + tt * sf * q,
        cf * q - sf * r,
        -x[idx::BGX] / cfg.tau_g[0],
        -x[idx::BGY] / cfg.tau_g[1],
        -cfg.g * st - kappa * x[idx::VBX],
        cfg.g * ct * sf - kappa * x[idx::VBY],
    ))
}

/// Analytic Jacobian `∂f/∂x`.
pub fn jacobian_f(x: &Vec6, gyro: &BodyRates, cfg: &FilterConfig) -> Result<Mat6> {
    let (phi, theta) = (x[idx::PHI], x[idx::THETA]);
    check_theta(theta)?;
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let tt = st / ct;
    let sec2 = 1.0 / (ct * ct);
    let q = gyro.wy - x[idx::BGY];
    let r = gyro.wz;
    let g = cfg.g;
    let kappa = cfg.drag_ratio();

    let mut f = Mat6::zeros();
    f[(idx::PHI, idx::PHI)] = tt * (cf * q - sf * r);
    f[(idx::PHI, idx::THETA)] = sec2 * (sf * q + cf * r);
    f[(idx::PHI, idx::BGX)] = -1.0;
    f[(idx::PHI, idx::BGY)] = -tt * sf;

    f[(idx::THETA, idx::PHI)] = -sf * q - cf * r;
    f[(idx::THETA, idx::BGY)] = -cf;

    f[(idx::BGX, idx::BGX)] = -1.0 / cfg.tau_g[0];
    f[(idx::BGY, idx::BGY)] = -1.0 / cfg.tau_g[1];

    f[(idx::VBX, idx::THETA)] = -g * ct;
    f[(idx::VBX, idx::VBX)] = -kappa;

    f[(idx::VBY, idx::PHI)] = g * ct * cf;
    f[(idx::VBY, idx::THETA)] = -g * st * sf;
    f[(idx::VBY, idx::VBY)] = -kappa;
    Ok(f)
}

/// Central-difference approximation of [`jacobian_f`].
pub fn finite_difference_jacobian(x: &Vec6, gyro: &BodyRates, cfg: &FilterConfig) -> Result<Mat6> {
    let h = 1e-6;
    let mut j = Mat6::zeros();
    for col in 0..6 {
        let mut xp = *x;
        let mut xm = *x;
        xp[col] += h;
        xm[col] -= h;
        let d = (process_derivative(&xp, gyro, cfg)? - process_derivative(&xm, gyro, cfg)?) / (2.0 * h);
        j.set_column(col, &d);
    }
    Ok(j)
}

/// Noise Jacobian `G = ∂f/∂w` and the diagonal density matrix `W`.
pub fn build_g_w(x: &Vec6, cfg: &FilterConfig) -> (Mat6, Mat6) {
    let (sf, cf) = x[idx::PHI].sin_cos();
    let tt = x[idx::THETA].tan();
    let mut g = Mat6::zeros();
    g[(idx::PHI, 0)] = 1.0;
    g[(idx::PHI, 1)] = tt * sf;
    g[(idx::THETA, 1)] = cf;
    g[(idx::BGX, 2)] = 1.0;
    g[(idx::BGY, 3)] = 1.0;
    g[(idx::VBX, 4)] = 1.0;
    g[(idx::VBY, 5)] = 1.0;
    (g, Mat6::from_diagonal(&Vec6::from(cfg.w)))
}

/// Transition matrix `A = I + F·Ts` and discrete process noise.
pub fn discretize(f: &Mat6, qc: &Mat6, ts: f64, mode: NoiseDiscretization) -> (Mat6, Mat6) {
    let a = Mat6::identity() + f * ts;
    let qk = match mode {
        NoiseDiscretization::Trapezoid => (qc + a * qc * a.transpose()) * (0.5 * ts),
        NoiseDiscretization::ZerothOrder => qc * ts,
    };
    (a, symmetrize(&qk))
}

fn rk2_state(x: &Vec6, gyro: &BodyRates, ts: f64, cfg: &FilterConfig) -> Result<Vec6> {
    let k1 = process_derivative(x, gyro, cfg)?;
    let mid = x + k1 * (0.5 * ts);
    let k2 = process_derivative(&mid, gyro, cfg)?;
    let mut next = x + k2 * ts;
    next[idx::PHI] = wrap_angle(next[idx::PHI]);
    Ok(next)
}

/// Time update over `ts` with the gyro held constant.
pub fn predict(fs: &FilterState, gyro: &BodyRates, ts: f64, cfg: &FilterConfig) -> Result<FilterState> {
    if !(ts > 0.0 && ts <= 0.1) {
        return Err(Error::invalid("ts", format!("must lie in (0, 0.1], got {ts}")));
    }
    let f = jacobian_f(&fs.x, gyro, cfg)?;
    let (g, w) = build_g_w(&fs.x, cfg);
    let qc = g * w * g.transpose();
    let (a, qk) = discretize(&f, &qc, ts, cfg.discretization);
    let x = rk2_state(&fs.x, gyro, ts, cfg)?;
    check_theta(x[idx::THETA])?;
    let p = symmetrize(&(a * fs.p * a.transpose() + qk));
    let trace = p.trace();
    if !(trace <= cfg.trace_ceiling) {
        return Err(Error::CovarianceBlowup {
            trace,
            ceiling: cfg.trace_ceiling,
        });
    }
    Ok(FilterState { x, p, t: fs.t + ts })
}

/// Result of a measurement update, with the prior innovation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub state: FilterState,
    pub innovation: Vector2<f64>,
    pub innovation_cov: Matrix2<f64>,
}

/// Joseph-form update with the horizontal accelerometer pair.
pub fn update_detailed(fs: &FilterState, ax: f64, ay: f64, cfg: &FilterConfig) -> Result<UpdateOutcome> {
    let h = cfg.measurement_matrix();
    let r = Matrix2::from_diagonal(&Vector2::from(cfg.r));
    let z = Vector2::new(ax, ay);
    let innovation = z - h * fs.x;
    let s = symmetrize(&(h * fs.p * h.transpose() + r));
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    let k = fs.p * h.transpose() * s_inv;
    let mut x = fs.x + k * innovation;
    x[idx::PHI] = wrap_angle(x[idx::PHI]);
    let ikh = Mat6::identity() - k * h;
    let p = symmetrize(&(ikh * fs.p * ikh.transpose() + k * r * k.transpose()));
    let state = FilterState { x, p, t: fs.t };
    state.check()?;
    Ok(UpdateOutcome {
        state,
        innovation,
        innovation_cov: s,
    })
}

pub fn update(fs: &FilterState, ax: f64, ay: f64, cfg: &FilterConfig) -> Result<FilterState> {
    update_detailed(fs, ax, ay, cfg).map(|o| o.state)
}

/// Runs the filter over a log: predict to each sample with the previous
/// gyro reading, then update with that sample's horizontal accelerations.
///
/// Gaps longer than the nominal period (up to [`MAX_GAP_FACTOR`] of them)
/// are bridged with equal sub-steps no longer than `cfg.ts`.
pub fn run_filter(log: &ImuLog, cfg: &FilterConfig) -> Result<EstimateTrajectory> {
    cfg.validate()?;
    let first = log.samples.first().ok_or(Error::Empty("IMU log"))?;
    log.check_monotonic()?;

    let mut health = CovarianceHealth::default();
    let mut steps = Vec::with_capacity(log.len());
    let mut record = |o: &UpdateOutcome, health: &mut CovarianceHealth| {
        health.max_asymmetry = health.max_asymmetry.max(max_asymmetry(&o.state.p));
        health.min_eigenvalue = health.min_eigenvalue.min(min_eigenvalue(&o.state.p));
        steps.push(EstimateStep {
            t: o.state.t,
            x: o.state.x,
            p: Some(o.state.p),
            innovation: Some([o.innovation[0], o.innovation[1]]),
        });
    };

    let init = FilterState::initial(cfg, first.t);
    let mut out = update_detailed(&init, first.accel.x, first.accel.y, cfg).map_err(|e| e.at_sample(0))?;
    record(&out, &mut health);

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
        let gyro = BodyRates::new(prev.gyro.x, prev.gyro.y, prev.gyro.z);
        let n_sub = ((dt / cfg.ts) - 1e-9).ceil().max(1.0) as usize;
        let h = dt / n_sub as f64;
        let mut fs = out.state;
        for _ in 0..n_sub {
            fs = predict(&fs, &gyro, h, cfg).map_err(|e| e.at_sample(index))?;
        }
        fs.t = cur.t;
        out = update_detailed(&fs, cur.accel.x, cur.accel.y, cfg).map_err(|e| e.at_sample(index))?;
        record(&out, &mut health);
    }

    Ok(EstimateTrajectory {
        kind: EstimatorKind::Drag,
        steps,
        health: Some(health),
    })
}
