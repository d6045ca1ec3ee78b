//! IMU synthesis from a truth trajectory.
//!
//! Gyros read body rate plus a first-order Gauss–Markov bias plus white
//! noise. Accelerometers read specific force, which for a rotor-drag
//! quadrotor is `−(T/m)·e3 − (k1/m)·(vbx, vby, 0)` in the body frame: the
//! horizontal axes see drag only, never gravity.
//!
//! Random draws come from a single ChaCha8 stream seeded by
//! [`NoiseConfig::seed`]. For every sample, in order: three bias-driving
//! draws (x, y, z; skipped for the first sample), three gyro draws, three
//! accelerometer draws. All nine are drawn even when a sigma is zero.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::truth::{TruthState, TruthTrajectory, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    /// Gyro reading (rad/s).
    pub gyro: Vec3,
    /// Accelerometer specific force (m/s²).
    pub accel: Vec3,
}

impl ImuSample {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.gyro.iter().all(|v| v.is_finite())
            && self.accel.iter().all(|v| v.is_finite())
    }
}

/// Sensor error model, per axis `[x, y, z]`.
///
/// The defaults are generic consumer-MEMS figures, not measured values:
/// gyro noise 0.01 rad/s per sample, accelerometer noise 0.05 m/s² per
/// sample, bias time constant 100 s with a stationary bias spread of
/// 0.01 rad/s, and an initial bias of 0.02 rad/s on x and y. The z gyro is
/// treated as pre-calibrated (no bias) because the drag filter does not
/// estimate it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Gyro white noise std per sample (rad/s).
    pub sigma_g: [f64; 3],
    /// Bias driving-noise density (rad/s/√s); stationary std is `σ·√(τ/2)`.
    pub sigma_bg: [f64; 3],
    /// Bias time constants (s).
    pub tau_g: [f64; 3],
    /// Accelerometer white noise std per sample (m/s²).
    pub sigma_a: [f64; 3],
    /// Gyro biases at the first sample (rad/s).
    pub bias0: [f64; 3],
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let tau = 100.0;
        let sigma_bg = 0.01 * (2.0f64 / tau).sqrt();
        Self {
            sigma_g: [0.01; 3],
            sigma_bg: [sigma_bg, sigma_bg, 0.0],
            tau_g: [tau; 3],
            sigma_a: [0.05; 3],
            bias0: [0.02, 0.02, 0.0],
            seed: 0,
        }
    }
}

impl NoiseConfig {
    /// All noise and bias terms switched off.
    pub fn noiseless() -> Self {
        Self {
            sigma_g: [0.0; 3],
            sigma_bg: [0.0; 3],
            sigma_a: [0.0; 3],
            bias0: [0.0; 3],
            ..Self::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let groups = [
            ("sigma_g", self.sigma_g),
            ("sigma_bg", self.sigma_bg),
            ("sigma_a", self.sigma_a),
        ];
        for (name, vals) in groups {
            if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        if self.tau_g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("tau_g", "must be finite and > 0"));
        }
        if self.bias0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("bias0", "must be finite"));
        }
        Ok(())
    }

    /// Stationary standard deviation of the bias process per axis.
    pub fn stationary_bias_std(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.sigma_bg[i] * (self.tau_g[i] / 2.0).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImuLog {
    pub samples: Vec<ImuSample>,
    /// Noise model that generated the log, when synthesized.
    pub noise: Option<NoiseConfig>,
    /// True gyro bias at each sample, when synthesized.
    pub true_bias: Option<Vec<Vec3>>,
}

impl ImuLog {
    pub fn from_samples(samples: Vec<ImuSample>) -> Self {
        Self {
            samples,
            noise: None,
            true_bias: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Checks that timestamps strictly increase.
    pub fn check_monotonic(&self) -> Result<()> {
        for (i, w) in self.samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::NonMonotonicTime {
                    index: i + 1,
                    prev: w[0].t,
                    next: w[1].t,
                });
            }
        }
        Ok(())
    }
}

/// Specific force an ideal body-mounted accelerometer reads at `s`.
pub fn ideal_accel(s: &TruthState, p: &VehicleParams) -> Result<Vec3> {
    let vb = s.body_velocity()?;
    let thrust = p.specific_thrust(s)?;
    let kappa = p.drag_ratio();
    Ok(Vec3::new(-kappa * vb.x, -kappa * vb.y, -thrust))
}

/// Exact discretization of `β̇ = −β/τ + w` over `dt`, driven by a standard
/// normal draw `z`.
pub fn step_bias(beta: f64, tau: f64, sigma: f64, dt: f64, z: f64) -> f64 {
    let decay = (-dt / tau).exp();
    let var = sigma * sigma * tau / 2.0 * -(-2.0 * dt / tau).exp_m1();
    decay * beta + var.sqrt() * z
}

fn draw3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    std::array::from_fn(|_| StandardNormal.sample(rng))
}

/// Synthesizes the IMU log that a vehicle flying `traj` would record.
pub fn synthesize(traj: &TruthTrajectory, p: &VehicleParams, nc: &NoiseConfig) -> Result<ImuLog> {
    if traj.is_empty() {
        return Err(Error::Empty("truth trajectory"));
    }
    nc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(nc.seed);
    let mut bias = nc.bias0;
    let mut samples = Vec::with_capacity(traj.len());
    let mut biases = Vec::with_capacity(traj.len());
    let mut prev_t = None;
    for (i, (s, rates)) in traj.states.iter().zip(&traj.rates).enumerate() {
        if let Some(t0) = prev_t {
            let z = draw3(&mut rng);
            for a in 0..3 {
                bias[a] = step_bias(bias[a], nc.tau_g[a], nc.sigma_bg[a], s.t - t0, z[a]);
            }
        }
        prev_t = Some(s.t);
        let zg = draw3(&mut rng);
        let za = draw3(&mut rng);
        let ideal = ideal_accel(s, p).map_err(|e| e.at_sample(i))?;
        let w = rates.as_vec();
        samples.push(ImuSample {
            t: s.t,
            gyro: Vec3::from_fn(|a, _| w[a] + bias[a] + nc.sigma_g[a] * zg[a]),
            accel: Vec3::from_fn(|a, _| ideal[a] + nc.sigma_a[a] * za[a]),
        });
        biases.push(Vec3::from(bias));
    }
    Ok(ImuLog {
        samples,
        noise: Some(*nc),
        true_bias: Some(biases),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{BodyRates, EulerAttitude, GRAVITY};
    use crate::truth::{simulate, ManeuverScript, Segment, ThrustMode};
    use approx::assert_abs_diff_eq;

    fn hover_traj(duration: f64, dt: f64) -> TruthTrajectory {
        let script = ManeuverScript::new(vec![Segment {
            duration,
            rates: BodyRates::ZERO,
        }])
        .unwrap();
        simulate(&script, &VehicleParams::default(), dt, TruthState::default()).unwrap()
    }

    #[test]
    fn hover_reads_minus_g() {
        let a = ideal_accel(&TruthState::default(), &VehicleParams::default()).unwrap();
        assert_eq!(a, Vec3::new(0.0, 0.0, -GRAVITY));
    }

    #[test]
    fn forward_velocity_reads_drag() {
        let p = VehicleParams {
            thrust: ThrustMode::Fixed(0.42 * GRAVITY),
            ..VehicleParams::default()
        };
        let s = TruthState {
            vel_e: Vec3::new(1.0, 0.0, 0.0),
            ..TruthState::default()
        };
        let a = ideal_accel(&s, &p).unwrap();
        assert_abs_diff_eq!(a.x, -1.357142857142857, epsilon = 1e-12);
        assert_eq!(a.y, 0.0);
    }

    #[test]
    fn tilt_at_rest_is_invisible_horizontally() {
        let s = TruthState {
            att: EulerAttitude::new(10f64.to_radians(), -10f64.to_radians(), 0.7),
            ..TruthState::default()
        };
        let a = ideal_accel(&s, &VehicleParams::default()).unwrap();
        assert_eq!((a.x, a.y), (0.0, 0.0));
    }

    #[test]
    fn ideal_accel_matches_force_model() {
        // ã = Rᵀ(V̇ − g·e3) computed through the truth derivative.
        let p = VehicleParams::default();
        let s = TruthState {
            att: EulerAttitude::new(0.15, -0.1, 0.8),
            vel_e: Vec3::new(0.7, -0.4, 0.05),
            ..TruthState::default()
        };
        let d = crate::truth::truth_derivative(&s, &p, &BodyRates::ZERO).unwrap();
        let r = crate::geom::euler_to_rotation(&s.att).unwrap();
        let oracle = r.transpose() * (d.vel_dot - Vec3::new(0.0, 0.0, GRAVITY));
        assert_abs_diff_eq!(ideal_accel(&s, &p).unwrap(), oracle, epsilon = 1e-13);
    }

    #[test]
    fn bias_without_noise_decays_exactly() {
        let (tau, dt) = (20.0, 0.01);
        let mut b = 0.02;
        for k in 1..=1000 {
            b = step_bias(b, tau, 0.0, dt, 1.234);
            let t = k as f64 * dt;
            assert_abs_diff_eq!(b, 0.02 * (-t / tau).exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn bias_small_dt_matches_euler() {
        let (beta, tau, sigma, z) = (0.03, 50.0, 0.002, 0.7);
        let mut prev = f64::INFINITY;
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let exact = step_bias(beta, tau, sigma, dt, z);
            let euler = beta - dt / tau * beta + sigma * dt.sqrt() * z;
            let diff = (exact - euler).abs();
            // Deterministic part differs at O(dt²); the noise scaling at O(dt^1.5).
            assert!(diff < 4.0 * (dt * dt * beta / (tau * tau) + sigma * dt.powf(1.5) / tau));
            assert!(diff < prev);
            prev = diff;
        }
    }

    #[test]
    fn bias_stationary_variance() {
        let (tau, sigma, dt) = (5.0, 0.01, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut b = 0.0;
        let (mut sum, mut sum2) = (0.0, 0.0);
        let n = 100_000;
        for _ in 0..1000 {
            b = step_bias(b, tau, sigma, dt, StandardNormal.sample(&mut rng));
        }
        for _ in 0..n {
            b = step_bias(b, tau, sigma, dt, StandardNormal.sample(&mut rng));
            sum += b;
            sum2 += b * b;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let expected = sigma * sigma * tau / 2.0;
        assert!((var - expected).abs() / expected < 0.05, "{var} vs {expected}");
    }

    #[test]
    fn noiseless_synthesis_is_exact() {
        let script = ManeuverScript::new(vec![
            Segment {
                duration: 1.0,
                rates: BodyRates::new(0.1, -0.05, 0.02),
            },
            Segment {
                duration: 1.0,
                rates: BodyRates::new(-0.1, 0.05, 0.0),
            },
        ])
        .unwrap();
        let p = VehicleParams::default();
        let traj = simulate(&script, &p, 0.005, TruthState::default()).unwrap();
        let log = synthesize(&traj, &p, &NoiseConfig::noiseless()).unwrap();
        for ((s, st), r) in log.samples.iter().zip(&traj.states).zip(&traj.rates) {
            assert_eq!(s.gyro, r.as_vec());
            assert_eq!(s.accel, ideal_accel(st, &p).unwrap());
        }
    }

    #[test]
    fn same_seed_same_log() {
        let traj = hover_traj(2.0, 0.005);
        let p = VehicleParams::default();
        let nc = NoiseConfig::default().with_seed(42);
        assert_eq!(synthesize(&traj, &p, &nc).unwrap(), synthesize(&traj, &p, &nc).unwrap());
        let other = synthesize(&traj, &p, &nc.with_seed(43)).unwrap();
        assert_ne!(synthesize(&traj, &p, &nc).unwrap().samples, other.samples);
    }

    #[test]
    fn empirical_noise_std() {
        let traj = hover_traj(500.0, 0.005);
        let p = VehicleParams::default();
        let nc = NoiseConfig {
            sigma_bg: [0.0; 3],
            bias0: [0.0; 3],
            ..NoiseConfig::default().with_seed(3)
        };
        let log = synthesize(&traj, &p, &nc).unwrap();
        assert!(log.len() > 100_000);
        let std = |f: &dyn Fn(&ImuSample) -> f64| {
            let n = log.len() as f64;
            let m = log.samples.iter().map(f).sum::<f64>() / n;
            (log.samples.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / n).sqrt()
        };
        assert!((std(&|s| s.gyro.x) / 0.01 - 1.0).abs() < 0.03);
        assert!((std(&|s| s.gyro.z) / 0.01 - 1.0).abs() < 0.03);
        assert!((std(&|s| s.accel.y) / 0.05 - 1.0).abs() < 0.03);
        assert!((std(&|s| s.accel.z) / 0.05 - 1.0).abs() < 0.03);
    }

    #[test]
    fn gravity_invisible_in_horizontal_axes() {
        // Arbitrary fixed tilts at zero body velocity: horizontal means vanish.
        let p = VehicleParams::default();
        let nc = NoiseConfig::default().with_seed(9);
        let n = 20_000usize;
        for (k, att) in [
            EulerAttitude::new(0.3, 0.0, 0.0),
            EulerAttitude::new(-0.2, 0.25, 1.0),
            EulerAttitude::new(0.0, -0.4, -2.0),
        ]
        .into_iter()
        .enumerate()
        {
            let states: Vec<TruthState> = (0..n)
                .map(|i| TruthState {
                    t: i as f64 * 0.005,
                    att,
                    ..TruthState::default()
                })
                .collect();
            let traj = TruthTrajectory {
                dt: 0.005,
                rates: vec![BodyRates::ZERO; n],
                states,
            };
            let log = synthesize(&traj, &p, &nc.with_seed(k as u64)).unwrap();
            let bound = 4.0 * 0.05 / (n as f64).sqrt();
            let mx = log.samples.iter().map(|s| s.accel.x).sum::<f64>() / n as f64;
            let my = log.samples.iter().map(|s| s.accel.y).sum::<f64>() / n as f64;
            assert!(mx.abs() < bound && my.abs() < bound, "{mx} {my}");
        }
    }

    #[test]
    fn recorded_bias_replays_bit_exactly() {
        let traj = hover_traj(3.0, 0.005);
        let nc = NoiseConfig {
            sigma_bg: [0.01, 0.02, 0.005],
            ..NoiseConfig::default().with_seed(77)
        };
        let log = synthesize(&traj, &VehicleParams::default(), &nc).unwrap();
        let recorded = log.true_bias.unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut bias = nc.bias0;
        let mut prev_t = None;
        for (s, rec) in traj.states.iter().zip(&recorded) {
            if let Some(t0) = prev_t {
                let z = draw3(&mut rng);
                for a in 0..3 {
                    bias[a] = step_bias(bias[a], nc.tau_g[a], nc.sigma_bg[a], s.t - t0, z[a]);
                }
            }
            prev_t = Some(s.t);
            draw3(&mut rng);
            draw3(&mut rng);
            assert_eq!(*rec, Vec3::from(bias));
        }
    }

    #[test]
    fn rejects_empty_and_bad_config() {
        let empty = TruthTrajectory {
            dt: 0.005,
            states: vec![],
            rates: vec![],
        };
        assert!(matches!(
            synthesize(&empty, &VehicleParams::default(), &NoiseConfig::default()),
            Err(Error::Empty(_))
        ));
        let bad = NoiseConfig {
            tau_g: [1.0, 0.0, 1.0],
            ..NoiseConfig::default()
        };
        assert!(synthesize(&hover_traj(1.0, 0.01), &VehicleParams::default(), &bad).is_err());
    }
}
