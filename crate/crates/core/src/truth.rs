//! Ground-truth flight simulation.
//!
//! Translational motion integrates the full rotor-drag force model in the
//! earth frame:
//!
//! ```text
//! m·V̇ = m·g·e3 − T·b3 − k1·(V − (V·b3)·b3)
//! ```
//!
//! where `b3` is the body z axis expressed in `{E}` and only the velocity
//! component lying in the propeller plane is damped. Attitude is scripted
//! kinematically from piecewise-constant body rates.

use crate::error::{Error, Result};
use crate::geom::{
    body_rates_for, euler_rate_map, euler_to_rotation, wrap_angle, BodyRates, EulerAttitude, Vec3,
    GRAVITY,
};

/// How total rotor thrust is chosen at each instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThrustMode {
    /// Thrust that keeps the vertical inertial acceleration at zero, including
    /// the vertical share of rotor drag. Reduces to `m·g/(cosφ·cosθ)` at zero
    /// velocity.
    AltitudeHold,
    /// `m·g/(cosφ·cosθ)` regardless of velocity.
    TiltTrim,
    /// Constant total thrust (N).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Mass (kg).
    pub m: f64,
    /// Lumped rotor drag `λ1·Σωi` (N·s/m).
    pub k1: f64,
    /// Gravity (m/s²).
    pub g: f64,
    pub thrust: ThrustMode,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            m: 0.42,
            k1: 0.57,
            g: GRAVITY,
            thrust: ThrustMode::AltitudeHold,
        }
    }
}

impl VehicleParams {
    pub fn drag_ratio(&self) -> f64 {
        self.k1 / self.m
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("k1", self.k1), ("g", self.g)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if let ThrustMode::Fixed(t) = self.thrust {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid("thrust", format!("must be >= 0, got {t}")));
            }
        }
        Ok(())
    }

    /// Thrust divided by mass (m/s²) at the given state.
    pub fn specific_thrust(&self, s: &TruthState) -> Result<f64> {
        match self.thrust {
            ThrustMode::Fixed(t) => Ok(t / self.m),
            ThrustMode::TiltTrim => {
                let b3z = s.att.phi.cos() * s.att.theta.cos();
                Ok(self.g / b3z)
            }
            ThrustMode::AltitudeHold => {
                let b3 = body_z_axis(&s.att)?;
                let drag_z = s.vel_e.z - s.vel_e.dot(&b3) * b3.z;
                Ok((self.g - self.drag_ratio() * drag_z) / b3.z)
            }
        }
    }
}

/// Body z axis expressed in the earth frame (third column of `R`).
pub fn body_z_axis(att: &EulerAttitude) -> Result<Vec3> {
    Ok(euler_to_rotation(att)?.column(2).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TruthState {
    pub t: f64,
    pub att: EulerAttitude,
    /// Velocity in `{E}` (m/s).
    pub vel_e: Vec3,
    /// Position in `{E}` (m).
    pub pos_e: Vec3,
}

impl TruthState {
    /// Velocity expressed in the body frame, `Rᵀ·V`.
    pub fn body_velocity(&self) -> Result<Vec3> {
        Ok(euler_to_rotation(&self.att)?.transpose() * self.vel_e)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.att.phi.is_finite()
            && self.att.theta.is_finite()
            && self.att.psi.is_finite()
            && self.vel_e.iter().all(|v| v.is_finite())
            && self.pos_e.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthDerivative {
    pub euler_rates: Vec3,
    pub vel_dot: Vec3,
    pub pos_dot: Vec3,
}

/// Time derivative of the full translational and kinematic state.
pub fn truth_derivative(
    s: &TruthState,
    p: &VehicleParams,
    rates: &BodyRates,
) -> Result<TruthDerivative> {
    let euler_rates = euler_rate_map(&s.att, rates)?;
    let b3 = body_z_axis(&s.att)?;
    let in_plane = s.vel_e - b3 * s.vel_e.dot(&b3);
    let thrust = p.specific_thrust(s)?;
    let vel_dot = Vec3::new(0.0, 0.0, p.g) - b3 * thrust - in_plane * p.drag_ratio();
    Ok(TruthDerivative {
        euler_rates,
        vel_dot,
        pos_dot: s.vel_e,
    })
}

fn advance(s: &TruthState, d: &TruthDerivative, h: f64) -> TruthState {
    TruthState {
        t: s.t + h,
        att: EulerAttitude {
            phi: s.att.phi + h * d.euler_rates[0],
            theta: s.att.theta + h * d.euler_rates[1],
            psi: s.att.psi + h * d.euler_rates[2],
        },
        vel_e: s.vel_e + d.vel_dot * h,
        pos_e: s.pos_e + d.pos_dot * h,
    }
}

/// One midpoint (second-order Runge–Kutta) step with constant body rates.
pub fn rk2_step(
    s: &TruthState,
    p: &VehicleParams,
    rates: &BodyRates,
    dt: f64,
) -> Result<TruthState> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::invalid("dt", format!("must lie in (0, 0.1], got {dt}")));
    }
    let d1 = truth_derivative(s, p, rates)?;
    let mid = advance(s, &d1, 0.5 * dt);
    let d2 = truth_derivative(&mid, p, rates)?;
    let mut next = advance(s, &d2, dt);
    next.att = next.att.wrapped();
    next.att.check_guard()?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub rates: BodyRates,
}

/// Ordered list of constant-rate segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ManeuverScript {
    pub segments: Vec<Segment>,
}

impl ManeuverScript {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let script = Self { segments };
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(Error::invalid(
                    "duration",
                    format!("segment {i} has non-positive duration {}", seg.duration),
                ));
            }
            if !seg.rates.is_finite() {
                return Err(Error::invalid("rates", format!("segment {i} has non-finite rates")));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Segment boundaries measured from the script start.
    fn boundaries(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.segments
            .iter()
            .map(|s| {
                acc += s.duration;
                acc
            })
            .collect()
    }
}

/// Uniformly sampled truth. `rates[i]` are the body rates applied from
/// `states[i].t` to the next sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTrajectory {
    pub dt: f64,
    pub states: Vec<TruthState>,
    pub rates: Vec<BodyRates>,
}

impl TruthTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

/// Integrates the script from `x0` at a fixed output step `dt`.
///
/// Segment boundaries that fall between output samples are honoured by
/// splitting the step, so the output grid stays uniform.
pub fn simulate(
    script: &ManeuverScript,
    p: &VehicleParams,
    dt: f64,
    x0: TruthState,
) -> Result<TruthTrajectory> {
    script.validate()?;
    p.validate()?;
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::invalid("dt", format!("must lie in (0, 0.1], got {dt}")));
    }
    if !x0.is_finite() {
        return Err(Error::invalid("x0", "non-finite initial state"));
    }
    x0.att
        .check_guard()
        .map_err(|e| Error::Segment { index: 0, source: Box::new(e) })?;

    let total = script.total_duration();
    let steps = if script.segments.is_empty() {
        0
    } else {
        ((total / dt) - 1e-9).ceil().max(0.0) as usize
    };
    let bounds = script.boundaries();
    let snap = 1e-9 * dt;
    let segment_at = |rel: f64| -> usize {
        bounds
            .iter()
            .position(|&b| rel < b - snap)
            .unwrap_or(script.segments.len().saturating_sub(1))
    };
    let rates_of = |k: usize| {
        script
            .segments
            .get(k)
            .map(|s| s.rates)
            .unwrap_or(BodyRates::ZERO)
    };

    let mut states = Vec::with_capacity(steps + 1);
    let mut rates = Vec::with_capacity(steps + 1);
    let mut s = x0;
    for i in 0..steps {
        let start = i as f64 * dt;
        let end = (i + 1) as f64 * dt;
        states.push(s);
        rates.push(rates_of(segment_at(start)));

        let mut rel = start;
        while rel < end - snap {
            let k = segment_at(rel);
            let stop = bounds.get(k).copied().unwrap_or(end).min(end);
            let stop = if stop <= rel + snap { end } else { stop };
            s = rk2_step(&s, p, &rates_of(k), stop - rel)
                .map_err(|e| Error::Segment { index: k, source: Box::new(e) })?;
            rel = stop;
        }
        s.t = x0.t + end;
    }
    states.push(s);
    rates.push(rates_of(segment_at(steps as f64 * dt)));
    Ok(TruthTrajectory { dt, states, rates })
}

fn attitude_step(att: &EulerAttitude, rates: &BodyRates, h: f64) -> Result<EulerAttitude> {
    let k1 = euler_rate_map(att, rates)?;
    let mid = EulerAttitude {
        phi: att.phi + 0.5 * h * k1[0],
        theta: att.theta + 0.5 * h * k1[1],
        psi: att.psi + 0.5 * h * k1[2],
    };
    let k2 = euler_rate_map(&mid, rates)?;
    Ok(EulerAttitude {
        phi: att.phi + h * k2[0],
        theta: att.theta + h * k2[1],
        psi: att.psi + h * k2[2],
    })
}

/// Constant body rates that carry each sampled attitude to the next under
/// the simulator's attitude integrator. Used when truth comes from a file,
/// which stores attitude but not rates. The last sample repeats the
/// previous rates.
pub fn infer_rates(states: &[TruthState]) -> Result<Vec<BodyRates>> {
    let mut rates = Vec::with_capacity(states.len());
    for (i, w) in states.windows(2).enumerate() {
        let (a, b) = (&w[0].att, &w[1].att);
        let h = w[1].t - w[0].t;
        let diff = |x: &EulerAttitude| {
            Vec3::new(
                wrap_angle(b.phi - x.phi),
                b.theta - x.theta,
                wrap_angle(b.psi - x.psi),
            )
        };
        let mid = EulerAttitude {
            phi: a.phi + 0.5 * wrap_angle(b.phi - a.phi),
            theta: 0.5 * (a.theta + b.theta),
            psi: a.psi + 0.5 * wrap_angle(b.psi - a.psi),
        };
        let fail = |e: Error| e.at_sample(i);
        let mut w_b = body_rates_for(&mid, &(diff(a) / h)).map_err(fail)?;
        for _ in 0..20 {
            let reached = attitude_step(a, &w_b, h).map_err(fail)?;
            let r = diff(&reached);
            if r.amax() <= 1e-15 * (1.0 + a.phi.abs().max(a.psi.abs())) {
                break;
            }
            let c = body_rates_for(&mid, &(r / h)).map_err(fail)?;
            w_b = BodyRates::new(w_b.wx + c.wx, w_b.wy + c.wy, w_b.wz + c.wz);
        }
        rates.push(w_b);
    }
    if !states.is_empty() {
        rates.push(rates.last().copied().unwrap_or(BodyRates::ZERO));
    }
    Ok(rates)
}
