//! Scripted flight scenarios.
//!
//! Scenarios describe a roll/pitch profile as a function of time and are
//! turned into piecewise-constant body-rate scripts by tracking the profile
//! segment by segment, with heading held.

use crate::error::{Error, Result};
use crate::geom::{body_rates_for, euler_rate_map, BodyRates, EulerAttitude, Vec3};
use crate::truth::{ManeuverScript, Segment, TruthState};

/// Script segment length used when tracking a profile (s).
pub const SEGMENT: f64 = 0.05;

/// Default simulation step (s).
pub const DEFAULT_DT: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub script: ManeuverScript,
    pub x0: TruthState,
    pub dt: f64,
    /// Intervals of rapid attitude change plus settling time (s).
    pub transients: Vec<(f64, f64)>,
}

impl Scenario {
    pub fn duration(&self) -> f64 {
        self.script.total_duration()
    }

    /// Builtin scenario by name: `hover`, `figure8` or `reversal`.
    pub fn builtin(name: &str, duration: f64) -> Result<Self> {
        match name {
            "hover" => hover(duration),
            "figure8" | "figure-eight" => figure_eight(duration),
            "reversal" | "direction-reversal" => direction_reversal(duration),
            other => Err(Error::invalid(
                "scenario",
                format!("unknown builtin `{other}` (expected hover|figure8|reversal)"),
            )),
        }
    }

    /// Whether `t` lies inside any transient window.
    pub fn in_transient(&self, t: f64) -> bool {
        self.transients.iter().any(|(a, b)| t >= *a && t <= *b)
    }
}

pub const BUILTINS: [&str; 3] = ["hover", "figure8", "reversal"];

fn check_duration(duration: f64) -> Result<()> {
    if duration.is_finite() && duration > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("duration", format!("must be > 0, got {duration}")))
    }
}

pub fn hover(duration: f64) -> Result<Scenario> {
    check_duration(duration)?;
    Ok(Scenario {
        name: "hover".into(),
        script: ManeuverScript::new(vec![Segment {
            duration,
            rates: BodyRates::ZERO,
        }])?,
        x0: TruthState::default(),
        dt: DEFAULT_DT,
        transients: Vec::new(),
    })
}

fn propagate(att: &EulerAttitude, rates: &BodyRates, duration: f64, dt: f64) -> Result<EulerAttitude> {
    let n = (duration / dt).round().max(1.0) as usize;
    let h = duration / n as f64;
    let mut a = *att;
    for _ in 0..n {
        let k1 = euler_rate_map(&a, rates)?;
        let mid = EulerAttitude {
            phi: a.phi + 0.5 * h * k1[0],
            theta: a.theta + 0.5 * h * k1[1],
            psi: a.psi + 0.5 * h * k1[2],
        };
        let k2 = euler_rate_map(&mid, rates)?;
        a = EulerAttitude::new(a.phi + h * k2[0], a.theta + h * k2[1], a.psi + h * k2[2]);
    }
    Ok(a)
}

/// Body-rate script that follows `profile(t) = (φ, θ)` with ψ held at its
/// initial value. Each segment aims at the profile value at its end, so
/// tracking error does not accumulate.
pub fn track_profile(
    profile: impl Fn(f64) -> (f64, f64),
    duration: f64,
    segment: f64,
    dt: f64,
) -> Result<(ManeuverScript, EulerAttitude)> {
    check_duration(duration)?;
    let (phi0, theta0) = profile(0.0);
    let start = EulerAttitude::new(phi0, theta0, 0.0);
    let n = (duration / segment).ceil() as usize;
    let mut att = start;
    let mut segments = Vec::with_capacity(n);
    let mut t = 0.0;
    for k in 0..n {
        let end = ((k + 1) as f64 * segment).min(duration);
        let len = end - t;
        if len <= 1e-12 {
            break;
        }
        let (phi, theta) = profile(end);
        let euler_rates = Vec3::new((phi - att.phi) / len, (theta - att.theta) / len, (start.psi - att.psi) / len);
        let rates = body_rates_for(&att, &euler_rates)?;
        att = propagate(&att, &rates, len, dt)?;
        segments.push(Segment { duration: len, rates });
        t = end;
    }
    Ok((ManeuverScript::new(segments)?, start))
}

/// Pitch/roll amplitude of the figure-eight (rad).
pub const FIGURE_EIGHT_TILT: f64 = 0.12;
/// Figure-eight period (s).
pub const FIGURE_EIGHT_PERIOD: f64 = 12.0;

/// Lissajous tilt pattern: pitch at the base frequency, roll at twice it,
/// which traces a figure eight over the ground.
pub fn figure_eight(duration: f64) -> Result<Scenario> {
    let w = 2.0 * std::f64::consts::PI / FIGURE_EIGHT_PERIOD;
    let a = FIGURE_EIGHT_TILT;
    let (script, att0) = track_profile(
        |t| (a * (2.0 * w * t).sin(), -a * (w * t).sin()),
        duration,
        SEGMENT,
        DEFAULT_DT,
    )?;
    Ok(Scenario {
        name: "figure8".into(),
        script,
        x0: TruthState {
            att: att0,
            ..TruthState::default()
        },
        dt: DEFAULT_DT,
        transients: Vec::new(),
    })
}

pub const REVERSAL_PITCH: f64 = 0.2;
pub const REVERSAL_ROLL: f64 = 0.15;
pub const REVERSAL_RAMP: f64 = 1.0;
pub const REVERSAL_HOLD: f64 = 5.0;
pub const REVERSAL_ROLL_DELAY: f64 = 3.0;
/// Settling time appended to each ramp when forming transient windows (s).
pub const REVERSAL_SETTLE: f64 = 1.0;

/// Trapezoid between ±1 with the given ramp and hold times, starting at −1.
fn trapezoid(t: f64, ramp: f64, hold: f64) -> f64 {
    let half = ramp + hold;
    let period = 2.0 * half;
    let u = t.rem_euclid(period);
    let (sign, u) = if u < half { (1.0, u) } else { (-1.0, u - half) };
    let level = if u < ramp { -1.0 + 2.0 * u / ramp } else { 1.0 };
    sign * level
}

/// Repeated hard direction changes: a trapezoidal pitch wave and a delayed
/// trapezoidal roll wave, each reversing the tilt over one second.
pub fn direction_reversal(duration: f64) -> Result<Scenario> {
    let (ramp, hold) = (REVERSAL_RAMP, REVERSAL_HOLD);
    let profile = |t: f64| {
        let roll = if t < REVERSAL_ROLL_DELAY {
            -1.0
        } else {
            trapezoid(t - REVERSAL_ROLL_DELAY, ramp, hold)
        };
        (REVERSAL_ROLL * roll, REVERSAL_PITCH * trapezoid(t, ramp, hold))
    };
    let (script, att0) = track_profile(profile, duration, SEGMENT, DEFAULT_DT)?;
    let half = ramp + hold;
    let mut transients = Vec::new();
    for delay in [0.0, REVERSAL_ROLL_DELAY] {
        let mut start = delay;
        while start < duration {
            transients.push((start, (start + ramp + REVERSAL_SETTLE).min(duration)));
            start += half;
        }
    }
    transients.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Scenario {
        name: "reversal".into(),
        script,
        x0: TruthState {
            att: att0,
            ..TruthState::default()
        },
        dt: DEFAULT_DT,
        transients,
    })
}

/// Length of the reference scenario (s).
pub const PAPER_DURATION: f64 = 120.0;

/// Reference scenario: 120 s figure-eight at 200 Hz.
pub fn paper_scenario() -> Result<Scenario> {
    figure_eight(PAPER_DURATION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::{simulate, VehicleParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn trapezoid_shape() {
        assert_eq!(trapezoid(0.0, 1.0, 3.0), -1.0);
        assert_abs_diff_eq!(trapezoid(0.5, 1.0, 3.0), 0.0, epsilon = 1e-15);
        assert_eq!(trapezoid(2.0, 1.0, 3.0), 1.0);
        assert_abs_diff_eq!(trapezoid(4.5, 1.0, 3.0), 0.0, epsilon = 1e-15);
        assert_eq!(trapezoid(6.0, 1.0, 3.0), -1.0);
        assert_eq!(trapezoid(8.5, 1.0, 3.0), trapezoid(0.5, 1.0, 3.0));
    }

    #[test]
    fn figure_eight_tracks_profile() {
        let sc = figure_eight(24.0).unwrap();
        let traj = simulate(&sc.script, &VehicleParams::default(), sc.dt, sc.x0).unwrap();
        let w = 2.0 * std::f64::consts::PI / FIGURE_EIGHT_PERIOD;
        let mut worst = 0.0f64;
        for s in traj.states.iter().step_by(10) {
            let phi = FIGURE_EIGHT_TILT * (2.0 * w * s.t).sin();
            let theta = -FIGURE_EIGHT_TILT * (w * s.t).sin();
            worst = worst.max((s.att.phi - phi).abs()).max((s.att.theta - theta).abs());
            assert!(s.att.psi.abs() < 1e-3);
        }
        assert!(worst < 2e-3, "{worst}");
    }

    #[test]
    fn figure_eight_length() {
        let sc = paper_scenario().unwrap();
        let traj = simulate(&sc.script, &VehicleParams::default(), sc.dt, sc.x0).unwrap();
        assert_eq!(traj.len(), 24001);
    }

    #[test]
    fn reversal_is_aggressive() {
        let sc = direction_reversal(20.0).unwrap();
        let traj = simulate(&sc.script, &VehicleParams::default(), sc.dt, sc.x0).unwrap();
        let peak = traj
            .states
            .windows(2)
            .map(|w| {
                let dv = (w[1].vel_e - w[0].vel_e) / traj.dt;
                dv.x.hypot(dv.y)
            })
            .fold(0.0, f64::max);
        assert!(peak >= 2.0, "{peak}");
        assert!(sc.in_transient(0.5) && sc.in_transient(3.5) && !sc.in_transient(2.5));
    }

    #[test]
    fn hover_is_static() {
        let sc = hover(2.0).unwrap();
        let traj = simulate(&sc.script, &VehicleParams::default(), sc.dt, sc.x0).unwrap();
        assert!(traj.states.iter().all(|s| s.vel_e.norm() == 0.0));
    }

    #[test]
    fn unknown_builtin() {
        assert!(Scenario::builtin("loop", 10.0).is_err());
        assert!(hover(-1.0).is_err());
    }
}
