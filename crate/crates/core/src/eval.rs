//! Alignment of estimates with truth, error metrics, drift and consistency
//! statistics.
//!
//! Compared channels are roll, pitch and the two body-frame horizontal
//! velocities. Truth velocity is rotated into the body frame with the truth
//! attitude so velocity errors are not contaminated by attitude errors.

use std::fmt::Write as _;

use nalgebra::{Matrix4, Vector4};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::estimate::{idx, EstimateTrajectory};
use crate::geom::{wrap_angle, EulerAttitude, Vec3};
use crate::truth::{TruthState, TruthTrajectory};

pub const CHANNELS: [&str; 4] = ["phi", "theta", "vbx", "vby"];
const STATE_INDEX: [usize; 4] = [idx::PHI, idx::THETA, idx::VBX, idx::VBY];

/// Minimum common time span for [`align`] (s).
pub const MIN_OVERLAP: f64 = 1.0;

/// Fraction of the run, from the end, used for final-window RMSE.
pub const FINAL_WINDOW: f64 = 0.25;

/// Drift is fitted over the run after this fraction of its duration.
pub const DRIFT_START: f64 = 1.0 / 3.0;

/// Drift slopes below this are reported as bounded (m/s per s).
pub const BOUNDED_DRIFT: f64 = 0.002;

/// Truth linearly interpolated at `t`, or `None` outside the trajectory.
/// Timestamps that coincide with a sample return that sample unchanged.
pub fn interpolate_truth(traj: &TruthTrajectory, t: f64) -> Option<TruthState> {
    let states = &traj.states;
    let first = states.first()?;
    let last = states.last()?;
    if t < first.t || t > last.t {
        return None;
    }
    let k = states.partition_point(|s| s.t < t);
    let hi = &states[k];
    if hi.t == t {
        return Some(*hi);
    }
    let lo = &states[k - 1];
    let w = (t - lo.t) / (hi.t - lo.t);
    let lerp = |a: f64, b: f64| a + (b - a) * w;
    let lerp_angle = |a: f64, b: f64| wrap_angle(a + wrap_angle(b - a) * w);
    Some(TruthState {
        t,
        att: EulerAttitude {
            phi: lerp_angle(lo.att.phi, hi.att.phi),
            theta: lerp(lo.att.theta, hi.att.theta),
            psi: lerp_angle(lo.att.psi, hi.att.psi),
        },
        vel_e: lo.vel_e + (hi.vel_e - lo.vel_e) * w,
        pos_e: lo.pos_e + (hi.pos_e - lo.pos_e) * w,
    })
}

/// Truth and estimate on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub t: Vec<f64>,
    /// Truth `(φ, θ, vbx, vby)`.
    pub truth: Vec<[f64; 4]>,
    /// Estimate `(φ, θ, vbx, vby)`.
    pub est: Vec<[f64; 4]>,
    /// Estimator's marginal covariance of the four channels.
    pub cov: Option<Vec<Matrix4<f64>>>,
}

impl PairedSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Estimate minus truth, with the roll difference wrapped.
    pub fn errors(&self) -> Vec<[f64; 4]> {
        self.truth
            .iter()
            .zip(&self.est)
            .map(|(tr, es)| {
                [
                    wrap_angle(es[0] - tr[0]),
                    es[1] - tr[1],
                    es[2] - tr[2],
                    es[3] - tr[3],
                ]
            })
            .collect()
    }

    /// Per-channel variances, when the estimator supplied a covariance.
    pub fn variances(&self) -> Option<Vec<[f64; 4]>> {
        self.cov
            .as_ref()
            .map(|c| c.iter().map(|m| std::array::from_fn(|i| m[(i, i)])).collect())
    }
}

/// Truth sample reduced to the compared channels.
pub fn truth_channels(s: &TruthState) -> Result<[f64; 4]> {
    let vb: Vec3 = s.body_velocity()?;
    Ok([s.att.phi, s.att.theta, vb.x, vb.y])
}

/// Pairs every estimate that falls inside the truth span with interpolated
/// truth.
pub fn align(truth: &TruthTrajectory, est: &EstimateTrajectory) -> Result<PairedSeries> {
    let (Some(t0), Some(t1)) = (truth.states.first(), truth.states.last()) else {
        return Err(Error::NoOverlap("truth trajectory is empty".into()));
    };
    let (Some(e0), Some(e1)) = (est.steps.first(), est.steps.last()) else {
        return Err(Error::NoOverlap("estimate trajectory is empty".into()));
    };
    let overlap = t1.t.min(e1.t) - t0.t.max(e0.t);
    if !(overlap >= MIN_OVERLAP) {
        return Err(Error::NoOverlap(format!(
            "truth [{:.3}, {:.3}] s vs estimate [{:.3}, {:.3}] s",
            t0.t, t1.t, e0.t, e1.t
        )));
    }
    let with_cov = est.steps.iter().all(|s| s.p.is_some());
    let mut ps = PairedSeries {
        t: Vec::new(),
        truth: Vec::new(),
        est: Vec::new(),
        cov: with_cov.then(Vec::new),
    };
    for step in &est.steps {
        let Some(tr) = interpolate_truth(truth, step.t) else {
            continue;
        };
        ps.t.push(step.t);
        ps.truth.push(truth_channels(&tr)?);
        ps.est.push(std::array::from_fn(|i| step.x[STATE_INDEX[i]]));
        if let (Some(cov), Some(p)) = (ps.cov.as_mut(), step.p.as_ref()) {
            cov.push(Matrix4::from_fn(|i, j| p[(STATE_INDEX[i], STATE_INDEX[j])]));
        }
    }
    Ok(ps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    pub rmse: f64,
    pub final_rmse: f64,
    pub max_abs: f64,
}

/// Least-squares line through a series with a 95% confidence interval on
/// the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeesSummary {
    pub mean: f64,
    pub inside_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub label: String,
    pub samples: usize,
    pub duration: f64,
    /// `(φ, θ, vbx, vby)` metrics.
    pub channels: [ChannelMetrics; 4],
    /// Total velocity error `|e_vx| + |e_vy|`.
    pub total_velocity: ChannelMetrics,
    /// Trend of the total velocity error over the latter part of the run.
    pub drift: LineFit,
    pub nees: Option<NeesSummary>,
}

impl MetricsReport {
    pub fn drift_bounded(&self) -> bool {
        self.drift.slope.abs() < BOUNDED_DRIFT
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v * v));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn channel_metrics(t: &[f64], e: &[f64], final_start: f64) -> ChannelMetrics {
    ChannelMetrics {
        rmse: rms(e.iter().copied()),
        final_rmse: rms(t.iter().zip(e).filter(|(t, _)| **t >= final_start).map(|(_, e)| *e)),
        max_abs: e.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Ordinary least-squares fit of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len().min(y.len());
    if n < 2 {
        let c = y.first().copied().unwrap_or(0.0);
        return LineFit {
            slope: 0.0,
            intercept: c,
            ci95: (0.0, 0.0),
        };
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx == 0.0 {
        return LineFit {
            slope: 0.0,
            intercept: my,
            ci95: (0.0, 0.0),
        };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half = if n > 2 {
        let sse: f64 = (0..n)
            .map(|i| (y[i] - intercept - slope * x[i]).powi(2))
            .sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        student_t_975(n - 2) * se
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        ci95: (slope - half, slope + half),
    }
}

fn student_t_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(1.959963984540054)
}

/// Mean of independent samples with a two-sided 95% Student-t interval.
pub fn mean_ci95(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = student_t_975(n - 1) * (var / n as f64).sqrt();
    (mean, mean - half, mean + half)
}

/// Total velocity error series `|e_vx| + |e_vy|`.
pub fn total_velocity_error(ps: &PairedSeries) -> Vec<f64> {
    ps.errors().iter().map(|e| e[2].abs() + e[3].abs()).collect()
}

pub fn error_metrics(ps: &PairedSeries, label: &str) -> Result<MetricsReport> {
    if ps.is_empty() {
        return Err(Error::Empty("paired series"));
    }
    let t0 = ps.t[0];
    let t1 = *ps.t.last().unwrap();
    let duration = t1 - t0;
    // Windows are chosen on time since start, with slack for rounding, so
    // they do not depend on the absolute time origin.
    let slack = 1e-9 * duration.max(f64::MIN_POSITIVE);
    let rel: Vec<f64> = ps.t.iter().map(|t| t - t0).collect();
    let final_start = (1.0 - FINAL_WINDOW) * duration - slack;
    let errors = ps.errors();
    let channels = std::array::from_fn(|c| {
        let e: Vec<f64> = errors.iter().map(|e| e[c]).collect();
        channel_metrics(&rel, &e, final_start)
    });
    let total = total_velocity_error(ps);
    let drift_start = DRIFT_START * duration - slack;
    let (dt, dv): (Vec<f64>, Vec<f64>) = rel
        .iter()
        .zip(&total)
        .filter(|(t, _)| **t >= drift_start)
        .map(|(t, v)| (*t, *v))
        .unzip();
    let nees = match nees(ps) {
        Ok(n) => Some(NeesSummary {
            mean: n.mean,
            inside_fraction: n.inside_fraction,
        }),
        Err(Error::MissingVariance(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        label: label.to_string(),
        samples: ps.len(),
        duration,
        channels,
        total_velocity: channel_metrics(&rel, &total, final_start),
        drift: fit_line(&dt, &dv),
        nees,
    })
}

/// 95% upper bound of a chi-square variable with four degrees of freedom.
pub fn nees_bound() -> f64 {
    ChiSquared::new(4.0)
        .map(|d| d.inverse_cdf(0.95))
        .unwrap_or(9.487729036781154)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeesSeries {
    pub values: Vec<f64>,
    pub mean: f64,
    pub bound: f64,
    pub inside_fraction: f64,
}

/// Normalized estimation error squared over `(φ, θ, vbx, vby)` per step,
/// and the fraction of steps at or below the chi-square(4) 95% bound.
pub fn nees(ps: &PairedSeries) -> Result<NeesSeries> {
    let cov = ps.cov.as_ref().ok_or(Error::MissingVariance("phi"))?;
    let bound = nees_bound();
    let mut values = Vec::with_capacity(ps.len());
    for (e, p) in ps.errors().iter().zip(cov) {
        let e = Vector4::from(*e);
        let value = if e.iter().all(|v| *v == 0.0) {
            0.0
        } else {
            let chol = p.cholesky().ok_or(Error::NotPositiveDefinite {
                min_eigenvalue: crate::geom::min_eigenvalue(p),
            })?;
            e.dot(&chol.solve(&e))
        };
        values.push(value);
    }
    let n = values.len().max(1) as f64;
    let inside = values.iter().filter(|v| **v <= bound).count() as f64;
    Ok(NeesSeries {
        mean: values.iter().sum::<f64>() / n,
        bound,
        inside_fraction: if values.is_empty() { 1.0 } else { inside / n },
        values,
    })
}

fn fmt_channel(out: &mut String, name: &str, m: &ChannelMetrics) {
    let _ = writeln!(
        out,
        "  {name:<6} rmse={:.6e} final_rmse={:.6e} max_abs={:.6e}",
        m.rmse, m.final_rmse, m.max_abs
    );
}

impl MetricsReport {
    /// Human-readable block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "[{}] samples={} duration={:.3}s",
            self.label, self.samples, self.duration
        );
        for (name, m) in CHANNELS.iter().zip(&self.channels) {
            fmt_channel(&mut out, name, m);
        }
        fmt_channel(&mut out, "vtotal", &self.total_velocity);
        let _ = writeln!(
            out,
            "  drift slope={:.6e} m/s/s ci95=[{:.6e}, {:.6e}] drift: {}",
            self.drift.slope,
            self.drift.ci95.0,
            self.drift.ci95.1,
            if self.drift_bounded() { "bounded" } else { "growing" }
        );
        if let Some(n) = &self.nees {
            let _ = writeln!(out, "  nees mean={:.4} inside_95={:.4}", n.mean, n.inside_fraction);
        }
        out
    }

    /// Flat `key=value` lines, prefixed with the report label.
    pub fn to_kv(&self) -> Vec<(String, f64)> {
        let mut kv = vec![
            (format!("{}.samples", self.label), self.samples as f64),
            (format!("{}.duration", self.label), self.duration),
        ];
        let all = CHANNELS
            .iter()
            .copied()
            .zip(self.channels.iter())
            .chain(std::iter::once(("vtotal", &self.total_velocity)));
        for (name, m) in all {
            kv.push((format!("{}.{name}.rmse", self.label), m.rmse));
            kv.push((format!("{}.{name}.final_rmse", self.label), m.final_rmse));
            kv.push((format!("{}.{name}.max_abs", self.label), m.max_abs));
        }
        kv.push((format!("{}.drift.slope", self.label), self.drift.slope));
        kv.push((format!("{}.drift.ci95_lo", self.label), self.drift.ci95.0));
        kv.push((format!("{}.drift.ci95_hi", self.label), self.drift.ci95.1));
        if let Some(n) = &self.nees {
            kv.push((format!("{}.nees.mean", self.label), n.mean));
            kv.push((format!("{}.nees.inside_fraction", self.label), n.inside_fraction));
        }
        kv
    }
}

/// Side-by-side comparison of two estimators against the same truth.
pub fn comparison_report(a: &MetricsReport, b: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str("# comparison report\n## metrics\n");
    out.push_str(&a.to_text());
    out.push_str(&b.to_text());
    out.push_str("## deltas (b - a)\n");
    for (name, (ma, mb)) in CHANNELS.iter().zip(a.channels.iter().zip(&b.channels)) {
        let _ = writeln!(
            out,
            "  {name:<6} d_rmse={:.6e} d_final_rmse={:.6e}",
            mb.rmse - ma.rmse,
            mb.final_rmse - ma.final_rmse
        );
    }
    let _ = writeln!(
        out,
        "  vtotal d_rmse={:.6e} d_final_rmse={:.6e}",
        b.total_velocity.rmse - a.total_velocity.rmse,
        b.total_velocity.final_rmse - a.total_velocity.final_rmse
    );
    let _ = writeln!(out, "  d_drift_slope={:.6e}", b.drift.slope - a.drift.slope);
    out.push_str("## machine\n");
    for (k, v) in a.to_kv().into_iter().chain(b.to_kv()) {
        let _ = writeln!(out, "{k}={v:.16e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{EstimateStep, EstimatorKind};
    use crate::geom::{Mat6, Vec6};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn series(t: Vec<f64>, truth: Vec<[f64; 4]>, est: Vec<[f64; 4]>) -> PairedSeries {
        PairedSeries {
            t,
            truth,
            est,
            cov: None,
        }
    }

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    fn level_truth(times: &[f64], vel: impl Fn(f64) -> Vec3) -> TruthTrajectory {
        TruthTrajectory {
            dt: times[1] - times[0],
            states: times
                .iter()
                .map(|&t| TruthState {
                    t,
                    vel_e: vel(t),
                    ..TruthState::default()
                })
                .collect(),
            rates: vec![Default::default(); times.len()],
        }
    }

    fn estimate_on(times: &[f64], f: impl Fn(f64) -> Vec6) -> EstimateTrajectory {
        EstimateTrajectory {
            kind: EstimatorKind::Drag,
            steps: times
                .iter()
                .map(|&t| EstimateStep {
                    t,
                    x: f(t),
                    p: Some(Mat6::identity()),
                    innovation: None,
                })
                .collect(),
            health: None,
        }
    }

    #[test]
    fn identical_grids_pass_through() {
        let t = grid(300, 0.01);
        let truth = level_truth(&t, |t| Vec3::new(t.sin(), 0.5, 0.0));
        let est = estimate_on(&t, |t| Vec6::new(0.0, 0.0, 0.0, 0.0, t.sin(), 0.5));
        let ps = align(&truth, &est).unwrap();
        assert_eq!(ps.t, t);
        for (tr, es) in ps.truth.iter().zip(&ps.est) {
            assert_eq!(tr, es);
        }
        assert!(ps.cov.is_some());
    }

    #[test]
    fn interpolation_error_is_second_order() {
        // Truth at 100 Hz, estimates at 200 Hz, velocity sin(2t).
        let mut worst = vec![];
        for dt in [0.02, 0.01] {
            let t = grid((4.0 / dt) as usize + 1, dt);
            let truth = level_truth(&t, |t| Vec3::new((2.0 * t).sin(), 0.0, 0.0));
            let te = grid((4.0 / (dt / 2.0)) as usize + 1, dt / 2.0);
            let est = estimate_on(&te, |_| Vec6::zeros());
            let ps = align(&truth, &est).unwrap();
            let w = ps
                .t
                .iter()
                .zip(&ps.truth)
                .map(|(t, tr)| (tr[2] - (2.0 * t).sin()).abs())
                .fold(0.0, f64::max);
            assert!(w <= 4.0 * dt * dt / 8.0 + 1e-15);
            worst.push(w);
        }
        assert!((worst[0] / worst[1]).log2() > 1.8);
    }

    #[test]
    fn disjoint_ranges_rejected() {
        let truth = level_truth(&grid(100, 0.01), |_| Vec3::zeros());
        let later: Vec<f64> = grid(100, 0.01).iter().map(|t| t + 5.0).collect();
        let est = estimate_on(&later, |_| Vec6::zeros());
        assert!(matches!(align(&truth, &est), Err(Error::NoOverlap(_))));
    }

    #[test]
    fn perfect_estimate_has_zero_metrics() {
        let t = grid(1000, 0.01);
        let v = vec![[0.1, -0.2, 0.5, 0.3]; 1000];
        let m = error_metrics(&series(t, v.clone(), v), "x").unwrap();
        assert!(m.channels.iter().all(|c| c.rmse == 0.0 && c.max_abs == 0.0));
        assert_eq!(m.drift.slope, 0.0);
        assert!(m.nees.is_none());
    }

    #[test]
    fn constant_offset() {
        let t = grid(1000, 0.01);
        let truth = vec![[0.0; 4]; 1000];
        let est = vec![[0.0, 0.0, 0.1, 0.0]; 1000];
        let m = error_metrics(&series(t, truth, est), "x").unwrap();
        assert_abs_diff_eq!(m.channels[2].rmse, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m.channels[2].final_rmse, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m.drift.slope, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn linear_error_gives_exact_slope() {
        let t = grid(2001, 0.01);
        let truth = vec![[0.0; 4]; t.len()];
        let est = t.iter().map(|t| [0.0, 0.0, 0.01 * t, 0.0]).collect();
        let m = error_metrics(&series(t, truth, est), "x").unwrap();
        assert_abs_diff_eq!(m.drift.slope, 0.01, epsilon = 1e-9);
        assert!(!m.drift_bounded());
    }

    #[test]
    fn nees_zero_error() {
        let t = grid(10, 0.01);
        let mut ps = series(t, vec![[0.0; 4]; 10], vec![[0.0; 4]; 10]);
        ps.cov = Some(vec![Matrix4::identity() * 0.01; 10]);
        let n = nees(&ps).unwrap();
        assert!(n.values.iter().all(|v| *v == 0.0));
        assert_eq!(n.inside_fraction, 1.0);
    }

    #[test]
    fn nees_requires_covariance() {
        let ps = series(grid(3, 0.1), vec![[0.0; 4]; 3], vec![[0.0; 4]; 3]);
        assert!(matches!(nees(&ps), Err(Error::MissingVariance(_))));
    }

    fn sampled_series(n: usize, scale: f64, seed: u64) -> PairedSeries {
        // Errors drawn from N(0, C) via the Cholesky factor of a correlated C.
        let c = Matrix4::new(
            0.04, 0.01, 0.0, 0.002, 0.01, 0.09, 0.003, 0.0, 0.0, 0.003, 0.25, 0.05, 0.002, 0.0, 0.05,
            0.16,
        );
        let l = c.cholesky().unwrap().l();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut est = Vec::with_capacity(n);
        for _ in 0..n {
            let z = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let e = l * z * scale;
            est.push([e[0], e[1], e[2], e[3]]);
        }
        PairedSeries {
            t: grid(n, 0.005),
            truth: vec![[0.0; 4]; n],
            est,
            cov: Some(vec![c; n]),
        }
    }

    #[test]
    fn nees_of_consistent_errors() {
        let n = nees(&sampled_series(100_000, 1.0, 4)).unwrap();
        assert!((n.inside_fraction - 0.95).abs() < 0.02, "{}", n.inside_fraction);
        assert!((n.mean - 4.0).abs() < 0.1);
    }

    #[test]
    fn nees_of_overconfident_errors() {
        let n = nees(&sampled_series(20_000, 10.0, 5)).unwrap();
        assert!(n.inside_fraction < 0.05);
    }

    #[test]
    fn nees_bound_value() {
        assert_abs_diff_eq!(nees_bound(), 9.487729036781154, epsilon = 1e-9);
    }

    #[test]
    fn monte_carlo_interval() {
        let (m, lo, hi) = mean_ci95(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // t(0.975, 3) = 3.182446, s/√n = 0.645497
        assert_abs_diff_eq!(hi - m, 3.182446305284263 * 0.6454972243679028, epsilon = 1e-9);
        assert_abs_diff_eq!(m - lo, hi - m, epsilon = 1e-12);
    }

    #[test]
    fn comparison_of_identical_estimates_has_zero_deltas() {
        let t = grid(500, 0.01);
        let truth = vec![[0.0; 4]; 500];
        let est: Vec<[f64; 4]> = t.iter().map(|t| [0.01 * t.sin(), 0.0, 0.1, -0.05]).collect();
        let m = error_metrics(&series(t, truth, est), "a").unwrap();
        let text = comparison_report(&m, &m);
        for line in text.lines().filter(|l| l.contains("d_")) {
            for tok in line.split_whitespace().filter(|t| t.contains('=')) {
                let v: f64 = tok.split('=').nth(1).unwrap().parse().unwrap();
                assert_eq!(v, 0.0, "{line}");
            }
        }
    }

    proptest! {
        #[test]
        fn metrics_invariant_under_time_shift(shift in -100.0f64..100.0, seed in 0u64..50) {
            let ps = sampled_series(400, 0.5, seed);
            let mut shifted = ps.clone();
            shifted.t.iter_mut().for_each(|t| *t += shift);
            let a = error_metrics(&ps, "a").unwrap();
            let b = error_metrics(&shifted, "a").unwrap();
            for c in 0..4 {
                prop_assert!((a.channels[c].rmse - b.channels[c].rmse).abs() < 1e-12);
            }
            prop_assert!((a.drift.slope - b.drift.slope).abs() < 1e-9);
        }

        #[test]
        fn rmse_triangle_inequality(seed_a in 0u64..100, seed_b in 100u64..200) {
            let a = sampled_series(300, 1.0, seed_a);
            let b = sampled_series(300, 1.0, seed_b);
            let mut sum = a.clone();
            for (s, e) in sum.est.iter_mut().zip(&b.est) {
                for c in 0..4 {
                    s[c] += e[c];
                }
            }
            let (ma, mb, ms) = (
                error_metrics(&a, "a").unwrap(),
                error_metrics(&b, "b").unwrap(),
                error_metrics(&sum, "s").unwrap(),
            );
            for c in 1..4 {
                prop_assert!(ms.channels[c].rmse <= ma.channels[c].rmse + mb.channels[c].rmse + 1e-12);
            }
        }
    }
}
