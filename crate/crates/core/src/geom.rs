//! Euler-angle geometry and the small fixed-size linear algebra used across
//! the crate.
//!
//! Frames follow the north-east-down convention: the earth frame `{E}` has
//! `z` pointing down, so gravity is `+g` along `e3` and thrust acts along
//! `-b3`. Attitude is the Z-Y-X (yaw, pitch, roll) Euler sequence and
//! [`euler_to_rotation`] maps body-frame vectors into the earth frame.

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vec3 = SVector<f64, 3>;
pub type Mat3 = SMatrix<f64, 3, 3>;
pub type Vec6 = SVector<f64, 6>;
pub type Mat6 = SMatrix<f64, 6, 6>;

/// Standard gravity (m/s²).
pub const GRAVITY: f64 = 9.80665;

/// Largest pitch magnitude accepted by the Euler-rate kinematics (85°).
pub const THETA_GUARD: f64 = 85.0 * std::f64::consts::PI / 180.0;

/// Pitch limit for building a rotation matrix.
pub const ROTATION_THETA_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - 1e-6;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    if a > -PI && a <= PI {
        return a;
    }
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAttitude {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAttitude {
    /// Builds an attitude with roll and yaw wrapped into `(-π, π]`.
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self {
            phi: wrap_angle(phi),
            theta,
            psi: wrap_angle(psi),
        }
    }

    pub fn wrapped(self) -> Self {
        Self::new(self.phi, self.theta, self.psi)
    }

    pub fn check_guard(&self) -> Result<()> {
        check_theta(self.theta, THETA_GUARD)
    }
}

/// Body angular rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyRates {
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
}

impl BodyRates {
    pub const ZERO: BodyRates = BodyRates {
        wx: 0.0,
        wy: 0.0,
        wz: 0.0,
    };

    pub fn new(wx: f64, wy: f64, wz: f64) -> Self {
        Self { wx, wy, wz }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.wx, self.wy, self.wz)
    }

    pub fn is_finite(&self) -> bool {
        self.wx.is_finite() && self.wy.is_finite() && self.wz.is_finite()
    }
}

fn check_theta(theta: f64, limit: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() > limit {
        return Err(Error::SingularAttitude { theta, limit });
    }
    Ok(())
}

/// Rotation from the body frame to the earth frame, `R = Rz(ψ)·Ry(θ)·Rx(φ)`.
pub fn euler_to_rotation(att: &EulerAttitude) -> Result<Mat3> {
    if !att.theta.is_finite() || att.theta.abs() >= ROTATION_THETA_LIMIT {
        return Err(Error::SingularAttitude {
            theta: att.theta,
            limit: ROTATION_THETA_LIMIT,
        });
    }
    let (sf, cf) = att.phi.sin_cos();
    let (st, ct) = att.theta.sin_cos();
    let (sp, cp) = att.psi.sin_cos();
    Ok(Mat3::new(
        ct * cp,
        sf * st * cp - cf * sp,
        cf * st * cp + sf * sp,
        ct * sp,
        sf * st * sp + cf * cp,
        cf * st * sp - sf * cp,
        -st,
        sf * ct,
        cf * ct,
    ))
}

/// Matrix mapping body rates to Euler-angle rates.
pub fn euler_rate_matrix(att: &EulerAttitude) -> Result<Mat3> {
    att.check_guard()?;
    let (sf, cf) = att.phi.sin_cos();
    let (tt, ct) = (att.theta.tan(), att.theta.cos());
    Ok(Mat3::new(
        1.0,
        tt * sf,
        tt * cf,
        0.0,
        cf,
        -sf,
        0.0,
        sf / ct,
        cf / ct,
    ))
}

/// Euler-angle rates `(φ̇, θ̇, ψ̇)` produced by body rates at the given attitude.
pub fn euler_rate_map(att: &EulerAttitude, rates: &BodyRates) -> Result<Vec3> {
    att.check_guard()?;
    let (sf, cf) = att.phi.sin_cos();
    let (tt, ct) = (att.theta.tan(), att.theta.cos());
    let BodyRates { wx, wy, wz } = *rates;
    Ok(Vec3::new(
        wx + tt * sf * wy + tt * cf * wz,
        cf * wy - sf * wz,
        (sf * wy + cf * wz) / ct,
    ))
}

/// Body rates that produce the requested Euler-angle rates (inverse kinematics).
pub fn body_rates_for(att: &EulerAttitude, euler_rates: &Vec3) -> Result<BodyRates> {
    att.check_guard()?;
    let (sf, cf) = att.phi.sin_cos();
    let (st, ct) = att.theta.sin_cos();
    let (dphi, dtheta, dpsi) = (euler_rates[0], euler_rates[1], euler_rates[2]);
    Ok(BodyRates::new(
        dphi - st * dpsi,
        cf * dtheta + sf * ct * dpsi,
        -sf * dtheta + cf * ct * dpsi,
    ))
}

pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute difference between `m[i][j]` and `m[j][i]`.
pub fn max_asymmetry<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in (i + 1)..N {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let s = symmetrize(m);
    SymmetricEigen::new(DMatrix::from_column_slice(N, N, s.as_slice()))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_positive_definite<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    m.cholesky().is_some()
}
