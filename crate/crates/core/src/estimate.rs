//! Estimator output shared by the drag filter and the generic baseline.

use crate::geom::{Mat6, Vec6};

/// Indices into the six-element state `(φ, θ, βgx, βgy, vbx, vby)`.
pub mod idx {
    pub const PHI: usize = 0;
    pub const THETA: usize = 1;
    pub const BGX: usize = 2;
    pub const BGY: usize = 3;
    pub const VBX: usize = 4;
    pub const VBY: usize = 5;
}

/// Which estimator produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Drag,
    Generic,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Drag => "drag",
            EstimatorKind::Generic => "generic",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drag" => Ok(EstimatorKind::Drag),
            "generic" => Ok(EstimatorKind::Generic),
            other => Err(format!("unknown estimator `{other}` (expected drag|generic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateStep {
    pub t: f64,
    pub x: Vec6,
    /// State covariance, when the estimator tracks one.
    pub p: Option<Mat6>,
    /// Accelerometer innovation `z − H·x̂⁻` (m/s²).
    pub innovation: Option<[f64; 2]>,
}

/// Worst covariance health seen over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceHealth {
    pub max_asymmetry: f64,
    pub min_eigenvalue: f64,
}

impl Default for CovarianceHealth {
    fn default() -> Self {
        Self {
            max_asymmetry: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTrajectory {
    pub kind: EstimatorKind,
    pub steps: Vec<EstimateStep>,
    pub health: Option<CovarianceHealth>,
}

impl EstimateTrajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.t).collect()
    }
}
