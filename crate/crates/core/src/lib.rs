//! Attitude and velocity estimation for quadrotors using the rotor-drag
//! relationship between body velocity and horizontal specific force, plus
//! the simulation, sensor synthesis, identification and evaluation tooling
//! around it.

pub mod ekf;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod generic;
pub mod geom;
pub mod logio;
pub mod scenario;
pub mod sensors;
pub mod sysid;
pub mod truth;

pub use ekf::{run_filter, FilterConfig, NoiseDiscretization};
pub use error::{Error, ErrorKind, Result};
pub use estimate::{EstimateStep, EstimateTrajectory, EstimatorKind};
pub use eval::{align, error_metrics, nees, MetricsReport, PairedSeries};
pub use generic::{run_generic, GenericConfig};
pub use geom::{BodyRates, EulerAttitude, GRAVITY};
pub use scenario::Scenario;
pub use sensors::{synthesize, ImuLog, ImuSample, NoiseConfig};
pub use sysid::{fit_k1, FitResult};
pub use truth::{simulate, ManeuverScript, Segment, ThrustMode, TruthState, TruthTrajectory, VehicleParams};
