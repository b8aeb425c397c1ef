//! Energy, range, battery longevity and cost model for electric vehicles
//! carrying automated-driving hardware.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod automation;
pub mod calibration;
pub mod cycles;
pub mod degradation;
pub mod economics;
pub mod error;
pub mod montecarlo;
pub mod physics;
pub mod range;
pub mod smoothing;
pub mod spline;
pub mod vehicles;

pub use automation::{AutomationConfig, Lidar, LidarScenario, MassBudget, ScenarioSpace};
pub use cycles::{CycleKind, DriveCycle, SpeedUnit};
pub use error::{Error, Result};
pub use physics::{AuxLoads, Environment, PowerTrace, VehicleSpec};
pub use range::{simulate_range, RangeOptions, RangeResult};
