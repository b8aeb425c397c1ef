//! Automation hardware configurations and how they modify a vehicle.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{AuxLoads, VehicleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lidar {
    SpinningRoof,
    SolidState,
    None,
}

impl FromStr for Lidar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "roof" | "spinning" | "spinning_roof" => Ok(Lidar::SpinningRoof),
            "solid" | "solid_state" => Ok(Lidar::SolidState),
            "none" => Ok(Lidar::None),
            other => Err(Error::invalid("lidar", other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomationConfig {
    /// Sensor and connectivity draw, W.
    pub sensor_power: f64,
    /// Computing platform draw, W.
    pub compute_power: f64,
    /// `1 +` fractional drag-coefficient increase.
    pub drag_multiplier: f64,
    /// kg
    pub added_mass: f64,
    /// Energy savings of the smoothed profile, fraction.
    pub smoothing_savings: f64,
    pub lidar: Lidar,
}

impl AutomationConfig {
    /// No automation at all: the identity on a vehicle.
    pub fn null() -> Self {
        Self {
            sensor_power: 0.0,
            compute_power: 0.0,
            drag_multiplier: 1.0,
            added_mass: 0.0,
            smoothing_savings: 0.0,
            lidar: Lidar::None,
        }
    }

    pub fn loads(&self) -> AuxLoads {
        AuxLoads::new(self.compute_power, self.sensor_power)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::invalid("automation config", msg)) };
        check(
            (0.0..=500.0).contains(&self.sensor_power),
            format!("sensor_power {} W not in [0, 500]", self.sensor_power),
        )?;
        check(
            (0.0..=5000.0).contains(&self.compute_power),
            format!("compute_power {} W not in [0, 5000]", self.compute_power),
        )?;
        check(
            (1.0..=1.5).contains(&self.drag_multiplier),
            format!("drag_multiplier {} not in [1.0, 1.5]", self.drag_multiplier),
        )?;
        check(
            self.lidar == Lidar::SpinningRoof || self.drag_multiplier == 1.0,
            "only a spinning roof LiDAR increases drag".to_string(),
        )?;
        check(
            self.added_mass >= 0.0 && self.added_mass.is_finite(),
            format!("added_mass {} must be >= 0", self.added_mass),
        )?;
        check(
            (0.0..=0.25).contains(&self.smoothing_savings),
            format!("smoothing_savings {} not in [0, 0.25]", self.smoothing_savings),
        )
    }

    /// Vehicle with the automation's drag and mass deltas applied. The
    /// electrical loads travel separately via [`AutomationConfig::loads`].
    pub fn apply(&self, spec: &VehicleSpec) -> VehicleSpec {
        VehicleSpec {
            drag_coefficient: spec.drag_coefficient * self.drag_multiplier,
            added_mass: spec.added_mass + self.added_mass,
            ..spec.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LidarScenario {
    WithLidar,
    WithoutLidar,
}

impl FromStr for LidarScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "with-lidar" | "lidar" => Ok(LidarScenario::WithLidar),
            "without-lidar" | "no-lidar" => Ok(LidarScenario::WithoutLidar),
            other => Err(Error::invalid("lidar scenario", other.to_string())),
        }
    }
}

/// Bounds of the uncertain automation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpace {
    pub sensor_bounds: [f64; 2],
    pub compute_bounds: [f64; 2],
    /// Fractional drag increase for a roof LiDAR.
    pub drag_bounds: [f64; 2],
    pub savings_bounds: [f64; 2],
    pub lidar_scenario: LidarScenario,
}

impl ScenarioSpace {
    pub fn new(lidar_scenario: LidarScenario) -> Self {
        Self {
            sensor_bounds: [30.0, 150.0],
            compute_bounds: [150.0, 1000.0],
            drag_bounds: [0.15, 0.40],
            savings_bounds: [0.05, 0.25],
            lidar_scenario,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("sensor_bounds", self.sensor_bounds),
            ("compute_bounds", self.compute_bounds),
            ("drag_bounds", self.drag_bounds),
            ("savings_bounds", self.savings_bounds),
        ] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid("scenario", format!("{name} [{lo}, {hi}] is not ordered")));
            }
        }
        if self.savings_bounds[0] < 0.0 || self.savings_bounds[1] > 0.25 {
            return Err(Error::invalid("scenario", "savings bounds must lie within [0, 0.25]"));
        }
        if self.drag_bounds[0] < 0.0 || self.drag_bounds[1] > 0.5 {
            return Err(Error::invalid("scenario", "drag bounds must lie within [0, 0.5]"));
        }
        Ok(())
    }
}

/// Compute load implied by the sensor load: the affine map of
/// `sensor_bounds` onto `compute_bounds`.
pub fn coupled_compute(sensor_power: f64, space: &ScenarioSpace) -> Result<f64> {
    let [s_lo, s_hi] = space.sensor_bounds;
    let [c_lo, c_hi] = space.compute_bounds;
    if !(s_lo..=s_hi).contains(&sensor_power) {
        return Err(Error::invalid(
            "sensor power",
            format!("{sensor_power} W outside [{s_lo}, {s_hi}]"),
        ));
    }
    if s_hi == s_lo {
        return Ok(c_lo);
    }
    Ok(c_lo + (sensor_power - s_lo) * (c_hi - c_lo) / (s_hi - s_lo))
}

/// Hardware masses used when a configuration does not state its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBudget {
    pub lidar_kg: f64,
    /// Compute platform mass at `compute_low_w` and `compute_high_w`.
    pub compute_low_kg: f64,
    pub compute_high_kg: f64,
    pub compute_low_w: f64,
    pub compute_high_w: f64,
    /// Radar, cameras and wiring.
    pub sensors_kg: f64,
}

impl Default for MassBudget {
    fn default() -> Self {
        Self {
            lidar_kg: 10.0,
            compute_low_kg: 5.0,
            compute_high_kg: 15.0,
            compute_low_w: 150.0,
            compute_high_w: 1000.0,
            sensors_kg: 7.5,
        }
    }
}

impl MassBudget {
    pub fn compute_mass(&self, compute_w: f64) -> f64 {
        let span = self.compute_high_w - self.compute_low_w;
        let frac = ((compute_w - self.compute_low_w) / span).clamp(0.0, 1.0);
        self.compute_low_kg + frac * (self.compute_high_kg - self.compute_low_kg)
    }

    pub fn added_mass(&self, lidar: Lidar, compute_w: f64) -> f64 {
        let lidar_kg = match lidar {
            Lidar::SpinningRoof | Lidar::SolidState => self.lidar_kg,
            Lidar::None => 0.0,
        };
        lidar_kg + self.compute_mass(compute_w) + self.sensors_kg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareComponent {
    pub name: String,
    pub count: u32,
    pub watts_each: f64,
}

/// A named sensor/connectivity package.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwarePreset {
    pub name: String,
    pub description: String,
    pub lidar: Lidar,
    pub components: Vec<HardwareComponent>,
}

impl HardwarePreset {
    pub fn sensor_power(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.count as f64 * c.watts_each)
            .sum()
    }
}

const PRESETS_JSON: &str = include_str!("../data/presets/hardware.json");

pub fn bundled_presets() -> Result<Vec<HardwarePreset>> {
    Ok(serde_json::from_str(PRESETS_JSON)?)
}
