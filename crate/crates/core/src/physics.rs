//! Second-by-second longitudinal power balance (drag, rolling friction,
//! inertia) and its mapping to battery-terminal power.

use serde::{Deserialize, Serialize};

use crate::cycles::DriveCycle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub name: String,
    /// Vehicle mass excluding the battery pack, kg.
    pub glider_mass: f64,
    pub pack_mass: f64,
    /// Nameplate pack energy, kWh.
    pub pack_capacity: f64,
    pub payload_mass: f64,
    pub drag_coefficient: f64,
    /// m²
    pub frontal_area: f64,
    pub rolling_resistance: f64,
    pub drivetrain_efficiency: f64,
    pub battery_efficiency: f64,
    pub regen_efficiency: f64,
    /// Mass added by automation hardware, kg.
    #[serde(default)]
    pub added_mass: f64,
    /// Upper bound on regenerated power at the battery, W. `None` means uncapped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regen_power_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl VehicleSpec {
    pub fn total_mass(&self) -> f64 {
        self.glider_mass + self.pack_mass + self.payload_mass + self.added_mass
    }

    pub fn pack_energy_wh(&self) -> f64 {
        self.pack_capacity * 1000.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("glider_mass", self.glider_mass),
            ("pack_mass", self.pack_mass),
            ("pack_capacity", self.pack_capacity),
            ("frontal_area", self.frontal_area),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid("vehicle", format!("{field} must be > 0, got {value}")));
            }
        }
        if self.payload_mass < 0.0 || self.added_mass < 0.0 {
            return Err(Error::invalid("vehicle", "masses must be non-negative"));
        }
        if !(self.drag_coefficient > 0.0 && self.drag_coefficient < 1.0) {
            return Err(Error::invalid(
                "vehicle",
                format!("drag_coefficient must lie in (0, 1), got {}", self.drag_coefficient),
            ));
        }
        if !(self.rolling_resistance >= 0.0 && self.rolling_resistance < 1.0) {
            return Err(Error::invalid("vehicle", "rolling_resistance must lie in [0, 1)"));
        }
        for (field, value) in [
            ("drivetrain_efficiency", self.drivetrain_efficiency),
            ("battery_efficiency", self.battery_efficiency),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::invalid("vehicle", format!("{field} must lie in (0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.regen_efficiency) {
            return Err(Error::invalid("vehicle", "regen_efficiency must lie in [0, 1]"));
        }
        if let Some(cap) = self.regen_power_cap {
            if !(cap >= 0.0) {
                return Err(Error::invalid("vehicle", "regen_power_cap must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// kg/m³
    pub air_density: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            air_density: 1.2,
            gravity: 9.81,
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        if !(self.air_density > 0.0 && self.gravity > 0.0) {
            return Err(Error::invalid("environment", "air_density and gravity must be > 0"));
        }
        Ok(())
    }
}

/// Wheel-side power demand, W.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TractionPower {
    pub drag: f64,
    pub friction: f64,
    pub inertia: f64,
}

impl TractionPower {
    pub fn total(&self) -> f64 {
        self.drag + self.friction + self.inertia
    }
}

/// Constant auxiliary draws of the automation stack, W.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxLoads {
    pub compute: f64,
    pub sensor: f64,
}

impl AuxLoads {
    pub fn new(compute: f64, sensor: f64) -> Self {
        Self { compute, sensor }
    }

    pub fn total(&self) -> f64 {
        self.compute + self.sensor
    }
}

pub fn traction_power(spec: &VehicleSpec, env: &Environment, v: f64, dvdt: f64) -> TractionPower {
    let mass = spec.total_mass();
    TractionPower {
        drag: 0.5 * env.air_density * spec.drag_coefficient * spec.frontal_area * v * v * v,
        friction: spec.rolling_resistance * mass * env.gravity * v,
        inertia: mass * dvdt * v,
    }
}

/// Net power at the battery terminals, W (positive discharging).
///
/// Propulsion demand is divided by both efficiencies; braking returns
/// `|demand|·η₁·η₂·η_regen`. Auxiliary loads always draw through the battery.
pub fn battery_power(spec: &VehicleSpec, traction: &TractionPower, p_compute: f64, p_sensor: f64) -> f64 {
    let demand = traction.total();
    let eta_chain = spec.drivetrain_efficiency * spec.battery_efficiency;
    let propulsion = if demand >= 0.0 {
        demand / eta_chain
    } else {
        let regen = -demand * eta_chain * spec.regen_efficiency;
        -spec.regen_power_cap.map_or(regen, |cap| regen.min(cap))
    };
    propulsion + (p_compute + p_sensor) / spec.battery_efficiency
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerRecord {
    pub p_drag: f64,
    pub p_friction: f64,
    pub p_inertia: f64,
    pub p_compute: f64,
    pub p_sensor: f64,
    pub p_battery: f64,
}

impl PowerRecord {
    pub fn traction(&self) -> f64 {
        self.p_drag + self.p_friction + self.p_inertia
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    pub dt: f64,
    /// η₂ used to map auxiliary loads onto `p_battery`.
    pub battery_efficiency: f64,
    pub records: Vec<PowerRecord>,
}

impl PowerTrace {
    /// Signed battery energy over the trace, Wh. Every sample covers one `dt`.
    pub fn trip_energy_wh(&self) -> f64 {
        self.records.iter().map(|r| r.p_battery).sum::<f64>() * self.dt / 3600.0
    }

    pub fn aux_energy_wh(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.p_compute + r.p_sensor)
            .sum::<f64>()
            * self.dt
            / 3600.0
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn trace_cycle(spec: &VehicleSpec, env: &Environment, cycle: &DriveCycle, loads: AuxLoads) -> PowerTrace {
    let records = cycle
        .speeds
        .iter()
        .zip(cycle.accelerations())
        .map(|(&v, a)| {
            let t = traction_power(spec, env, v, a);
            PowerRecord {
                p_drag: t.drag,
                p_friction: t.friction,
                p_inertia: t.inertia,
                p_compute: loads.compute,
                p_sensor: loads.sensor,
                p_battery: battery_power(spec, &t, loads.compute, loads.sensor),
            }
        })
        .collect();
    PowerTrace {
        dt: cycle.dt,
        battery_efficiency: spec.battery_efficiency,
        records,
    }
}

/// Battery energy of one pass over `cycle`, Wh. Same arithmetic as
/// `trace_cycle(..).trip_energy_wh()` without materialising the trace.
pub fn cycle_energy_wh(spec: &VehicleSpec, env: &Environment, cycle: &DriveCycle, loads: AuxLoads) -> f64 {
    let mut prev = cycle.speeds.first().copied().unwrap_or(0.0);
    let mut sum = 0.0;
    for &v in &cycle.speeds {
        let t = traction_power(spec, env, v, (v - prev) / cycle.dt);
        sum += battery_power(spec, &t, loads.compute, loads.sensor);
        prev = v;
    }
    sum * cycle.dt / 3600.0
}
