//! One-time fit of rolling resistance and regen efficiency to reference
//! ranges on the composite and city cycles.

use serde::{Deserialize, Serialize};

use crate::cycles::DriveCycle;
use crate::error::{Error, Result};
use crate::physics::{Environment, VehicleSpec};
use crate::range::{simulate_range, RangeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    /// miles
    pub composite_range: f64,
    pub city_range: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self { composite_range: 309.0, city_range: 393.0 }
    }
}

/// Frozen outcome of a calibration run. The bundled copy lives in
/// `data/calibration.json` and is mirrored into `data/vehicles/model3.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub rolling_resistance: f64,
    pub regen_efficiency: f64,
    pub drivetrain_efficiency: f64,
    pub battery_efficiency: f64,
    pub targets: CalibrationTargets,
    pub composite_range: f64,
    pub city_range: f64,
    /// Sum of squared relative range errors.
    pub objective: f64,
}

impl Calibration {
    pub fn apply(&self, spec: &VehicleSpec) -> VehicleSpec {
        VehicleSpec {
            rolling_resistance: self.rolling_resistance,
            regen_efficiency: self.regen_efficiency,
            drivetrain_efficiency: self.drivetrain_efficiency,
            battery_efficiency: self.battery_efficiency,
            ..spec.clone()
        }
    }

    pub fn composite_error(&self) -> f64 {
        self.composite_range / self.targets.composite_range - 1.0
    }

    pub fn city_error(&self) -> f64 {
        self.city_range / self.targets.city_range - 1.0
    }
}

const BUNDLED: &str = include_str!("../data/calibration.json");

pub fn bundled_calibration() -> Result<Calibration> {
    Ok(serde_json::from_str(BUNDLED)?)
}

const MU_BOUNDS: (f64, f64) = (0.005, 0.015);
const REGEN_BOUNDS: (f64, f64) = (0.2, 1.0);

/// Grid search over (rolling resistance, regen efficiency) followed by
/// successive local refinement. Drivetrain and battery efficiencies stay at
/// the values in `spec`.
pub fn calibrate(
    spec: &VehicleSpec,
    env: &Environment,
    composite: &DriveCycle,
    city: &DriveCycle,
    targets: CalibrationTargets,
) -> Result<Calibration> {
    if !(targets.composite_range > 0.0 && targets.city_range > 0.0) {
        return Err(Error::invalid("calibration targets", "must be > 0"));
    }
    let opts = RangeOptions::default();
    let eval = |mu: f64, regen: f64| -> Result<(f64, f64, f64)> {
        let s = VehicleSpec { rolling_resistance: mu, regen_efficiency: regen, ..spec.clone() };
        let a = simulate_range(&s, env, composite, None, &opts)?.range;
        let b = simulate_range(&s, env, city, None, &opts)?.range;
        let obj = (a / targets.composite_range - 1.0).powi(2) + (b / targets.city_range - 1.0).powi(2);
        Ok((a, b, obj))
    };

    let steps = 20;
    let (mut mu_lo, mut mu_hi) = MU_BOUNDS;
    let (mut re_lo, mut re_hi) = REGEN_BOUNDS;
    let mut best = (f64::NAN, f64::NAN, 0.0, 0.0, f64::INFINITY);
    for _round in 0..6 {
        for i in 0..=steps {
            let mu = mu_lo + (mu_hi - mu_lo) * i as f64 / steps as f64;
            for j in 0..=steps {
                let regen = re_lo + (re_hi - re_lo) * j as f64 / steps as f64;
                let (a, b, obj) = eval(mu, regen)?;
                if obj < best.4 {
                    best = (mu, regen, a, b, obj);
                }
            }
        }
        // Shrink the box around the incumbent, four cells each side.
        let dmu = 4.0 * (mu_hi - mu_lo) / steps as f64;
        let dre = 4.0 * (re_hi - re_lo) / steps as f64;
        mu_lo = (best.0 - dmu).max(MU_BOUNDS.0);
        mu_hi = (best.0 + dmu).min(MU_BOUNDS.1);
        re_lo = (best.1 - dre).max(REGEN_BOUNDS.0);
        re_hi = (best.1 + dre).min(REGEN_BOUNDS.1);
    }
    let (mu, regen, a, b, obj) = best;
    if !obj.is_finite() {
        return Err(Error::Numerical("calibration objective is not finite".into()));
    }
    Ok(Calibration {
        rolling_resistance: mu,
        regen_efficiency: regen,
        drivetrain_efficiency: spec.drivetrain_efficiency,
        battery_efficiency: spec.battery_efficiency,
        targets,
        composite_range: a,
        city_range: b,
        objective: obj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::bundled;
    use crate::vehicles::bundled_vehicle;

    #[test]
    fn bundled_model3_carries_frozen_constants() {
        let cal = bundled_calibration().unwrap();
        let m3 = bundled_vehicle("model3").unwrap();
        assert_eq!(cal.apply(&m3), m3);
    }

    #[test]
    fn frozen_constants_reproduce_stored_ranges() {
        let cal = bundled_calibration().unwrap();
        let m3 = bundled_vehicle("model3").unwrap();
        let env = Environment::default();
        let opts = RangeOptions::default();
        let a = simulate_range(&m3, &env, &bundled("composite").unwrap(), None, &opts).unwrap();
        let b = simulate_range(&m3, &env, &bundled("udds").unwrap(), None, &opts).unwrap();
        assert!((a.range - cal.composite_range).abs() < 1e-6);
        assert!((b.range - cal.city_range).abs() < 1e-6);
    }
}
