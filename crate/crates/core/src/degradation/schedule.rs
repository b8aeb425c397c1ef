//! The repeating 24 h day: drive, optional wait, CC-CV charge, rest.

use serde::{Deserialize, Serialize};

use super::transfer::transfer_braking_loads;
use crate::automation::AutomationConfig;
use crate::cycles::{DriveCycle, METERS_PER_MILE};
use crate::error::{Error, Result};
use crate::physics::{trace_cycle, AuxLoads, Environment, PowerTrace, VehicleSpec};
use crate::smoothing::smooth_to_target;

pub const DAY_S: f64 = 86_400.0;
/// Rest segments advance in steps of this length.
pub const REST_STEP_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySchedule {
    pub daily_miles: f64,
    /// Driven profile, smoothed when the automation says so.
    pub cycle: DriveCycle,
    /// One pass of `cycle` with braking loads transferred.
    pub power_trace: PowerTrace,
    /// Charger power at the pack, kW.
    pub charge_power: f64,
    /// Idle time between arriving and plugging in, s.
    #[serde(default)]
    pub charge_delay: f64,
    /// Seconds of driving per day; the trace repeats until `daily_miles`.
    pub drive_seconds: usize,
}

impl DailySchedule {
    pub fn new(daily_miles: f64, cycle: DriveCycle, power_trace: PowerTrace, charge_power: f64) -> Result<Self> {
        if !(daily_miles > 0.0 && daily_miles.is_finite()) {
            return Err(Error::invalid("daily_miles", format!("{daily_miles} must be > 0")));
        }
        if !(charge_power > 0.0 && charge_power.is_finite()) {
            return Err(Error::invalid("charge_power", format!("{charge_power} kW must be > 0")));
        }
        if power_trace.len() != cycle.len() {
            return Err(Error::invalid("power trace", "not aligned with the cycle"));
        }
        let per_pass = cycle.distance_m();
        if !(per_pass > 0.0) {
            return Err(Error::invalid("cycle", "covers no distance"));
        }
        let target = daily_miles * METERS_PER_MILE;
        let n = cycle.len();
        let full = (target / per_pass).floor() as usize;
        let mut covered = full as f64 * per_pass;
        let mut seconds = full * n;
        let mut k = 0;
        while covered < target {
            if k > 0 {
                covered += 0.5 * (cycle.speeds[k - 1] + cycle.speeds[k]) * cycle.dt;
            }
            seconds += 1;
            k += 1;
        }
        if seconds as f64 * cycle.dt > DAY_S {
            return Err(Error::invalid("daily_miles", format!("{daily_miles} mi does not fit in a day of driving")));
        }
        Ok(Self {
            daily_miles,
            cycle,
            power_trace,
            charge_power,
            charge_delay: 0.0,
            drive_seconds: seconds,
        })
    }

    /// Smooth (when configured), trace with the automation loads, transfer
    /// braking loads and size the drive.
    pub fn for_vehicle(
        spec: &VehicleSpec,
        env: &Environment,
        cycle: &DriveCycle,
        config: Option<&AutomationConfig>,
        daily_miles: f64,
        charge_power: f64,
    ) -> Result<Self> {
        let (driven, vehicle, loads) = match config {
            Some(c) => {
                c.validate()?;
                let driven = if c.smoothing_savings > 0.0 {
                    smooth_to_target(cycle, c.smoothing_savings, spec, env)?.cycle
                } else {
                    cycle.clone()
                };
                (driven, c.apply(spec), c.loads())
            }
            None => (cycle.clone(), spec.clone(), AuxLoads::default()),
        };
        let trace = transfer_braking_loads(&trace_cycle(&vehicle, env, &driven, loads), &driven)?;
        Self::new(daily_miles, driven, trace, charge_power)
    }

    pub fn with_charge_delay(mut self, seconds: f64) -> Result<Self> {
        if !(seconds >= 0.0) || seconds + self.drive_seconds as f64 * self.cycle.dt > DAY_S {
            return Err(Error::invalid("charge_delay", "must be >= 0 and fit in the day"));
        }
        self.charge_delay = seconds;
        Ok(self)
    }

    /// Pack power for drive second `k`, W.
    pub fn drive_power(&self, k: usize) -> f64 {
        self.power_trace.records[k % self.power_trace.len()].p_battery
    }

    /// Battery energy of one day's drive, Wh.
    pub fn drive_energy_wh(&self) -> f64 {
        (0..self.drive_seconds).map(|k| self.drive_power(k)).sum::<f64>() * self.cycle.dt / 3600.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::bundled;
    use crate::physics::tests::model3;

    #[test]
    fn drive_covers_daily_miles() {
        let c = bundled("udds").unwrap();
        let s = DailySchedule::for_vehicle(&model3(), &Environment::default(), &c, None, 30.0, 40.0).unwrap();
        let passes = 30.0 / c.distance_miles();
        assert!(s.drive_seconds as f64 >= passes * c.len() as f64 * 0.99);
        assert!(s.drive_seconds as f64 <= (passes.ceil()) * c.len() as f64);
        assert!(s.drive_energy_wh() > 0.0);
    }

    #[test]
    fn rejects_degenerate_days() {
        let c = bundled("udds").unwrap();
        let env = Environment::default();
        assert!(DailySchedule::for_vehicle(&model3(), &env, &c, None, 0.0, 40.0).is_err());
        assert!(DailySchedule::for_vehicle(&model3(), &env, &c, None, 30.0, 0.0).is_err());
        assert!(DailySchedule::for_vehicle(&model3(), &env, &c, None, 2000.0, 40.0).is_err());
    }
}
