//! Range by depletion: repeat a cycle until the usable pack energy is spent.

use serde::{Deserialize, Serialize};

use crate::automation::AutomationConfig;
use crate::cycles::{CycleKind, DriveCycle, METERS_PER_MILE};
use crate::error::{Error, Result};
use crate::physics::{battery_power, traction_power, AuxLoads, Environment, VehicleSpec};
use crate::smoothing::smooth_to_target;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeOptions {
    /// Share of nameplate energy held back as a buffer.
    pub buffer_fraction: f64,
}

impl Default for RangeOptions {
    fn default() -> Self {
        Self { buffer_fraction: 0.0 }
    }
}

impl RangeOptions {
    pub fn usable_energy_wh(&self, spec: &VehicleSpec) -> Result<f64> {
        if !(0.0..1.0).contains(&self.buffer_fraction) {
            return Err(Error::invalid("buffer_fraction", "must lie in [0, 1)"));
        }
        Ok(spec.pack_energy_wh() * (1.0 - self.buffer_fraction))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeResult {
    /// miles
    pub range: f64,
    pub trip_energy_per_cycle: f64,
    /// Wh/mile
    pub intensity: f64,
    pub cycles_completed: f64,
    pub energy_used_wh: f64,
    pub cycle_kind: CycleKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_range: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_delta: Option<f64>,
}

/// Range of `spec` on repeats of `cycle` with constant `loads`, no smoothing.
pub fn deplete(
    spec: &VehicleSpec,
    env: &Environment,
    cycle: &DriveCycle,
    loads: AuxLoads,
    usable_wh: f64,
) -> Result<RangeResult> {
    if !(usable_wh > 0.0) {
        return Err(Error::invalid("pack capacity", "usable energy must be > 0"));
    }
    let n = cycle.len();
    let dt_h = cycle.dt / 3600.0;
    // Per-second energy (Wh) and distance (m); sample 0 is a stationary second.
    let mut energy = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    let mut prev = cycle.speeds[0];
    for &v in &cycle.speeds {
        let t = traction_power(spec, env, v, (v - prev) / cycle.dt);
        energy.push(battery_power(spec, &t, loads.compute, loads.sensor) * dt_h);
        dist.push(0.5 * (prev + v) * cycle.dt);
        prev = v;
    }
    dist[0] = 0.0;

    let mut prefix = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut peak = f64::NEG_INFINITY;
    for e in &energy {
        acc += e;
        peak = peak.max(acc);
        prefix.push(acc);
    }
    let per_cycle = acc;
    if !(per_cycle > 0.0) {
        return Err(Error::NonPositiveCycleEnergy { energy_wh: per_cycle });
    }
    let per_cycle_m: f64 = dist.iter().sum();

    // Energy may peak mid-cycle above its end value, so the first crossing can
    // fall in an earlier repetition than usable / per_cycle suggests.
    let mut full = ((usable_wh - peak) / per_cycle).ceil().max(0.0) as u64;
    loop {
        let remaining = usable_wh - full as f64 * per_cycle;
        if let Some(j) = prefix.iter().position(|&p| p >= remaining) {
            let before = if j == 0 { 0.0 } else { prefix[j - 1] };
            let frac = if energy[j] > 0.0 {
                ((remaining - before) / energy[j]).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let dist_before: f64 = dist[..j].iter().sum();
            let meters = full as f64 * per_cycle_m + dist_before + frac * dist[j];
            let range = meters / METERS_PER_MILE;
            if !(range > 0.0) {
                return Err(Error::Numerical("depletion produced zero distance".into()));
            }
            return Ok(RangeResult {
                range,
                trip_energy_per_cycle: per_cycle / 1000.0,
                intensity: usable_wh / range,
                cycles_completed: full as f64 + (j as f64 + frac) / n as f64,
                energy_used_wh: usable_wh,
                cycle_kind: cycle.kind,
                baseline_range: None,
                range_delta: None,
            });
        }
        full += 1;
    }
}

/// Apply `config` (mass, drag, loads, smoothing) and deplete. With a config
/// the result also carries the no-automation baseline and the range delta.
pub fn simulate_range(
    spec: &VehicleSpec,
    env: &Environment,
    cycle: &DriveCycle,
    config: Option<&AutomationConfig>,
    opts: &RangeOptions,
) -> Result<RangeResult> {
    spec.validate()?;
    env.validate()?;
    let usable = opts.usable_energy_wh(spec)?;
    let baseline = deplete(spec, env, cycle, AuxLoads::default(), usable)?;
    let Some(config) = config else {
        return Ok(baseline);
    };
    config.validate()?;
    let smoothed;
    let driven = if config.smoothing_savings > 0.0 {
        smoothed = smooth_to_target(cycle, config.smoothing_savings, spec, env)?;
        &smoothed.cycle
    } else {
        cycle
    };
    let mut result = deplete(&config.apply(spec), env, driven, config.loads(), usable)?;
    result.range_delta = Some(range_delta(&result, &baseline)?);
    result.baseline_range = Some(baseline.range);
    Ok(result)
}

pub fn range_delta(aev: &RangeResult, ev: &RangeResult) -> Result<f64> {
    if aev.cycle_kind != ev.cycle_kind {
        return Err(Error::CycleKindMismatch {
            aev: aev.cycle_kind.to_string(),
            ev: ev.cycle_kind.to_string(),
        });
    }
    Ok((aev.range - ev.range) / ev.range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{bundled, CycleKind};
    use crate::physics::tests::model3;
    use approx::assert_relative_eq;

    fn result(range: f64, kind: CycleKind) -> RangeResult {
        RangeResult {
            range,
            trip_energy_per_cycle: 1.0,
            intensity: 80_000.0 / range,
            cycles_completed: 1.0,
            energy_used_wh: 80_000.0,
            cycle_kind: kind,
            baseline_range: None,
            range_delta: None,
        }
    }

    #[test]
    fn delta_arithmetic() {
        let ev = result(309.0, CycleKind::Composite);
        assert_eq!(range_delta(&ev, &ev).unwrap(), 0.0);
        let aev = result(282.1, CycleKind::Composite);
        assert_relative_eq!(range_delta(&aev, &ev).unwrap(), -0.08705, epsilon = 1e-4);
        assert!(matches!(
            range_delta(&result(300.0, CycleKind::City), &ev),
            Err(Error::CycleKindMismatch { .. })
        ));
    }

    /// Brute force: step second by second through repeated cycles.
    fn stepped_range(spec: &VehicleSpec, cycle: &DriveCycle, loads: AuxLoads, usable: f64) -> f64 {
        let env = Environment::default();
        let mut used = 0.0;
        let mut meters = 0.0;
        loop {
            let mut prev = cycle.speeds[0];
            for (i, &v) in cycle.speeds.iter().enumerate() {
                let t = traction_power(spec, &env, v, v - prev);
                let e = battery_power(spec, &t, loads.compute, loads.sensor) / 3600.0;
                let d = if i == 0 { 0.0 } else { 0.5 * (prev + v) };
                if used + e >= usable {
                    let f = (usable - used) / e;
                    return (meters + f * d) / METERS_PER_MILE;
                }
                used += e;
                meters += d;
                prev = v;
            }
        }
    }

    #[test]
    fn depletion_matches_stepping() {
        let spec = model3();
        for name in ["udds", "composite"] {
            let c = bundled(name).unwrap();
            for loads in [AuxLoads::default(), AuxLoads::new(1000.0, 150.0)] {
                let fast = deplete(&spec, &Environment::default(), &c, loads, 80_000.0).unwrap();
                let slow = stepped_range(&spec, &c, loads, 80_000.0);
                assert_relative_eq!(fast.range, slow, max_relative = 1e-9);
                assert_relative_eq!(fast.range * fast.intensity, 80_000.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pathological_regen_rejected() {
        // Pure deceleration with perfect regen returns more than it spends.
        let spec = VehicleSpec {
            regen_efficiency: 1.0,
            drivetrain_efficiency: 1.0,
            battery_efficiency: 1.0,
            rolling_resistance: 0.0,
            ..model3()
        };
        let c = DriveCycle::new("down", CycleKind::Custom, vec![20.0, 10.0, 0.0]).unwrap();
        let err = deplete(&spec, &Environment::default(), &c, AuxLoads::default(), 1000.0).unwrap_err();
        assert!(matches!(err, Error::NonPositiveCycleEnergy { .. }));
    }

    #[test]
    fn doubling_capacity_doubles_range() {
        let spec = model3();
        let big = VehicleSpec { pack_capacity: 160.0, ..spec.clone() };
        let opts = RangeOptions::default();
        for name in ["udds", "composite"] {
            let c = bundled(name).unwrap();
            let a = simulate_range(&spec, &Environment::default(), &c, None, &opts).unwrap();
            let b = simulate_range(&big, &Environment::default(), &c, None, &opts).unwrap();
            // The only discrepancy is where in the last cycle each run stops.
            assert!((b.range - 2.0 * a.range).abs() < c.distance_miles());
            if name == "udds" {
                assert_relative_eq!(b.range, 2.0 * a.range, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn null_config_has_zero_delta() {
        let c = bundled("udds").unwrap();
        let r = simulate_range(
            &model3(),
            &Environment::default(),
            &c,
            Some(&AutomationConfig::null()),
            &RangeOptions::default(),
        )
        .unwrap();
        assert_eq!(r.range_delta, Some(0.0));
    }

    #[test]
    fn buffer_reduces_usable_energy() {
        let c = bundled("udds").unwrap();
        let opts = RangeOptions { buffer_fraction: 0.1 };
        let full = simulate_range(&model3(), &Environment::default(), &c, None, &RangeOptions::default()).unwrap();
        let buf = simulate_range(&model3(), &Environment::default(), &c, None, &opts).unwrap();
        assert_relative_eq!(buf.range / full.range, 0.9, max_relative = 1e-3);
        assert!(RangeOptions { buffer_fraction: 1.0 }.usable_energy_wh(&model3()).is_err());
    }
}
