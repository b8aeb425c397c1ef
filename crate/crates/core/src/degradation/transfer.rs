//! Moving auxiliary loads off braking seconds so regenerative charging is
//! seen undiluted by the cell model.

use crate::cycles::DriveCycle;
use crate::error::{Error, Result};
use crate::physics::PowerTrace;

/// Move each braking second's compute and sensor load to the nearest second
/// that is not braking (ties go to the earlier second). Total auxiliary
/// energy is unchanged.
pub fn transfer_braking_loads(trace: &PowerTrace, cycle: &DriveCycle) -> Result<PowerTrace> {
    if trace.len() != cycle.len() {
        return Err(Error::invalid(
            "power trace",
            format!("{} records for a {}-sample cycle", trace.len(), cycle.len()),
        ));
    }
    let braking: Vec<bool> = cycle.accelerations().iter().map(|&a| a < 0.0).collect();
    if braking.iter().all(|&b| b) {
        return Err(Error::AllBraking);
    }
    let n = braking.len();
    let nearest = |i: usize| -> usize {
        for d in 1..n {
            if d <= i && !braking[i - d] {
                return i - d;
            }
            if i + d < n && !braking[i + d] {
                return i + d;
            }
        }
        unreachable!("at least one non-braking second exists")
    };

    let eta = trace.battery_efficiency;
    let mut out = trace.clone();
    for i in (0..n).filter(|&i| braking[i]) {
        let j = nearest(i);
        let (compute, sensor) = (trace.records[i].p_compute, trace.records[i].p_sensor);
        let moved = compute + sensor;
        let src = &mut out.records[i];
        src.p_compute = 0.0;
        src.p_sensor = 0.0;
        src.p_battery -= moved / eta;
        let dst = &mut out.records[j];
        dst.p_compute += compute;
        dst.p_sensor += sensor;
        dst.p_battery += moved / eta;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{bundled, CycleKind};
    use crate::physics::tests::model3;
    use crate::physics::{trace_cycle, AuxLoads, Environment};
    use approx::assert_relative_eq;

    fn toy() -> DriveCycle {
        // Braking only at t = 3.
        DriveCycle::new("toy", CycleKind::Custom, vec![0.0, 2.0, 4.0, 3.0, 3.0]).unwrap()
    }

    #[test]
    fn toy_trace_moves_load_to_earlier_neighbour() {
        let c = toy();
        let spec = model3();
        let before = trace_cycle(&spec, &Environment::default(), &c, AuxLoads::new(500.0, 150.0));
        let after = transfer_braking_loads(&before, &c).unwrap();
        let aux = |t: &PowerTrace, i: usize| t.records[i].p_compute + t.records[i].p_sensor;
        assert_eq!(aux(&after, 3), 0.0);
        assert_eq!(aux(&after, 2), 1300.0);
        for i in [0, 1, 4] {
            assert_eq!(after.records[i], before.records[i]);
        }
        assert_relative_eq!(after.records[3].p_battery, before.records[3].p_battery - 650.0 / 0.95, epsilon = 1e-9);
        assert_relative_eq!(after.aux_energy_wh(), before.aux_energy_wh(), max_relative = 1e-12);
        assert_relative_eq!(after.trip_energy_wh(), before.trip_energy_wh(), max_relative = 1e-12);
        // Braking seconds now carry only the regen term.
        assert!(after.records[3].p_battery < 0.0);
    }

    #[test]
    fn tie_breaks_to_earlier_second() {
        // t = 2 brakes; t = 1 and t = 3 are equally near.
        let c = DriveCycle::new("tie", CycleKind::Custom, vec![0.0, 5.0, 4.0, 4.0]).unwrap();
        let trace = trace_cycle(&model3(), &Environment::default(), &c, AuxLoads::new(100.0, 0.0));
        let out = transfer_braking_loads(&trace, &c).unwrap();
        assert_eq!(out.records[1].p_compute, 200.0);
        assert_eq!(out.records[3].p_compute, 100.0);
    }

    #[test]
    fn no_braking_is_identity() {
        let c = DriveCycle::new("ramp", CycleKind::Custom, vec![0.0, 1.0, 2.0, 2.0]).unwrap();
        let trace = trace_cycle(&model3(), &Environment::default(), &c, AuxLoads::new(100.0, 30.0));
        assert_eq!(transfer_braking_loads(&trace, &c).unwrap(), trace);
    }

    #[test]
    fn udds_conserves_aux_energy() {
        let c = bundled("udds").unwrap();
        let trace = trace_cycle(&model3(), &Environment::default(), &c, AuxLoads::new(575.0, 90.0));
        let out = transfer_braking_loads(&trace, &c).unwrap();
        assert_relative_eq!(out.aux_energy_wh(), trace.aux_energy_wh(), max_relative = 1e-9);
        assert_relative_eq!(out.trip_energy_wh(), trace.trip_energy_wh(), max_relative = 1e-9);
        let acc = c.accelerations();
        assert!(out.records.iter().zip(&acc).all(|(r, &a)| a >= 0.0 || r.p_compute + r.p_sensor == 0.0));
    }

    #[test]
    fn decelerating_cycle_unloads_onto_first_second() {
        // Sample 0 has no backward difference, so it is never braking.
        let c = DriveCycle::new("down", CycleKind::Custom, vec![5.0, 4.0, 3.0]).unwrap();
        let trace = trace_cycle(&model3(), &Environment::default(), &c, AuxLoads::new(100.0, 0.0));
        let out = transfer_braking_loads(&trace, &c).unwrap();
        assert_eq!(out.records[0].p_compute, 300.0);
    }

    #[test]
    fn misaligned_trace_rejected() {
        let c = toy();
        let mut trace = trace_cycle(&model3(), &Environment::default(), &c, AuxLoads::default());
        trace.records.pop();
        assert!(transfer_braking_loads(&trace, &c).is_err());
    }
}
