//! Battery longevity under a repeating daily schedule.
//!
//! Lithium inventory is consumed by SEI growth and plating, and active
//! material is isolated in proportion to throughput current. The cell is the
//! reduced-order model in [`cell`]; the day is built in [`schedule`].

pub mod cell;
pub mod schedule;
pub mod transfer;

use serde::{Deserialize, Serialize};

pub use cell::CellModel;
pub use schedule::DailySchedule;
pub use transfer::transfer_braking_loads;

use crate::error::{Error, Result};
use crate::physics::VehicleSpec;
use schedule::{DAY_S, REST_STEP_S};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    /// m/s
    pub k_sei: f64,
    /// Active-material loss per C/m² of throughput. Set so that, for the
    /// reference EV, material isolation supplies half of the end-of-life fade.
    pub k_ami: f64,
    /// A/m²
    pub i0_pl: f64,
    pub alpha_sei: f64,
    pub alpha_pl: f64,
    /// V
    pub u_sei: f64,
    /// mol/m³
    pub c_solvent: f64,
    /// K
    pub temperature: f64,
    pub faraday: f64,
    pub gas_constant: f64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            k_sei: 1e-12,
            k_ami: 7.86e-10,
            i0_pl: 0.001,
            alpha_sei: 0.5,
            alpha_pl: 0.5,
            u_sei: 0.4,
            c_solvent: 4541.0,
            temperature: 298.0,
            faraday: 96_485.332_12,
            gas_constant: 8.314_462_618,
        }
    }
}

impl DegradationParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [("k_sei", self.k_sei), ("k_ami", self.k_ami), ("i0_pl", self.i0_pl), ("c_solvent", self.c_solvent)];
        for (name, v) in rates {
            // Zero is allowed: it switches the mechanism off.
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid("degradation params", format!("{name} must be >= 0")));
            }
        }
        let positive = [
            ("alpha_sei", self.alpha_sei),
            ("alpha_pl", self.alpha_pl),
            ("temperature", self.temperature),
            ("faraday", self.faraday),
            ("gas_constant", self.gas_constant),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("degradation params", format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    /// F/RT, 1/V.
    pub fn f_rt(&self) -> f64 {
        self.faraday / (self.gas_constant * self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub soc: f64,
    /// V
    pub phi_s: f64,
    /// Electrolyte potential; the reference, so always 0 V.
    pub phi_e: f64,
    /// Ω·m²
    pub r_film: f64,
    pub eps_am: f64,
    pub capacity_fade: f64,
    /// Most recent side-reaction current densities, A/m².
    pub j_sei: f64,
    pub j_pl: f64,
    /// Lithium consumed so far per geometric area, C/m².
    pub q_sei: f64,
    pub q_pl: f64,
    /// Applied current density, A/m², positive charging.
    pub total_current: f64,
}

impl CellState {
    pub fn fresh(cell: &CellModel) -> Self {
        Self {
            soc: 1.0,
            phi_s: cell.anode_potential(1.0, 0.0),
            phi_e: 0.0,
            r_film: cell.r_film0,
            eps_am: cell.eps_am0,
            capacity_fade: 0.0,
            j_sei: 0.0,
            j_pl: 0.0,
            q_sei: 0.0,
            q_pl: 0.0,
            total_current: 0.0,
        }
    }

    pub fn capacity(&self) -> f64 {
        1.0 - self.capacity_fade
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideCurrents {
    pub j_sei: f64,
    pub j_pl: f64,
}

/// SEI and plating current densities for the state's potentials and current.
/// Both are non-positive.
pub fn side_currents(state: &CellState, params: &DegradationParams) -> SideCurrents {
    let f = params.f_rt();
    let eta = state.phi_s - state.phi_e - state.total_current * state.r_film;
    let j_sei = -params.k_sei * params.c_solvent * (-params.alpha_sei * f * (eta - params.u_sei)).exp();
    let j_pl = if eta < 0.0 {
        -params.i0_pl * (-params.alpha_pl * f * eta).exp()
    } else {
        0.0
    };
    SideCurrents { j_sei, j_pl }
}

/// Active-material isolation over `dt`, applied to `|I_total|`.
pub fn step_ami(state: &CellState, params: &DegradationParams, dt: f64) -> CellState {
    CellState {
        eps_am: state.eps_am - params.k_ami * state.total_current.abs() * dt,
        ..*state
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadeResult {
    pub longevity_miles: f64,
    pub days: u32,
    /// (miles, capacity fraction) at the end of every day, starting at (0, 1).
    pub fade_curve: Vec<(f64, f64)>,
    /// Time-weighted over the whole life.
    pub avg_soc: f64,
    pub final_state: CellState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongevityOptions {
    /// Capacity fraction that ends the battery's life.
    pub threshold: f64,
    pub day_cap: u32,
}

impl Default for LongevityOptions {
    fn default() -> Self {
        Self { threshold: 0.8, day_cap: 10_000 }
    }
}

/// Integrates one cell through repeated days.
pub struct CellSim<'a> {
    cell: &'a CellModel,
    params: &'a DegradationParams,
    spec: &'a VehicleSpec,
    pub state: CellState,
    soc_time: f64,
    time: f64,
}

impl<'a> CellSim<'a> {
    pub fn new(spec: &'a VehicleSpec, cell: &'a CellModel, params: &'a DegradationParams) -> Self {
        Self { cell, params, spec, state: CellState::fresh(cell), soc_time: 0.0, time: 0.0 }
    }

    pub fn avg_soc(&self) -> f64 {
        if self.time > 0.0 {
            self.soc_time / self.time
        } else {
            self.state.soc
        }
    }

    /// Advance `dt` seconds at current density `i` (A/m², positive charging).
    pub fn step(&mut self, i: f64, dt: f64) {
        let cell = self.cell;
        let s = &mut self.state;
        s.total_current = i;
        s.phi_s = cell.anode_potential(s.soc, i);
        let side = side_currents(s, self.params);
        s.j_sei = side.j_sei;
        s.j_pl = side.j_pl;
        let d_sei = cell.roughness * side.j_sei.abs() * dt;
        let d_pl = cell.roughness * side.j_pl.abs() * dt;
        s.q_sei += d_sei;
        s.q_pl += d_pl;
        s.r_film += cell.film_growth * d_sei;
        *s = step_ami(s, self.params, dt);
        let q0 = cell.areal_capacity * 3600.0;
        s.capacity_fade = (s.q_sei + s.q_pl) / q0 + (1.0 - s.eps_am / cell.eps_am0);

        self.soc_time += s.soc * dt;
        self.time += dt;
        let capacity = s.capacity().max(1e-9) * q0;
        s.soc = (s.soc + i * dt / capacity).clamp(0.0, 1.0);
    }

    fn rest(&mut self, seconds: f64) {
        let mut left = seconds;
        while left > 1e-9 {
            let dt = left.min(REST_STEP_S);
            self.step(0.0, dt);
            left -= dt;
        }
    }

    /// CC at the charger's power, then CV at `v_max` until the current falls
    /// below the cutoff. Returns the seconds used, at most `budget`.
    fn charge(&mut self, charge_power_kw: f64, budget: f64) -> f64 {
        let cell = self.cell;
        let cutoff = cell.cv_cutoff_c * cell.areal_capacity;
        let mut used = 0.0;
        while used + 1.0 <= budget {
            let soc = self.state.soc;
            let ocv = cell.ocv(soc);
            let r = cell.r_ohm + cell.r_ct + self.state.r_film;
            let cc = cell.current_density(self.spec, -charge_power_kw * 1000.0, soc);
            let i = cc.min((cell.v_max - ocv) / r);
            if i < cutoff {
                break;
            }
            self.step(i, 1.0);
            used += 1.0;
        }
        used
    }

    /// One 24 h day. Errors if the drive would empty the pack.
    pub fn day(&mut self, schedule: &DailySchedule) -> Result<()> {
        let dt = schedule.cycle.dt;
        for k in 0..schedule.drive_seconds {
            let p = schedule.drive_power(k);
            let i = self.cell.current_density(self.spec, p, self.state.soc);
            if self.state.soc <= 0.0 && i < 0.0 {
                return Err(Error::invalid("daily_miles", "the daily drive empties the battery"));
            }
            self.step(i, dt);
        }
        let mut elapsed = schedule.drive_seconds as f64 * dt;
        self.rest(schedule.charge_delay);
        elapsed += schedule.charge_delay;
        elapsed += self.charge(schedule.charge_power, DAY_S - elapsed);
        self.rest(DAY_S - elapsed);
        Ok(())
    }
}

/// Days of the schedule until capacity reaches the threshold.
pub fn simulate_longevity(
    spec: &VehicleSpec,
    schedule: &DailySchedule,
    params: &DegradationParams,
    cell: &CellModel,
    opts: &LongevityOptions,
) -> Result<FadeResult> {
    params.validate()?;
    cell.validate()?;
    spec.validate()?;
    if !(opts.threshold > 0.0 && opts.threshold < 1.0) {
        return Err(Error::invalid("threshold", "must lie in (0, 1)"));
    }
    let usable = spec.pack_energy_wh() * opts.threshold;
    if schedule.drive_energy_wh() >= usable {
        return Err(Error::invalid("daily_miles", "the daily drive needs more energy than an aged pack holds"));
    }
    let mut sim = CellSim::new(spec, cell, params);
    let mut curve = vec![(0.0, 1.0)];
    for day in 1..=opts.day_cap {
        sim.day(schedule)?;
        let miles = day as f64 * schedule.daily_miles;
        let capacity = sim.state.capacity();
        curve.push((miles, capacity));
        if capacity <= opts.threshold {
            return Ok(FadeResult {
                longevity_miles: miles,
                days: day,
                fade_curve: curve,
                avg_soc: sim.avg_soc(),
                final_state: sim.state,
            });
        }
    }
    Err(Error::DayCapReached {
        days: opts.day_cap as usize,
        threshold: opts.threshold,
        final_capacity: sim.state.capacity(),
        partial_curve: curve,
    })
}

/// Independent longevity runs, in parallel when available.
pub fn simulate_batch(
    spec: &VehicleSpec,
    schedules: &[DailySchedule],
    params: &DegradationParams,
    cell: &CellModel,
    opts: &LongevityOptions,
) -> Vec<Result<FadeResult>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        schedules.par_iter().map(|s| simulate_longevity(spec, s, params, cell, opts)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        schedules.iter().map(|s| simulate_longevity(spec, s, params, cell, opts)).collect()
    }
}
