//! Reduced-order cell: full-cell open-circuit voltage from a table, carbon
//! anode potential from an analytic fit, lumped area-specific resistances.
//!
//! Every closure constant of the degradation model lives on [`CellModel`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::VehicleSpec;

/// NCA/graphite-like full-cell OCV, (SOC, V).
pub const OCV_TABLE: [(f64, f64); 12] = [
    (0.0, 3.00),
    (0.05, 3.30),
    (0.1, 3.42),
    (0.2, 3.52),
    (0.3, 3.59),
    (0.4, 3.65),
    (0.5, 3.72),
    (0.6, 3.81),
    (0.7, 3.90),
    (0.8, 3.99),
    (0.9, 4.08),
    (1.0, 4.20),
];

/// Carbon anode open-circuit potential vs Li/Li+ at lithiation `x`
/// (Fuller, Doyle and Newman 1994). Strictly decreasing in `x`, and unlike
/// plateau-shaped graphite fits it keeps a slope near full charge, so side
/// reactions stay sensitive to SOC across the operating window.
pub fn anode_ocp(x: f64) -> f64 {
    -0.16 + 1.32 * (-3.0 * x).exp() + 10.0 * (-2000.0 * x).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellModel {
    pub series: u32,
    pub parallel: u32,
    /// V
    pub nominal_voltage: f64,
    /// Ah per m² of electrode.
    pub areal_capacity: f64,
    /// Anode charge-transfer resistance, Ω·m².
    pub r_ct: f64,
    /// Remaining ohmic resistance seen at the terminals, Ω·m².
    pub r_ohm: f64,
    /// Fresh SEI film resistance, Ω·m².
    pub r_film0: f64,
    /// Film resistance gained per C/m² of lithium consumed by SEI, Ω·m²/(C/m²).
    pub film_growth: f64,
    /// Active surface per geometric electrode area. Scales side-reaction
    /// currents to lithium loss; fitted so the reference EV reaches 80 %
    /// capacity at 110 000 miles on the 50 mi/day composite schedule, with
    /// lithium loss supplying half of that fade.
    pub roughness: f64,
    pub eps_am0: f64,
    /// Anode lithiation at 0 and 100 % SOC.
    pub x0: f64,
    pub x100: f64,
    /// CV voltage, V.
    pub v_max: f64,
    /// CV taper ends below this C-rate.
    pub cv_cutoff_c: f64,
}

impl Default for CellModel {
    fn default() -> Self {
        Self {
            series: 96,
            parallel: 46,
            nominal_voltage: 3.6,
            areal_capacity: 30.0,
            r_ct: 1.0e-3,
            r_ohm: 5.0e-4,
            r_film0: 2.0e-4,
            film_growth: 5.0e-8,
            roughness: 9.36,
            eps_am0: 0.6,
            x0: 0.05,
            x100: 0.65,
            v_max: 4.2,
            cv_cutoff_c: 0.05,
        }
    }
}

impl CellModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nominal_voltage", self.nominal_voltage),
            ("areal_capacity", self.areal_capacity),
            ("eps_am0", self.eps_am0),
            ("v_max", self.v_max),
            ("cv_cutoff_c", self.cv_cutoff_c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("cell model", format!("{name} must be > 0")));
            }
        }
        let non_negative = [
            ("r_ct", self.r_ct),
            ("r_ohm", self.r_ohm),
            ("r_film0", self.r_film0),
            ("film_growth", self.film_growth),
            ("roughness", self.roughness),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid("cell model", format!("{name} must be >= 0")));
            }
        }
        if self.series == 0 || self.parallel == 0 {
            return Err(Error::invalid("cell model", "topology needs at least one cell"));
        }
        if !(0.0 <= self.x0 && self.x0 < self.x100 && self.x100 <= 1.0) {
            return Err(Error::invalid("cell model", "need 0 <= x0 < x100 <= 1"));
        }
        if self.r_ohm + self.r_ct + self.r_film0 <= 0.0 {
            return Err(Error::invalid("cell model", "CV charging needs a non-zero resistance"));
        }
        Ok(())
    }

    pub fn cells(&self) -> f64 {
        self.series as f64 * self.parallel as f64
    }

    /// Ah
    pub fn cell_capacity(&self, spec: &VehicleSpec) -> f64 {
        spec.pack_energy_wh() / (self.cells() * self.nominal_voltage)
    }

    /// m²
    pub fn electrode_area(&self, spec: &VehicleSpec) -> f64 {
        self.cell_capacity(spec) / self.areal_capacity
    }

    pub fn ocv(&self, soc: f64) -> f64 {
        let soc = soc.clamp(0.0, 1.0);
        let i = OCV_TABLE.partition_point(|&(s, _)| s <= soc).clamp(1, OCV_TABLE.len() - 1);
        let (s0, v0) = OCV_TABLE[i - 1];
        let (s1, v1) = OCV_TABLE[i];
        v0 + (v1 - v0) * (soc - s0) / (s1 - s0)
    }

    pub fn stoichiometry(&self, soc: f64) -> f64 {
        self.x0 + soc.clamp(0.0, 1.0) * (self.x100 - self.x0)
    }

    /// `φs − φe` at the anode for current density `i` (A/m², positive charging).
    pub fn anode_potential(&self, soc: f64, i: f64) -> f64 {
        anode_ocp(self.stoichiometry(soc)) - i * self.r_ct
    }

    /// Current density (A/m², positive charging) for pack power `p_pack` (W,
    /// positive discharging), split evenly over the cells at the open-circuit voltage.
    pub fn current_density(&self, spec: &VehicleSpec, p_pack: f64, soc: f64) -> f64 {
        -p_pack / self.cells() / self.ocv(soc) / self.electrode_area(spec)
    }
}
