//! Dollar value of lost range and the driving time that would offset it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconAssumptions {
    /// Upfront price a buyer pays per mile of range, $/mile.
    pub value_per_mile: f64,
    /// $/hour
    pub value_of_time: f64,
}

impl Default for EconAssumptions {
    fn default() -> Self {
        Self { value_per_mile: 100.0, value_of_time: 12.0 }
    }
}

impl EconAssumptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.value_per_mile > 0.0 && self.value_of_time > 0.0) {
            return Err(Error::invalid("economics", "value_per_mile and value_of_time must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakeven {
    pub range_loss_miles: f64,
    /// $
    pub cost: f64,
    pub hours: f64,
    pub assumptions: EconAssumptions,
}

pub fn breakeven(range_loss: f64, assumptions: EconAssumptions) -> Result<Breakeven> {
    assumptions.validate()?;
    if !(range_loss >= 0.0 && range_loss.is_finite()) {
        return Err(Error::invalid("range_loss", format!("{range_loss} must be >= 0")));
    }
    let cost = range_loss * assumptions.value_per_mile;
    Ok(Breakeven { range_loss_miles: range_loss, cost, hours: cost / assumptions.value_of_time, assumptions })
}

/// Break-even for a signed range change; gains cost nothing.
pub fn breakeven_for_delta(baseline_miles: f64, configured_miles: f64, assumptions: EconAssumptions) -> Result<Breakeven> {
    breakeven((baseline_miles - configured_miles).max(0.0), assumptions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_miles() {
        let b = breakeven(30.0, EconAssumptions::default()).unwrap();
        assert_eq!(b.cost, 3000.0);
        assert_eq!(b.hours, 250.0);
    }

    #[test]
    fn zero_and_fifteen() {
        let d = EconAssumptions::default();
        let z = breakeven(0.0, d).unwrap();
        assert_eq!((z.cost, z.hours), (0.0, 0.0));
        let f = breakeven(15.0, d).unwrap();
        assert_eq!((f.cost, f.hours), (1500.0, 125.0));
    }

    #[test]
    fn rejects_negative_loss() {
        assert!(breakeven(-1.0, EconAssumptions::default()).is_err());
        assert!(breakeven(1.0, EconAssumptions { value_of_time: 0.0, ..Default::default() }).is_err());
        assert_eq!(breakeven_for_delta(300.0, 310.0, EconAssumptions::default()).unwrap().cost, 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linear_and_homogeneous(a in 0.0f64..500.0, b in 0.0f64..500.0, k in 0.1f64..10.0) {
                let d = EconAssumptions::default();
                let sum = breakeven(a + b, d).unwrap();
                let parts = breakeven(a, d).unwrap().cost + breakeven(b, d).unwrap().cost;
                prop_assert!((sum.cost - parts).abs() <= 1e-9 * sum.cost.max(1.0));
                let scaled = EconAssumptions { value_per_mile: k * d.value_per_mile, value_of_time: k * d.value_of_time };
                let s = breakeven(a, scaled).unwrap();
                let base = breakeven(a, d).unwrap();
                prop_assert!((s.hours - base.hours).abs() <= 1e-9 * base.hours.max(1.0));
                prop_assert!((s.cost - k * base.cost).abs() <= 1e-9 * s.cost.max(1.0));
            }
        }
    }
}
