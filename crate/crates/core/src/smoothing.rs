//! Automated-driving profiles from human drive cycles.
//!
//! The smoothing spline is fitted to vehicle *position*; the smoothed speed at
//! each sample is the original speed minus the slope of the natural
//! interpolant of the fit residual `y − g`. That equals `g'` up to the
//! interpolant's own discretisation error, so `λ = 0` reproduces the input
//! exactly and any linear position trace is left untouched. Energy savings
//! are always measured on the baseline vehicle with no automation loads.

use serde::{Deserialize, Serialize};

use crate::cycles::{integrate_positions, DriveCycle, PositionTrace};
use crate::error::{Error, Result};
use crate::physics::{cycle_energy_wh, AuxLoads, Environment, VehicleSpec};
use crate::spline::{fit_smoothing_spline, interpolating_spline};

pub const DEFAULT_TOLERANCE: f64 = 0.002;
pub const LAMBDA_BRACKET: (f64, f64) = (1e-10, 1e2);
/// Largest λ the bracket is widened to; savings here stand in for the asymptote.
pub const LAMBDA_CEILING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub target_savings: f64,
    pub lambda: f64,
    pub tolerance: f64,
}

impl SmoothingSpec {
    pub fn target(target_savings: f64) -> Self {
        Self {
            target_savings,
            lambda: 0.0,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.target_savings) {
            return Err(Error::invalid("target savings", format!("{} not in [0, 1)", self.target_savings)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", "must be >= 0"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedCycle {
    pub cycle: DriveCycle,
    pub achieved_savings: f64,
    pub lambda_used: f64,
    /// Mean squared position residual, m².
    pub position_mse: f64,
    /// `∫ g''² dt` of the fitted position spline.
    pub roughness: f64,
}

/// Reusable smoothing context for one cycle and one baseline vehicle.
#[derive(Debug, Clone)]
pub struct Smoother {
    original: DriveCycle,
    positions: PositionTrace,
    interp_second: Vec<f64>,
    spec: VehicleSpec,
    env: Environment,
    base_energy_wh: f64,
}

impl Smoother {
    pub fn new(cycle: &DriveCycle, spec: &VehicleSpec, env: &Environment) -> Result<Self> {
        if cycle.len() < 4 {
            return Err(Error::invalid("cycle", "smoothing needs at least 4 samples"));
        }
        let positions = integrate_positions(cycle);
        let interp_second = interpolating_spline(&positions.positions, cycle.dt)?.second_derivs;
        let base_energy_wh = cycle_energy_wh(spec, env, cycle, AuxLoads::default());
        if !(base_energy_wh > 0.0) {
            return Err(Error::invalid("cycle", "baseline trip energy must be positive to measure savings"));
        }
        Ok(Self {
            original: cycle.clone(),
            positions,
            interp_second,
            spec: spec.clone(),
            env: *env,
            base_energy_wh,
        })
    }

    pub fn original(&self) -> &DriveCycle {
        &self.original
    }

    pub fn base_energy_wh(&self) -> f64 {
        self.base_energy_wh
    }

    pub fn savings_of(&self, cycle: &DriveCycle) -> f64 {
        1.0 - cycle_energy_wh(&self.spec, &self.env, cycle, AuxLoads::default()) / self.base_energy_wh
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<SmoothedCycle> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid("lambda", format!("must be >= 0, got {lambda}")));
        }
        let h = self.original.dt;
        let y = &self.positions.positions;
        let fit = fit_smoothing_spline(y, h, lambda)?;
        let n = y.len();

        // Residual spline: values y − g, second derivatives s'' − g''.
        let residual = crate::spline::NaturalSpline {
            h,
            values: y.iter().zip(&fit.values).map(|(a, b)| a - b).collect(),
            second_derivs: self
                .interp_second
                .iter()
                .zip(&fit.second_derivs)
                .map(|(a, b)| a - b)
                .collect(),
        };
        let position_mse = residual.values.iter().map(|e| e * e).sum::<f64>() / n as f64;
        let speeds: Vec<f64> = if lambda == 0.0 {
            self.original.speeds.clone()
        } else {
            self.original
                .speeds
                .iter()
                .zip(residual.knot_slopes())
                .map(|(v, de)| v - de)
                .collect()
        };
        let speeds = clamp_preserving_distance(speeds);
        let cycle = DriveCycle {
            name: format!("{}-smoothed", self.original.name),
            dt: h,
            speeds,
            kind: self.original.kind,
        };
        let achieved_savings = if lambda == 0.0 { 0.0 } else { self.savings_of(&cycle) };
        Ok(SmoothedCycle {
            cycle,
            achieved_savings,
            lambda_used: lambda,
            position_mse,
            roughness: fit.roughness(),
        })
    }

    /// Savings at the widest λ considered; the practical asymptote.
    pub fn max_achievable(&self) -> Result<f64> {
        Ok(self.with_lambda(LAMBDA_CEILING)?.achieved_savings)
    }

    /// Bisection on `log10 λ` until the achieved savings are within `tolerance`.
    pub fn to_target(&self, target: f64, tolerance: f64) -> Result<SmoothedCycle> {
        SmoothingSpec {
            target_savings: target,
            lambda: 0.0,
            tolerance,
        }
        .validate()?;
        if target == 0.0 {
            return self.with_lambda(0.0);
        }
        let (mut lo, mut hi) = (LAMBDA_BRACKET.0.log10(), LAMBDA_BRACKET.1.log10());
        let mut hi_fit = self.with_lambda(10f64.powf(hi))?;
        while hi_fit.achieved_savings < target {
            if 10f64.powf(hi) >= LAMBDA_CEILING {
                return Err(Error::TargetUnreachable {
                    target,
                    max_achievable: hi_fit.achieved_savings,
                });
            }
            lo = hi;
            hi = (hi + 2.0).min(LAMBDA_CEILING.log10());
            hi_fit = self.with_lambda(10f64.powf(hi))?;
        }
        if (hi_fit.achieved_savings - target).abs() <= tolerance {
            return Ok(hi_fit);
        }
        let mut best = hi_fit;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fit = self.with_lambda(10f64.powf(mid))?;
            let err = fit.achieved_savings - target;
            if err.abs() < (best.achieved_savings - target).abs() {
                best = fit.clone();
            }
            if err.abs() <= tolerance {
                return Ok(fit);
            }
            if err < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        Err(Error::Numerical(format!(
            "lambda search stalled at savings {:.5} for target {target:.5}",
            best.achieved_savings
        )))
    }
}

pub fn smooth_with_lambda(
    cycle: &DriveCycle,
    lambda: f64,
    spec: &VehicleSpec,
    env: &Environment,
) -> Result<SmoothedCycle> {
    Smoother::new(cycle, spec, env)?.with_lambda(lambda)
}

pub fn smooth_to_target(
    cycle: &DriveCycle,
    target_savings: f64,
    spec: &VehicleSpec,
    env: &Environment,
) -> Result<SmoothedCycle> {
    Smoother::new(cycle, spec, env)?.to_target(target_savings, DEFAULT_TOLERANCE)
}

/// Clamp negative speeds to zero and take the same trapezoidal distance back
/// out of the nearest positive neighbours.
fn clamp_preserving_distance(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.len();
    let weight = |i: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
    for i in 0..n {
        if v[i] >= 0.0 {
            continue;
        }
        let mut owed = -v[i] * weight(i);
        v[i] = 0.0;
        let mut radius = 1;
        while owed > 0.0 && radius < n {
            for j in [i.checked_sub(radius), Some(i + radius)].into_iter().flatten() {
                if j >= n || v[j] <= 0.0 || owed <= 0.0 {
                    continue;
                }
                let take = (owed / weight(j)).min(v[j]);
                v[j] -= take;
                owed -= take * weight(j);
            }
            radius += 1;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{bundled, CycleKind};
    use crate::physics::tests::model3;
    use approx::assert_relative_eq;

    fn smoother(name: &str) -> Smoother {
        Smoother::new(&bundled(name).unwrap(), &model3(), &Environment::default()).unwrap()
    }

    #[test]
    fn zero_lambda_is_identity() {
        let s = smoother("udds");
        let out = s.with_lambda(0.0).unwrap();
        assert_eq!(out.cycle.speeds, s.original().speeds);
        assert!(out.achieved_savings.abs() <= 1e-6);
        assert_eq!(out.position_mse, 0.0);
    }

    #[test]
    fn tiny_lambda_is_continuous_with_identity() {
        let s = smoother("udds");
        let out = s.with_lambda(1e-10).unwrap();
        assert!(out.achieved_savings.abs() <= 1e-6, "{}", out.achieved_savings);
    }

    #[test]
    fn constant_speed_is_unchanged() {
        let mut speeds = vec![12.0; 200];
        speeds[0] = 12.0;
        let c = DriveCycle::new("k", CycleKind::Custom, speeds).unwrap();
        let s = Smoother::new(&c, &model3(), &Environment::default()).unwrap();
        for lambda in [1e-3, 1.0, 1e3, 1e8] {
            let out = s.with_lambda(lambda).unwrap();
            for v in &out.cycle.speeds {
                assert_relative_eq!(*v, 12.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(smoother("udds").with_lambda(-1.0).is_err());
    }

    #[test]
    fn large_lambda_approaches_mean_speed() {
        let s = smoother("udds");
        let c = s.original();
        let mean = c.distance_m() / (c.duration_s() - c.dt);
        let out = s.with_lambda(1e12).unwrap();
        let interior = &out.cycle.speeds[100..c.len() - 100];
        let avg = interior.iter().sum::<f64>() / interior.len() as f64;
        assert_relative_eq!(avg, mean, max_relative = 0.05);
        let spread = interior.iter().fold(0.0f64, |m, v| m.max((v - avg).abs()));
        assert!(spread < 0.5, "spread {spread}");
        assert!(out.achieved_savings > 0.25);
    }

    #[test]
    fn target_zero_is_identity() {
        let out = smoother("composite").to_target(0.0, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(out.lambda_used, 0.0);
        assert_eq!(out.achieved_savings, 0.0);
    }

    #[test]
    fn ten_percent_on_composite() {
        let out = smoother("composite").to_target(0.10, DEFAULT_TOLERANCE).unwrap();
        assert!((out.achieved_savings - 0.10).abs() <= 0.002);
    }

    #[test]
    fn unreachable_target_reports_maximum() {
        let s = smoother("udds");
        match s.to_target(0.95, DEFAULT_TOLERANCE) {
            Err(Error::TargetUnreachable { max_achievable, .. }) => {
                assert!(max_achievable < 0.95 && max_achievable > 0.25)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clamp_keeps_trapezoid_distance() {
        let v = vec![0.0, 1.0, -0.5, 2.0, 3.0, -0.2];
        let dist = |v: &[f64]| v.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>();
        let before = dist(&v);
        let out = clamp_preserving_distance(v);
        assert!(out.iter().all(|&x| x >= 0.0));
        assert_relative_eq!(dist(&out), before, epsilon = 1e-12);
    }
}
