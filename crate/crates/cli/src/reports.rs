//! Requests and result documents shared by the CLI and the HTTP API, so both
//! front ends produce the same JSON for the same inputs.

use serde::{Deserialize, Serialize};

use aev_core::calibration::{calibrate, Calibration, CalibrationTargets};
use aev_core::degradation::{simulate_longevity, CellModel, DailySchedule, DegradationParams, LongevityOptions};
use aev_core::economics::{breakeven_for_delta, Breakeven, EconAssumptions};
use aev_core::montecarlo::{self, McSettings, McSummary};
use aev_core::physics::{trace_cycle, PowerTrace};
use aev_core::smoothing::{Smoother, DEFAULT_TOLERANCE};
use aev_core::{
    simulate_range, AutomationConfig, CycleKind, DriveCycle, Environment, Error, LidarScenario, RangeOptions,
    RangeResult, Result, SpeedUnit,
};

use crate::inputs::{Resolved, Resolver};
use crate::manifest::RunManifest;

/// Largest Monte Carlo ensemble the service accepts.
pub const MAX_SERVICE_SAMPLES: usize = 20_000;

fn default_cycle() -> String {
    "composite".to_string()
}

fn default_units() -> SpeedUnit {
    SpeedUnit::Mps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub id: String,
    pub name: String,
    pub kind: CycleKind,
    pub samples: usize,
    pub duration_s: f64,
    pub distance_miles: f64,
    pub max_speed_mps: f64,
}

impl CycleInfo {
    pub fn of(id: &str, c: &DriveCycle) -> Self {
        Self {
            id: id.to_string(),
            name: c.name.clone(),
            kind: c.kind,
            samples: c.len(),
            duration_s: c.duration_s(),
            distance_miles: c.distance_miles(),
            max_speed_mps: c.max_speed(),
        }
    }
}

struct Inputs {
    vehicle: Resolved<aev_core::VehicleSpec>,
    cycle: Resolved<DriveCycle>,
}

fn resolve(resolver: &Resolver, vehicle: &str, cycle: &str, units: SpeedUnit) -> Result<Inputs> {
    Ok(Inputs { vehicle: resolver.vehicle(vehicle)?, cycle: resolver.cycle(cycle, units)? })
}

fn manifest(command: &str, inputs: &Inputs) -> Result<RunManifest> {
    Ok(RunManifest::new(command)?
        .with_input("vehicle", &inputs.vehicle.record)
        .with_input("cycle", &inputs.cycle.record)
        .with_vehicle(&inputs.vehicle.value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeRequest {
    pub vehicle: String,
    #[serde(default = "default_cycle")]
    pub cycle: String,
    #[serde(default = "default_units")]
    pub units: SpeedUnit,
    /// `None` is the plain EV.
    #[serde(default)]
    pub config: Option<AutomationConfig>,
    #[serde(default)]
    pub range_options: RangeOptions,
    #[serde(default)]
    pub economics: EconAssumptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub manifest: RunManifest,
    pub vehicle: String,
    pub cycle: CycleInfo,
    pub config: Option<AutomationConfig>,
    pub result: RangeResult,
    pub economics: Breakeven,
}

pub fn range_report(resolver: &Resolver, req: &RangeRequest) -> Result<RangeReport> {
    let inputs = resolve(resolver, &req.vehicle, &req.cycle, req.units)?;
    let env = Environment::default();
    let result =
        simulate_range(&inputs.vehicle.value, &env, &inputs.cycle.value, req.config.as_ref(), &req.range_options)?;
    let baseline = result.baseline_range.unwrap_or(result.range);
    Ok(RangeReport {
        manifest: manifest("simulate", &inputs)?,
        vehicle: inputs.vehicle.id.clone(),
        cycle: CycleInfo::of(&inputs.cycle.id, &inputs.cycle.value),
        config: req.config,
        economics: breakeven_for_delta(baseline, result.range, req.economics)?,
        result,
    })
}

/// Per-second power of the configured vehicle on the cycle it actually
/// drives (smoothed when the configuration asks for savings), plus that cycle.
pub fn range_trace(resolver: &Resolver, req: &RangeRequest) -> Result<(DriveCycle, DriveCycle, PowerTrace)> {
    let inputs = resolve(resolver, &req.vehicle, &req.cycle, req.units)?;
    let env = Environment::default();
    let original = inputs.cycle.value;
    let spec = inputs.vehicle.value;
    let (driven, vehicle, loads) = match &req.config {
        Some(c) => {
            c.validate()?;
            let driven = if c.smoothing_savings > 0.0 {
                Smoother::new(&original, &spec, &env)?.to_target(c.smoothing_savings, DEFAULT_TOLERANCE)?.cycle
            } else {
                original.clone()
            };
            (driven, c.apply(&spec), c.loads())
        }
        None => (original.clone(), spec, Default::default()),
    };
    let trace = trace_cycle(&vehicle, &env, &driven, loads);
    Ok((original, driven, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothRequest {
    pub vehicle: String,
    #[serde(default = "default_cycle")]
    pub cycle: String,
    #[serde(default = "default_units")]
    pub units: SpeedUnit,
    /// Fractional savings to hit; exclusive with `lambda`.
    #[serde(default)]
    pub target_savings: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothReport {
    pub manifest: RunManifest,
    pub vehicle: String,
    pub original: CycleInfo,
    pub smoothed: CycleInfo,
    pub achieved_savings: f64,
    pub lambda_used: f64,
    pub position_mse: f64,
    pub roughness: f64,
    pub max_achievable: f64,
}

pub fn smooth_report(resolver: &Resolver, req: &SmoothRequest) -> Result<(SmoothReport, DriveCycle)> {
    let inputs = resolve(resolver, &req.vehicle, &req.cycle, req.units)?;
    let smoother = Smoother::new(&inputs.cycle.value, &inputs.vehicle.value, &Environment::default())?;
    let s = match (req.target_savings, req.lambda) {
        (Some(t), None) => smoother.to_target(t, DEFAULT_TOLERANCE)?,
        (None, Some(l)) => smoother.with_lambda(l)?,
        _ => return Err(Error::InvalidInput { what: "smoothing", message: "give exactly one of target savings or lambda".into() }),
    };
    let report = SmoothReport {
        manifest: manifest("smooth", &inputs)?,
        vehicle: inputs.vehicle.id.clone(),
        original: CycleInfo::of(&inputs.cycle.id, &inputs.cycle.value),
        smoothed: CycleInfo::of(&format!("{}-smoothed", inputs.cycle.id), &s.cycle),
        achieved_savings: s.achieved_savings,
        lambda_used: s.lambda_used,
        position_mse: s.position_mse,
        roughness: s.roughness,
        max_achievable: smoother.max_achievable()?,
    };
    Ok((report, s.cycle))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRequest {
    pub vehicle: String,
    #[serde(default = "default_cycle")]
    pub cycle: String,
    #[serde(default = "default_units")]
    pub units: SpeedUnit,
    pub scenario: LidarScenario,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub exact_smoothing: bool,
    /// Keep every sample in the report; otherwise only the summary statistics.
    #[serde(default)]
    pub include_samples: bool,
    #[serde(default)]
    pub histogram_bins: Option<usize>,
    #[serde(default)]
    pub economics: EconAssumptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub manifest: RunManifest,
    pub vehicle: String,
    pub cycle: CycleInfo,
    pub scenario: LidarScenario,
    pub summary: McSummary,
    /// Break-even of the median sample's range loss.
    pub economics: Breakeven,
}

/// `threads = None` runs on the ambient pool.
pub fn mc_report(resolver: &Resolver, req: &McRequest, threads: Option<usize>) -> Result<McReport> {
    let inputs = resolve(resolver, &req.vehicle, &req.cycle, req.units)?;
    let mut settings =
        McSettings::new(inputs.vehicle.value.clone(), inputs.cycle.value.clone(), req.scenario, req.n_samples, req.seed);
    settings.exact_smoothing = req.exact_smoothing;
    if let Some(bins) = req.histogram_bins {
        settings.histogram_bins = bins;
    }
    let mut summary = match threads {
        Some(t) => montecarlo::run_with_threads(&settings, t)?,
        None => montecarlo::run(&settings)?,
    };
    let median_range = summary.baseline_range * (1.0 + summary.median);
    let economics = breakeven_for_delta(summary.baseline_range, median_range, req.economics)?;
    if !req.include_samples {
        summary.samples.clear();
    }
    Ok(McReport {
        manifest: manifest("mc", &inputs)?.with_seed(req.seed),
        vehicle: inputs.vehicle.id.clone(),
        cycle: CycleInfo::of(&inputs.cycle.id, &inputs.cycle.value),
        scenario: req.scenario,
        summary,
        economics,
    })
}

fn default_daily_miles() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradeRequest {
    pub vehicle: String,
    #[serde(default = "default_cycle")]
    pub cycle: String,
    #[serde(default = "default_units")]
    pub units: SpeedUnit,
    #[serde(default)]
    pub config: Option<AutomationConfig>,
    #[serde(default = "default_daily_miles")]
    pub daily_miles: f64,
    /// kW at the pack; defaults to 0.5 C.
    #[serde(default)]
    pub charge_power_kw: Option<f64>,
    /// Hours between arriving and plugging in.
    #[serde(default)]
    pub charge_delay_h: f64,
    #[serde(default)]
    pub options: LongevityOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradeReport {
    pub manifest: RunManifest,
    pub vehicle: String,
    pub cycle: CycleInfo,
    pub config: Option<AutomationConfig>,
    pub daily_miles: f64,
    pub charge_power_kw: f64,
    pub charge_delay_h: f64,
    pub longevity_miles: f64,
    pub days: u32,
    pub avg_soc: f64,
    pub final_capacity: f64,
    /// (miles, capacity fraction) after every day.
    pub fade_curve: Vec<(f64, f64)>,
}

pub fn degrade_report(resolver: &Resolver, req: &DegradeRequest) -> Result<DegradeReport> {
    let inputs = resolve(resolver, &req.vehicle, &req.cycle, req.units)?;
    let spec = &inputs.vehicle.value;
    let charge_kw = req.charge_power_kw.unwrap_or(0.5 * spec.pack_capacity);
    let env = Environment::default();
    let schedule =
        DailySchedule::for_vehicle(spec, &env, &inputs.cycle.value, req.config.as_ref(), req.daily_miles, charge_kw)?
            .with_charge_delay(req.charge_delay_h * 3600.0)?;
    let vehicle = req.config.map_or_else(|| spec.clone(), |c| c.apply(spec));
    let fade = simulate_longevity(&vehicle, &schedule, &DegradationParams::default(), &CellModel::default(), &req.options)?;
    Ok(DegradeReport {
        manifest: manifest("degrade", &inputs)?,
        vehicle: inputs.vehicle.id.clone(),
        cycle: CycleInfo::of(&inputs.cycle.id, &inputs.cycle.value),
        config: req.config,
        daily_miles: req.daily_miles,
        charge_power_kw: charge_kw,
        charge_delay_h: req.charge_delay_h,
        longevity_miles: fade.longevity_miles,
        days: fade.days,
        avg_soc: fade.avg_soc,
        final_capacity: fade.final_state.capacity(),
        fade_curve: fade.fade_curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateRequest {
    pub vehicle: String,
    #[serde(default = "default_cycle")]
    pub composite: String,
    #[serde(default = "city_cycle")]
    pub city: String,
    #[serde(default = "default_units")]
    pub units: SpeedUnit,
    #[serde(default)]
    pub targets: CalibrationTargets,
}

fn city_cycle() -> String {
    "udds".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateReport {
    pub manifest: RunManifest,
    pub vehicle: String,
    pub fit: Calibration,
}

pub fn calibrate_report(resolver: &Resolver, req: &CalibrateRequest) -> Result<CalibrateReport> {
    let vehicle = resolver.vehicle(&req.vehicle)?;
    let composite = resolver.cycle(&req.composite, req.units)?;
    let city = resolver.cycle(&req.city, req.units)?;
    let fit = calibrate(&vehicle.value, &Environment::default(), &composite.value, &city.value, req.targets)?;
    Ok(CalibrateReport {
        manifest: RunManifest::new("calibrate")?
            .with_input("vehicle", &vehicle.record)
            .with_input("composite", &composite.record)
            .with_input("city", &city.record)
            .with_vehicle(&vehicle.value),
        vehicle: vehicle.id,
        fit,
    })
}
