//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use aev_core::automation::bundled_presets;
use aev_core::calibration::CalibrationTargets;
use aev_core::degradation::LongevityOptions;
use aev_core::economics::EconAssumptions;
use aev_core::montecarlo::McSummary;
use aev_core::{AutomationConfig, DriveCycle, Error, Lidar, LidarScenario, MassBudget, PowerTrace, RangeOptions, SpeedUnit};

use crate::inputs::Resolver;
use crate::reports::{
    calibrate_report, degrade_report, mc_report, range_report, range_trace, smooth_report, CalibrateRequest,
    DegradeRequest, McRequest, RangeRequest, SmoothRequest,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "aev-range", version, about = "Range, smoothing, Monte Carlo and battery-longevity simulator for automated EVs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Range of one vehicle on repeats of a cycle, with optional automation.
    Simulate(SimulateArgs),
    /// Smooth a cycle to a savings target or with a fixed lambda.
    Smooth(SmoothArgs),
    /// Monte Carlo ensemble over the automation uncertainty space.
    Mc(McArgs),
    /// Battery longevity under a repeating daily schedule.
    Degrade(DegradeArgs),
    /// Serve the /v1 HTTP API.
    Serve(ServeArgs),
    /// Fit rolling resistance and regen efficiency to reference ranges.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct Source {
    /// Bundled vehicle id, data-directory id, or JSON file.
    #[arg(long, default_value = "model3")]
    pub vehicle: String,
    /// Bundled cycle (composite, udds), data-directory name, or CSV file.
    #[arg(long, default_value = "composite")]
    pub cycle: String,
    /// Speed unit of cycle CSV files.
    #[arg(long, default_value = "mps", value_parser = parse_units)]
    pub units: SpeedUnit,
}

#[derive(Debug, Args)]
pub struct Automation {
    /// Hardware preset name; explicit flags override its values.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub sensor_w: Option<f64>,
    #[arg(long)]
    pub compute_w: Option<f64>,
    /// Drag coefficient increase in percent (roof LiDAR only).
    #[arg(long)]
    pub drag_pct: Option<f64>,
    /// Smoothing energy savings in percent.
    #[arg(long)]
    pub savings_pct: Option<f64>,
    #[arg(long, value_parser = parse_lidar)]
    pub lidar: Option<Lidar>,
    /// Defaults to the bundled mass budget for the chosen LiDAR and compute load.
    #[arg(long)]
    pub added_mass_kg: Option<f64>,
}

impl Automation {
    /// `None` when no automation flag was given.
    pub fn config(&self) -> aev_core::Result<Option<AutomationConfig>> {
        let preset = match &self.preset {
            Some(name) => Some(
                bundled_presets()?
                    .into_iter()
                    .find(|p| p.name.eq_ignore_ascii_case(name))
                    .ok_or_else(|| Error::UnknownBundled { kind: "preset", name: name.clone() })?,
            ),
            None => None,
        };
        let any = preset.is_some()
            || self.sensor_w.is_some()
            || self.compute_w.is_some()
            || self.drag_pct.is_some()
            || self.savings_pct.is_some()
            || self.lidar.is_some()
            || self.added_mass_kg.is_some();
        if !any {
            return Ok(None);
        }
        let lidar = self.lidar.or(preset.as_ref().map(|p| p.lidar)).unwrap_or(Lidar::None);
        let compute = self.compute_w.unwrap_or(0.0);
        let config = AutomationConfig {
            sensor_power: self.sensor_w.or(preset.as_ref().map(|p| p.sensor_power())).unwrap_or(0.0),
            compute_power: compute,
            drag_multiplier: 1.0 + self.drag_pct.unwrap_or(0.0) / 100.0,
            added_mass: self.added_mass_kg.unwrap_or_else(|| MassBudget::default().added_mass(lidar, compute)),
            smoothing_savings: self.savings_pct.unwrap_or(0.0) / 100.0,
            lidar,
        };
        config.validate()?;
        Ok(Some(config))
    }
}

#[derive(Debug, Args)]
pub struct Econ {
    /// Upfront $ a buyer pays per mile of range.
    #[arg(long, default_value_t = 100.0)]
    pub value_per_mile: f64,
    /// $ per hour of driver time.
    #[arg(long, default_value_t = 12.0)]
    pub value_of_time: f64,
}

impl Econ {
    fn assumptions(&self) -> EconAssumptions {
        EconAssumptions { value_per_mile: self.value_per_mile, value_of_time: self.value_of_time }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub automation: Automation,
    #[command(flatten)]
    pub econ: Econ,
    /// Share of pack energy held back, percent.
    #[arg(long, default_value_t = 0.0)]
    pub buffer_pct: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for power_trace.csv.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, conflicts_with = "lambda", required_unless_present = "lambda")]
    pub savings_pct: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the smoothed cycle here in the input CSV format.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub econ: Econ,
    #[arg(long, default_value = "with-lidar", value_parser = parse_scenario)]
    pub scenario: LidarScenario,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; the result does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Resolve every sample's smoothing exactly instead of via the savings grid.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    /// Keep per-sample records in the JSON output.
    #[arg(long)]
    pub include_samples: bool,
    /// Per-sample CSV.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
    /// Directory for histogram.csv and boxplot.csv.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub automation: Automation,
    #[arg(long, default_value_t = 50.0)]
    pub daily_miles: f64,
    /// Charger power at the pack, kW. Defaults to 0.5 C.
    #[arg(long)]
    pub charge_kw: Option<f64>,
    /// Hours between arriving and plugging in.
    #[arg(long, default_value_t = 0.0)]
    pub charge_delay_h: f64,
    #[arg(long, default_value_t = 10_000)]
    pub day_cap: u32,
    /// End-of-life capacity fraction.
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the fade curve here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Concurrent Monte Carlo and degradation jobs.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value = "model3")]
    pub vehicle: String,
    #[arg(long, default_value = "composite")]
    pub composite: String,
    #[arg(long, default_value = "udds")]
    pub city: String,
    #[arg(long, default_value = "mps", value_parser = parse_units)]
    pub units: SpeedUnit,
    /// Reference composite range, miles.
    #[arg(long, default_value_t = 309.0)]
    pub composite_target: f64,
    /// Reference city range, miles.
    #[arg(long, default_value_t = 393.0)]
    pub city_target: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_units(s: &str) -> Result<SpeedUnit, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_lidar(s: &str) -> Result<Lidar, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<LidarScenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_INPUT, message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self { code: EXIT_INPUT, message: e.to_string() }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let resolver = Resolver::from_env(true);
    match command {
        Command::Simulate(a) => simulate(&resolver, a),
        Command::Smooth(a) => smooth(&resolver, a),
        Command::Mc(a) => mc(&resolver, a),
        Command::Degrade(a) => degrade(&resolver, a),
        Command::Calibrate(a) => calibrate(&resolver, a),
        Command::Serve(a) => crate::api::serve(Resolver::from_env(false), &a.bind, a.port, a.workers)
            .map_err(|e| Failure { code: EXIT_INPUT, message: e.to_string() }),
    }
}

fn simulate(resolver: &Resolver, a: SimulateArgs) -> Result<(), Failure> {
    let req = RangeRequest {
        vehicle: a.source.vehicle,
        cycle: a.source.cycle,
        units: a.source.units,
        config: a.automation.config()?,
        range_options: RangeOptions { buffer_fraction: a.buffer_pct / 100.0 },
        economics: a.econ.assumptions(),
    };
    let report = range_report(resolver, &req)?;
    if let Some(dir) = &a.plot {
        let (original, driven, trace) = range_trace(resolver, &req)?;
        fs::create_dir_all(dir)?;
        write_power_trace(&dir.join("power_trace.csv"), &original, &driven, &trace)?;
    }
    write_json(a.out.as_deref(), &report)
}

fn smooth(resolver: &Resolver, a: SmoothArgs) -> Result<(), Failure> {
    let req = SmoothRequest {
        vehicle: a.source.vehicle,
        cycle: a.source.cycle,
        units: a.source.units,
        target_savings: a.savings_pct.map(|p| p / 100.0),
        lambda: a.lambda,
    };
    let (report, cycle) = smooth_report(resolver, &req)?;
    if let Some(path) = &a.csv {
        fs::write(path, cycle.to_csv())?;
    }
    write_json(a.out.as_deref(), &report)
}

fn mc(resolver: &Resolver, a: McArgs) -> Result<(), Failure> {
    let req = McRequest {
        vehicle: a.source.vehicle,
        cycle: a.source.cycle,
        units: a.source.units,
        scenario: a.scenario,
        n_samples: a.n,
        seed: a.seed,
        exact_smoothing: a.exact,
        include_samples: a.include_samples || a.samples_csv.is_some(),
        histogram_bins: Some(a.bins),
        economics: a.econ.assumptions(),
    };
    let mut report = mc_report(resolver, &req, a.threads)?;
    if let Some(path) = &a.samples_csv {
        write_samples(path, &report.summary)?;
    }
    if let Some(dir) = &a.plot {
        fs::create_dir_all(dir)?;
        write_histogram(&dir.join("histogram.csv"), &report.summary)?;
        write_boxplot(&dir.join("boxplot.csv"), &report.summary)?;
    }
    if !a.include_samples {
        report.summary.samples.clear();
    }
    write_json(a.out.as_deref(), &report)
}

fn degrade(resolver: &Resolver, a: DegradeArgs) -> Result<(), Failure> {
    let req = DegradeRequest {
        vehicle: a.source.vehicle,
        cycle: a.source.cycle,
        units: a.source.units,
        config: a.automation.config()?,
        daily_miles: a.daily_miles,
        charge_power_kw: a.charge_kw,
        charge_delay_h: a.charge_delay_h,
        options: LongevityOptions { threshold: a.threshold, day_cap: a.day_cap },
    };
    let report = degrade_report(resolver, &req)?;
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["miles", "capacity"])?;
        for (miles, cap) in &report.fade_curve {
            w.serialize((miles, cap))?;
        }
        w.flush()?;
    }
    write_json(a.out.as_deref(), &report)
}

fn calibrate(resolver: &Resolver, a: CalibrateArgs) -> Result<(), Failure> {
    let req = CalibrateRequest {
        vehicle: a.vehicle,
        composite: a.composite,
        city: a.city,
        units: a.units,
        targets: CalibrationTargets { composite_range: a.composite_target, city_range: a.city_target },
    };
    write_json(a.out.as_deref(), &calibrate_report(resolver, &req)?)
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_power_trace(path: &Path, original: &DriveCycle, driven: &DriveCycle, trace: &PowerTrace) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "t_s", "v_original_mps", "v_driven_mps", "p_drag_w", "p_friction_w", "p_inertia_w", "p_compute_w",
        "p_sensor_w", "p_battery_w",
    ])?;
    for (i, r) in trace.records.iter().enumerate() {
        w.serialize((
            i as f64 * trace.dt,
            original.speeds[i],
            driven.speeds[i],
            r.p_drag,
            r.p_friction,
            r.p_inertia,
            r.p_compute,
            r.p_sensor,
            r.p_battery,
        ))?;
    }
    Ok(w.flush()?)
}

fn write_samples(path: &Path, s: &McSummary) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "index", "sensor_w", "compute_w", "drag_multiplier", "smoothing_savings", "added_mass_kg", "range_mi",
        "range_delta",
    ])?;
    for x in &s.samples {
        let c = &x.config;
        w.serialize((x.index, c.sensor_power, c.compute_power, c.drag_multiplier, c.smoothing_savings, c.added_mass, x.range, x.range_delta))?;
    }
    Ok(w.flush()?)
}

fn write_histogram(path: &Path, s: &McSummary) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    let h = &s.histogram;
    for (i, count) in h.counts.iter().enumerate() {
        w.serialize((h.edges[i], h.edges[i + 1], count))?;
    }
    Ok(w.flush()?)
}

fn write_boxplot(path: &Path, s: &McSummary) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["statistic", "range_delta"])?;
    let q = &s.quantiles;
    for (name, v) in [("p5", q.p5), ("p25", q.p25), ("median", q.median), ("p75", q.p75), ("p95", q.p95), ("mean", s.mean)] {
        w.serialize((name, v))?;
    }
    Ok(w.flush()?)
}
