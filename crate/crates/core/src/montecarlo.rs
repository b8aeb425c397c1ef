//! Monte Carlo over the uncertain automation parameters.
//!
//! Every sample draws from its own ChaCha12 stream (`seed`, stream = sample
//! index), so the ensemble is identical however the work is split across
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::automation::{coupled_compute, AutomationConfig, Lidar, LidarScenario, MassBudget, ScenarioSpace};
use crate::cycles::DriveCycle;
use crate::error::{Error, Result};
use crate::physics::{Environment, VehicleSpec};
use crate::range::{deplete, RangeOptions};
use crate::smoothing::{SmoothedCycle, Smoother};

/// Savings spacing of the precomputed smoothing grid.
pub const GRID_STEP: f64 = 0.005;
/// Tolerance used when resolving each grid point.
pub const GRID_TOLERANCE: f64 = 1e-4;

fn default_bins() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub n_samples: usize,
    pub seed: u64,
    pub scenario: ScenarioSpace,
    pub vehicle: VehicleSpec,
    pub cycle: DriveCycle,
    #[serde(default)]
    pub env: Environment,
    #[serde(default)]
    pub mass_budget: MassBudget,
    #[serde(default)]
    pub range_options: RangeOptions,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Resolve each sample's smoothing with its own λ search instead of the grid.
    #[serde(default)]
    pub exact_smoothing: bool,
}

impl McSettings {
    pub fn new(vehicle: VehicleSpec, cycle: DriveCycle, scenario: LidarScenario, n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            scenario: ScenarioSpace::new(scenario),
            vehicle,
            cycle,
            env: Environment::default(),
            mass_budget: MassBudget::default(),
            range_options: RangeOptions::default(),
            histogram_bins: default_bins(),
            exact_smoothing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be >= 1"));
        }
        if self.histogram_bins == 0 {
            return Err(Error::invalid("histogram_bins", "must be >= 1"));
        }
        self.scenario.validate()?;
        self.vehicle.validate()?;
        self.env.validate()
    }

    /// Hardware mass carried in every sample of this scenario.
    pub fn scenario_mass(&self) -> f64 {
        self.mass_budget
            .added_mass(scenario_lidar(self.scenario.lidar_scenario), self.scenario.compute_bounds[0])
    }
}

fn scenario_lidar(s: LidarScenario) -> Lidar {
    match s {
        LidarScenario::WithLidar => Lidar::SpinningRoof,
        LidarScenario::WithoutLidar => Lidar::None,
    }
}

fn uniform(rng: &mut ChaCha12Rng, [lo, hi]: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    if hi == lo {
        lo
    } else {
        lo + (hi - lo) * u
    }
}

/// Draw one configuration. Sensor, savings and drag are always drawn in that
/// order so the stream layout does not depend on the scenario.
pub fn sample_config(space: &ScenarioSpace, added_mass: f64, rng: &mut ChaCha12Rng) -> Result<AutomationConfig> {
    let sensor_power = uniform(rng, space.sensor_bounds);
    let smoothing_savings = uniform(rng, space.savings_bounds);
    let drag = uniform(rng, space.drag_bounds);
    let lidar = scenario_lidar(space.lidar_scenario);
    Ok(AutomationConfig {
        sensor_power,
        compute_power: coupled_compute(sensor_power, space)?,
        drag_multiplier: if lidar == Lidar::SpinningRoof { 1.0 + drag } else { 1.0 },
        added_mass,
        smoothing_savings,
        lidar,
    })
}

pub fn sample_rng(seed: u64, index: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Smoothed cycles at evenly spaced savings targets.
#[derive(Debug, Clone)]
pub struct SmoothingTable {
    pub savings: Vec<f64>,
    pub cycles: Vec<SmoothedCycle>,
}

impl SmoothingTable {
    pub fn build(cycle: &DriveCycle, spec: &VehicleSpec, env: &Environment, bounds: [f64; 2]) -> Result<Self> {
        let smoother = Smoother::new(cycle, spec, env)?;
        let [lo, hi] = bounds;
        let steps = ((hi - lo) / GRID_STEP).round().max(0.0) as usize;
        let savings: Vec<f64> = if steps == 0 {
            vec![lo]
        } else {
            (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
        };
        let cycles = par_map(&savings, |&s| smoother.to_target(s, GRID_TOLERANCE))?;
        Ok(Self { savings, cycles })
    }

    /// Bracketing grid indices and the interpolation weight of the upper one.
    fn bracket(&self, s: f64) -> (usize, usize, f64) {
        let n = self.savings.len();
        if n == 1 || s <= self.savings[0] {
            return (0, 0, 0.0);
        }
        if s >= self.savings[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let i = self.savings.partition_point(|&g| g <= s) - 1;
        let w = (s - self.savings[i]) / (self.savings[i + 1] - self.savings[i]);
        (i, i + 1, w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub index: usize,
    pub config: AutomationConfig,
    /// miles
    pub range: f64,
    pub range_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5e-3, lo + 0.5e-3) };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }
}

/// Median, quartiles and the 5th/95th percentiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub p5: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n_samples: usize,
    pub seed: u64,
    pub baseline_range: f64,
    pub added_mass: f64,
    pub median: f64,
    pub ci90: [f64; 2],
    pub quantiles: BoxStats,
    pub mean: f64,
    pub fraction_worse: f64,
    pub histogram: Histogram,
    pub samples: Vec<McSample>,
}

/// Nearest-rank percentile of already sorted values, `p` in (0, 1].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn fraction_worse(samples: &[McSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "empty"));
    }
    Ok(samples.iter().filter(|s| s.range_delta < 0.0).count() as f64 / samples.len() as f64)
}

pub fn summarize(settings: &McSettings, baseline_range: f64, added_mass: f64, samples: Vec<McSample>) -> Result<McSummary> {
    let mut deltas: Vec<f64> = samples.iter().map(|s| s.range_delta).collect();
    deltas.sort_by(f64::total_cmp);
    let quantiles = BoxStats {
        p5: percentile(&deltas, 0.05),
        p25: percentile(&deltas, 0.25),
        median: percentile(&deltas, 0.5),
        p75: percentile(&deltas, 0.75),
        p95: percentile(&deltas, 0.95),
    };
    // Summed in index order so the mean does not depend on scheduling.
    let mean = samples.iter().map(|s| s.range_delta).sum::<f64>() / samples.len() as f64;
    Ok(McSummary {
        n_samples: samples.len(),
        seed: settings.seed,
        baseline_range,
        added_mass,
        median: quantiles.median,
        ci90: [quantiles.p5, quantiles.p95],
        quantiles,
        mean,
        fraction_worse: fraction_worse(&samples)?,
        histogram: Histogram::of(&deltas, settings.histogram_bins),
        samples,
    })
}

struct Engine<'a> {
    settings: &'a McSettings,
    table: Option<SmoothingTable>,
    usable_wh: f64,
    baseline_range: f64,
    added_mass: f64,
}

impl<'a> Engine<'a> {
    fn new(settings: &'a McSettings) -> Result<Self> {
        settings.validate()?;
        let s = settings;
        let usable_wh = s.range_options.usable_energy_wh(&s.vehicle)?;
        let baseline_range = deplete(&s.vehicle, &s.env, &s.cycle, Default::default(), usable_wh)?.range;
        let table = if s.exact_smoothing {
            None
        } else {
            Some(SmoothingTable::build(&s.cycle, &s.vehicle, &s.env, s.scenario.savings_bounds)?)
        };
        Ok(Self { settings, table, usable_wh, baseline_range, added_mass: s.scenario_mass() })
    }

    fn sample(&self, index: usize) -> Result<McSample> {
        let s = self.settings;
        let mut rng = sample_rng(s.seed, index);
        let config = sample_config(&s.scenario, self.added_mass, &mut rng)?;
        let spec = config.apply(&s.vehicle);
        let range = match &self.table {
            Some(table) => {
                let (i, j, w) = table.bracket(config.smoothing_savings);
                let wh_mile = |k: usize| -> Result<f64> {
                    Ok(deplete(&spec, &s.env, &table.cycles[k].cycle, config.loads(), self.usable_wh)?.intensity)
                };
                let lo = wh_mile(i)?;
                let intensity = if i == j { lo } else { (1.0 - w) * lo + w * wh_mile(j)? };
                self.usable_wh / intensity
            }
            None => {
                let smoothed = Smoother::new(&s.cycle, &s.vehicle, &s.env)?
                    .to_target(config.smoothing_savings, crate::smoothing::DEFAULT_TOLERANCE)?;
                deplete(&spec, &s.env, &smoothed.cycle, config.loads(), self.usable_wh)?.range
            }
        };
        Ok(McSample {
            index,
            config,
            range,
            range_delta: (range - self.baseline_range) / self.baseline_range,
        })
    }

    fn finish(&self, samples: Vec<McSample>) -> Result<McSummary> {
        summarize(self.settings, self.baseline_range, self.added_mass, samples)
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    items.iter().map(f).collect()
}

/// Run the ensemble, in parallel when the `parallel` feature is on.
pub fn run(settings: &McSettings) -> Result<McSummary> {
    let engine = Engine::new(settings)?;
    #[cfg(feature = "parallel")]
    let samples = {
        use rayon::prelude::*;
        (0..settings.n_samples)
            .into_par_iter()
            .map(|i| engine.sample(i))
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let samples = (0..settings.n_samples)
        .map(|i| engine.sample(i))
        .collect::<Result<Vec<_>>>()?;
    engine.finish(samples)
}

/// Single-threaded reference path.
pub fn run_sequential(settings: &McSettings) -> Result<McSummary> {
    let engine = Engine::new(settings)?;
    let samples = (0..settings.n_samples)
        .map(|i| engine.sample(i))
        .collect::<Result<Vec<_>>>()?;
    engine.finish(samples)
}

/// Run on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn run_with_threads(settings: &McSettings, threads: usize) -> Result<McSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| run(settings))
}

#[cfg(not(feature = "parallel"))]
pub fn run_with_threads(settings: &McSettings, _threads: usize) -> Result<McSummary> {
    run(settings)
}
