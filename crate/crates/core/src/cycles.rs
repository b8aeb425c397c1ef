//! Drive-cycle ingestion, validation and position integration.
//!
//! Cycles are 1 Hz speed traces. The interchange format is CSV with either a
//! single speed column (`v`) or a `t_s,v` pair; `#` lines carry optional
//! metadata (`# name: udds`, `# kind: city`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MPH_TO_MPS: f64 = 0.44704;
pub const KMH_TO_MPS: f64 = 1.0 / 3.6;
pub const METERS_PER_MILE: f64 = 1609.344;

/// Sample spacing of every cycle, seconds.
pub const CYCLE_DT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Composite,
    City,
    Custom,
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleKind::Composite => "composite",
            CycleKind::City => "city",
            CycleKind::Custom => "custom",
        })
    }
}

impl FromStr for CycleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "composite" | "city-highway" => Ok(CycleKind::Composite),
            "city" | "urban" => Ok(CycleKind::City),
            "custom" => Ok(CycleKind::Custom),
            other => Err(Error::invalid("cycle kind", other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedUnit {
    Mps,
    Mph,
    Kmh,
}

impl SpeedUnit {
    pub fn to_mps(self) -> f64 {
        match self {
            SpeedUnit::Mps => 1.0,
            SpeedUnit::Mph => MPH_TO_MPS,
            SpeedUnit::Kmh => KMH_TO_MPS,
        }
    }
}

impl FromStr for SpeedUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mps" | "m/s" => Ok(SpeedUnit::Mps),
            "mph" => Ok(SpeedUnit::Mph),
            "kmh" | "km/h" | "kph" => Ok(SpeedUnit::Kmh),
            other => Err(Error::invalid("speed unit", other.to_string())),
        }
    }
}

/// A 1 Hz velocity trace in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    pub name: String,
    pub dt: f64,
    pub speeds: Vec<f64>,
    pub kind: CycleKind,
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, kind: CycleKind, speeds: Vec<f64>) -> Result<Self> {
        if speeds.is_empty() {
            return Err(Error::EmptyCycle);
        }
        if let Some((row, &value)) = speeds
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::NegativeSpeed { row, value });
        }
        Ok(Self {
            name: name.into(),
            dt: CYCLE_DT,
            speeds,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.speeds.len() as f64 * self.dt
    }

    /// Backward first difference; the first sample has zero acceleration.
    pub fn accelerations(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.speeds.len());
        out.push(0.0);
        out.extend(self.speeds.windows(2).map(|w| (w[1] - w[0]) / self.dt));
        out
    }

    /// Trapezoidal distance, meters.
    pub fn distance_m(&self) -> f64 {
        self.speeds
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * self.dt)
            .sum()
    }

    pub fn distance_miles(&self) -> f64 {
        self.distance_m() / METERS_PER_MILE
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().copied().fold(0.0, f64::max)
    }

    /// Serialise in the same `t_s,v` layout `parse_cycle` accepts.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# name: {}\n# kind: {}\nt_s,v\n", self.name, self.kind);
        for (i, v) in self.speeds.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i as f64 * self.dt, v));
        }
        out
    }
}

/// Cumulative distance along a cycle, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionTrace {
    pub positions: Vec<f64>,
}

impl PositionTrace {
    pub fn final_position(&self) -> f64 {
        self.positions.last().copied().unwrap_or(0.0)
    }
}

pub fn integrate_positions(cycle: &DriveCycle) -> PositionTrace {
    let mut positions = Vec::with_capacity(cycle.len());
    let mut acc = 0.0;
    positions.push(0.0);
    for w in cycle.speeds.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * cycle.dt;
        positions.push(acc);
    }
    PositionTrace { positions }
}

pub fn load_cycle(path: impl AsRef<Path>, units: SpeedUnit) -> Result<DriveCycle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cycle".to_string());
    parse_cycle(&text, units, &fallback)
}

/// Parse cycle CSV text. `fallback_name` is used when no `# name:` line is present.
pub fn parse_cycle(text: &str, units: SpeedUnit, fallback_name: &str) -> Result<DriveCycle> {
    let mut name = fallback_name.to_string();
    let mut kind = CycleKind::Custom;
    for line in text.lines() {
        let Some(meta) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        if let Some((key, value)) = meta.split_once(':') {
            match key.trim().to_ascii_lowercase().as_str() {
                "name" => name = value.trim().to_string(),
                "kind" => kind = value.parse()?,
                _ => {}
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut times: Vec<f64> = Vec::new();
    let mut speeds: Vec<f64> = Vec::new();
    let mut columns: Option<usize> = None;
    let mut row = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::MalformedCycle {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            // A non-numeric first line is the header.
            Err(_) if columns.is_none() && speeds.is_empty() => {
                columns = Some(fields.len());
                continue;
            }
            Err(e) => {
                return Err(Error::MalformedCycle {
                    row,
                    message: e.to_string(),
                })
            }
        };
        let ncol = *columns.get_or_insert(values.len());
        if values.len() != ncol || !(1..=2).contains(&ncol) {
            return Err(Error::MalformedCycle {
                row,
                message: format!("expected {} column(s), found {}", ncol, values.len()),
            });
        }
        let v = *values.last().expect("at least one column");
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NegativeSpeed { row, value: v });
        }
        if ncol == 2 {
            let t = values[0];
            if let Some(&prev) = times.last() {
                if ((t - prev) - CYCLE_DT).abs() > 1e-6 {
                    return Err(Error::NonUniformTimestamps {
                        row,
                        expected: prev + CYCLE_DT,
                        found: t,
                    });
                }
            }
            times.push(t);
        }
        speeds.push(v * units.to_mps());
        row += 1;
    }
    DriveCycle::new(name, kind, speeds)
}

const UDDS_CSV: &str = include_str!("../data/cycles/udds.csv");
const COMPOSITE_CSV: &str = include_str!("../data/cycles/composite.csv");

/// Names of the cycles shipped with the crate.
pub const BUNDLED_CYCLES: [&str; 2] = ["composite", "udds"];

/// Load a bundled cycle by name (`composite`/`udds`, or by kind `city`).
pub fn bundled(name: &str) -> Result<DriveCycle> {
    let text = match name {
        "udds" | "city" => UDDS_CSV,
        "composite" => COMPOSITE_CSV,
        other => {
            return Err(Error::UnknownBundled {
                kind: "cycle",
                name: other.to_string(),
            })
        }
    };
    parse_cycle(text, SpeedUnit::Mps, name)
}

pub fn bundled_for_kind(kind: CycleKind) -> Result<DriveCycle> {
    match kind {
        CycleKind::City => bundled("udds"),
        CycleKind::Composite => bundled("composite"),
        CycleKind::Custom => Err(Error::invalid("cycle kind", "no bundled custom cycle")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mph_rows_convert_to_mps() {
        let c = parse_cycle("0\n4.47\n8.94\n", SpeedUnit::Mph, "t").unwrap();
        assert_eq!(c.kind, CycleKind::Custom);
        let expected = [0.0, 1.998_268_8, 3.996_537_6];
        for (a, b) in c.speeds.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn all_zero_cycle_is_valid() {
        let c = parse_cycle("v\n0\n0\n0\n0\n", SpeedUnit::Mps, "z").unwrap();
        assert!(c.speeds.iter().all(|&v| v == 0.0));
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn negative_speed_reports_row() {
        let err = parse_cycle("t_s,v\n0,0\n1,2\n2,-1\n", SpeedUnit::Mps, "n").unwrap_err();
        match err {
            Error::NegativeSpeed { row, value } => {
                assert_eq!(row, 2);
                assert_eq!(value, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaps_in_time_column_are_rejected() {
        let err = parse_cycle("t_s,v\n0,0\n1,2\n3,2\n", SpeedUnit::Mps, "g").unwrap_err();
        assert!(matches!(err, Error::NonUniformTimestamps { row: 2, .. }));
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(
            parse_cycle("", SpeedUnit::Mps, "e"),
            Err(Error::EmptyCycle)
        ));
        assert!(matches!(
            parse_cycle("t_s,v\n# nothing\n", SpeedUnit::Mps, "e"),
            Err(Error::EmptyCycle)
        ));
    }

    #[test]
    fn crlf_and_metadata() {
        let c = parse_cycle(
            "# name: demo\r\n# kind: city\r\nt_s,v\r\n0,0\r\n1,1.5\r\n",
            SpeedUnit::Mps,
            "x",
        )
        .unwrap();
        assert_eq!(c.name, "demo");
        assert_eq!(c.kind, CycleKind::City);
        assert_eq!(c.speeds, vec![0.0, 1.5]);
    }

    #[test]
    fn integrate_hand_cases() {
        let zero = DriveCycle::new("z", CycleKind::Custom, vec![0.0; 3]).unwrap();
        assert_eq!(integrate_positions(&zero).positions, vec![0.0, 0.0, 0.0]);

        let c = DriveCycle::new("c", CycleKind::Custom, vec![0.0, 2.0, 2.0]).unwrap();
        assert_eq!(integrate_positions(&c).positions, vec![0.0, 1.0, 3.0]);

        let constant = DriveCycle::new("k", CycleKind::Custom, vec![10.0; 101]).unwrap();
        let p = integrate_positions(&constant);
        assert_relative_eq!(p.final_position(), 1000.0, epsilon = 1e-9);
        assert_relative_eq!(p.final_position(), constant.distance_m(), epsilon = 1e-12);
    }

    #[test]
    fn bundled_udds_matches_schedule() {
        let udds = bundled("udds").unwrap();
        assert_eq!(udds.len(), 1370);
        assert_eq!(udds.kind, CycleKind::City);
        assert_relative_eq!(udds.max_speed(), 25.35, epsilon = 0.01);
        assert_eq!(udds.speeds[0], 0.0);
        assert_relative_eq!(udds.distance_miles(), 7.45, epsilon = 0.01);

        let comp = bundled("composite").unwrap();
        assert_eq!(comp.kind, CycleKind::Composite);
        assert_eq!(comp.speeds[0], 0.0);
        assert_eq!(comp.len(), 1370 + 600);
    }

    #[test]
    fn csv_round_trip() {
        let udds = bundled("udds").unwrap();
        let back = parse_cycle(&udds.to_csv(), SpeedUnit::Mps, "x").unwrap();
        assert_eq!(back, udds);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn differentiate_recovers_speeds(speeds in proptest::collection::vec(0.0f64..40.0, 3..200)) {
                let c = DriveCycle::new("p", CycleKind::Custom, speeds.clone()).unwrap();
                let p = integrate_positions(&c).positions;
                // Undo the trapezoid sample by sample from the known first speed.
                let mut v = speeds[0];
                for i in 1..p.len() {
                    v = 2.0 * (p[i] - p[i - 1]) - v;
                    prop_assert!((v - speeds[i]).abs() < 1e-9);
                }
                prop_assert!(p.windows(2).all(|w| w[1] >= w[0]));
            }

            #[test]
            fn unit_conversion_is_linear(speeds in proptest::collection::vec(0.0f64..80.0, 1..50)) {
                let text: String = speeds.iter().map(|v| format!("{v}\n")).collect();
                let scaled: String = speeds.iter().map(|v| format!("{}\n", v * MPH_TO_MPS)).collect();
                let a = parse_cycle(&text, SpeedUnit::Mph, "a").unwrap();
                let b = parse_cycle(&scaled, SpeedUnit::Mps, "b").unwrap();
                for (x, y) in a.speeds.iter().zip(&b.speeds) {
                    prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
                }
            }
        }
    }
}
