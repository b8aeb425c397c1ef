//! Provenance block embedded in every result file and API response.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use aev_core::calibration::{bundled_calibration, Calibration};
use aev_core::{Result, VehicleSpec};

use crate::inputs::InputRecord;

pub const TOOL: &str = "aev-range";

/// Honoured for reproducible timestamps.
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

/// Efficiency and loss constants actually used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConstants {
    pub rolling_resistance: f64,
    pub regen_efficiency: f64,
    pub drivetrain_efficiency: f64,
    pub battery_efficiency: f64,
}

impl From<&VehicleSpec> for ResolvedConstants {
    fn from(v: &VehicleSpec) -> Self {
        Self {
            rolling_resistance: v.rolling_resistance,
            regen_efficiency: v.regen_efficiency,
            drivetrain_efficiency: v.drivetrain_efficiency,
            battery_efficiency: v.battery_efficiency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: BTreeMap<String, InputRecord>,
    /// The frozen reference calibration shipped with the tool.
    pub calibration: Calibration,
    /// Constants of the vehicle this run used, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ResolvedConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub created_at: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Result<Self> {
        Ok(Self {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            calibration: bundled_calibration()?,
            constants: None,
            seed: None,
            created_at: timestamp(),
        })
    }

    pub fn with_input(mut self, role: &str, record: &InputRecord) -> Self {
        self.inputs.insert(role.to_string(), record.clone());
        self
    }

    pub fn with_vehicle(mut self, spec: &VehicleSpec) -> Self {
        self.constants = Some(spec.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// RFC 3339 UTC, from `SOURCE_DATE_EPOCH` when it holds an integer.
pub fn timestamp() -> String {
    let now = std::env::var(SOURCE_DATE_EPOCH)
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| OffsetDateTime::from_unix_timestamp(s).ok())
        .unwrap_or_else(OffsetDateTime::now_utc);
    now.format(&Rfc3339).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_carries_calibration() {
        let m = RunManifest::new("simulate").unwrap().with_seed(7);
        assert_eq!(m.tool, "aev-range");
        assert_eq!(m.seed, Some(7));
        assert!(m.calibration.rolling_resistance > 0.0);
        assert!(m.created_at.ends_with('Z'));
    }
}
