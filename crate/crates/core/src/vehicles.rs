//! Bundled vehicle specifications and JSON loading.

use std::path::Path;

use crate::error::{Error, Result};
use crate::physics::VehicleSpec;

const BUNDLED: [(&str, &str); 5] = [
    ("model3", include_str!("../data/vehicles/model3.json")),
    ("bolt", include_str!("../data/vehicles/bolt.json")),
    ("kona", include_str!("../data/vehicles/kona.json")),
    ("leaf", include_str!("../data/vehicles/leaf.json")),
    ("models", include_str!("../data/vehicles/models.json")),
];

pub fn bundled_ids() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(id, _)| *id)
}

pub fn bundled_vehicle(id: &str) -> Result<VehicleSpec> {
    let (_, json) = BUNDLED
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownBundled { kind: "vehicle", name: id.to_string() })?;
    let spec: VehicleSpec = serde_json::from_str(json)?;
    spec.validate()?;
    Ok(spec)
}

/// All bundled vehicles as `(id, spec)`, Model 3 first.
pub fn bundled_vehicles() -> Result<Vec<(&'static str, VehicleSpec)>> {
    bundled_ids().map(|id| Ok((id, bundled_vehicle(id)?))).collect()
}

pub fn load_vehicle(path: impl AsRef<Path>) -> Result<VehicleSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: VehicleSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}
