//! Vehicles and cycles by bundled id, data-directory entry, or file path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use aev_core::cycles::{bundled, parse_cycle, BUNDLED_CYCLES};
use aev_core::vehicles::{bundled_ids, bundled_vehicle};
use aev_core::{DriveCycle, Error, Result, SpeedUnit, VehicleSpec};

/// Directory searched for `vehicles/<id>.json` and `cycles/<name>.csv`
/// before the bundled data.
pub const DATA_ENV: &str = "AEV_RANGE_DATA";

/// Where an input came from and the SHA-256 of its bytes. Bundled inputs are
/// hashed in their resolved form (vehicle JSON, cycle CSV).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub source: String,
    pub sha256: String,
}

impl InputRecord {
    fn of(source: impl Into<String>, bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        Self { source: source.into(), sha256: digest.iter().map(|b| format!("{b:02x}")).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct Resolved<T> {
    pub id: String,
    pub value: T,
    pub record: InputRecord,
}

#[derive(Debug, Clone, Default)]
pub struct Resolver {
    pub data_dir: Option<PathBuf>,
    /// Accept arbitrary file paths. Off for the HTTP service.
    pub allow_paths: bool,
}

impl Resolver {
    pub fn from_env(allow_paths: bool) -> Self {
        Self { data_dir: std::env::var_os(DATA_ENV).map(PathBuf::from), allow_paths }
    }

    fn data_file(&self, sub: &str, name: &str, ext: &str) -> Option<PathBuf> {
        if name.contains(['/', '\\']) || name.starts_with('.') {
            return None;
        }
        let path = self.data_dir.as_ref()?.join(sub).join(format!("{name}.{ext}"));
        path.is_file().then_some(path)
    }

    fn explicit_path<'a>(&self, name: &'a str) -> Option<&'a Path> {
        let path = Path::new(name);
        (self.allow_paths && path.is_file()).then_some(path)
    }

    pub fn vehicle(&self, name: &str) -> Result<Resolved<VehicleSpec>> {
        let file = self.explicit_path(name).map(Path::to_path_buf).or_else(|| self.data_file("vehicles", name, "json"));
        if let Some(path) = file {
            let bytes = std::fs::read(&path)?;
            let spec: VehicleSpec = serde_json::from_slice(&bytes)?;
            spec.validate()?;
            return Ok(Resolved { id: stem(&path), value: spec, record: InputRecord::of(path.display().to_string(), &bytes) });
        }
        let spec = bundled_vehicle(name)?;
        let bytes = serde_json::to_vec(&spec)?;
        Ok(Resolved { id: name.to_ascii_lowercase(), value: spec, record: InputRecord::of(format!("bundled:{name}"), &bytes) })
    }

    pub fn cycle(&self, name: &str, units: SpeedUnit) -> Result<Resolved<DriveCycle>> {
        let file = self.explicit_path(name).map(Path::to_path_buf).or_else(|| self.data_file("cycles", name, "csv"));
        if let Some(path) = file {
            let bytes = std::fs::read(&path)?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| Error::MalformedCycle { row: 0, message: "not UTF-8".into() })?;
            let cycle = parse_cycle(&text, units, &stem(&path))?;
            return Ok(Resolved { id: stem(&path), value: cycle, record: InputRecord::of(path.display().to_string(), &bytes) });
        }
        let cycle = bundled(name)?;
        let record = InputRecord::of(format!("bundled:{name}"), cycle.to_csv().as_bytes());
        Ok(Resolved { id: name.to_string(), value: cycle, record })
    }

    /// Bundled vehicle ids plus any `*.json` in the data directory.
    pub fn vehicle_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = bundled_ids().map(str::to_string).collect();
        merge(&mut ids, self.listed("vehicles", "json"));
        ids
    }

    pub fn cycle_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = BUNDLED_CYCLES.iter().map(|s| s.to_string()).collect();
        merge(&mut ids, self.listed("cycles", "csv"));
        ids
    }

    fn listed(&self, sub: &str, ext: &str) -> Vec<String> {
        let Some(dir) = &self.data_dir else { return Vec::new() };
        let Ok(entries) = std::fs::read_dir(dir.join(sub)) else { return Vec::new() };
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == ext))
            .map(|p| stem(&p))
            .collect();
        names.sort();
        names
    }
}

fn merge(ids: &mut Vec<String>, extra: Vec<String>) {
    for id in extra {
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_inputs_hash_stably() {
        let r = Resolver::default();
        let a = r.vehicle("model3").unwrap();
        let b = r.vehicle("model3").unwrap();
        assert_eq!(a.record, b.record);
        assert_eq!(a.record.sha256.len(), 64);
        assert_eq!(r.cycle("udds", SpeedUnit::Mps).unwrap().value.len(), 1370);
    }

    #[test]
    fn paths_need_permission() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.json");
        std::fs::write(&path, serde_json::to_vec(&bundled_vehicle("bolt").unwrap()).unwrap()).unwrap();
        let name = path.to_str().unwrap();
        assert!(Resolver { allow_paths: false, ..Default::default() }.vehicle(name).is_err());
        let open = Resolver { allow_paths: true, ..Default::default() }.vehicle(name).unwrap();
        assert_eq!(open.id, "v");
    }

    #[test]
    fn data_dir_shadows_bundled_and_rejects_traversal() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("cycles")).unwrap();
        std::fs::write(dir.path().join("cycles/ramp.csv"), "v\n0\n1\n2\n").unwrap();
        let r = Resolver { data_dir: Some(dir.path().to_path_buf()), allow_paths: false };
        assert_eq!(r.cycle("ramp", SpeedUnit::Mps).unwrap().value.len(), 3);
        assert!(r.cycle("../cycles/ramp", SpeedUnit::Mps).is_err());
        assert!(r.cycle_ids().contains(&"ramp".to_string()));
    }
}
