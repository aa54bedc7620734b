//! Run configuration: JSON file values overridden by command-line flags,
//! then validated as a whole.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wdmsim_core::sim::TraceMode;

/// Shape of the JSON configuration file; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub topology: Option<PathBuf>,
    pub traffic: Option<PathBuf>,
    pub traffic_models: Option<PathBuf>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub hours: Option<u32>,
    pub fda_enabled: Option<bool>,
    pub fda_tol: Option<f64>,
    pub fda_max_passes: Option<usize>,
    pub fda_period_hours: Option<u32>,
    pub out_dir: Option<PathBuf>,
    pub mean_holding_s: Option<f64>,
    pub lightpath_capacity_gbps: Option<f64>,
    pub hourly_floor: Option<f64>,
    pub trace: Option<String>,
}

/// Command-line overrides; `None` defers to the file or the default.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub topology: Option<PathBuf>,
    pub traffic: Option<PathBuf>,
    pub traffic_models: Option<PathBuf>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub hours: Option<u32>,
    pub fda_enabled: Option<bool>,
    pub fda_tol: Option<f64>,
    pub fda_max_passes: Option<usize>,
    pub fda_period_hours: Option<u32>,
    pub out_dir: Option<PathBuf>,
    pub mean_holding_s: Option<f64>,
    pub lightpath_capacity_gbps: Option<f64>,
    pub hourly_floor: Option<f64>,
    pub trace: Option<String>,
}

/// Fully resolved configuration, echoed verbatim into `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub topology: PathBuf,
    pub traffic: PathBuf,
    pub traffic_models: Option<PathBuf>,
    pub k: usize,
    pub seed: u64,
    pub hours: u32,
    pub fda_enabled: bool,
    pub fda_tol: f64,
    pub fda_max_passes: usize,
    pub fda_period_hours: u32,
    pub out_dir: PathBuf,
    pub mean_holding_s: f64,
    pub lightpath_capacity_gbps: Option<f64>,
    pub hourly_floor: f64,
    pub trace: TraceMode,
}

/// Problems that make a configuration unusable.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// Required input missing: a usage problem (exit 1).
    #[error("missing required {0} (flag or config file entry)")]
    MissingRequired(&'static str),
    /// Semantically invalid values or unreadable inputs (exit 2).
    #[error("{0}")]
    Invalid(String),
}

impl RunConfig {
    /// Merges overrides over file values over defaults. Range checks happen
    /// in [`Self::validate`].
    pub fn resolve(file: FileConfig, flags: RunOverrides) -> Result<Self, ConfigError> {
        let topology = flags
            .topology
            .or(file.topology)
            .ok_or(ConfigError::MissingRequired("--topology"))?;
        let traffic = flags
            .traffic
            .or(file.traffic)
            .ok_or(ConfigError::MissingRequired("--traffic"))?;
        let trace = match flags
            .trace
            .or(file.trace)
            .unwrap_or_else(|| "auto".to_string())
            .as_str()
        {
            "auto" => TraceMode::Auto,
            "force" => TraceMode::Force,
            "off" => TraceMode::Off,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "trace must be auto, force or off, got `{other}`"
                )))
            }
        };
        Ok(Self {
            topology,
            traffic,
            traffic_models: flags.traffic_models.or(file.traffic_models),
            k: flags.k.or(file.k).unwrap_or(3),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            hours: flags.hours.or(file.hours).unwrap_or(24),
            fda_enabled: flags.fda_enabled.or(file.fda_enabled).unwrap_or(true),
            fda_tol: flags.fda_tol.or(file.fda_tol).unwrap_or(1e-4),
            fda_max_passes: flags.fda_max_passes.or(file.fda_max_passes).unwrap_or(10),
            fda_period_hours: flags
                .fda_period_hours
                .or(file.fda_period_hours)
                .unwrap_or(1),
            out_dir: flags
                .out_dir
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            mean_holding_s: flags.mean_holding_s.or(file.mean_holding_s).unwrap_or(300.0),
            lightpath_capacity_gbps: flags
                .lightpath_capacity_gbps
                .or(file.lightpath_capacity_gbps),
            hourly_floor: flags.hourly_floor.or(file.hourly_floor).unwrap_or(0.1),
            trace,
        })
    }

    /// Range and existence checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if self.hours < 1 {
            return bad("hours must be at least 1".into());
        }
        if self.fda_period_hours < 1 {
            return bad("fda_period_hours must be at least 1".into());
        }
        if self.fda_tol.is_nan() || self.fda_tol <= 0.0 {
            return bad("fda_tol must be positive".into());
        }
        if self.fda_max_passes < 1 {
            return bad("fda_max_passes must be at least 1".into());
        }
        if self.mean_holding_s.is_nan() || self.mean_holding_s <= 0.0 {
            return bad("mean_holding_s must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.hourly_floor) {
            return bad("hourly_floor must lie in [0, 1]".into());
        }
        if let Some(c) = self.lightpath_capacity_gbps {
            if c.is_nan() || c <= 0.0 {
                return bad("lightpath_capacity_gbps must be positive".into());
            }
        }
        for (name, path) in [("topology", &self.topology), ("traffic", &self.traffic)] {
            if !path.exists() {
                return bad(format!("{name} file not found: {}", path.display()));
            }
        }
        if let Some(p) = &self.traffic_models {
            if !p.exists() {
                return bad(format!("traffic models file not found: {}", p.display()));
            }
        }
        Ok(())
    }

    pub fn sim_options(&self) -> wdmsim_core::SimOptions {
        wdmsim_core::SimOptions {
            hours: self.hours,
            k: self.k,
            seed: self.seed,
            mean_holding_s: self.mean_holding_s,
            hourly_floor: self.hourly_floor,
            fda_enabled: self.fda_enabled,
            fda_tol: self.fda_tol,
            fda_max_passes: self.fda_max_passes,
            fda_period_hours: self.fda_period_hours,
            trace: self.trace,
            full_audit_every: 10_000,
        }
    }
}

/// Reads and parses the optional config file.
pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, ConfigError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError::Invalid(format!("bad config {}: {e}", p.display())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_flags() -> RunOverrides {
        RunOverrides {
            topology: Some(PathBuf::from("t.json")),
            traffic: Some(PathBuf::from("m.csv")),
            ..RunOverrides::default()
        }
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg = RunConfig::resolve(FileConfig::default(), minimal_flags()).unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.hours, 24);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.fda_enabled);
    }

    #[test]
    fn flags_override_file_values() {
        let file = FileConfig {
            hours: Some(24),
            seed: Some(1),
            ..FileConfig::default()
        };
        let mut flags = minimal_flags();
        flags.hours = Some(6);
        let cfg = RunConfig::resolve(file, flags).unwrap();
        assert_eq!(cfg.hours, 6, "flag must beat the file");
        assert_eq!(cfg.seed, 1, "file value survives where no flag is given");
    }

    #[test]
    fn missing_topology_is_a_usage_error() {
        let err = RunConfig::resolve(FileConfig::default(), RunOverrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::MissingRequired("--topology")));
    }

    #[test]
    fn zero_k_fails_validation() {
        let mut flags = minimal_flags();
        flags.k = Some(0);
        let cfg = RunConfig::resolve(FileConfig::default(), flags).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
    }
}
