//! Key-value configuration files mirroring the CLI flags.
//!
//! Format: one `key = value` pair per line, `#` comments, blank lines
//! ignored. Keys are the flag names; `-` and `_` are interchangeable
//! (`hard-only` and `hard_only` both work). List values are
//! comma-separated. A later line overrides an earlier one for the same
//! key, and CLI flags override the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::hamiltonians::SchemeName;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("unknown configuration key {key:?} (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("bad value for {key}: {reason}")]
    BadValue { key: String, reason: String },
    #[error("{0} and full are mutually exclusive")]
    SectorConflict(String),
    #[error("missing required setting {0}")]
    Missing(&'static str),
    #[error("could not read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

const KNOWN_KEYS: [&str; 13] = [
    "n",
    "scheme",
    "instances",
    "hard_only",
    "fidelity",
    "seed",
    "grid",
    "sector",
    "full",
    "scan_sectors",
    "out",
    "threads",
    "t_max",
];

/// Parsed but untyped `key = value` pairs, keys normalized to `_`.
pub type ConfigMap = BTreeMap<String, String>;

/// Parse configuration text. Later duplicate keys win.
pub fn parse_config_text(text: &str) -> Result<ConfigMap, ConfigError> {
    let mut map = ConfigMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key_part, value_part)) = stripped.split_once('=') else {
            return Err(ConfigError::BadLine {
                line,
                text: stripped.to_string(),
            });
        };
        let key = key_part.trim().replace('-', "_");
        let value = value_part.trim().to_string();
        if key.is_empty() || !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { key, line });
        }
        map.insert(key, value);
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<ConfigMap, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

/// Evolution-space policy for Σz-conserving schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectorMode {
    /// Solution's sector for conserving schemes, full space otherwise.
    Sector,
    /// Full space for every scheme.
    Full,
    /// Try candidate sectors in distance-from-n/3 order (linear
    /// overhead) instead of reading the solution's weight.
    Scan,
}

/// Everything the CLI flags can say, with unset fields still unset;
/// merge order is flags over file over defaults.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub ns: Option<Vec<usize>>,
    pub schemes: Option<Vec<SchemeName>>,
    pub instances: Option<usize>,
    pub hard_only: Option<bool>,
    pub fidelity: Option<f64>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub sector_mode: Option<SectorMode>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub t_max: Option<f64>,
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|part| {
            part.trim().parse::<T>().map_err(|e| ConfigError::BadValue {
                key: key.to_string(),
                reason: format!("{e} in {:?}", part.trim()),
            })
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        reason: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(ConfigError::BadValue {
            key: key.to_string(),
            reason: format!("expected a boolean, got {other:?}"),
        }),
    }
}

impl Overrides {
    /// Typed view of a parsed config file.
    pub fn from_map(map: &ConfigMap) -> Result<Self, ConfigError> {
        let mut o = Overrides::default();
        for (key, value) in map {
            match key.as_str() {
                "n" => o.ns = Some(parse_list(key, value)?),
                "scheme" => o.schemes = Some(parse_list(key, value)?),
                "instances" => o.instances = Some(parse_scalar(key, value)?),
                "hard_only" => o.hard_only = Some(parse_bool(key, value)?),
                "fidelity" => o.fidelity = Some(parse_scalar(key, value)?),
                "seed" => o.seed = Some(parse_scalar(key, value)?),
                "grid" => o.grid = Some(parse_scalar(key, value)?),
                "sector" => {
                    if parse_bool(key, value)? {
                        if o.sector_mode == Some(SectorMode::Full) {
                            return Err(ConfigError::SectorConflict("sector".into()));
                        }
                        o.sector_mode = Some(SectorMode::Sector);
                    }
                }
                "full" => {
                    if parse_bool(key, value)? {
                        if matches!(o.sector_mode, Some(SectorMode::Sector | SectorMode::Scan)) {
                            return Err(ConfigError::SectorConflict("sector/scan_sectors".into()));
                        }
                        o.sector_mode = Some(SectorMode::Full);
                    }
                }
                "scan_sectors" => {
                    if parse_bool(key, value)? {
                        if o.sector_mode == Some(SectorMode::Full) {
                            return Err(ConfigError::SectorConflict("scan_sectors".into()));
                        }
                        o.sector_mode = Some(SectorMode::Scan);
                    }
                }
                "out" => o.out = Some(PathBuf::from(value)),
                "threads" => o.threads = Some(parse_scalar(key, value)?),
                "t_max" => o.t_max = Some(parse_scalar(key, value)?),
                _ => unreachable!("parse_config_text filters unknown keys"),
            }
        }
        Ok(o)
    }

    /// `self` wins over `base` field by field.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            ns: self.ns.or(base.ns),
            schemes: self.schemes.or(base.schemes),
            instances: self.instances.or(base.instances),
            hard_only: self.hard_only.or(base.hard_only),
            fidelity: self.fidelity.or(base.fidelity),
            seed: self.seed.or(base.seed),
            grid: self.grid.or(base.grid),
            sector_mode: self.sector_mode.or(base.sector_mode),
            out: self.out.or(base.out),
            threads: self.threads.or(base.threads),
            t_max: self.t_max.or(base.t_max),
        }
    }
}

/// A validated batch-experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub ns: Vec<usize>,
    pub schemes: Vec<SchemeName>,
    pub instances: usize,
    pub hard_only: bool,
    pub fidelity: f64,
    pub seed: u64,
    pub sector_mode: SectorMode,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub t_max: f64,
    /// Time-discretization error target per run; not exposed on the
    /// CLI. Batches whose analyses only compare fidelities against a
    /// coarse threshold can justify a looser value than the default.
    pub accuracy_target: f64,
}

impl ExperimentConfig {
    pub fn from_overrides(o: &Overrides) -> Result<Self, ConfigError> {
        let ns = o.ns.clone().ok_or(ConfigError::Missing("n"))?;
        let schemes = o.schemes.clone().ok_or(ConfigError::Missing("scheme"))?;
        if ns.is_empty() {
            return Err(ConfigError::BadValue {
                key: "n".into(),
                reason: "empty list".into(),
            });
        }
        if schemes.is_empty() {
            return Err(ConfigError::BadValue {
                key: "scheme".into(),
                reason: "empty list".into(),
            });
        }
        let instances = o.instances.unwrap_or(100);
        if instances == 0 {
            return Err(ConfigError::BadValue {
                key: "instances".into(),
                reason: "must be at least 1".into(),
            });
        }
        let fidelity = o.fidelity.unwrap_or(0.125);
        if !(0.0..=1.0).contains(&fidelity) || !fidelity.is_finite() {
            return Err(ConfigError::BadValue {
                key: "fidelity".into(),
                reason: format!("{fidelity} outside [0, 1]"),
            });
        }
        let t_max = o.t_max.unwrap_or((1u64 << 20) as f64);
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(ConfigError::BadValue {
                key: "t_max".into(),
                reason: format!("{t_max} must be positive"),
            });
        }
        if o.threads == Some(0) {
            return Err(ConfigError::BadValue {
                key: "threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        Ok(ExperimentConfig {
            ns,
            schemes,
            instances,
            hard_only: o.hard_only.unwrap_or(false),
            fidelity,
            seed: o.seed.unwrap_or(0),
            sector_mode: o.sector_mode.unwrap_or(SectorMode::Sector),
            out: o.out.clone().unwrap_or_else(|| PathBuf::from("runs")),
            threads: o.threads,
            t_max,
            accuracy_target: crate::evolve::EvolveOptions::default().accuracy_target,
        })
    }
}
