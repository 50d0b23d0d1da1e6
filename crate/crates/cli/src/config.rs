//! Config-file handling and setting resolution.
//!
//! One flat TOML schema serves every subcommand; each command reads the keys
//! it cares about and ignores the rest, so a single file can drive a whole
//! simulate → label → train → map → eval run. Precedence, highest first:
//! config file, then command-line flag, then built-in default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// All recognized config-file keys. Every field is optional; unknown keys
/// are rejected so typos fail loudly instead of silently using a default.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    // Mirrors of the command-line flags.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub world: Option<String>,
    pub duration: Option<f64>,
    pub grid_cell: Option<f64>,
    pub nu: Option<f64>,
    pub xi: Option<f64>,
    pub gamma: Option<f64>,
    pub dataset: Option<String>,
    pub frames: Option<String>,
    // World generation.
    pub road_width: Option<f64>,
    pub road_length: Option<f64>,
    pub sensor_height: Option<f64>,
    pub ego_speed: Option<f64>,
    pub static_obstacles: Option<usize>,
    pub moving_vehicles: Option<usize>,
    // Sensor model.
    pub max_range: Option<f64>,
    pub range_sigma: Option<f64>,
    pub dropout: Option<f64>,
    // Odometry measurement noise.
    pub odo_speed_sd: Option<f64>,
    pub odo_heading_sd: Option<f64>,
    pub odo_yaw_rate_sd: Option<f64>,
    // Labelling.
    pub sigma_n: Option<f64>,
    pub sigma_e: Option<f64>,
    pub sigma_gate: Option<f64>,
    pub spacing: Option<f64>,
    // Training.
    pub hidden_dim: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
    pub patience: Option<usize>,
    pub train_stride: Option<usize>,
    // Grid extent and mass source for map/eval.
    pub grid_length: Option<f64>,
    pub grid_width: Option<f64>,
    pub mass_source: Option<String>,
}

/// Loads and parses the config file; `None` means no file was given.
pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}", path.display()))
    })?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

/// Resolves one setting: file value over flag value over default.
pub fn pick<T>(file: Option<T>, flag: Option<T>, default: T) -> T {
    file.or(flag).unwrap_or(default)
}

/// Resolves a setting that has no default.
pub fn pick_opt<T>(file: Option<T>, flag: Option<T>) -> Option<T> {
    file.or(flag)
}

/// Unwraps a setting that must be present after resolution.
pub fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| {
        CliError::Usage(format!("{what} is required (pass the flag or set it in the config file)"))
    })
}

/// Which frames of a dataset a command touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameSelection {
    All,
    Single(usize),
    /// Half-open `[start, end)`.
    Range(usize, usize),
}

impl FrameSelection {
    /// Parses `all`, a single index, or `start..end`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "all" {
            return Ok(Self::All);
        }
        if let Some((a, b)) = s.split_once("..") {
            let bad = |part: &str| {
                CliError::Usage(format!("bad frame range bound {part:?} in {s:?}"))
            };
            let start: usize = a.trim().parse().map_err(|_| bad(a))?;
            let end: usize = b.trim().parse().map_err(|_| bad(b))?;
            if end <= start {
                return Err(CliError::Usage(format!("empty frame range {s:?}")));
            }
            return Ok(Self::Range(start, end));
        }
        s.parse().map(Self::Single).map_err(|_| {
            CliError::Usage(format!(
                "frames must be `all`, a single index, or `start..end`, got {s:?}"
            ))
        })
    }

    /// Concrete frame indices for a dataset holding `available` frames.
    pub fn indices(&self, available: usize) -> Result<Vec<usize>, CliError> {
        let (start, end) = match *self {
            Self::All => (0, available),
            Self::Single(k) => (k, k + 1),
            Self::Range(a, b) => (a, b),
        };
        if end > available {
            return Err(CliError::Runtime(format!(
                "frame selection reaches {end} but the dataset has {available} frames"
            )));
        }
        Ok((start..end).collect())
    }
}
