//! Run configuration: an optional TOML file merged under command-line flags.

use std::path::{Path, PathBuf};

use pathex_core::coexplosive::MatchConfig;
use pathex_core::io::Format;
use pathex_core::simulate::DEFAULT_SEED;
use pathex_core::{Error, GateConfig, Result, WindowConfig};
use serde::Deserialize;

/// Replications used when thresholds are calibrated on the fly.
pub const DEFAULT_CALIBRATION_REPLICATIONS: usize = 500;
pub const DEFAULT_CALIBRATION_LEN: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GateName {
    Strict,
    Empirical,
}

impl GateName {
    pub fn config(self) -> GateConfig {
        match self {
            GateName::Strict => GateConfig::strict(),
            GateName::Empirical => GateConfig::empirical(),
        }
    }
}

/// Every key is optional; anything unset falls back to the built-in default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gate: Option<GateName>,
    pub thresholds: Option<PathBuf>,
    pub calibrate_t: Option<usize>,
    pub calibration_replications: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub extended: Option<bool>,
    pub plot_data: Option<PathBuf>,
    pub min_overlap_fraction: Option<f64>,
    pub replications: Option<usize>,
    pub window: Option<WindowFile>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowFile {
    pub open_run: Option<usize>,
    pub close_run: Option<usize>,
    pub w_min: Option<usize>,
    pub w_max: Option<usize>,
    pub min_growth: Option<f64>,
    pub min_gap: Option<usize>,
    pub max_windows: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| {
            Error::InvalidArgument(format!("config file {}: {}", path.display(), e.message()))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSource {
    File(PathBuf),
    Calibrate { len: usize, replications: usize },
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub window: WindowConfig,
    pub gate: GateConfig,
    pub thresholds: ThresholdSource,
    pub seed: u64,
    pub format: Format,
    pub extended: bool,
    pub plot_data: Option<PathBuf>,
    pub matching: MatchConfig,
    pub replications: Option<usize>,
}

/// Flag values; `None` means "not given on the command line".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub gate: Option<GateName>,
    pub thresholds: Option<PathBuf>,
    pub calibrate_t: Option<usize>,
    pub calibration_replications: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub extended: bool,
    pub plot_data: Option<PathBuf>,
    pub min_overlap_fraction: Option<f64>,
    pub replications: Option<usize>,
    pub max_windows: Option<usize>,
    pub w_max: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self> {
        if file.thresholds.is_some() && file.calibrate_t.is_some() {
            return Err(Error::InvalidArgument(
                "config file sets both 'thresholds' and 'calibrate_t'; choose one threshold source"
                    .into(),
            ));
        }
        let replications = flags
            .calibration_replications
            .or(file.calibration_replications)
            .unwrap_or(DEFAULT_CALIBRATION_REPLICATIONS);
        let calibrate = |len: usize| ThresholdSource::Calibrate { len, replications };
        // a flag-level source replaces the file's entirely
        let thresholds = match (flags.thresholds, flags.calibrate_t) {
            (Some(p), None) => ThresholdSource::File(p),
            (None, Some(t)) => calibrate(t),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArgument(
                    "--thresholds and --calibrate-T are mutually exclusive".into(),
                ))
            }
            (None, None) => match (file.thresholds, file.calibrate_t) {
                (Some(p), _) => ThresholdSource::File(p),
                (None, t) => calibrate(t.unwrap_or(DEFAULT_CALIBRATION_LEN)),
            },
        };

        let mut window = WindowConfig::default();
        if let Some(w) = file.window {
            window = WindowConfig {
                open_run: w.open_run.unwrap_or(window.open_run),
                close_run: w.close_run.unwrap_or(window.close_run),
                w_min: w.w_min.unwrap_or(window.w_min),
                w_max: w.w_max.unwrap_or(window.w_max),
                min_growth: w.min_growth.unwrap_or(window.min_growth),
                min_gap: w.min_gap.unwrap_or(window.min_gap),
                max_windows: w.max_windows.unwrap_or(window.max_windows),
            };
        }
        if let Some(m) = flags.max_windows {
            window.max_windows = m;
        }
        if let Some(w) = flags.w_max {
            window.w_max = w;
        }
        window.validate()?;

        let gate = flags.gate.or(file.gate).unwrap_or(GateName::Strict).config();
        let matching = MatchConfig {
            min_overlap_fraction: flags
                .min_overlap_fraction
                .or(file.min_overlap_fraction)
                .unwrap_or(0.0),
        };
        if !(0.0..=1.0).contains(&matching.min_overlap_fraction) {
            return Err(Error::InvalidArgument(
                "min_overlap_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(RunConfig {
            window,
            gate,
            thresholds,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            format: flags.format.or(file.format).unwrap_or_default(),
            extended: flags.extended || file.extended.unwrap_or(false),
            plot_data: flags.plot_data.or(file.plot_data),
            matching,
            replications: flags.replications.or(file.replications),
        })
    }
}
