//! Stage A gate, Stage B composite intensity score, ordinal classes, and
//! Monte Carlo threshold calibration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticSet};
use crate::error::{Error, Result, ResultExt};
use crate::series::{normalize, quantile_sorted};
use crate::simulate::{self, DgpSpec};
use crate::window::{detect_windows, pre_window_baseline, WindowConfig};

/// Minimum economically meaningful explosive root.
pub const RHO_MIN: f64 = 1.032;
pub const NCP_MIN: f64 = 0.60;
pub const LGS_STRICT: f64 = 0.70;
pub const LGS_EMPIRICAL: f64 = 0.35;

/// Layer weights in the composite score; they sum to 7.
pub const LAYER_WEIGHTS: [f64; 4] = [1.0, 1.5, 3.0, 1.5];
pub const MILD_FROM: f64 = 0.36;
pub const MODERATE_FROM: f64 = 0.57;
pub const STRONG_FROM: f64 = 0.75;
pub const CALIBRATION_QUANTILE: f64 = 0.75;
pub const BASELINE_LOOKBACK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub nc_min: f64,
    pub ncp_min: f64,
    pub lgs_min: f64,
}

impl GateConfig {
    pub fn with_lgs(lgs_min: f64) -> Self {
        Self {
            nc_min: nc_floor(RHO_MIN),
            ncp_min: NCP_MIN,
            lgs_min,
        }
    }

    pub fn strict() -> Self {
        Self::with_lgs(LGS_STRICT)
    }

    pub fn empirical() -> Self {
        Self::with_lgs(LGS_EMPIRICAL)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ncp_min) || !self.nc_min.is_finite() || !self.lgs_min.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gate config out of range: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        Self::strict()
    }
}

/// `(ρ_min - 1)²`, the smallest mean normalised curvature a root of
/// `ρ_min` produces.
pub fn nc_floor(rho_min: f64) -> f64 {
    (rho_min - 1.0) * (rho_min - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateResult {
    pub passed: bool,
    pub nc_ok: bool,
    pub ncp_ok: bool,
    pub lgs_ok: bool,
}

impl GateResult {
    pub fn failing_conditions(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.nc_ok {
            out.push("NC");
        }
        if !self.ncp_ok {
            out.push("NCP");
        }
        if !self.lgs_ok {
            out.push("LGS");
        }
        out
    }
}

/// Absolute slack on every gate comparison. A geometric path at exactly
/// `RHO_MIN` has a mean curvature equal to `nc_min` up to rounding.
pub const GATE_SLACK: f64 = 1e-12;

pub fn apply_gate(d: &DiagnosticSet, g: &GateConfig) -> GateResult {
    let nc_ok = d.layer3.nc_mean >= g.nc_min - GATE_SLACK;
    let ncp_ok = d.layer3.nc_positivity >= g.ncp_min - GATE_SLACK;
    let lgs_ok = d.layer4.lgs >= g.lgs_min - GATE_SLACK;
    GateResult {
        passed: nc_ok && ncp_ok && lgs_ok,
        nc_ok,
        ncp_ok,
        lgs_ok,
    }
}

/// The twelve window statistics, in layer order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Alpha2Norm,
    ConvexityPersistence,
    MeanGrowth,
    GrowthTrendNorm,
    GrowthSignPersistence,
    GrowthRatio,
    NcMean,
    NcPositivity,
    NcTrendNorm,
    LogLinearity,
    Lgs,
    LogGrowthTrend,
}

impl Statistic {
    pub const ALL: [Statistic; 12] = [
        Statistic::Alpha2Norm,
        Statistic::ConvexityPersistence,
        Statistic::MeanGrowth,
        Statistic::GrowthTrendNorm,
        Statistic::GrowthSignPersistence,
        Statistic::GrowthRatio,
        Statistic::NcMean,
        Statistic::NcPositivity,
        Statistic::NcTrendNorm,
        Statistic::LogLinearity,
        Statistic::Lgs,
        Statistic::LogGrowthTrend,
    ];

    /// Zero-based layer index.
    pub fn layer(self) -> usize {
        (self as usize) / 3
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Alpha2Norm => "alpha2_norm",
            Statistic::ConvexityPersistence => "convexity_persistence",
            Statistic::MeanGrowth => "mean_growth",
            Statistic::GrowthTrendNorm => "growth_trend_norm",
            Statistic::GrowthSignPersistence => "growth_sign_persistence",
            Statistic::GrowthRatio => "growth_ratio",
            Statistic::NcMean => "nc_mean",
            Statistic::NcPositivity => "nc_positivity",
            Statistic::NcTrendNorm => "nc_trend_norm",
            Statistic::LogLinearity => "log_linearity",
            Statistic::Lgs => "lgs",
            Statistic::LogGrowthTrend => "log_growth_trend",
        }
    }

    /// The statistic's value, or `None` when it is undefined for this window.
    pub fn value(self, d: &DiagnosticSet) -> Option<f64> {
        let v = match self {
            Statistic::Alpha2Norm => Some(d.layer1.alpha2_norm),
            Statistic::ConvexityPersistence => Some(d.layer1.convexity_persistence),
            Statistic::MeanGrowth => Some(d.layer1.mean_growth),
            Statistic::GrowthTrendNorm => d.layer2.growth_trend_norm,
            Statistic::GrowthSignPersistence => Some(d.layer2.growth_sign_persistence),
            Statistic::GrowthRatio => d.layer2.growth_ratio,
            Statistic::NcMean => Some(d.layer3.nc_mean),
            Statistic::NcPositivity => Some(d.layer3.nc_positivity),
            Statistic::NcTrendNorm => d.layer3.nc_trend_norm,
            Statistic::LogLinearity => Some(d.layer4.log_linearity),
            Statistic::Lgs => Some(d.layer4.lgs),
            Statistic::LogGrowthTrend => d.layer4.log_growth_trend,
        };
        v.filter(|x| x.is_finite())
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown statistic '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    None,
    Mild,
    Moderate,
    Strong,
}

impl Class {
    /// Lower-inclusive boundaries at 0.36 / 0.57 / 0.75.
    pub fn from_score(score: f64) -> Class {
        if score >= STRONG_FROM {
            Class::Strong
        } else if score >= MODERATE_FROM {
            Class::Moderate
        } else if score >= MILD_FROM {
            Class::Mild
        } else {
            Class::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::None => "None",
            Class::Mild => "Mild",
            Class::Moderate => "Moderate",
            Class::Strong => "Strong",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a threshold vector came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMeta {
    /// Regime label, e.g. `ar1(1.04)` or `i2`.
    pub regime: String,
    pub sigma: f64,
    pub sample_len: usize,
    pub burn_in: usize,
    pub replications: usize,
    pub seed: u64,
    pub pooled_windows: usize,
    pub quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector {
    pub thresholds: BTreeMap<Statistic, f64>,
    pub meta: CalibrationMeta,
}

impl ThresholdVector {
    pub fn get(&self, s: Statistic) -> f64 {
        self.thresholds[&s]
    }

    pub fn validate(&self) -> Result<()> {
        for s in Statistic::ALL {
            match self.thresholds.get(&s) {
                Some(v) if v.is_finite() => {}
                Some(v) => {
                    return Err(Error::InvalidArgument(format!(
                        "threshold for {s} is not finite ({v})"
                    )))
                }
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "threshold vector is missing {s}"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Flat `key = value` document: metadata keys prefixed `meta.`, then one
    /// line per statistic in layer order.
    pub fn to_document(&self) -> String {
        let m = &self.meta;
        let mut out = String::from("# path-explosive intensity thresholds\n");
        out.push_str(&format!("meta.regime = {}\n", m.regime));
        out.push_str(&format!("meta.sigma = {}\n", m.sigma));
        out.push_str(&format!("meta.sample_len = {}\n", m.sample_len));
        out.push_str(&format!("meta.burn_in = {}\n", m.burn_in));
        out.push_str(&format!("meta.replications = {}\n", m.replications));
        out.push_str(&format!("meta.seed = {}\n", m.seed));
        out.push_str(&format!("meta.pooled_windows = {}\n", m.pooled_windows));
        out.push_str(&format!("meta.quantile = {}\n", m.quantile));
        for s in Statistic::ALL {
            out.push_str(&format!("{} = {}\n", s.name(), self.thresholds[&s]));
        }
        out
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let mut meta: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut thresholds = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ThresholdFormat {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(k) = key.strip_prefix("meta.") {
                meta.insert(k.to_string(), (line_no, value.to_string()));
            } else {
                let stat: Statistic = key.parse().map_err(|_| Error::ThresholdFormat {
                    line: line_no,
                    message: format!("unknown statistic '{key}'"),
                })?;
                let v: f64 = value.parse().map_err(|_| Error::ThresholdFormat {
                    line: line_no,
                    message: format!("'{value}' is not a number"),
                })?;
                if thresholds.insert(stat, v).is_some() {
                    return Err(Error::ThresholdFormat {
                        line: line_no,
                        message: format!("duplicate statistic '{key}'"),
                    });
                }
            }
        }
        fn field<T: FromStr>(meta: &BTreeMap<String, (usize, String)>, key: &str) -> Result<T> {
            let (line, v) = meta.get(key).ok_or_else(|| Error::ThresholdFormat {
                line: 0,
                message: format!("missing metadata key 'meta.{key}'"),
            })?;
            v.parse().map_err(|_| Error::ThresholdFormat {
                line: *line,
                message: format!("bad value '{v}' for 'meta.{key}'"),
            })
        }
        let tv = ThresholdVector {
            meta: CalibrationMeta {
                regime: field(&meta, "regime")?,
                sigma: field(&meta, "sigma")?,
                sample_len: field(&meta, "sample_len")?,
                burn_in: field(&meta, "burn_in")?,
                replications: field(&meta, "replications")?,
                seed: field(&meta, "seed")?,
                pooled_windows: field(&meta, "pooled_windows")?,
                quantile: field(&meta, "quantile")?,
            },
            thresholds,
        };
        tv.validate().map_err(|e| Error::ThresholdFormat {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(tv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeVerdict {
    pub gate: GateResult,
    /// Per-layer exceedance fractions d1..d4.
    pub d: [f64; 4],
    pub score: f64,
    pub class: Class,
    pub notes: Vec<String>,
}

/// Composite intensity score. A failed gate short-circuits to a zero score.
pub fn score(d: &DiagnosticSet, thresholds: &ThresholdVector, gate: GateResult) -> EpisodeVerdict {
    if !gate.passed {
        return EpisodeVerdict {
            gate,
            d: [0.0; 4],
            score: 0.0,
            class: Class::None,
            notes: Vec::new(),
        };
    }
    let mut present = [0usize; 4];
    let mut exceeded = [0usize; 4];
    for s in Statistic::ALL {
        if let Some(v) = s.value(d) {
            let l = s.layer();
            present[l] += 1;
            if v >= thresholds.get(s) {
                exceeded[l] += 1;
            }
        }
    }
    let mut notes = Vec::new();
    let mut frac = [0.0; 4];
    for l in 0..4 {
        if present[l] == 0 {
            notes.push(format!("layer {} has no defined statistics", l + 1));
        } else {
            frac[l] = exceeded[l] as f64 / present[l] as f64;
        }
    }
    let total: f64 = LAYER_WEIGHTS.iter().sum();
    let s = frac
        .iter()
        .zip(LAYER_WEIGHTS)
        .map(|(d, w)| d * w)
        .sum::<f64>()
        / total;
    let s = s.clamp(0.0, 1.0);
    EpisodeVerdict {
        gate,
        d: frac,
        score: s,
        class: Class::from_score(s),
        notes,
    }
}

/// Simulates `n` replications of `regime`, pools the window-level
/// statistics, and takes the 75th percentile of each.
pub fn calibrate(
    regime: &DgpSpec,
    n: usize,
    seed: u64,
    window: &WindowConfig,
) -> Result<ThresholdVector> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "calibration needs at least 2 replications, got {n}"
        )));
    }
    regime.validate()?;
    let needed = window.w_min + window.open_run + 2;
    if regime.t < needed {
        return Err(Error::InvalidArgument(format!(
            "calibration length T = {} is shorter than {needed}",
            regime.t
        )));
    }

    let per_rep: Vec<Vec<DiagnosticSet>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let rep_seed = seed.wrapping_add(i as u64);
            calibration_windows(regime, rep_seed, window)
                .context_with(|| format!("calibration replication {i} (seed {rep_seed})"))
        })
        .collect::<Result<_>>()?;

    let pooled: Vec<&DiagnosticSet> = per_rep.iter().flatten().collect();
    if pooled.is_empty() {
        return Err(Error::NoWindows { replications: n });
    }
    let mut thresholds = BTreeMap::new();
    for s in Statistic::ALL {
        let mut vals: Vec<f64> = pooled.iter().filter_map(|d| s.value(d)).collect();
        if vals.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "statistic {s} was undefined in every calibration window"
            )));
        }
        vals.sort_by(f64::total_cmp);
        thresholds.insert(s, quantile_sorted(&vals, CALIBRATION_QUANTILE));
    }
    Ok(ThresholdVector {
        thresholds,
        meta: CalibrationMeta {
            regime: regime.kind.to_string(),
            sigma: regime.sigma,
            sample_len: regime.t,
            burn_in: regime.burn_in,
            replications: n,
            seed,
            pooled_windows: pooled.len(),
            quantile: CALIBRATION_QUANTILE,
        },
    })
}

fn calibration_windows(
    regime: &DgpSpec,
    seed: u64,
    window: &WindowConfig,
) -> Result<Vec<DiagnosticSet>> {
    let raw = simulate::generate(regime, seed);
    let s = normalize(&raw)?;
    detect_windows(&s, window)?
        .iter()
        .map(|w| {
            let baseline = pre_window_baseline(&s, w, BASELINE_LOOKBACK);
            diagnostics::compute(&s, w, baseline)
        })
        .collect()
}
