//! Single-series pipeline: normalise, detect windows, compute diagnostics,
//! gate, and score.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::classify::{apply_gate, score, EpisodeVerdict, GateConfig, ThresholdVector, BASELINE_LOOKBACK};
use crate::diagnostics::{self, DiagnosticSet};
use crate::error::{Result, ResultExt};
use crate::series::{normalize, NormalizedSeries, RawSeries};
use crate::window::{detect_windows_in, pre_window_baseline, EpisodeWindow, WindowConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub window: WindowConfig,
    pub gate: GateConfig,
    pub baseline_lookback: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            gate: GateConfig::strict(),
            baseline_lookback: BASELINE_LOOKBACK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub window: EpisodeWindow,
    pub baseline: Option<f64>,
    pub diagnostics: DiagnosticSet,
    pub verdict: EpisodeVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesAnalysis {
    pub series: NormalizedSeries,
    pub episodes: Vec<Episode>,
}

impl SeriesAnalysis {
    pub fn gate_passing(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter().filter(|e| e.verdict.gate.passed)
    }
}

pub fn analyze(
    raw: &RawSeries,
    cfg: &AnalysisConfig,
    thresholds: &ThresholdVector,
) -> Result<SeriesAnalysis> {
    let s = normalize(raw)?;
    let n = s.len();
    analyze_normalized(s, cfg, thresholds, 0..n)
}

/// Runs the pipeline with window detection limited to `mask`.
pub fn analyze_normalized(
    s: NormalizedSeries,
    cfg: &AnalysisConfig,
    thresholds: &ThresholdVector,
    mask: Range<usize>,
) -> Result<SeriesAnalysis> {
    cfg.gate.validate()?;
    let label = s.label.clone();
    let windows = detect_windows_in(&s, &cfg.window, mask).context_with(|| format!("series '{label}'"))?;
    let mut episodes = Vec::with_capacity(windows.len());
    for w in windows {
        let baseline = pre_window_baseline(&s, &w, cfg.baseline_lookback);
        let d = diagnostics::compute(&s, &w, baseline).context_with(|| {
            format!(
                "series '{label}', window {}-{}",
                w.start_period, w.end_period
            )
        })?;
        let gate = apply_gate(&d, &cfg.gate);
        let mut verdict = score(&d, thresholds, gate);
        if thresholds.meta.sample_len != s.len() && gate.passed {
            verdict.notes.push(format!(
                "thresholds calibrated at T = {}, series has {} observations",
                thresholds.meta.sample_len,
                s.len()
            ));
        }
        episodes.push(Episode {
            window: w,
            baseline,
            diagnostics: d,
            verdict,
        });
    }
    Ok(SeriesAnalysis { series: s, episodes })
}
