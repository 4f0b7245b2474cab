//! Endogenous episode-window detection from the second-difference sequence
//! of a normalised series.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{growth_rates, mean, second_diff, NormalizedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Consecutive strictly positive second differences that open a window.
    pub open_run: usize,
    /// Consecutive strictly negative second differences that close it.
    pub close_run: usize,
    pub w_min: usize,
    /// Maximum width in observations (`t1 - t0 + 1`).
    pub w_max: usize,
    pub min_growth: f64,
    /// Minimum number of periods strictly between two retained windows.
    pub min_gap: usize,
    pub max_windows: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            open_run: 4,
            close_run: 2,
            w_min: 5,
            w_max: 15,
            min_growth: 0.10,
            min_gap: 5,
            max_windows: 2,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("window config: {m}")));
        if self.open_run < 1 {
            return bad("open_run must be >= 1");
        }
        if self.close_run < 1 {
            return bad("close_run must be >= 1");
        }
        if self.w_min < 2 || self.w_min > self.w_max {
            return bad("need 2 <= w_min <= w_max");
        }
        if !(self.min_growth >= 0.0) {
            return bad("min_growth must be >= 0");
        }
        if self.max_windows < 1 {
            return bad("max_windows must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeWindow {
    pub start_index: usize,
    pub end_index: usize,
    pub start_period: i64,
    pub end_period: i64,
    pub width: usize,
    pub growth: f64,
}

impl EpisodeWindow {
    pub fn range(&self) -> Range<usize> {
        self.start_index..self.end_index + 1
    }

    /// Number of calendar periods shared with `other`.
    pub fn overlap(&self, other: &EpisodeWindow) -> i64 {
        let lo = self.start_period.max(other.start_period);
        let hi = self.end_period.min(other.end_period);
        (hi - lo + 1).max(0)
    }
}

pub fn detect_windows(s: &NormalizedSeries, cfg: &WindowConfig) -> Result<Vec<EpisodeWindow>> {
    detect_windows_in(s, cfg, 0..s.len())
}

/// Window detection restricted to the positions in `mask`: windows neither
/// start before `mask.start` nor extend past `mask.end - 1`.
pub fn detect_windows_in(
    s: &NormalizedSeries,
    cfg: &WindowConfig,
    mask: Range<usize>,
) -> Result<Vec<EpisodeWindow>> {
    cfg.validate()?;
    let mask = mask.start..mask.end.min(s.len());
    let v = &s.values[mask.clone()];
    if v.len() < cfg.open_run + 2 {
        return Err(Error::TooShort {
            what: "detect_windows",
            needed: cfg.open_run + 2,
            got: v.len(),
        });
    }
    let offset = mask.start;
    let candidates = scan(v, cfg)?;

    let mut accepted: Vec<EpisodeWindow> = Vec::new();
    for (t0, t1) in candidates {
        let width = t1 - t0 + 1;
        // relative to |level| so windows starting below zero are measured too
        let growth = (v[t1] - v[t0]).abs() / v[t0].abs();
        if width < cfg.w_min || !(growth >= cfg.min_growth) {
            continue;
        }
        if let Some(prev) = accepted.last() {
            if t0 + offset < prev.end_index + 1 + cfg.min_gap {
                continue;
            }
        }
        let (a, b) = (t0 + offset, t1 + offset);
        accepted.push(EpisodeWindow {
            start_index: a,
            end_index: b,
            start_period: s.periods[a],
            end_period: s.periods[b],
            width,
            growth,
        });
    }

    if accepted.len() > cfg.max_windows {
        accepted.sort_by(|x, y| {
            y.growth
                .total_cmp(&x.growth)
                .then(x.start_index.cmp(&y.start_index))
        });
        accepted.truncate(cfg.max_windows);
        accepted.sort_by_key(|w| w.start_index);
    }
    Ok(accepted)
}

/// Candidate `(t0, t1)` pairs, left to right, before width/growth/gap filters.
fn scan(v: &[f64], cfg: &WindowConfig) -> Result<Vec<(usize, usize)>> {
    let d = second_diff(v)?;
    let n = v.len();
    let mut out = Vec::new();
    let mut k = 0;
    let mut pos_run = 0;
    while k < d.len() {
        if d[k] > 0.0 {
            pos_run += 1;
        } else {
            pos_run = 0;
        }
        if pos_run < cfg.open_run {
            k += 1;
            continue;
        }
        // d[j] sits at series position j + 2; the window starts at the first
        // level feeding the first positive second difference of the run.
        let t0 = k + 1 - cfg.open_run;
        let cap = (t0 + cfg.w_max - 1).min(n - 1);
        let mut t1 = cap;
        let mut neg_run = 0;
        for j in k + 1..d.len() {
            let pos = j + 2;
            if pos > cap {
                break;
            }
            if d[j] < 0.0 {
                neg_run += 1;
            } else {
                neg_run = 0;
            }
            if neg_run == cfg.close_run {
                t1 = pos - cfg.close_run;
                break;
            }
        }
        out.push((t0, t1));
        // next window must start after t1
        k = t1 + 1;
        pos_run = 0;
    }
    Ok(out)
}

/// Mean growth rate over up to `lookback` periods strictly before the window
/// start. `None` when fewer than two such growth rates exist.
pub fn pre_window_baseline(
    s: &NormalizedSeries,
    w: &EpisodeWindow,
    lookback: usize,
) -> Option<f64> {
    let t0 = w.start_index.min(s.len());
    // growth rate g_t exists for t >= 1
    let first = t0.saturating_sub(lookback).max(1);
    if t0 < first + 2 {
        return None;
    }
    let g = growth_rates(&s.values[first - 1..t0]);
    let b = mean(&g);
    b.is_finite().then_some(b)
}
