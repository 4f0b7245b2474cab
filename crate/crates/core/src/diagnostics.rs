//! The twelve within-window path statistics, grouped in four layers:
//! level geometry, growth-rate dynamics, normalised curvature, and log-space
//! behaviour.
//!
//! Statistics that can be undefined (a ratio with a zero denominator, or a
//! growth ratio without a pre-window baseline) are `Option<f64>`; `None` is
//! treated as "absent" by the scorer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{
    fit_line, growth_rates, mean, ols_linear, ols_quadratic, sample_sd, second_diff, winsorize,
    NormalizedSeries,
};
use crate::window::EpisodeWindow;

/// Levels with `|ỹ_{t-2}|` below this are dropped from the curvature sequence.
pub const NC_DENOMINATOR_GUARD: f64 = 1e-8;
pub const GROWTH_RATIO_CAP: f64 = 10.0;
pub const NC_WINSOR_LO: f64 = 0.01;
pub const NC_WINSOR_HI: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelGeometry {
    pub alpha2_norm: f64,
    pub convexity_persistence: f64,
    pub mean_growth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthDynamics {
    pub growth_trend_norm: Option<f64>,
    pub growth_sign_persistence: f64,
    pub growth_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalisedCurvature {
    pub nc_mean: f64,
    pub nc_positivity: f64,
    pub nc_trend_norm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSpace {
    pub log_linearity: f64,
    pub lgs: f64,
    pub log_growth_trend: Option<f64>,
    /// `exp` of the mean log growth rate; `None` unless every level is positive.
    pub implied_rho: Option<f64>,
    pub log_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSet {
    pub layer1: LevelGeometry,
    pub layer2: GrowthDynamics,
    pub layer3: NormalisedCurvature,
    pub layer4: LogSpace,
}

impl DiagnosticSet {
    pub fn log_ok(&self) -> bool {
        self.layer4.log_ok
    }
}

/// Runs all four layers on one window.
pub fn compute(
    s: &NormalizedSeries,
    w: &EpisodeWindow,
    baseline: Option<f64>,
) -> Result<DiagnosticSet> {
    Ok(DiagnosticSet {
        layer1: layer1(s, w)?,
        layer2: layer2(s, w, baseline)?,
        layer3: layer3(s, w)?,
        layer4: layer4(s, w)?,
    })
}

fn window_values<'a>(s: &'a NormalizedSeries, w: &EpisodeWindow) -> Result<&'a [f64]> {
    if w.end_index >= s.len() || w.start_index > w.end_index {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] outside series '{}' of length {}",
            w.start_index,
            w.end_index,
            s.label,
            s.len()
        )));
    }
    let v = &s.values[w.range()];
    if v.len() < 4 {
        return Err(Error::TooShort {
            what: "window diagnostics",
            needed: 4,
            got: v.len(),
        });
    }
    Ok(v)
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// `x / |scale|`, undefined when the scale is zero.
fn normalised(x: f64, scale: f64) -> Option<f64> {
    (scale != 0.0 && scale.is_finite()).then(|| x / scale.abs())
}

pub fn layer1(s: &NormalizedSeries, w: &EpisodeWindow) -> Result<LevelGeometry> {
    let v = window_values(s, w)?;
    let level = mean(v);
    if level == 0.0 {
        return Err(Error::ZeroDenominator {
            what: "window mean level",
        });
    }
    let fit = ols_quadratic(v)?;
    let d2 = second_diff(v)?;
    let g = growth_rates(v);
    Ok(LevelGeometry {
        alpha2_norm: fit.a2 / level,
        convexity_persistence: fraction(d2.iter().filter(|x| **x > 0.0).count(), d2.len()),
        mean_growth: mean(&g),
    })
}

pub fn layer2(
    s: &NormalizedSeries,
    w: &EpisodeWindow,
    baseline: Option<f64>,
) -> Result<GrowthDynamics> {
    let v = window_values(s, w)?;
    let g = growth_rates(v);
    let gbar = mean(&g);
    let fit = ols_linear(&g)?;
    let sign = gbar.signum_or_zero();
    let same_sign = g.iter().filter(|x| x.signum_or_zero() == sign).count();
    let growth_ratio = baseline
        .filter(|b| *b != 0.0)
        .map(|b| (gbar / b).clamp(-GROWTH_RATIO_CAP, GROWTH_RATIO_CAP))
        .filter(|r| r.is_finite());
    Ok(GrowthDynamics {
        growth_trend_norm: normalised(fit.slope, gbar),
        growth_sign_persistence: fraction(same_sign, g.len()),
        growth_ratio,
    })
}

/// The normalised-curvature sequence `Δ²ỹ_t / ỹ_{t-2}` for the window, with
/// the window-clock position of each retained term. Terms whose lagged level
/// is within the guard of zero are excluded.
pub fn normalised_curvature(s: &NormalizedSeries, w: &EpisodeWindow) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = window_values(s, w)?;
    let d2 = second_diff(v)?;
    let mut clock = Vec::with_capacity(d2.len());
    let mut nc = Vec::with_capacity(d2.len());
    for (k, d) in d2.iter().enumerate() {
        let lag = v[k];
        if lag.abs() < NC_DENOMINATOR_GUARD {
            continue;
        }
        clock.push((k + 2) as f64);
        nc.push(d / lag);
    }
    Ok((clock, nc))
}

pub fn layer3(s: &NormalizedSeries, w: &EpisodeWindow) -> Result<NormalisedCurvature> {
    let (clock, nc) = normalised_curvature(s, w)?;
    if nc.is_empty() {
        return Err(Error::AllDegenerate);
    }
    let nc = winsorize(&nc, NC_WINSOR_LO, NC_WINSOR_HI)?;
    let nc_mean = mean(&nc);
    let nc_trend_norm = if nc.len() >= 2 {
        let slope = fit_line(&clock, &nc)?.slope;
        normalised(slope, nc_mean)
    } else {
        None
    };
    Ok(NormalisedCurvature {
        nc_mean,
        nc_positivity: fraction(nc.iter().filter(|x| **x > 0.0).count(), nc.len()),
        nc_trend_norm,
    })
}

pub fn layer4(s: &NormalizedSeries, w: &EpisodeWindow) -> Result<LogSpace> {
    let v = window_values(s, w)?;
    if v.iter().any(|x| *x <= 0.0) {
        return Ok(LogSpace {
            log_linearity: 0.0,
            lgs: 0.0,
            log_growth_trend: Some(0.0),
            implied_rho: None,
            log_ok: false,
        });
    }
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let fit = ols_linear(&logs)?;
    let span = (w.end_index - w.start_index) as f64;
    let ll_scale = fit.slope.abs() * span;
    let log_linearity = if ll_scale > 0.0 {
        1.0 - fit.residual_sd / ll_scale
    } else {
        0.0
    };

    let ell: Vec<f64> = logs.windows(2).map(|p| p[1] - p[0]).collect();
    let ell_bar = mean(&ell);
    let lgs = if ell_bar != 0.0 {
        (1.0 - sample_sd(&ell) / ell_bar.abs()).max(0.0)
    } else {
        0.0
    };
    let trend = ols_linear(&ell)?.slope;
    Ok(LogSpace {
        log_linearity,
        lgs,
        log_growth_trend: normalised(trend, ell_bar),
        implied_rho: Some(ell_bar.exp()),
        log_ok: true,
    })
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}
