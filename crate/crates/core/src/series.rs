//! Series primitives: index normalisation, differencing, descriptive
//! statistics, quantiles, winsorisation, small least-squares fits on an
//! integer clock, and rank correlations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labelled series on an integer clock (typically years).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub label: String,
    pub periods: Vec<i64>,
    pub values: Vec<f64>,
}

impl RawSeries {
    /// Builds a series, checking length, unit period spacing, and finiteness.
    pub fn new(label: impl Into<String>, periods: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::Empty { what: "series" });
        }
        if periods.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "series '{label}': {} periods but {} values",
                periods.len(),
                values.len()
            )));
        }
        if let Some(i) = (1..periods.len()).find(|&i| periods[i] != periods[i - 1] + 1) {
            return Err(Error::NonMonotonePeriods { label, index: i });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { label, index });
        }
        Ok(Self {
            label,
            periods,
            values,
        })
    }

    /// Series whose periods run `start, start + 1, ...`.
    pub fn from_values(label: impl Into<String>, start: i64, values: Vec<f64>) -> Result<Self> {
        let periods = (0..values.len() as i64).map(|i| start + i).collect();
        Self::new(label, periods, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An index-normalised series: every value divided by the first one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSeries {
    pub label: String,
    pub periods: Vec<i64>,
    pub values: Vec<f64>,
    pub origin_value: f64,
}

impl NormalizedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn normalize(s: &RawSeries) -> Result<NormalizedSeries> {
    if s.values.is_empty() {
        return Err(Error::Empty { what: "normalize" });
    }
    if let Some(index) = s.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            label: s.label.clone(),
            index,
        });
    }
    let origin = s.values[0];
    if origin == 0.0 {
        return Err(Error::ZeroOrigin {
            label: s.label.clone(),
        });
    }
    let values: Vec<f64> = s.values.iter().map(|v| v / origin).collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            label: s.label.clone(),
            index,
        });
    }
    Ok(NormalizedSeries {
        label: s.label.clone(),
        periods: s.periods.clone(),
        values,
        origin_value: origin,
    })
}

/// `out[k] = v[k + 2] - 2 v[k + 1] + v[k]`, so `out[k]` belongs to series
/// position `k + 2`.
pub fn second_diff(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 3 {
        return Err(Error::TooShort {
            what: "second_diff",
            needed: 3,
            got: v.len(),
        });
    }
    Ok(v.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect())
}

/// Simple growth rates `(v[t] - v[t-1]) / v[t-1]` for consecutive pairs.
pub fn growth_rates(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator). Zero for fewer than two
/// observations.
pub fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of already sorted data at `h = (n - 1) p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

pub fn quantile(v: &[f64], p: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Empty { what: "quantile" });
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

/// Order statistic nearest to the linear-interpolation position
/// `h = (n - 1) p` of sorted data.
pub fn nearest_order_statistic(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    sorted[(h.round() as usize).min(sorted.len() - 1)]
}

/// Clamps every value into `[Q(lo_pct), Q(hi_pct)]`, preserving order. The
/// bounds are order statistics (see [`nearest_order_statistic`]), so a second
/// pass leaves the output unchanged.
pub fn winsorize(v: &[f64], lo_pct: f64, hi_pct: f64) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Empty { what: "winsorize" });
    }
    if !(0.0..=1.0).contains(&lo_pct) || !(0.0..=1.0).contains(&hi_pct) || lo_pct >= hi_pct {
        return Err(Error::InvalidArgument(format!(
            "winsorize percentiles must satisfy 0 <= lo < hi <= 1, got ({lo_pct}, {hi_pct})"
        )));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = nearest_order_statistic(&sorted, lo_pct);
    let hi = nearest_order_statistic(&sorted, hi_pct);
    Ok(v.iter().map(|x| x.clamp(lo, hi)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub residuals: Vec<f64>,
    pub residual_sd: f64,
}

/// Intercept + slope fit of `y` on the clock `0, 1, 2, ...`.
pub fn ols_linear(y: &[f64]) -> Result<LinearFit> {
    if y.len() < 3 {
        return Err(Error::TooShort {
            what: "ols_linear",
            needed: 3,
            got: y.len(),
        });
    }
    let x: Vec<f64> = (0..y.len()).map(|t| t as f64).collect();
    fit_line(&x, y)
}

/// Intercept + slope fit on an explicit regressor. Used when some clock
/// positions have been excluded.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    debug_assert_eq!(x.len(), y.len());
    if y.len() < 2 {
        return Err(Error::TooShort {
            what: "linear fit",
            needed: 2,
            got: y.len(),
        });
    }
    let xm = mean(x);
    let ym = mean(y);
    let sxx: f64 = x.iter().map(|xi| (xi - xm) * (xi - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroDenominator {
            what: "linear fit regressor variance",
        });
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - xm) * (yi - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| yi - intercept - slope * xi)
        .collect();
    let residual_sd = sample_sd(&residuals);
    Ok(LinearFit {
        intercept,
        slope,
        residuals,
        residual_sd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub residuals: Vec<f64>,
}

/// Fits `y = a0 + a1 τ + a2 τ²` on `τ = 0, 1, ...` through a centred
/// orthogonal polynomial basis, which stays well conditioned for the short
/// windows used here.
pub fn ols_quadratic(y: &[f64]) -> Result<QuadraticFit> {
    let n = y.len();
    if n < 4 {
        return Err(Error::TooShort {
            what: "ols_quadratic",
            needed: 4,
            got: n,
        });
    }
    let m = (n - 1) as f64 / 2.0;
    let u: Vec<f64> = (0..n).map(|t| t as f64 - m).collect();
    let nf = n as f64;
    // p2 = u² - c1 u - c0, orthogonal to 1 and u.
    let su2: f64 = u.iter().map(|x| x * x).sum();
    let su3: f64 = u.iter().map(|x| x * x * x).sum();
    let c0 = su2 / nf;
    let c1 = su3 / su2;
    let p2: Vec<f64> = u.iter().map(|x| x * x - c1 * x - c0).collect();

    let b0 = mean(y);
    let b1 = u.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / su2;
    let sp2: f64 = p2.iter().map(|x| x * x).sum();
    let b2 = p2.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sp2;

    // Back to the raw clock: u = τ - m.
    let lin = b1 - b2 * c1;
    let cst = b0 - b2 * c0;
    let a2 = b2;
    let a1 = lin - 2.0 * b2 * m;
    let a0 = cst - lin * m + b2 * m * m;
    let residuals = y
        .iter()
        .enumerate()
        .map(|(t, yi)| {
            let t = t as f64;
            yi - a0 - a1 * t - a2 * t * t
        })
        .collect();
    Ok(QuadraticFit {
        a0,
        a1,
        a2,
        residuals,
    })
}

fn check_pair(a: &[f64], b: &[f64], what: &'static str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "{what}: vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::TooShort {
            what,
            needed: 2,
            got: a.len(),
        });
    }
    Ok(())
}

fn all_tied(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Fractional (average) ranks, 1-based.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        // Positions start..end share the mean of ranks start+1..=end.
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let am = mean(a);
    let bm = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - am) * (y - bm);
        saa += (x - am) * (x - am);
        sbb += (y - bm) * (y - bm);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation; `None` when either vector is entirely tied.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_pair(a, b, "spearman")?;
    if all_tied(a) || all_tied(b) {
        return Ok(None);
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)))
}

/// Kendall's tau-b via Knight's sort-and-count; `None` when either vector is
/// entirely tied.
pub fn kendall(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_pair(a, b, "kendall")?;
    if all_tied(a) || all_tied(b) {
        return Ok(None);
    }
    let n = a.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let n0 = (n * (n - 1) / 2) as f64;
    let mut ties_a = 0usize;
    let mut ties_ab = 0usize;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && a[idx[j]] == a[idx[i]] {
            j += 1;
        }
        let run = j - i;
        ties_a += run * (run - 1) / 2;
        // joint ties inside this a-run
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && b[idx[l]] == b[idx[k]] {
                l += 1;
            }
            let jr = l - k;
            ties_ab += jr * (jr - 1) / 2;
            k = l;
        }
        i = j;
    }

    let mut bs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let swaps = merge_count(&mut bs);

    let mut ties_b = 0usize;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && bs[j] == bs[i] {
            j += 1;
        }
        let run = j - i;
        ties_b += run * (run - 1) / 2;
        i = j;
    }

    let (n1, n2, n3) = (ties_a as f64, ties_b as f64, ties_ab as f64);
    let numer = n0 - n1 - n2 + n3 - 2.0 * swaps as f64;
    let denom = ((n0 - n1) * (n0 - n2)).sqrt();
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some((numer / denom).clamp(-1.0, 1.0)))
}

/// Sorts in place and returns the number of strict inversions.
fn merge_count(v: &mut [f64]) -> usize {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += mid - i;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}
