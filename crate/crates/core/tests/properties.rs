//! Property-based checks of the invariants that hold for arbitrary inputs.

use std::collections::BTreeMap;

use pathex_core::classify::{
    apply_gate, score, CalibrationMeta, Class, GateConfig, Statistic, ThresholdVector,
};
use pathex_core::coexplosive::{classify_pair, MatchConfig, PairClass};
use pathex_core::diagnostics::{
    DiagnosticSet, GrowthDynamics, LevelGeometry, LogSpace, NormalisedCurvature,
};
use pathex_core::pipeline::{analyze, AnalysisConfig};
use pathex_core::series::{kendall, normalize, ols_linear, ols_quadratic, spearman, winsorize};
use pathex_core::window::{detect_windows, WindowConfig};
use pathex_core::RawSeries;
use proptest::prelude::*;

fn thresholds(values: [f64; 12]) -> ThresholdVector {
    let thresholds: BTreeMap<Statistic, f64> = Statistic::ALL.into_iter().zip(values).collect();
    ThresholdVector {
        thresholds,
        meta: CalibrationMeta {
            regime: "test".into(),
            sigma: 0.1,
            sample_len: 80,
            burn_in: 50,
            replications: 1,
            seed: 0,
            pooled_windows: 1,
            quantile: 0.75,
        },
    }
}

fn diag(v: [f64; 12], absent: [bool; 4]) -> DiagnosticSet {
    let opt = |x: f64, gone: bool| (!gone).then_some(x);
    DiagnosticSet {
        layer1: LevelGeometry {
            alpha2_norm: v[0],
            convexity_persistence: v[1],
            mean_growth: v[2],
        },
        layer2: GrowthDynamics {
            growth_trend_norm: opt(v[3], absent[0]),
            growth_sign_persistence: v[4],
            growth_ratio: opt(v[5], absent[1]),
        },
        layer3: NormalisedCurvature {
            nc_mean: v[6],
            nc_positivity: v[7],
            nc_trend_norm: opt(v[8], absent[2]),
        },
        layer4: LogSpace {
            log_linearity: v[9],
            lgs: v[10],
            log_growth_trend: opt(v[11], absent[3]),
            implied_rho: None,
            log_ok: true,
        },
    }
}

fn arb_diag() -> impl Strategy<Value = DiagnosticSet> {
    (
        prop::array::uniform12(-1.0f64..1.0),
        prop::array::uniform4(any::<bool>()),
    )
        .prop_map(|(v, a)| diag(v, a))
}

fn arb_thresholds() -> impl Strategy<Value = ThresholdVector> {
    prop::array::uniform12(-1.0f64..1.0).prop_map(thresholds)
}

/// Positive series built from a random walk in log growth: explosive-looking
/// stretches are common enough to exercise the detector.
fn arb_series() -> impl Strategy<Value = Vec<f64>> {
    (
        prop::collection::vec(-0.05f64..0.12, 10..90),
        0.5f64..50.0,
    )
        .prop_map(|(g, y0)| {
            let mut y = y0;
            let mut out = vec![y];
            for r in g {
                y *= 1.0 + r;
                out.push(y);
            }
            out
        })
}

fn raw(v: Vec<f64>) -> RawSeries {
    RawSeries::from_values("s", 1950, v).unwrap()
}

fn fixed_thresholds() -> ThresholdVector {
    thresholds([
        0.001, 1.0, 0.04, 0.007, 1.0, 1.0, 0.002, 1.0, 0.0002, 0.998, 0.97, 0.007,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn failed_gate_always_scores_zero(d in arb_diag(), tv in arb_thresholds(),
                                      nc in -0.01f64..0.01, ncp in 0.0f64..1.0, lgs in 0.0f64..1.0) {
        let mut d = d;
        d.layer3.nc_mean = nc;
        d.layer3.nc_positivity = ncp;
        d.layer4.lgs = lgs;
        let gate = apply_gate(&d, &GateConfig::strict());
        let v = score(&d, &tv, gate);
        if !gate.passed {
            prop_assert_eq!(v.score, 0.0);
            prop_assert_eq!(v.class, Class::None);
        }
        prop_assert!((0.0..=1.0).contains(&v.score));
    }

    #[test]
    fn score_is_one_iff_every_present_statistic_exceeds(d in arb_diag(), tv in arb_thresholds()) {
        let passed = apply_gate(&d, &GateConfig::with_lgs(-1.0));
        let mut forced = passed;
        forced.passed = true;
        let v = score(&d, &tv, forced);
        let all = Statistic::ALL
            .iter()
            .all(|s| s.value(&d).is_none_or(|x| x >= tv.get(*s)));
        prop_assert_eq!(v.score == 1.0, all);
        for (layer, frac) in v.d.iter().enumerate() {
            let n = Statistic::ALL.iter().filter(|s| s.layer() == layer && s.value(&d).is_some()).count();
            let k = (frac * n as f64).round();
            prop_assert!((frac * n as f64 - k).abs() < 1e-12);
        }
    }

    #[test]
    fn raising_a_statistic_never_lowers_the_score(v in prop::array::uniform12(-1.0f64..1.0),
                                                  tv in arb_thresholds(), which in 0usize..12,
                                                  bump in 0.0f64..2.0) {
        let gate = apply_gate(&diag(v, [false; 4]), &GateConfig::with_lgs(-1.0));
        let mut gate = gate;
        gate.passed = true;
        let before = score(&diag(v, [false; 4]), &tv, gate).score;
        let mut up = v;
        up[which] += bump;
        let after = score(&diag(up, [false; 4]), &tv, gate).score;
        prop_assert!(after >= before);
    }

    #[test]
    fn class_is_a_function_of_score(s in 0.0f64..=1.0) {
        let c = Class::from_score(s);
        let expected = if s >= 0.75 { Class::Strong } else if s >= 0.57 { Class::Moderate }
            else if s >= 0.36 { Class::Mild } else { Class::None };
        prop_assert_eq!(c, expected);
    }

    #[test]
    fn winsorisation_is_idempotent_and_order_preserving(v in prop::collection::vec(-1e3f64..1e3, 1..60),
                                                        lo in 0.0f64..0.3, hi in 0.7f64..1.0) {
        let once = winsorize(&v, lo, hi).unwrap();
        let twice = winsorize(&once, lo, hi).unwrap();
        prop_assert_eq!(&once, &twice);
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] <= v[j] {
                    prop_assert!(once[i] <= once[j]);
                }
            }
        }
    }

    #[test]
    fn rank_correlations_ignore_monotone_transforms(pairs in prop::collection::vec((-50i32..50, -50i32..50), 2..25)) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let ta: Vec<f64> = a.iter().map(|x| x.powi(3) + 2.0 * x).collect();
        let tb: Vec<f64> = b.iter().map(|x| (x / 10.0).exp()).collect();
        prop_assert_eq!(spearman(&a, &b).unwrap(), spearman(&ta, &tb).unwrap());
        prop_assert_eq!(kendall(&a, &b).unwrap(), kendall(&ta, &tb).unwrap());
    }

    #[test]
    fn linear_slope_ignores_level_shifts(y in prop::collection::vec(-10.0f64..10.0, 3..30), c in -100.0f64..100.0) {
        let a = ols_linear(&y).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let b = ols_linear(&shifted).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-9);
        prop_assert!((b.intercept - a.intercept - c).abs() < 1e-9);
    }

    #[test]
    fn quadratic_fit_solves_the_normal_equations(y in prop::collection::vec(-10.0f64..10.0, 4..25)) {
        let fit = ols_quadratic(&y).unwrap();
        let oracle = normal_equations_quadratic(&y);
        prop_assert!((fit.a0 - oracle[0]).abs() < 1e-7);
        prop_assert!((fit.a1 - oracle[1]).abs() < 1e-7);
        prop_assert!((fit.a2 - oracle[2]).abs() < 1e-7);
    }

    #[test]
    fn window_invariants_hold(v in arb_series(), max_windows in 1usize..4, min_gap in 0usize..8,
                              min_growth in 0.0f64..0.5) {
        let cfg = WindowConfig { max_windows, min_gap, min_growth, ..Default::default() };
        let s = normalize(&raw(v)).unwrap();
        let ws = detect_windows(&s, &cfg).unwrap();
        prop_assert!(ws.len() <= max_windows);
        for w in &ws {
            prop_assert!(w.width >= cfg.w_min && w.width <= cfg.w_max);
            prop_assert_eq!(w.width, w.end_index - w.start_index + 1);
            prop_assert!(w.growth >= min_growth);
        }
        for p in ws.windows(2) {
            prop_assert!(p[1].start_index >= p[0].end_index + 1 + min_gap);
        }
        prop_assert_eq!(&ws, &detect_windows(&s, &cfg).unwrap());
    }

    #[test]
    fn raising_min_growth_never_adds_windows(v in arb_series(), g1 in 0.0f64..0.6, g2 in 0.0f64..0.6) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let s = normalize(&raw(v)).unwrap();
        let n = |g| detect_windows(&s, &WindowConfig { min_growth: g, ..Default::default() }).unwrap().len();
        prop_assert!(n(hi) <= n(lo));
    }

    #[test]
    fn concave_series_have_no_windows(steps in prop::collection::vec(0.0f64..1.0, 8..60), y0 in 1.0f64..100.0) {
        // non-increasing increments: every second difference is <= 0
        let mut inc: Vec<f64> = steps.clone();
        inc.sort_by(|a, b| b.total_cmp(a));
        let mut y = y0;
        let mut v = vec![y];
        for d in inc {
            y += d;
            v.push(y);
        }
        let s = normalize(&raw(v)).unwrap();
        prop_assert!(detect_windows(&s, &WindowConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn integer_data_scaled_by_1000_gives_identical_analyses(v in arb_series()) {
        let ints: Vec<f64> = v.iter().map(|x| (x * 1000.0).round().max(1.0)).collect();
        let scaled: Vec<f64> = ints.iter().map(|x| x * 1000.0).collect();
        let tv = fixed_thresholds();
        let cfg = AnalysisConfig::default();
        let a = analyze(&raw(ints), &cfg, &tv).unwrap();
        let b = analyze(&raw(scaled), &cfg, &tv).unwrap();
        prop_assert_eq!(&a.series.values, &b.series.values);
        prop_assert_eq!(a.episodes, b.episodes);
    }

    #[test]
    fn power_of_two_scaling_gives_identical_analyses(v in arb_series(), k in -20i32..20) {
        let c = 2f64.powi(k);
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        let tv = fixed_thresholds();
        let cfg = AnalysisConfig { gate: GateConfig::empirical(), ..Default::default() };
        let a = analyze(&raw(v), &cfg, &tv).unwrap();
        let b = analyze(&raw(scaled), &cfg, &tv).unwrap();
        prop_assert_eq!(a.episodes, b.episodes);
    }

    #[test]
    fn pair_classification_is_symmetric(v1 in arb_series(), v2 in arb_series()) {
        let tv = fixed_thresholds();
        let cfg = AnalysisConfig { gate: GateConfig::empirical(), ..Default::default() };
        let a = analyze(&raw(v1), &cfg, &tv).unwrap();
        let b = analyze(&raw(v2), &cfg, &tv).unwrap();
        let m = MatchConfig::default();
        let ab = classify_pair("a", &a.episodes, "b", &b.episodes, &m);
        let ba = classify_pair("b", &b.episodes, "a", &a.episodes, &m);
        prop_assert_eq!(ab.jaccard, ba.jaccard);
        prop_assert_eq!(ab.cooccurring_pairs.len(), ba.cooccurring_pairs.len());
        prop_assert_eq!(ab.sign_concordance, ba.sign_concordance);
        prop_assert_eq!(ab.classification, ba.classification);
        prop_assert!((0.0..=1.0).contains(&ab.jaccard));
        if ab.cooccurring_pairs.len() < 2 {
            prop_assert_ne!(ab.classification, PairClass::CoExplosive);
        }
        let all_matched = ab.cooccurring_pairs.len() == ab.episodes_1.len()
            && ab.cooccurring_pairs.len() == ab.episodes_2.len()
            && !ab.episodes_1.is_empty();
        prop_assert_eq!(ab.jaccard == 1.0, all_matched);
    }
}

/// Least squares on `[1, t, t²]` by the 3×3 normal equations and Cramer's rule.
fn normal_equations_quadratic(y: &[f64]) -> [f64; 3] {
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (t, v) in y.iter().enumerate() {
        let x = [1.0, t as f64, (t * t) as f64];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += x[i] * x[j];
            }
            r[i] += x[i] * v;
        }
    }
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = det(mk) / d;
    }
    out
}
