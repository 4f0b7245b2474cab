//! Data-generating processes and the seeded Monte Carlo replication harness.
//!
//! Every replication `i` draws from its own ChaCha8 stream seeded with
//! `seed + i`, so results do not depend on how replications are scheduled
//! across threads.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{calibrate, Class, GateConfig, ThresholdVector, LGS_EMPIRICAL, LGS_STRICT};
use crate::coexplosive::{classify_pair, MatchConfig, PairClass};
use crate::error::{Error, Result, ResultExt};
use crate::pipeline::{analyze_normalized, AnalysisConfig, SeriesAnalysis};
use crate::series::{normalize, RawSeries};
use crate::window::WindowConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpKind {
    Ar1 { rho: f64 },
    I2,
}

impl fmt::Display for DgpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DgpKind::Ar1 { rho } => write!(f, "ar1({rho})"),
            DgpKind::I2 => f.write_str("i2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub sigma: f64,
    /// Post-burn-in length.
    pub t: usize,
    pub burn_in: usize,
    /// Starting level of the AR(1) recursion.
    pub y_init: f64,
}

impl DgpSpec {
    pub fn ar1(rho: f64) -> Self {
        Self {
            kind: DgpKind::Ar1 { rho },
            ..Self::default()
        }
    }

    pub fn i2() -> Self {
        Self {
            kind: DgpKind::I2,
            ..Self::default()
        }
    }

    pub fn with_len(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.t < 10 {
            return Err(Error::InvalidArgument(format!(
                "T must be at least 10, got {}",
                self.t
            )));
        }
        if let DgpKind::Ar1 { rho } = self.kind {
            if !rho.is_finite() {
                return Err(Error::InvalidArgument(format!("rho must be finite, got {rho}")));
            }
        }
        Ok(())
    }
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self {
            kind: DgpKind::Ar1 { rho: 1.04 },
            sigma: 0.10,
            t: 80,
            burn_in: 50,
            y_init: 1.0,
        }
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn ar1_path(rho: f64, y_init: f64, innovations: &[f64], burn_in: usize) -> Vec<f64> {
    let mut y = y_init;
    let mut out = Vec::with_capacity(innovations.len());
    for e in innovations {
        y = rho * y + e;
        out.push(y);
    }
    out.split_off(burn_in)
}

/// Double cumulative sum of `innovations`, from zero level and zero slope.
fn i2_path(innovations: &[f64]) -> Vec<f64> {
    let (mut level, mut slope) = (0.0, 0.0);
    let mut out = Vec::with_capacity(innovations.len());
    for e in innovations {
        slope += e;
        level += slope;
        out.push(level);
    }
    out
}

fn into_series(label: String, values: Vec<f64>) -> RawSeries {
    RawSeries {
        label,
        periods: (0..values.len() as i64).collect(),
        values,
    }
}

/// `y_t = ρ y_{t-1} + ε_t`, `ε ~ N(0, σ²)`, started at `y_init`.
pub fn gen_ar1(spec: &DgpSpec, rho: f64, seed: u64) -> RawSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<f64> = normals(&mut rng, spec.burn_in + spec.t)
        .into_iter()
        .map(|z| spec.sigma * z)
        .collect();
    into_series(
        format!("ar1_{rho}_{seed}"),
        ar1_path(rho, spec.y_init, &eps, spec.burn_in),
    )
}

/// `Δ²y_t = ε_t` from zero level and zero slope at the first retained
/// observation. The burn-in draws are consumed from the stream but not
/// accumulated, so the path is not dominated by a drift inherited from them.
pub fn gen_i2(spec: &DgpSpec, seed: u64) -> RawSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<f64> = normals(&mut rng, spec.burn_in + spec.t)
        .into_iter()
        .map(|z| spec.sigma * z)
        .collect();
    into_series(format!("i2_{seed}"), i2_path(&eps[spec.burn_in..]))
}

pub fn generate(spec: &DgpSpec, seed: u64) -> RawSeries {
    match spec.kind {
        DgpKind::Ar1 { rho } => gen_ar1(spec, rho, seed),
        DgpKind::I2 => gen_i2(spec, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Both series explosive at ρ = 1.10.
    StrongCo,
    /// ρ = 1.10 and ρ = 1.04.
    MildCo,
    /// Both at ρ = 1.10, detection confined to opposite halves of the sample.
    IndependentHalves,
    /// Two independent I(2) series.
    SpuriousI2,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::StrongCo,
        ScenarioKind::MildCo,
        ScenarioKind::IndependentHalves,
        ScenarioKind::SpuriousI2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::StrongCo => "strong_co",
            ScenarioKind::MildCo => "mild_co",
            ScenarioKind::IndependentHalves => "independent_halves",
            ScenarioKind::SpuriousI2 => "spurious_i2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub innovation_corr: f64,
}

impl ScenarioSpec {
    /// The scenario with its default innovation correlation.
    pub fn new(kind: ScenarioKind) -> Self {
        let innovation_corr = match kind {
            ScenarioKind::StrongCo | ScenarioKind::MildCo => 0.80,
            ScenarioKind::IndependentHalves | ScenarioKind::SpuriousI2 => 0.0,
        };
        Self {
            kind,
            innovation_corr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.innovation_corr > -1.0 && self.innovation_corr < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "innovation correlation must lie in (-1, 1), got {}",
                self.innovation_corr
            )));
        }
        Ok(())
    }

    /// Detection masks for the two series, as position ranges.
    pub fn masks(&self, t: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        match self.kind {
            ScenarioKind::IndependentHalves => (0..t / 2, t / 2..t),
            _ => (0..t, 0..t),
        }
    }
}

/// A generated pair together with the standardised innovations behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub first: RawSeries,
    pub second: RawSeries,
    pub innovations: (Vec<f64>, Vec<f64>),
}

/// Bivariate draw with `ε2 = r z1 + sqrt(1 - r²) z2` (Cholesky factor of the
/// 2×2 correlation matrix), both scaled by σ.
pub fn gen_pair(scenario: &ScenarioSpec, spec: &DgpSpec, seed: u64) -> SeriesPair {
    let n = spec.burn_in + spec.t;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = scenario.innovation_corr;
    let c = (1.0 - r * r).sqrt();
    let mut e1 = Vec::with_capacity(n);
    let mut e2 = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        e1.push(spec.sigma * z1);
        e2.push(spec.sigma * (r * z1 + c * z2));
    }
    let (p1, p2) = match scenario.kind {
        ScenarioKind::StrongCo | ScenarioKind::IndependentHalves => (
            ar1_path(1.10, spec.y_init, &e1, spec.burn_in),
            ar1_path(1.10, spec.y_init, &e2, spec.burn_in),
        ),
        ScenarioKind::MildCo => (
            ar1_path(1.10, spec.y_init, &e1, spec.burn_in),
            ar1_path(1.04, spec.y_init, &e2, spec.burn_in),
        ),
        ScenarioKind::SpuriousI2 => (
            i2_path(&e1[spec.burn_in..]),
            i2_path(&e2[spec.burn_in..]),
        ),
    };
    let name = scenario.kind.name();
    SeriesPair {
        first: into_series(format!("{name}_1_{seed}"), p1),
        second: into_series(format!("{name}_2_{seed}"), p2),
        innovations: (e1, e2),
    }
}

/// Inputs of a full study run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub regimes: Vec<DgpKind>,
    pub scenarios: Vec<ScenarioKind>,
    pub replications: usize,
    pub seed: u64,
    pub sigma: f64,
    pub t: usize,
    pub burn_in: usize,
    pub window: WindowConfig,
    /// LGS gate levels to report side by side.
    pub lgs_gates: Vec<f64>,
    pub calibration_replications: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            regimes: vec![
                DgpKind::Ar1 { rho: 1.10 },
                DgpKind::Ar1 { rho: 1.04 },
                DgpKind::Ar1 { rho: 1.00 },
                DgpKind::I2,
            ],
            scenarios: ScenarioKind::ALL.to_vec(),
            replications: 500,
            seed: DEFAULT_SEED,
            sigma: 0.10,
            t: 80,
            burn_in: 50,
            window: WindowConfig::default(),
            lgs_gates: vec![LGS_EMPIRICAL, LGS_STRICT],
            calibration_replications: 500,
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_240_601;
/// Calibration replications use `seed + CALIBRATION_SEED_OFFSET + i` so they
/// never share a stream with the study replications.
pub const CALIBRATION_SEED_OFFSET: u64 = 1 << 32;

impl StudyConfig {
    pub fn dgp(&self, kind: DgpKind) -> DgpSpec {
        DgpSpec {
            kind,
            sigma: self.sigma,
            t: self.t,
            burn_in: self.burn_in,
            y_init: 1.0,
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding of the config.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("study config serialises");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }
}

/// Aggregates for one regime under one LGS gate level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub regime: String,
    pub lgs_gate: f64,
    pub replications: usize,
    pub mean_windows: f64,
    pub pct_none: f64,
    /// Gate pass rates over all detected windows.
    pub gate_all: f64,
    pub gate_nc: f64,
    pub gate_ncp: f64,
    pub gate_lgs: f64,
    pub nc_mean: Option<f64>,
    pub lgs_mean: Option<f64>,
    /// Fraction of replications whose best episode is in each class.
    pub class_none: f64,
    pub class_mild: f64,
    pub class_moderate: f64,
    pub class_strong: f64,
    /// Fraction of replications with at least one window scored above zero.
    pub any_positive_score: f64,
}

impl RegimeRow {
    pub fn mild_or_above(&self) -> f64 {
        self.class_mild + self.class_moderate + self.class_strong
    }
}

/// Aggregates for one co-explosion scenario under one LGS gate level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub lgs_gate: f64,
    pub replications: usize,
    pub jaccard_mean: f64,
    pub pct_jaccard_ge: f64,
    /// Mean over replications where Spearman is defined.
    pub spearman_mean: Option<f64>,
    pub pct_classified: f64,
    pub pct_borderline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationTable {
    pub seed: u64,
    pub replications: usize,
    pub config_hash: String,
    pub config: StudyConfig,
    pub thresholds: ThresholdVector,
    pub regimes: Vec<RegimeRow>,
    pub scenarios: Vec<ScenarioRow>,
}

impl ReplicationTable {
    pub fn regime(&self, kind: DgpKind, lgs_gate: f64) -> Option<&RegimeRow> {
        let name = kind.to_string();
        self.regimes
            .iter()
            .find(|r| r.regime == name && r.lgs_gate == lgs_gate)
    }

    pub fn scenario(&self, kind: ScenarioKind, lgs_gate: f64) -> Option<&ScenarioRow> {
        self.scenarios
            .iter()
            .find(|r| r.scenario == kind.name() && r.lgs_gate == lgs_gate)
    }
}

/// Calibrates thresholds (mild explosive, ρ = 1.04, at the study length),
/// then runs every regime and scenario.
pub fn run_study(cfg: &StudyConfig) -> Result<ReplicationTable> {
    let calib = cfg.dgp(DgpKind::Ar1 { rho: 1.04 });
    let thresholds = calibrate(
        &calib,
        cfg.calibration_replications,
        cfg.seed.wrapping_add(CALIBRATION_SEED_OFFSET),
        &cfg.window,
    )
    .context_with(|| "calibration")?;
    run_study_with(cfg, thresholds)
}

pub fn run_study_with(cfg: &StudyConfig, thresholds: ThresholdVector) -> Result<ReplicationTable> {
    if cfg.replications == 0 {
        return Err(Error::InvalidArgument("study needs at least one replication".into()));
    }
    if cfg.lgs_gates.is_empty() {
        return Err(Error::InvalidArgument("study needs at least one LGS gate level".into()));
    }
    let mut regimes = Vec::new();
    for &kind in &cfg.regimes {
        let spec = cfg.dgp(kind);
        spec.validate()?;
        for &lgs in &cfg.lgs_gates {
            let row = regime_row(cfg, &spec, lgs, &thresholds)
                .context_with(|| format!("regime {kind}, LGS gate {lgs}"))?;
            regimes.push(row);
        }
    }
    let mut scenarios = Vec::new();
    for &kind in &cfg.scenarios {
        let sc = ScenarioSpec::new(kind);
        for &lgs in &cfg.lgs_gates {
            let row = scenario_row(cfg, &sc, lgs, &thresholds)
                .context_with(|| format!("scenario {}, LGS gate {lgs}", kind.name()))?;
            scenarios.push(row);
        }
    }
    Ok(ReplicationTable {
        seed: cfg.seed,
        replications: cfg.replications,
        config_hash: cfg.config_hash(),
        config: cfg.clone(),
        thresholds,
        regimes,
        scenarios,
    })
}

fn analysis_config(cfg: &StudyConfig, lgs: f64) -> AnalysisConfig {
    AnalysisConfig {
        window: cfg.window,
        gate: GateConfig::with_lgs(lgs),
        ..AnalysisConfig::default()
    }
}

/// Runs the single-series pipeline on one simulated replication.
pub fn analyze_replication(
    spec: &DgpSpec,
    seed: u64,
    acfg: &AnalysisConfig,
    thresholds: &ThresholdVector,
) -> Result<SeriesAnalysis> {
    let raw = generate(spec, seed);
    let s = normalize(&raw)?;
    let n = s.len();
    analyze_normalized(s, acfg, thresholds, 0..n)
}

fn replicate<T: Send>(
    cfg: &StudyConfig,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            f(seed).context_with(|| format!("replication {i} (seed {seed})"))
        })
        .collect()
}

fn rate(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

fn mean_of(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn regime_row(
    cfg: &StudyConfig,
    spec: &DgpSpec,
    lgs: f64,
    thresholds: &ThresholdVector,
) -> Result<RegimeRow> {
    let acfg = analysis_config(cfg, lgs);
    let reps = replicate(cfg, |seed| analyze_replication(spec, seed, &acfg, thresholds))?;
    let n = reps.len();
    let episodes: Vec<_> = reps.iter().flat_map(|r| r.episodes.iter()).collect();
    let windows = episodes.len();
    let count = |f: &dyn Fn(&crate::pipeline::Episode) -> bool| episodes.iter().filter(|e| f(e)).count();
    let nc: Vec<f64> = episodes.iter().map(|e| e.diagnostics.layer3.nc_mean).collect();
    let lgs_vals: Vec<f64> = episodes.iter().map(|e| e.diagnostics.layer4.lgs).collect();

    let mut classes = [0usize; 4];
    for r in &reps {
        let best = r
            .episodes
            .iter()
            .map(|e| e.verdict.class)
            .max()
            .unwrap_or(Class::None);
        classes[best as usize] += 1;
    }
    Ok(RegimeRow {
        regime: spec.kind.to_string(),
        lgs_gate: lgs,
        replications: n,
        mean_windows: windows as f64 / n as f64,
        pct_none: rate(reps.iter().filter(|r| r.episodes.is_empty()).count(), n),
        gate_all: rate(count(&|e| e.verdict.gate.passed), windows),
        gate_nc: rate(count(&|e| e.verdict.gate.nc_ok), windows),
        gate_ncp: rate(count(&|e| e.verdict.gate.ncp_ok), windows),
        gate_lgs: rate(count(&|e| e.verdict.gate.lgs_ok), windows),
        nc_mean: mean_of(&nc),
        lgs_mean: mean_of(&lgs_vals),
        class_none: rate(classes[0], n),
        class_mild: rate(classes[1], n),
        class_moderate: rate(classes[2], n),
        class_strong: rate(classes[3], n),
        any_positive_score: rate(
            reps.iter()
                .filter(|r| r.episodes.iter().any(|e| e.verdict.score > 0.0))
                .count(),
            n,
        ),
    })
}

/// Outcome of one co-explosion replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub jaccard: f64,
    pub spearman: Option<f64>,
    pub classification: PairClass,
    pub pairs: usize,
}

pub fn analyze_pair_replication(
    scenario: &ScenarioSpec,
    spec: &DgpSpec,
    seed: u64,
    acfg: &AnalysisConfig,
    thresholds: &ThresholdVector,
) -> Result<PairOutcome> {
    let pair = gen_pair(scenario, spec, seed);
    let (m1, m2) = scenario.masks(spec.t);
    let a = analyze_normalized(normalize(&pair.first)?, acfg, thresholds, m1)?;
    let b = analyze_normalized(normalize(&pair.second)?, acfg, thresholds, m2)?;
    let report = classify_pair(
        &pair.first.label,
        &a.episodes,
        &pair.second.label,
        &b.episodes,
        &MatchConfig::default(),
    );
    Ok(PairOutcome {
        jaccard: report.jaccard,
        spearman: report.spearman,
        classification: report.classification,
        pairs: report.cooccurring_pairs.len(),
    })
}

fn scenario_row(
    cfg: &StudyConfig,
    scenario: &ScenarioSpec,
    lgs: f64,
    thresholds: &ThresholdVector,
) -> Result<ScenarioRow> {
    scenario.validate()?;
    let acfg = analysis_config(cfg, lgs);
    let spec = cfg.dgp(DgpKind::Ar1 { rho: 1.10 });
    let reps = replicate(cfg, |seed| {
        analyze_pair_replication(scenario, &spec, seed, &acfg, thresholds)
    })?;
    let n = reps.len();
    let js: Vec<f64> = reps.iter().map(|r| r.jaccard).collect();
    let rhos: Vec<f64> = reps.iter().filter_map(|r| r.spearman).collect();
    Ok(ScenarioRow {
        scenario: scenario.kind.name().to_string(),
        lgs_gate: lgs,
        replications: n,
        jaccard_mean: mean_of(&js).unwrap_or(0.0),
        pct_jaccard_ge: rate(
            js.iter()
                .filter(|j| **j >= crate::coexplosive::JACCARD_MIN)
                .count(),
            n,
        ),
        spearman_mean: mean_of(&rhos),
        pct_classified: rate(
            reps.iter()
                .filter(|r| r.classification == PairClass::CoExplosive)
                .count(),
            n,
        ),
        pct_borderline: rate(
            reps.iter()
                .filter(|r| r.classification == PairClass::Borderline)
                .count(),
            n,
        ),
    })
}
