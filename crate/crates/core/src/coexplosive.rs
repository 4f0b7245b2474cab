//! Pairwise co-explosion analysis: calendar co-occurrence of gate-passing
//! episodes (Jaccard index), intensity concordance, and classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pipeline::Episode;
use crate::series::{kendall, spearman};
use crate::window::EpisodeWindow;

pub const JACCARD_MIN: f64 = 0.67;
pub const SPEARMAN_MIN: f64 = 0.60;
pub const SIGN_CONCORDANCE_MIN: f64 = 0.67;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Minimum shared periods as a fraction of the shorter window. Zero means
    /// a single shared period is enough.
    pub min_overlap_fraction: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            min_overlap_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairClass {
    NotCoExplosive,
    Borderline,
    CoExplosive,
}

impl PairClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::NotCoExplosive => "NotCoExplosive",
            PairClass::Borderline => "Borderline",
            PairClass::CoExplosive => "CoExplosive",
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One-to-one matching of overlapping windows, greedy by largest overlap,
/// ties to the earliest. Returns index pairs into `w1` and `w2`, ordered by
/// start period.
pub fn match_episodes(
    w1: &[EpisodeWindow],
    w2: &[EpisodeWindow],
    cfg: &MatchConfig,
) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (i, a) in w1.iter().enumerate() {
        for (j, b) in w2.iter().enumerate() {
            let overlap = a.overlap(b);
            if overlap < 1 {
                continue;
            }
            let shorter = a.width.min(b.width) as f64;
            if (overlap as f64) < cfg.min_overlap_fraction * shorter {
                continue;
            }
            let early = a.start_period.min(b.start_period);
            let late = a.start_period.max(b.start_period);
            candidates.push((overlap, early, late, i, j));
        }
    }
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used1 = vec![false; w1.len()];
    let mut used2 = vec![false; w2.len()];
    let mut pairs = Vec::new();
    for (_, _, _, i, j) in candidates {
        if !used1[i] && !used2[j] {
            used1[i] = true;
            used2[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_by_key(|&(i, j)| pair_order(&w1[i], &w2[j]));
    pairs
}

fn pair_order(a: &EpisodeWindow, b: &EpisodeWindow) -> (i64, i64) {
    (
        a.start_period.min(b.start_period),
        a.start_period.max(b.start_period),
    )
}

/// `|C| / (|W1| + |W2| - |C|)`, zero when both sets are empty.
pub fn jaccard(n1: usize, n2: usize, matched: usize) -> f64 {
    let denom = n1 + n2 - matched;
    if denom == 0 {
        0.0
    } else {
        matched as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concordance {
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    pub sign_concordance: Option<f64>,
}

impl Concordance {
    const UNDEFINED: Concordance = Concordance {
        spearman: None,
        kendall: None,
        sign_concordance: None,
    };
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Concordance of paired intensity scores, already in time order. Needs at
/// least two pairs.
pub fn concordance(scores: &[(f64, f64)]) -> Concordance {
    if scores.len() < 2 {
        return Concordance::UNDEFINED;
    }
    let a: Vec<f64> = scores.iter().map(|p| p.0).collect();
    let b: Vec<f64> = scores.iter().map(|p| p.1).collect();
    let agree = scores
        .windows(2)
        .filter(|w| sign(w[1].0 - w[0].0) == sign(w[1].1 - w[0].1))
        .count();
    Concordance {
        spearman: spearman(&a, &b).ok().flatten(),
        kendall: kendall(&a, &b).ok().flatten(),
        sign_concordance: Some(agree as f64 / (scores.len() - 1) as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoExplosionReport {
    pub label_1: String,
    pub label_2: String,
    pub episodes_1: Vec<Episode>,
    pub episodes_2: Vec<Episode>,
    /// Indices into `episodes_1` / `episodes_2`.
    pub cooccurring_pairs: Vec<(usize, usize)>,
    pub jaccard: f64,
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    pub sign_concordance: Option<f64>,
    pub classification: PairClass,
}

/// Builds the report from the two series' episodes. Only gate-passing
/// episodes take part.
pub fn classify_pair(
    label_1: &str,
    episodes_1: &[Episode],
    label_2: &str,
    episodes_2: &[Episode],
    cfg: &MatchConfig,
) -> CoExplosionReport {
    let e1: Vec<Episode> = episodes_1
        .iter()
        .filter(|e| e.verdict.gate.passed)
        .cloned()
        .collect();
    let e2: Vec<Episode> = episodes_2
        .iter()
        .filter(|e| e.verdict.gate.passed)
        .cloned()
        .collect();
    let w1: Vec<EpisodeWindow> = e1.iter().map(|e| e.window).collect();
    let w2: Vec<EpisodeWindow> = e2.iter().map(|e| e.window).collect();
    let pairs = match_episodes(&w1, &w2, cfg);
    let j = jaccard(e1.len(), e2.len(), pairs.len());
    let scores: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(i, k)| (e1[i].verdict.score, e2[k].verdict.score))
        .collect();
    let c = concordance(&scores);
    let classification = decide(e1.len(), e2.len(), j, &c);
    CoExplosionReport {
        label_1: label_1.to_string(),
        label_2: label_2.to_string(),
        episodes_1: e1,
        episodes_2: e2,
        cooccurring_pairs: pairs,
        jaccard: j,
        spearman: c.spearman,
        kendall: c.kendall,
        sign_concordance: c.sign_concordance,
        classification,
    }
}

fn decide(n1: usize, n2: usize, j: f64, c: &Concordance) -> PairClass {
    if n1 == 0 || n2 == 0 || j < JACCARD_MIN {
        return PairClass::NotCoExplosive;
    }
    if c.spearman.is_none() && c.sign_concordance.is_none() {
        return PairClass::Borderline;
    }
    let rank_ok = c.spearman.is_some_and(|r| r >= SPEARMAN_MIN);
    let sign_ok = c.sign_concordance.is_some_and(|s| s >= SIGN_CONCORDANCE_MIN);
    if rank_ok || sign_ok {
        PairClass::CoExplosive
    } else {
        PairClass::NotCoExplosive
    }
}
