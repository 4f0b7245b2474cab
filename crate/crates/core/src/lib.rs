//! Detection, scoring, and classification of path-explosive episodes in
//! univariate series, and co-explosion analysis for series pairs.
//!
//! The pipeline runs in four steps: index-normalise the series, detect
//! candidate windows from its second differences, compute twelve
//! within-window statistics, then gate and score each window against
//! thresholds calibrated by simulation.

pub mod classify;
pub mod coexplosive;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod series;
pub mod simulate;
pub mod window;

pub use classify::{
    apply_gate, calibrate, score, Class, EpisodeVerdict, GateConfig, GateResult, Statistic,
    ThresholdVector,
};
pub use coexplosive::{classify_pair, CoExplosionReport, MatchConfig, PairClass};
pub use diagnostics::DiagnosticSet;
pub use error::{Error, Result};
pub use pipeline::{analyze, AnalysisConfig, Episode, SeriesAnalysis};
pub use series::{normalize, NormalizedSeries, RawSeries};
pub use simulate::{run_study, DgpKind, DgpSpec, ReplicationTable, ScenarioKind, StudyConfig};
pub use window::{detect_windows, EpisodeWindow, WindowConfig};
