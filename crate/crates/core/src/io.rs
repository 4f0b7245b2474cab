//! CSV ingestion and report serialisation.
//!
//! Input: a header row, a first column of integer periods, and one column per
//! series. Output: episode tables, co-explosion reports, study tables and
//! plot-ready per-window data, each as CSV or versioned flat JSON.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::classify::ThresholdVector;
use crate::coexplosive::CoExplosionReport;
use crate::diagnostics::normalised_curvature;
use crate::error::{Error, Result};
use crate::pipeline::{Episode, SeriesAnalysis};
use crate::series::{growth_rates, RawSeries};
use crate::simulate::ReplicationTable;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<RawSeries>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    parse_csv(file).map_err(|e| e.context(path.display().to_string()))
}

/// Parses series from CSV text. Blank cells before a series' first value or
/// after its last are trimmed; blanks in between are an error.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<RawSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let malformed = |line: u64, message: String| Error::MalformedCsv { line, message };

    let header = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if header.len() < 2 {
        return Err(malformed(
            1,
            "header needs a period column and at least one series column".into(),
        ));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    for (i, l) in labels.iter().enumerate() {
        if l.is_empty() {
            return Err(malformed(1, format!("column {} has an empty name", i + 2)));
        }
        if labels[..i].contains(l) {
            return Err(malformed(1, format!("duplicate column name '{l}'")));
        }
    }

    let mut periods: Vec<i64> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); labels.len()];
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let period: i64 = rec[0]
            .parse()
            .map_err(|_| malformed(line, format!("period '{}' is not an integer", &rec[0])))?;
        if let Some(&prev) = periods.last() {
            if period != prev + 1 {
                return Err(Error::NonMonotonePeriods {
                    label: header[0].to_string(),
                    index: periods.len(),
                });
            }
        }
        periods.push(period);
        lines.push(line);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| {
                    malformed(
                        line,
                        format!("'{cell}' in column '{}' is not a number", labels[j]),
                    )
                })?)
            };
            cells[j].push(v);
        }
    }
    if periods.is_empty() {
        return Err(Error::Empty { what: "CSV input" });
    }

    let mut out = Vec::with_capacity(labels.len());
    for (label, col) in labels.into_iter().zip(cells) {
        let first = col.iter().position(Option::is_some);
        let last = col.iter().rposition(Option::is_some);
        let (Some(a), Some(b)) = (first, last) else {
            return Err(Error::InvalidArgument(format!(
                "series '{label}' has no values"
            )));
        };
        if let Some(k) = (a..=b).find(|&k| col[k].is_none()) {
            return Err(Error::InteriorGap {
                label,
                row: lines[k] as usize,
            });
        }
        let values: Vec<f64> = col[a..=b].iter().map(|v| v.unwrap()).collect();
        out.push(RawSeries::new(label, periods[a..=b].to_vec(), values)?);
    }
    Ok(out)
}

pub fn read_thresholds(path: &Path) -> Result<ThresholdVector> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    ThresholdVector::from_document(&text).map_err(|e| e.context(path.display().to_string()))
}

pub fn write_thresholds(path: &Path, tv: &ThresholdVector) -> Result<()> {
    fs::write(path, tv.to_document()).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// The eight statistics not in the headline columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtendedStats {
    pub alpha2_norm: f64,
    pub convexity_persistence: f64,
    pub mean_growth: f64,
    pub growth_trend_norm: Option<f64>,
    pub growth_sign_persistence: f64,
    pub growth_ratio: Option<f64>,
    pub nc_trend_norm: Option<f64>,
    pub log_growth_trend: Option<f64>,
}

/// One detected window, flattened for tabular output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeReportRow {
    pub series: String,
    pub start_period: i64,
    pub end_period: i64,
    pub width: usize,
    pub nc_mean: f64,
    pub nc_positivity: f64,
    pub lgs: f64,
    pub log_linearity: f64,
    pub gate: &'static str,
    /// Failing gate conditions joined with `;`, empty on a pass.
    pub failing: String,
    pub score: f64,
    pub class: &'static str,
    /// Caveats attached by the scorer, joined with `;`.
    pub notes: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub extended: Option<ExtendedStats>,
}

impl EpisodeReportRow {
    pub fn new(series: &str, e: &Episode, extended: bool) -> Self {
        let d = &e.diagnostics;
        let v = &e.verdict;
        EpisodeReportRow {
            series: series.to_string(),
            start_period: e.window.start_period,
            end_period: e.window.end_period,
            width: e.window.width,
            nc_mean: d.layer3.nc_mean,
            nc_positivity: d.layer3.nc_positivity,
            lgs: d.layer4.lgs,
            log_linearity: d.layer4.log_linearity,
            gate: if v.gate.passed { "PASS" } else { "FAIL" },
            failing: v.gate.failing_conditions().join(";"),
            score: v.score,
            class: v.class.as_str(),
            notes: v.notes.join(";"),
            extended: extended.then(|| ExtendedStats {
                alpha2_norm: d.layer1.alpha2_norm,
                convexity_persistence: d.layer1.convexity_persistence,
                mean_growth: d.layer1.mean_growth,
                growth_trend_norm: d.layer2.growth_trend_norm,
                growth_sign_persistence: d.layer2.growth_sign_persistence,
                growth_ratio: d.layer2.growth_ratio,
                nc_trend_norm: d.layer3.nc_trend_norm,
                log_growth_trend: d.layer4.log_growth_trend,
            }),
        }
    }

    fn csv_header(extended: bool) -> Vec<&'static str> {
        let mut h = vec![
            "series",
            "start_period",
            "end_period",
            "width",
            "nc_mean",
            "nc_positivity",
            "lgs",
            "log_linearity",
            "gate",
            "failing",
            "score",
            "class",
            "notes",
        ];
        if extended {
            h.extend([
                "alpha2_norm",
                "convexity_persistence",
                "mean_growth",
                "growth_trend_norm",
                "growth_sign_persistence",
                "growth_ratio",
                "nc_trend_norm",
                "log_growth_trend",
            ]);
        }
        h
    }

    fn csv_record(&self) -> Vec<String> {
        let mut r = vec![
            self.series.clone(),
            self.start_period.to_string(),
            self.end_period.to_string(),
            self.width.to_string(),
            num(self.nc_mean),
            num(self.nc_positivity),
            num(self.lgs),
            num(self.log_linearity),
            self.gate.to_string(),
            self.failing.clone(),
            num(self.score),
            self.class.to_string(),
            self.notes.clone(),
        ];
        if let Some(x) = &self.extended {
            r.extend([
                num(x.alpha2_norm),
                num(x.convexity_persistence),
                num(x.mean_growth),
                opt(x.growth_trend_norm),
                num(x.growth_sign_persistence),
                opt(x.growth_ratio),
                opt(x.nc_trend_norm),
                opt(x.log_growth_trend),
            ]);
        }
        r
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Rows for every detected window, sorted by series label then start period.
pub fn episode_rows(analyses: &[SeriesAnalysis], extended: bool) -> Vec<EpisodeReportRow> {
    let mut rows: Vec<EpisodeReportRow> = analyses
        .iter()
        .flat_map(|a| {
            a.episodes
                .iter()
                .map(|e| EpisodeReportRow::new(&a.series.label, e, extended))
        })
        .collect();
    rows.sort_by(|a, b| {
        a.series
            .cmp(&b.series)
            .then(a.start_period.cmp(&b.start_period))
    });
    rows
}

fn csv_string(header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::InvalidArgument(format!("CSV write failed: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in records {
        w.write_record(&r).map_err(wrap)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("CSV write failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    kind: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn render_episodes(rows: &[EpisodeReportRow], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let extended = rows.first().is_some_and(|r| r.extended.is_some());
            csv_string(
                &EpisodeReportRow::csv_header(extended),
                rows.iter().map(EpisodeReportRow::csv_record),
            )
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [EpisodeReportRow],
            }
            Ok(json_string(&Versioned {
                schema_version: SCHEMA_VERSION,
                kind: "episodes",
                body: &Body { rows },
            }))
        }
    }
}

/// A matched episode pair, identified by the two windows' periods.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub start_1: i64,
    pub end_1: i64,
    pub score_1: f64,
    pub start_2: i64,
    pub end_2: i64,
    pub score_2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoExplosionSummary {
    pub series_1: String,
    pub series_2: String,
    pub episodes_1: usize,
    pub episodes_2: usize,
    pub cooccurring: usize,
    pub jaccard: f64,
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    pub sign_concordance: Option<f64>,
    pub classification: String,
    pub pairs: Vec<PairRow>,
}

impl From<&CoExplosionReport> for CoExplosionSummary {
    fn from(r: &CoExplosionReport) -> Self {
        let pairs = r
            .cooccurring_pairs
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (&r.episodes_1[i], &r.episodes_2[j]);
                PairRow {
                    start_1: a.window.start_period,
                    end_1: a.window.end_period,
                    score_1: a.verdict.score,
                    start_2: b.window.start_period,
                    end_2: b.window.end_period,
                    score_2: b.verdict.score,
                }
            })
            .collect();
        CoExplosionSummary {
            series_1: r.label_1.clone(),
            series_2: r.label_2.clone(),
            episodes_1: r.episodes_1.len(),
            episodes_2: r.episodes_2.len(),
            cooccurring: r.cooccurring_pairs.len(),
            jaccard: r.jaccard,
            spearman: r.spearman,
            kendall: r.kendall,
            sign_concordance: r.sign_concordance,
            classification: r.classification.to_string(),
            pairs,
        }
    }
}

/// CSV has one summary row; matched pairs are listed as
/// `start-end/start-end` separated by `;`.
pub fn render_coexplosion(report: &CoExplosionReport, format: Format) -> Result<String> {
    let s = CoExplosionSummary::from(report);
    match format {
        Format::Json => Ok(json_string(&Versioned {
            schema_version: SCHEMA_VERSION,
            kind: "co_explosion",
            body: &s,
        })),
        Format::Csv => {
            let pairs: Vec<String> = s
                .pairs
                .iter()
                .map(|p| format!("{}-{}/{}-{}", p.start_1, p.end_1, p.start_2, p.end_2))
                .collect();
            csv_string(
                &[
                    "series_1",
                    "series_2",
                    "episodes_1",
                    "episodes_2",
                    "cooccurring",
                    "jaccard",
                    "spearman",
                    "kendall",
                    "sign_concordance",
                    "classification",
                    "pairs",
                ],
                [vec![
                    s.series_1.clone(),
                    s.series_2.clone(),
                    s.episodes_1.to_string(),
                    s.episodes_2.to_string(),
                    s.cooccurring.to_string(),
                    num(s.jaccard),
                    opt(s.spearman),
                    opt(s.kendall),
                    opt(s.sign_concordance),
                    s.classification.clone(),
                    pairs.join(";"),
                ]],
            )
        }
    }
}

/// JSON is the full table including config and thresholds. CSV is long
/// format: one `(table, name, lgs_gate, metric, value)` row per aggregate,
/// with the seed and config hash repeated on every row.
pub fn render_replication(t: &ReplicationTable, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(json_string(&Versioned {
            schema_version: SCHEMA_VERSION,
            kind: "replication_table",
            body: t,
        })),
        Format::Csv => {
            let mut records = Vec::new();
            let mut push = |table: &str, name: &str, gate: f64, metric: &str, value: String| {
                records.push(vec![
                    t.seed.to_string(),
                    t.config_hash.clone(),
                    table.to_string(),
                    name.to_string(),
                    num(gate),
                    metric.to_string(),
                    value,
                ]);
            };
            for r in &t.regimes {
                let g = r.lgs_gate;
                let name = r.regime.as_str();
                push("regime", name, g, "replications", r.replications.to_string());
                push("regime", name, g, "mean_windows", num(r.mean_windows));
                push("regime", name, g, "pct_none", num(r.pct_none));
                push("regime", name, g, "gate_all", num(r.gate_all));
                push("regime", name, g, "gate_nc", num(r.gate_nc));
                push("regime", name, g, "gate_ncp", num(r.gate_ncp));
                push("regime", name, g, "gate_lgs", num(r.gate_lgs));
                push("regime", name, g, "nc_mean", opt(r.nc_mean));
                push("regime", name, g, "lgs_mean", opt(r.lgs_mean));
                push("regime", name, g, "class_none", num(r.class_none));
                push("regime", name, g, "class_mild", num(r.class_mild));
                push("regime", name, g, "class_moderate", num(r.class_moderate));
                push("regime", name, g, "class_strong", num(r.class_strong));
                push("regime", name, g, "any_positive_score", num(r.any_positive_score));
            }
            for s in &t.scenarios {
                let g = s.lgs_gate;
                let name = s.scenario.as_str();
                push("scenario", name, g, "replications", s.replications.to_string());
                push("scenario", name, g, "jaccard_mean", num(s.jaccard_mean));
                push("scenario", name, g, "pct_jaccard_ge", num(s.pct_jaccard_ge));
                push("scenario", name, g, "spearman_mean", opt(s.spearman_mean));
                push("scenario", name, g, "pct_classified", num(s.pct_classified));
                push("scenario", name, g, "pct_borderline", num(s.pct_borderline));
            }
            csv_string(
                &["seed", "config_hash", "table", "name", "lgs_gate", "metric", "value"],
                records,
            )
        }
    }
}

/// Tidy per-window path data: one row per window observation with the
/// normalised level, its growth rate, normalised curvature and log growth.
/// Cells are blank where a quantity is undefined at that position.
pub fn plot_data_csv(analyses: &[SeriesAnalysis]) -> Result<String> {
    let mut records = Vec::new();
    let mut sorted: Vec<&SeriesAnalysis> = analyses.iter().collect();
    sorted.sort_by(|a, b| a.series.label.cmp(&b.series.label));
    for a in sorted {
        let s = &a.series;
        for e in &a.episodes {
            let w = &e.window;
            let v = &s.values[w.range()];
            let g = growth_rates(v);
            let (clock, nc) = normalised_curvature(s, w)?;
            let log_ok = v.iter().all(|x| *x > 0.0);
            for (k, &level) in v.iter().enumerate() {
                let growth = (k >= 1).then(|| g[k - 1]);
                let curv = clock
                    .iter()
                    .position(|c| *c as usize == k)
                    .map(|i| nc[i]);
                let log_growth = (log_ok && k >= 1).then(|| level.ln() - v[k - 1].ln());
                records.push(vec![
                    s.label.clone(),
                    w.start_period.to_string(),
                    w.end_period.to_string(),
                    s.periods[w.start_index + k].to_string(),
                    k.to_string(),
                    num(level),
                    opt(growth),
                    opt(curv),
                    opt(log_growth),
                ]);
            }
        }
    }
    csv_string(
        &[
            "series",
            "window_start",
            "window_end",
            "period",
            "position",
            "level",
            "growth",
            "nc",
            "log_growth",
        ],
        records,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_column_file() {
        let mut text = String::from("year,arrivals\n");
        for (i, y) in (1960..2024).enumerate() {
            text.push_str(&format!("{y},{}\n", 100.0 + i as f64));
        }
        let s = parse_csv(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label, "arrivals");
        assert_eq!(s[0].len(), 64);
        assert_eq!(s[0].periods[0], 1960);
    }

    #[test]
    fn five_columns_give_four_series_with_trimming() {
        let text = "year,a,b,c,d\n\
                    2000,,1,1,1\n\
                    2001,2,2,2,2\n\
                    2002,3,3,3,\n\
                    2003,4,4,4,\n";
        let s = parse_csv(text.as_bytes()).unwrap();
        let labels: Vec<&str> = s.iter().map(|x| x.label.as_str()).collect();
        assert_eq!(labels, ["a", "b", "c", "d"]);
        assert_eq!(s[0].periods, vec![2001, 2002, 2003]);
        assert_eq!(s[3].periods, vec![2000, 2001]);
    }

    #[test]
    fn interior_blank_names_series_and_row() {
        let text = "year,a,b\n2000,1,1\n2001,,2\n2002,3,3\n";
        match parse_csv(text.as_bytes()) {
            Err(Error::InteriorGap { label, row }) => {
                assert_eq!(label, "a");
                assert_eq!(row, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        let bad_arity = "year,a\n2000,1,2\n";
        assert!(matches!(
            parse_csv(bad_arity.as_bytes()),
            Err(Error::MalformedCsv { line: 2, .. })
        ));
        let bad_cell = "year,a\n2000,1\n2001,x\n";
        assert!(matches!(
            parse_csv(bad_cell.as_bytes()),
            Err(Error::MalformedCsv { line: 3, .. })
        ));
        let bad_period = "year,a\n2000,1\n1999,2\n";
        assert!(matches!(
            parse_csv(bad_period.as_bytes()),
            Err(Error::NonMonotonePeriods { .. })
        ));
        assert!(matches!(
            parse_csv("year\n2000\n".as_bytes()),
            Err(Error::MalformedCsv { line: 1, .. })
        ));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
