mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pathex_core::classify::ThresholdVector;
use pathex_core::io::{self, Format};
use pathex_core::pipeline::{analyze, AnalysisConfig};
use pathex_core::simulate::{run_study_with, StudyConfig, CALIBRATION_SEED_OFFSET};
use pathex_core::{calibrate, classify_pair, DgpSpec, Error, RawSeries, Result};

use config::{FileConfig, GateName, Overrides, RunConfig, ThresholdSource};

/// Detect, score and compare path-explosive episodes in time series.
#[derive(Parser, Debug)]
#[command(name = "pathex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report every detected window of every series in a CSV file.
    Analyze {
        /// CSV with a period column followed by one column per series.
        input: PathBuf,
        /// Only analyse these columns (repeatable).
        #[arg(long = "series")]
        series: Vec<String>,
        /// Include all twelve statistics in the report.
        #[arg(long)]
        extended: bool,
        /// Also write per-window tidy plot data (default path: plot_data.csv).
        #[arg(long, num_args = 0..=1, default_missing_value = "plot_data.csv")]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Co-explosion report for two series of a CSV file.
    CoAnalyze {
        input: PathBuf,
        /// The two column names to compare. Optional when the file has
        /// exactly two series.
        #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
        pair: Option<Vec<String>>,
        /// Minimum shared periods as a fraction of the shorter window.
        #[arg(long)]
        min_overlap_fraction: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate intensity thresholds on simulated mild explosive paths and
    /// write the threshold document.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the replication study and write its tables.
    Simulate {
        /// Replications per regime and scenario.
        #[arg(long)]
        replications: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML config file; flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Gate preset: strict (LGS >= 0.70) or empirical (LGS >= 0.35).
    #[arg(long, value_enum)]
    gate: Option<GateName>,
    /// Threshold document to score against.
    #[arg(long, conflicts_with = "calibrate_t")]
    thresholds: Option<PathBuf>,
    /// Calibrate thresholds on the fly at this series length.
    #[arg(long = "calibrate-T", id = "calibrate_t", value_name = "T")]
    calibrate_t: Option<usize>,
    /// Simulated paths pooled when calibrating (default 500).
    #[arg(long)]
    calibration_replications: Option<usize>,
    /// Base random seed for calibration and simulation.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep at most this many windows per series.
    #[arg(long)]
    max_windows: Option<usize>,
    /// Longest window, in periods.
    #[arg(long)]
    w_max: Option<usize>,
    /// Output format: csv (default) or json.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn resolve(&self, extra: Overrides) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        RunConfig::resolve(
            file,
            Overrides {
                gate: self.gate,
                thresholds: self.thresholds.clone(),
                calibrate_t: self.calibrate_t,
                calibration_replications: self.calibration_replications,
                seed: self.seed,
                format: self.format,
                max_windows: self.max_windows,
                w_max: self.w_max,
                ..extra
            },
        )
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => io::write_text(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

/// Calibration replications draw from `seed + CALIBRATION_SEED_OFFSET`, the
/// same stream the study uses, so every command agrees for a given seed.
fn thresholds(rc: &RunConfig) -> Result<ThresholdVector> {
    match &rc.thresholds {
        ThresholdSource::File(p) => io::read_thresholds(p),
        ThresholdSource::Calibrate { len, replications } => calibrate(
            &DgpSpec::ar1(1.04).with_len(*len),
            *replications,
            rc.seed.wrapping_add(CALIBRATION_SEED_OFFSET),
            &rc.window,
        ),
    }
}

fn analysis_config(rc: &RunConfig) -> AnalysisConfig {
    AnalysisConfig {
        window: rc.window,
        gate: rc.gate,
        ..AnalysisConfig::default()
    }
}

fn select<'a>(all: &'a [RawSeries], names: &[String]) -> Result<Vec<&'a RawSeries>> {
    if names.is_empty() {
        return Ok(all.iter().collect());
    }
    names
        .iter()
        .map(|n| {
            all.iter()
                .find(|s| &s.label == n)
                .ok_or_else(|| Error::InvalidArgument(format!("no series named '{n}' in input")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            input,
            series,
            extended,
            plot_data,
            common,
        } => {
            let rc = common.resolve(Overrides {
                extended,
                plot_data,
                ..Default::default()
            })?;
            let all = io::read_csv(&input)?;
            let chosen = select(&all, &series)?;
            let tv = thresholds(&rc)?;
            let acfg = analysis_config(&rc);
            let analyses = chosen
                .into_iter()
                .map(|s| analyze(s, &acfg, &tv))
                .collect::<Result<Vec<_>>>()?;
            let rows = io::episode_rows(&analyses, rc.extended);
            emit(common.output.as_deref(), &io::render_episodes(&rows, rc.format)?)?;
            if let Some(p) = &rc.plot_data {
                io::write_text(p, &io::plot_data_csv(&analyses)?)?;
            }
            Ok(())
        }
        Command::CoAnalyze {
            input,
            pair,
            min_overlap_fraction,
            common,
        } => {
            let rc = common.resolve(Overrides {
                min_overlap_fraction,
                ..Default::default()
            })?;
            let all = io::read_csv(&input)?;
            let names = match pair {
                Some(p) => p,
                None if all.len() == 2 => vec![all[0].label.clone(), all[1].label.clone()],
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "input has {} series; name two with --pair",
                        all.len()
                    )))
                }
            };
            let chosen = select(&all, &names)?;
            let tv = thresholds(&rc)?;
            let acfg = analysis_config(&rc);
            let a = analyze(chosen[0], &acfg, &tv)?;
            let b = analyze(chosen[1], &acfg, &tv)?;
            let report = classify_pair(
                &a.series.label,
                &a.episodes,
                &b.series.label,
                &b.episodes,
                &rc.matching,
            );
            emit(
                common.output.as_deref(),
                &io::render_coexplosion(&report, rc.format)?,
            )
        }
        Command::Calibrate { common } => {
            if common.thresholds.is_some() {
                return Err(Error::InvalidArgument(
                    "calibrate produces thresholds; --thresholds does not apply".into(),
                ));
            }
            let rc = common.resolve(Overrides::default())?;
            let tv = thresholds(&rc)?;
            emit(common.output.as_deref(), &tv.to_document())
        }
        Command::Simulate {
            replications,
            common,
        } => {
            let rc = common.resolve(Overrides {
                replications,
                ..Default::default()
            })?;
            let defaults = StudyConfig::default();
            let study = StudyConfig {
                seed: rc.seed,
                window: rc.window,
                replications: rc.replications.unwrap_or(defaults.replications),
                calibration_replications: match rc.thresholds {
                    ThresholdSource::Calibrate { replications, .. } => replications,
                    ThresholdSource::File(_) => 0,
                },
                ..defaults
            };
            let tv = thresholds(&rc)?;
            let table = run_study_with(&study, tv)?;
            emit(
                common.output.as_deref(),
                &io::render_replication(&table, rc.format)?,
            )
        }
    }
}

fn error_record(kind: &str, message: &str) -> String {
    serde_json::json!({
        "schema_version": io::SCHEMA_VERSION,
        "error": { "kind": kind, "message": message },
    })
    .to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_record("usage", e.to_string().trim_end()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
