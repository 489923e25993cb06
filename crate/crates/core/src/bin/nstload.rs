use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nstload::config::{RestAggregation, Selection, TempBand};
use nstload::features::{
    check_manifest, compute_metrics, features_from_manifest, load_manifest, Predictor,
};
use nstload::regress::{build_report, ModelReport};
use nstload::synth::{generate_study, StudyConfig, TruthConfig};
use nstload::{Config, Error, Exec};

const EXIT_HELP: &str = "\
Exit status:
  0  success
  1  invalid data, configuration, or insufficient rows
  2  file could not be read or written (also used for usage errors)";

#[derive(Parser)]
#[command(name = "nstload", version, about = "Cognitive-load metrics from nasal/forehead skin temperature", after_help = EXIT_HELP)]
struct Cli {
    /// Run per-session work on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a manifest and its sample files, listing every problem found.
    Validate {
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// WMAX, WAVE, WSUM, window count, and rest NST per session.
    Metrics {
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// The regression feature table, one row per session.
    Features {
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit the time-only and full models for every TLX subscale.
    Fit {
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Also write the report as JSON to this file.
        #[arg(long, value_name = "FILE")]
        report_json: Option<PathBuf>,
    },
    /// Render a report previously saved as JSON.
    Report {
        report: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a seeded synthetic study (manifest, sample CSVs, ground truth).
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 7)]
        subjects: usize,
        #[arg(long, default_value_t = 2)]
        tasks: usize,
        /// Sampling period of the temperature series, seconds.
        #[arg(long, default_value_t = 10.0)]
        sample_period: f64,
        /// Per-sample sensor noise, degrees C.
        #[arg(long, default_value_t = 0.05)]
        noise_sd: f64,
        /// JSON file with the true TLX relations.
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Metric window length, seconds.
    #[arg(long, default_value_t = 120.0)]
    window_secs: f64,
    #[arg(long, value_enum, default_value_t = RestAgg::Mean)]
    rest_agg: RestAgg,
    /// Minimum tolerance (1 - R^2 against selected variables) to admit a candidate.
    #[arg(long, default_value_t = 0.1)]
    tolerance_threshold: f64,
    /// Admit only candidates uncorrelated with every selected variable.
    #[arg(long)]
    paper_literal_tolerance: bool,
    #[arg(long, value_enum, default_value_t = SelectionArg::Forward)]
    selection: SelectionArg,
    /// Smallest adjusted R^2 gain that keeps forward selection going.
    #[arg(long, default_value_t = 0.0)]
    min_improvement: f64,
    /// Plausible skin temperature range, degrees C.
    #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"], default_values_t = [20.0, 45.0])]
    temp_band: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RestAgg {
    Mean,
    Last,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Forward,
    ForwardBackward,
}

impl ConfigArgs {
    fn to_config(&self) -> Result<Config, Error> {
        let config = Config {
            window_len_s: self.window_secs,
            rest_agg: match self.rest_agg {
                RestAgg::Mean => RestAggregation::Mean,
                RestAgg::Last => RestAggregation::Last,
            },
            tolerance_threshold: self.tolerance_threshold,
            paper_literal_tolerance: self.paper_literal_tolerance,
            selection: match self.selection {
                SelectionArg::Forward => Selection::Forward,
                SelectionArg::ForwardBackward => Selection::ForwardBackward,
            },
            min_improvement: self.min_improvement,
            temp_band: TempBand {
                low: self.temp_band[0],
                high: self.temp_band[1],
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Defaults to text (csv for `features`).
    #[arg(long, value_enum)]
    output_format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn format_or(&self, default: Format) -> Format {
        self.output_format.unwrap_or(default)
    }

    fn emit(&self, body: &[u8]) -> Result<(), Error> {
        match &self.out {
            Some(path) => std::fs::write(path, body).map_err(|e| io_error(path, e)),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(body)
                    .and_then(|()| out.flush())
                    .map_err(|e| io_error(Path::new("<stdout>"), e))
            }
        }
    }
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source,
    }
}

enum Failure {
    Domain(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, exec: Exec) -> Result<(), Failure> {
    match command {
        Command::Validate { manifest, config } => validate(&manifest, &config.to_config()?),
        Command::Metrics {
            manifest,
            config,
            output,
        } => {
            let config = config.to_config()?;
            let records = load_manifest(&manifest, &config)?;
            let metrics = compute_metrics(&records, &config, exec)?;
            let rows: Vec<MetricsRow> = records
                .iter()
                .zip(&metrics)
                .map(|(r, m)| MetricsRow {
                    subject_id: &r.subject_id,
                    task_id: &r.task_id,
                    wmax: m.metrics.wmax,
                    wave: m.metrics.wave,
                    wsum: m.metrics.wsum,
                    n_windows: m.metrics.n_windows,
                    rest_nst: m.rest_nst_c,
                })
                .collect();
            let body = match output.format_or(Format::Text) {
                Format::Text => metrics_text(&rows).into_bytes(),
                Format::Json => json_line(&rows)?,
                Format::Csv => metrics_csv(&rows)?,
            };
            Ok(output.emit(&body)?)
        }
        Command::Features {
            manifest,
            config,
            output,
        } => {
            let table = features_from_manifest(&manifest, &config.to_config()?, exec)?;
            let body = match output.format_or(Format::Csv) {
                Format::Json => json_line(&table)?,
                Format::Csv | Format::Text => {
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf)?;
                    buf
                }
            };
            Ok(output.emit(&body)?)
        }
        Command::Fit {
            manifest,
            config,
            output,
            report_json,
        } => {
            let config = config.to_config()?;
            let table = features_from_manifest(&manifest, &config, exec)?;
            let report = build_report(&table, &config, exec)?;
            if let Some(path) = report_json {
                let mut text = report.to_json()?;
                text.push('\n');
                std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
            }
            emit_report(&report, &output)
        }
        Command::Report { report, output } => {
            let text = std::fs::read_to_string(&report).map_err(|e| io_error(&report, e))?;
            emit_report(&ModelReport::from_json(&text)?, &output)
        }
        Command::Synth {
            out,
            seed,
            subjects,
            tasks,
            sample_period,
            noise_sd,
            truth,
        } => {
            let truth = match truth {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
                    serde_json::from_str::<TruthConfig>(&text).map_err(Error::from)?
                }
                None => TruthConfig::default(),
            };
            let cfg = StudyConfig {
                n_subjects: subjects,
                tasks_per_subject: tasks,
                sample_period_s: sample_period,
                noise_sd_c: noise_sd,
                truth,
            };
            let files = generate_study(&cfg, seed, &out, exec)?;
            println!(
                "wrote {} sessions to {}",
                files.samples.len(),
                files.manifest.display()
            );
            Ok(())
        }
    }
}

fn validate(manifest: &Path, config: &Config) -> Result<(), Failure> {
    let check = check_manifest(manifest, config)?;
    if check.diagnostics.is_empty() {
        println!(
            "{}: {} sessions OK",
            manifest.display(),
            check.records.len()
        );
        return Ok(());
    }
    for d in &check.diagnostics {
        eprintln!("{d}");
    }
    let msg = format!(
        "{} problem(s) in {}",
        check.diagnostics.len(),
        manifest.display()
    );
    if check.has_io_errors() {
        Err(Failure::Io(msg))
    } else {
        Err(Failure::Domain(msg))
    }
}

fn emit_report(report: &ModelReport, output: &OutputArgs) -> Result<(), Failure> {
    let body = match output.format_or(Format::Text) {
        Format::Text => report.render_text().into_bytes(),
        Format::Json => json_line(report)?,
        Format::Csv => report_csv(report)?,
    };
    Ok(output.emit(&body)?)
}

fn json_line<T: serde::Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, Error> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

#[derive(serde::Serialize)]
struct MetricsRow<'a> {
    subject_id: &'a str,
    task_id: &'a str,
    wmax: f64,
    wave: f64,
    wsum: f64,
    n_windows: usize,
    rest_nst: f64,
}

fn metrics_text(rows: &[MetricsRow]) -> String {
    let mut out = format!(
        "{:<10} {:<8} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "subject", "task", "wmax", "wave", "wsum", "n_windows", "rest_nst"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:<8} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>9.4}\n",
            r.subject_id, r.task_id, r.wmax, r.wave, r.wsum, r.n_windows, r.rest_nst
        ));
    }
    out
}

fn metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| csv_error(e.into_error().into()))
}

/// One line per cell: family, target, adjusted R², then each standardized
/// coefficient (empty when the variable was not selected).
fn report_csv(report: &ModelReport) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["mode", "target", "adj_r2", "r2"];
    header.extend(Predictor::ALL.iter().map(|p| p.key()));
    w.write_record(&header).map_err(csv_error)?;
    for cell in &report.models {
        let mut line = vec![cell.mode().to_string(), cell.target().key().to_owned()];
        match cell.fitted() {
            Some(m) => {
                line.push(m.adj_r2.to_string());
                line.push(m.r2.to_string());
                line.extend(Predictor::ALL.iter().map(|p| {
                    m.std_coefficients
                        .get(p)
                        .map(f64::to_string)
                        .unwrap_or_default()
                }));
            }
            None => line.extend(std::iter::repeat_n(String::new(), 2 + Predictor::ALL.len())),
        }
        w.write_record(&line).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| csv_error(e.into_error().into()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Csv {
        path: PathBuf::from("<stdout>"),
        message: e.to_string(),
    }
}
