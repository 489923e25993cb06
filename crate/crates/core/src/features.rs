//! Session manifests, TLX responses, and the regression-ready feature table.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::{summarize, wnst_series, MetricSet, WnstSeries};
use crate::par::Exec;
use crate::signal::{self, rest_baseline, window_nst, Interval, SessionRecording};

pub const FEATURE_CSV_HEADER: [&str; 10] = [
    "subject_id",
    "task_id",
    "wmax",
    "wave",
    "wsum",
    "log_time",
    "mental_demand",
    "own_performance",
    "effort",
    "frustration",
];

/// The four TLX subscales that are modelled. Low scores mean high load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subscale {
    MentalDemand,
    OwnPerformance,
    Effort,
    Frustration,
}

impl Subscale {
    pub const ALL: [Subscale; 4] = [
        Subscale::MentalDemand,
        Subscale::OwnPerformance,
        Subscale::Effort,
        Subscale::Frustration,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Subscale::MentalDemand => "mental_demand",
            Subscale::OwnPerformance => "own_performance",
            Subscale::Effort => "effort",
            Subscale::Frustration => "frustration",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Subscale::MentalDemand => "Mental demand",
            Subscale::OwnPerformance => "Own performance",
            Subscale::Effort => "Effort",
            Subscale::Frustration => "Frustration level",
        }
    }
}

impl fmt::Display for Subscale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Candidate explanatory variables, in tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    Wmax,
    Wave,
    Wsum,
    LogTime,
}

impl Predictor {
    pub const ALL: [Predictor; 4] = [
        Predictor::Wmax,
        Predictor::Wave,
        Predictor::Wsum,
        Predictor::LogTime,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Predictor::Wmax => "wmax",
            Predictor::Wave => "wave",
            Predictor::Wsum => "wsum",
            Predictor::LogTime => "log_time",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Predictor::Wmax => "WMAX",
            Predictor::Wave => "WAVE",
            Predictor::Wsum => "WSUM",
            Predictor::LogTime => "Time",
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Simplified NASA-TLX scores, each on a 0–100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlxResponse {
    pub mental_demand: f64,
    pub own_performance: f64,
    pub effort: f64,
    pub frustration: f64,
}

impl TlxResponse {
    pub fn get(&self, s: Subscale) -> f64 {
        match s {
            Subscale::MentalDemand => self.mental_demand,
            Subscale::OwnPerformance => self.own_performance,
            Subscale::Effort => self.effort,
            Subscale::Frustration => self.frustration,
        }
    }

    pub fn set(&mut self, s: Subscale, v: f64) {
        match s {
            Subscale::MentalDemand => self.mental_demand = v,
            Subscale::OwnPerformance => self.own_performance = v,
            Subscale::Effort => self.effort = v,
            Subscale::Frustration => self.frustration = v,
        }
    }

    /// Returns the first out-of-range subscale, if any.
    pub fn check(&self) -> std::result::Result<(), (Subscale, f64)> {
        for s in Subscale::ALL {
            let v = self.get(s);
            if !(v.is_finite() && (0.0..=100.0).contains(&v)) {
                return Err((s, v));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Difficult,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub subject_id: String,
    pub task_id: String,
    pub difficulty: Difficulty,
    pub task_time_min: f64,
    pub recording: SessionRecording,
    pub tlx: TlxResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub task_id: String,
    #[serde(default)]
    pub difficulty: Difficulty,
    pub task_time_min: f64,
    pub samples_csv: PathBuf,
    pub rest_interval_s: [f64; 2],
    pub task_interval_s: [f64; 2],
    pub tlx: TlxResponse,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub sessions: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest {
            location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// One problem found while validating a manifest.
#[derive(Debug)]
pub struct Diagnostic {
    /// e.g. `sessions[3] (S02/T1).tlx.effort`
    pub location: String,
    pub error: Error,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.error)
    }
}

#[derive(Debug, Default)]
pub struct ManifestCheck {
    pub records: Vec<TaskRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ManifestCheck {
    pub fn has_io_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.error.is_io())
    }
}

/// Loads every session, collecting all violations instead of stopping at
/// the first. Fails outright only if the manifest itself is unreadable.
pub fn check_manifest(path: &Path, config: &Config) -> Result<ManifestCheck> {
    config.validate()?;
    let manifest = Manifest::read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut check = ManifestCheck::default();
    let mut seen = HashSet::new();

    for (i, entry) in manifest.sessions.iter().enumerate() {
        let loc = format!("sessions[{i}] ({}/{})", entry.subject_id, entry.task_id);
        if !seen.insert((entry.subject_id.clone(), entry.task_id.clone())) {
            check.diagnostics.push(Diagnostic {
                location: loc.clone(),
                error: Error::DuplicateRow {
                    subject_id: entry.subject_id.clone(),
                    task_id: entry.task_id.clone(),
                },
            });
        }
        match load_entry(entry, base, config) {
            Ok(rec) => check.records.push(rec),
            Err((field, error)) => check.diagnostics.push(Diagnostic {
                location: if field.is_empty() {
                    loc
                } else {
                    format!("{loc}.{field}")
                },
                error,
            }),
        }
    }
    Ok(check)
}

/// Loads and validates every session; the first violation is an error.
pub fn load_manifest(path: &Path, config: &Config) -> Result<Vec<TaskRecord>> {
    let mut check = check_manifest(path, config)?;
    if check.diagnostics.is_empty() {
        return Ok(check.records);
    }
    let d = check.diagnostics.swap_remove(0);
    if d.error.is_io() {
        return Err(d.error);
    }
    Err(Error::Manifest {
        location: d.location,
        message: d.error.to_string(),
    })
}

fn load_entry(
    entry: &ManifestEntry,
    base: &Path,
    config: &Config,
) -> std::result::Result<TaskRecord, (String, Error)> {
    let invalid = |field: &str, msg: String| (field.to_owned(), Error::InvalidRecording(msg));

    if !(entry.task_time_min.is_finite() && entry.task_time_min > 0.0) {
        return Err(invalid(
            "task_time_min",
            format!(
                "task time must be positive for the log transform, got {}",
                entry.task_time_min
            ),
        ));
    }
    if let Err((s, v)) = entry.tlx.check() {
        return Err(invalid(
            &format!("tlx.{s}"),
            format!("score {v} outside [0, 100]"),
        ));
    }
    let rest =
        Interval::try_from(entry.rest_interval_s).map_err(|e| ("rest_interval_s".into(), e))?;
    let task =
        Interval::try_from(entry.task_interval_s).map_err(|e| ("task_interval_s".into(), e))?;

    let csv_path = base.join(&entry.samples_csv);
    let samples = signal::read_samples_csv(&csv_path).map_err(|e| ("samples_csv".to_owned(), e))?;
    let recording = SessionRecording::new(
        &entry.subject_id,
        &entry.task_id,
        samples,
        rest,
        task,
        config.temp_band,
    )
    .map_err(|e| {
        let e = match e {
            Error::InvalidSample { row, reason } => Error::InvalidSample {
                row,
                reason: format!("{reason} in {}", csv_path.display()),
            },
            other => other,
        };
        (String::new(), e)
    })?;

    Ok(TaskRecord {
        subject_id: entry.subject_id.clone(),
        task_id: entry.task_id.clone(),
        difficulty: entry.difficulty,
        task_time_min: entry.task_time_min,
        recording,
        tlx: entry.tlx,
    })
}

/// Everything the signal and metrics stages derive from one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionMetrics {
    pub rest_nst_c: f64,
    pub wnst: WnstSeries,
    pub metrics: MetricSet,
}

pub fn session_metrics(recording: &SessionRecording, config: &Config) -> Result<SessionMetrics> {
    let rest_nst_c = rest_baseline(recording, config.rest_agg)?;
    let nst = window_nst(recording, recording.task_interval(), config.window_len_s)?;
    let wnst = wnst_series(&nst, rest_nst_c)?;
    let metrics = summarize(&wnst)?;
    Ok(SessionMetrics {
        rest_nst_c,
        wnst,
        metrics,
    })
}

/// Per-record metrics in record order, each error tagged with its session.
pub fn compute_metrics(
    records: &[TaskRecord],
    config: &Config,
    exec: Exec,
) -> Result<Vec<SessionMetrics>> {
    config.validate()?;
    exec.map(records, |r| {
        session_metrics(&r.recording, config).map_err(|e| e.in_session(&r.subject_id, &r.task_id))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub task_id: String,
    pub wmax: f64,
    pub wave: f64,
    pub wsum: f64,
    /// Natural log of the task time in minutes.
    pub log_time: f64,
    pub targets: TlxResponse,
}

impl FeatureRow {
    pub fn predictor(&self, p: Predictor) -> f64 {
        match p {
            Predictor::Wmax => self.wmax,
            Predictor::Wave => self.wave,
            Predictor::Wsum => self.wsum,
            Predictor::LogTime => self.log_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub manifest_path: Option<String>,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    pub provenance: Provenance,
}

impl FeatureTable {
    pub fn new(rows: Vec<FeatureRow>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert((r.subject_id.as_str(), r.task_id.as_str())) {
                return Err(Error::DuplicateRow {
                    subject_id: r.subject_id.clone(),
                    task_id: r.task_id.clone(),
                });
            }
            let numeric = Predictor::ALL
                .iter()
                .map(|&p| r.predictor(p))
                .chain(Subscale::ALL.iter().map(|&s| r.targets.get(s)));
            if numeric.into_iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidRecording(format!(
                    "non-finite feature in row {}/{}",
                    r.subject_id, r.task_id
                )));
            }
        }
        Ok(FeatureTable { rows, provenance })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, p: Predictor) -> Vec<f64> {
        self.rows.iter().map(|r| r.predictor(p)).collect()
    }

    pub fn target(&self, s: Subscale) -> Vec<f64> {
        self.rows.iter().map(|r| r.targets.get(s)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::Csv {
            path: PathBuf::from("<features>"),
            message: e.to_string(),
        };
        w.write_record(FEATURE_CSV_HEADER).map_err(wrap)?;
        for r in &self.rows {
            let t = r.targets;
            w.serialize((
                &r.subject_id,
                &r.task_id,
                r.wmax,
                r.wave,
                r.wsum,
                r.log_time,
                t.mental_demand,
                t.own_performance,
                t.effort,
                t.frustration,
            ))
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("<features>", e))
    }
}

/// One row per record: WMAX/WAVE/WSUM of the task relative to rest, and
/// the log task time. Row order follows `records`.
pub fn build_features(records: &[TaskRecord], config: &Config, exec: Exec) -> Result<FeatureTable> {
    let metrics = compute_metrics(records, config, exec)?;
    let rows = records
        .iter()
        .zip(metrics)
        .map(|(r, m)| FeatureRow {
            subject_id: r.subject_id.clone(),
            task_id: r.task_id.clone(),
            wmax: m.metrics.wmax,
            wave: m.metrics.wave,
            wsum: m.metrics.wsum,
            log_time: r.task_time_min.ln(),
            targets: r.tlx,
        })
        .collect();
    FeatureTable::new(
        rows,
        Provenance {
            manifest_path: None,
            config_digest: config.digest(),
        },
    )
}

/// Loads a manifest and builds its feature table in one step.
pub fn features_from_manifest(path: &Path, config: &Config, exec: Exec) -> Result<FeatureTable> {
    let records = load_manifest(path, config)?;
    let mut table = build_features(&records, config, exec)?;
    table.provenance.manifest_path = Some(path.display().to_string());
    Ok(table)
}
