//! Raw forehead/nasal temperature streams, the NST difference, and its
//! windowed aggregation over rest and task intervals.
//!
//! NST is `nasal − forehead`. The forehead is largely insensitive to blood
//! flow, so the difference tracks sympathetic activity: a *lower* NST means
//! a more activated mental state.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{RestAggregation, TempBand};
use crate::error::{Error, Result};

/// Header of the per-session sample file.
pub const SAMPLE_CSV_HEADER: [&str; 3] = ["time_s", "forehead_c", "nasal_c"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSample {
    pub time_s: f64,
    pub forehead_c: f64,
    pub nasal_c: f64,
}

impl TemperatureSample {
    pub fn new(time_s: f64, forehead_c: f64, nasal_c: f64) -> Self {
        TemperatureSample {
            time_s,
            forehead_c,
            nasal_c,
        }
    }

    /// NST of this reading. Samples inside a [`SessionRecording`] are
    /// validated finite, so this cannot fail there.
    pub fn nst(&self) -> f64 {
        self.nasal_c - self.forehead_c
    }
}

/// Nasal minus forehead skin temperature.
pub fn nst(forehead_c: f64, nasal_c: f64) -> Result<f64> {
    if !forehead_c.is_finite() || !nasal_c.is_finite() {
        return Err(Error::InvalidSample {
            row: None,
            reason: format!("non-finite temperature (forehead {forehead_c}, nasal {nasal_c})"),
        });
    }
    Ok(nasal_c - forehead_c)
}

/// Half-open time interval `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", try_from = "[f64; 2]")]
pub struct Interval {
    pub start_s: f64,
    pub end_s: f64,
}

impl Interval {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite() && start_s < end_s) {
            return Err(Error::InvalidRecording(format!(
                "interval [{start_s}, {end_s}) is empty or non-finite"
            )));
        }
        Ok(Interval { start_s, end_s })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }

    pub fn len_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

impl From<Interval> for [f64; 2] {
    fn from(iv: Interval) -> Self {
        [iv.start_s, iv.end_s]
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from([a, b]: [f64; 2]) -> Result<Self> {
        Interval::new(a, b)
    }
}

/// One session: the rest period followed by one programming task.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecording {
    subject_id: String,
    task_id: String,
    samples: Vec<TemperatureSample>,
    rest_interval: Interval,
    task_interval: Interval,
}

impl SessionRecording {
    pub fn new(
        subject_id: impl Into<String>,
        task_id: impl Into<String>,
        samples: Vec<TemperatureSample>,
        rest_interval: Interval,
        task_interval: Interval,
        band: TempBand,
    ) -> Result<Self> {
        validate_samples(&samples, band)?;
        if rest_interval.end_s > task_interval.start_s {
            return Err(Error::InvalidRecording(format!(
                "rest interval [{}, {}) must end before task interval [{}, {}) starts",
                rest_interval.start_s,
                rest_interval.end_s,
                task_interval.start_s,
                task_interval.end_s
            )));
        }
        let rec = SessionRecording {
            subject_id: subject_id.into(),
            task_id: task_id.into(),
            samples,
            rest_interval,
            task_interval,
        };
        if rec.samples_in(rest_interval).is_empty() {
            return Err(empty("rest", rest_interval));
        }
        if rec.samples_in(task_interval).is_empty() {
            return Err(empty("task", task_interval));
        }
        Ok(rec)
    }

    pub fn with_ids(mut self, subject_id: impl Into<String>, task_id: impl Into<String>) -> Self {
        self.subject_id = subject_id.into();
        self.task_id = task_id.into();
        self
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn samples(&self) -> &[TemperatureSample] {
        &self.samples
    }

    pub fn rest_interval(&self) -> Interval {
        self.rest_interval
    }

    pub fn task_interval(&self) -> Interval {
        self.task_interval
    }

    /// Contiguous run of samples whose time falls inside `iv`.
    pub fn samples_in(&self, iv: Interval) -> &[TemperatureSample] {
        let lo = self.samples.partition_point(|s| s.time_s < iv.start_s);
        let hi = self.samples.partition_point(|s| s.time_s < iv.end_s);
        &self.samples[lo..hi.max(lo)]
    }
}

fn empty(what: &'static str, iv: Interval) -> Error {
    Error::EmptyInterval {
        what,
        start_s: iv.start_s,
        end_s: iv.end_s,
    }
}

fn validate_samples(samples: &[TemperatureSample], band: TempBand) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (i, s) in samples.iter().enumerate() {
        let row = Some(i + 1);
        if !s.time_s.is_finite() || s.time_s < 0.0 {
            return Err(Error::InvalidSample {
                row,
                reason: format!("time_s {} must be finite and non-negative", s.time_s),
            });
        }
        for (name, v) in [("forehead_c", s.forehead_c), ("nasal_c", s.nasal_c)] {
            if !v.is_finite() || !band.contains(v) {
                return Err(Error::InvalidSample {
                    row,
                    reason: format!(
                        "{name} {v} outside plausible band [{}, {}] °C",
                        band.low, band.high
                    ),
                });
            }
        }
        if let Some(p) = prev {
            if s.time_s <= p {
                return Err(Error::InvalidSample {
                    row,
                    reason: format!("time_s {} not strictly after previous {p}", s.time_s),
                });
            }
        }
        prev = Some(s.time_s);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NstWindow {
    pub window_end_s: f64,
    pub nst_c: f64,
    /// Number of raw samples averaged into this window.
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NstSeries {
    pub window_len_s: f64,
    pub values: Vec<NstWindow>,
}

impl NstSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nst_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|w| w.nst_c)
    }
}

/// Partitions `interval` into consecutive windows of `window_len_s` and
/// averages NST inside each. A trailing partial window is kept only when it
/// holds at least one sample; any other empty window is a gap.
pub fn window_nst(
    recording: &SessionRecording,
    interval: Interval,
    window_len_s: f64,
) -> Result<NstSeries> {
    if !(window_len_s.is_finite() && window_len_s > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "window length must be positive, got {window_len_s}"
        )));
    }
    let samples = recording.samples_in(interval);
    if samples.is_empty() {
        return Err(empty("window", interval));
    }

    let start = interval.start_s;
    let boundary = |k: usize| start + k as f64 * window_len_s;
    let ratio = interval.len_s() / window_len_s;
    let n_full = (ratio + 1e-9).floor() as usize;
    let has_partial = ratio - n_full as f64 > 1e-9;
    let n_windows = n_full + usize::from(has_partial);

    let mut sums = vec![0.0_f64; n_windows];
    let mut counts = vec![0_usize; n_windows];
    for s in samples {
        let mut k = ((s.time_s - start) / window_len_s).floor().max(0.0) as usize;
        if k + 1 < n_windows && s.time_s >= boundary(k + 1) {
            k += 1;
        } else if k > 0 && s.time_s < boundary(k) {
            k -= 1;
        }
        let k = k.min(n_windows - 1);
        sums[k] += s.nst();
        counts[k] += 1;
    }

    let mut values = Vec::with_capacity(n_windows);
    for k in 0..n_windows {
        let last = k + 1 == n_windows;
        let end = if last {
            interval.end_s
        } else {
            boundary(k + 1)
        };
        if counts[k] == 0 {
            if last && has_partial {
                break;
            }
            return Err(Error::WindowGap {
                index: k,
                start_s: boundary(k),
                end_s: end,
            });
        }
        values.push(NstWindow {
            window_end_s: end,
            nst_c: sums[k] / counts[k] as f64,
            n_samples: counts[k],
        });
    }
    Ok(NstSeries {
        window_len_s,
        values,
    })
}

/// Collapses the rest interval to one NST value.
pub fn rest_baseline(recording: &SessionRecording, agg: RestAggregation) -> Result<f64> {
    let iv = recording.rest_interval();
    let rest = recording.samples_in(iv);
    let Some(last) = rest.last() else {
        return Err(empty("rest", iv));
    };
    Ok(match agg {
        RestAggregation::Mean => {
            rest.iter().map(TemperatureSample::nst).sum::<f64>() / rest.len() as f64
        }
        RestAggregation::Last => last.nst(),
    })
}

/// Reads a sample file. The header must be exactly `time_s,forehead_c,nasal_c`.
pub fn read_samples_csv(path: &Path) -> Result<Vec<TemperatureSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_samples_csv(file).map_err(|e| match e {
        Error::Csv { message, .. } => Error::Csv {
            path: path.to_owned(),
            message,
        },
        other => other,
    })
}

pub fn parse_samples_csv<R: Read>(input: R) -> Result<Vec<TemperatureSample>> {
    let csv_err = |message: String| Error::Csv {
        path: Default::default(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| csv_err(format!("unreadable header: {e}")))?;
    if headers.iter().ne(SAMPLE_CSV_HEADER) {
        return Err(csv_err(format!(
            "header must be `{}`, found `{}`",
            SAMPLE_CSV_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, rec)| rec.map_err(|e| csv_err(format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn write_samples_csv<W: Write>(out: W, samples: &[TemperatureSample]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Csv {
        path: Default::default(),
        message: e.to_string(),
    };
    for s in samples {
        writer.serialize(s).map_err(wrap)?;
    }
    writer.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
