//! Seeded generator of synthetic studies with a known ground truth.
//!
//! Each session is a rest period followed by a task made of planning,
//! typing, and debugging phases. A latent load state follows the load level
//! of the current segment through a first-order lag; the nasal temperature
//! drops linearly with that state while the forehead stays flat. Higher load
//! therefore means lower NST and lower WNST. TLX scores are a configured
//! linear function of the pipeline's own features plus Gaussian noise.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{Config, TempBand, DEFAULT_REST_SECS};
use crate::error::{Error, Result};
use crate::features::{
    build_features, session_metrics, Difficulty, FeatureTable, Manifest, ManifestEntry, Predictor,
    Subscale, TaskRecord, TlxResponse,
};
use crate::par::Exec;
use crate::regress::sample_sd;
use crate::signal::{write_samples_csv, Interval, SessionRecording, TemperatureSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Planning,
    Typing,
    Debugging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub duration_s: f64,
    /// 0 = fully relaxed, 1 = maximal load.
    pub load_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub phases: Vec<Phase>,
    /// Per-sample Gaussian noise on each channel, °C.
    pub noise_sd_c: f64,
    /// NST of this subject at zero load.
    pub subject_baseline_nst_c: f64,
    pub rest_duration_s: f64,
    /// Load held during the pre-task rest.
    pub rest_load_level: f64,
    /// Nasal temperature drop per unit of load, °C.
    pub nasal_gain_c: f64,
    /// Time constant of the lag toward each segment's load level, s.
    pub lag_tau_s: f64,
    pub forehead_c: f64,
    /// Round recorded temperatures to this many decimals.
    pub decimals: Option<i32>,
}

impl Default for LoadProfile {
    fn default() -> Self {
        LoadProfile {
            phases: vec![
                Phase {
                    kind: PhaseKind::Planning,
                    duration_s: 120.0,
                    load_level: 0.4,
                },
                Phase {
                    kind: PhaseKind::Typing,
                    duration_s: 240.0,
                    load_level: 0.3,
                },
                Phase {
                    kind: PhaseKind::Debugging,
                    duration_s: 120.0,
                    load_level: 0.5,
                },
            ],
            noise_sd_c: 0.05,
            subject_baseline_nst_c: 1.5,
            rest_duration_s: DEFAULT_REST_SECS,
            rest_load_level: 0.9,
            nasal_gain_c: 1.6,
            lag_tau_s: 60.0,
            forehead_c: 33.5,
            decimals: None,
        }
    }
}

impl LoadProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if self.phases.is_empty() {
            return bad("at least one phase is required".into());
        }
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.duration_s.is_finite() && p.duration_s > 0.0) {
                return bad(format!(
                    "phase {i} duration {} must be positive",
                    p.duration_s
                ));
            }
            if !(0.0..=1.0).contains(&p.load_level) {
                return bad(format!("phase {i} load {} outside [0, 1]", p.load_level));
            }
        }
        if !(0.0..=1.0).contains(&self.rest_load_level) {
            return bad(format!("rest load {} outside [0, 1]", self.rest_load_level));
        }
        let positive = [
            ("rest duration", self.rest_duration_s),
            ("lag time constant", self.lag_tau_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} {v} must be positive"));
            }
        }
        let finite = [
            ("noise sd", self.noise_sd_c),
            ("baseline NST", self.subject_baseline_nst_c),
            ("nasal gain", self.nasal_gain_c),
            ("forehead temperature", self.forehead_c),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} {v} must be finite"));
            }
        }
        if self.noise_sd_c < 0.0 {
            return bad("noise sd must be non-negative".into());
        }
        Ok(())
    }

    pub fn task_duration_s(&self) -> f64 {
        self.phases.iter().map(|p| p.duration_s).sum()
    }

    /// Load level in force from each segment start: rest, then every phase.
    fn segments(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, self.rest_load_level)];
        let mut t = self.rest_duration_s;
        for p in &self.phases {
            out.push((t, p.load_level));
            t += p.duration_s;
        }
        out
    }
}

/// Noise-free WNST trajectory of one generated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTruth {
    pub subject_id: String,
    pub task_id: String,
    pub true_wnst: Vec<f64>,
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One session from `profile`, sampled every `sample_period_s`.
pub fn generate_session(
    profile: &LoadProfile,
    sample_period_s: f64,
    seed: u64,
) -> Result<(SessionRecording, SessionTruth)> {
    simulate(
        profile,
        sample_period_s,
        &mut rng_for(seed, 0),
        "subject",
        "task",
    )
}

fn simulate(
    profile: &LoadProfile,
    sample_period_s: f64,
    rng: &mut ChaCha8Rng,
    subject_id: &str,
    task_id: &str,
) -> Result<(SessionRecording, SessionTruth)> {
    profile.validate()?;
    if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "sample period {sample_period_s} must be positive"
        )));
    }
    let rest_end = profile.rest_duration_s;
    let total = rest_end + profile.task_duration_s();
    let segments = profile.segments();
    let noise = Normal::new(0.0, profile.noise_sd_c).expect("validated sd");
    let round = |x: f64| match profile.decimals {
        Some(d) => {
            let scale = 10f64.powi(d);
            (x * scale).round() / scale
        }
        None => x,
    };

    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    let mut state = profile.rest_load_level;
    let mut t_prev = 0.0;
    let mut k = 0_u64;
    loop {
        let t = k as f64 * sample_period_s;
        if t >= total {
            break;
        }
        state = advance(state, t_prev, t, &segments, profile.lag_tau_s);
        t_prev = t;
        let nasal =
            profile.forehead_c + profile.subject_baseline_nst_c - profile.nasal_gain_c * state;
        clean.push(TemperatureSample::new(t, profile.forehead_c, nasal));
        let f_noise: f64 = noise.sample(rng);
        let n_noise: f64 = noise.sample(rng);
        noisy.push(TemperatureSample::new(
            t,
            round(profile.forehead_c + f_noise),
            round(nasal + n_noise),
        ));
        k += 1;
    }

    let rest = Interval::new(0.0, rest_end)?;
    let task = Interval::new(rest_end, total)?;
    let band = TempBand::default();
    let truth_rec = SessionRecording::new(subject_id, task_id, clean, rest, task, band)?;
    let recording = SessionRecording::new(subject_id, task_id, noisy, rest, task, band)?;
    let truth = session_metrics(&truth_rec, &Config::default())?;
    Ok((
        recording,
        SessionTruth {
            subject_id: subject_id.to_owned(),
            task_id: task_id.to_owned(),
            true_wnst: truth.wnst.wnst_values().collect(),
        },
    ))
}

/// Exact first-order lag from `t0` to `t1` across segment boundaries.
fn advance(mut state: f64, t0: f64, t1: f64, segments: &[(f64, f64)], tau: f64) -> f64 {
    let mut t = t0;
    while t < t1 {
        let idx = segments
            .partition_point(|&(start, _)| start <= t)
            .saturating_sub(1);
        let level = segments[idx].1;
        let seg_end = segments.get(idx + 1).map_or(f64::INFINITY, |s| s.0);
        let step_end = seg_end.min(t1);
        state = level + (state - level) * (-(step_end - t) / tau).exp();
        t = step_end;
    }
    state
}

/// TLX target as a linear function of the pipeline features.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearRelation {
    pub intercept: f64,
    pub wmax: f64,
    pub wave: f64,
    pub wsum: f64,
    pub log_time: f64,
    /// Noise sd as a fraction of the sd of the noise-free scores.
    pub noise_rel: f64,
}

impl LinearRelation {
    pub fn coefficient(&self, p: Predictor) -> f64 {
        match p {
            Predictor::Wmax => self.wmax,
            Predictor::Wave => self.wave,
            Predictor::Wsum => self.wsum,
            Predictor::LogTime => self.log_time,
        }
    }

    fn predict(&self, row: &crate::features::FeatureRow) -> f64 {
        self.intercept
            + Predictor::ALL
                .iter()
                .map(|&p| self.coefficient(p) * row.predictor(p))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthConfig {
    pub relations: BTreeMap<Subscale, LinearRelation>,
}

impl Default for TruthConfig {
    /// Lower scores under higher load: positive weight on the WNST
    /// summaries, negative on task time.
    fn default() -> Self {
        let rel = |intercept, wmax, wave, wsum, log_time| LinearRelation {
            intercept,
            wmax,
            wave,
            wsum,
            log_time,
            noise_rel: 0.5,
        };
        TruthConfig {
            relations: BTreeMap::from([
                (Subscale::MentalDemand, rel(60.0, 12.0, 0.0, 0.0, -15.0)),
                (Subscale::OwnPerformance, rel(70.0, 0.0, 0.0, 3.0, -20.0)),
                (Subscale::Effort, rel(65.0, 0.0, 5.0, 2.0, -18.0)),
                (Subscale::Frustration, rel(55.0, 10.0, 0.0, 0.0, 0.0)),
            ]),
        }
    }
}

impl TruthConfig {
    /// The default relations with `target` replaced.
    pub fn planted(target: Subscale, relation: LinearRelation) -> Self {
        let mut t = TruthConfig::default();
        t.relations.insert(target, relation);
        t
    }

    pub fn relation(&self, s: Subscale) -> LinearRelation {
        self.relations.get(&s).copied().unwrap_or(LinearRelation {
            intercept: 50.0,
            ..LinearRelation::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_subjects: usize,
    pub tasks_per_subject: usize,
    pub sample_period_s: f64,
    pub noise_sd_c: f64,
    pub truth: TruthConfig,
}

impl Default for StudyConfig {
    /// Seven subjects with an easy and a difficult task each.
    fn default() -> Self {
        StudyConfig {
            n_subjects: 7,
            tasks_per_subject: 2,
            sample_period_s: 10.0,
            noise_sd_c: 0.05,
            truth: TruthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub truth: TruthConfig,
    pub sessions: Vec<SessionTruth>,
}

#[derive(Debug, Clone)]
pub struct SimulatedStudy {
    pub records: Vec<TaskRecord>,
    pub profiles: Vec<LoadProfile>,
    pub truth: GroundTruth,
}

struct SessionPlan {
    subject_id: String,
    task_id: String,
    difficulty: Difficulty,
    profile: LoadProfile,
}

fn plan_sessions(cfg: &StudyConfig, rng: &mut ChaCha8Rng) -> Vec<SessionPlan> {
    let mut plans = Vec::with_capacity(cfg.n_subjects * cfg.tasks_per_subject);
    let log_jitter = Normal::new(0.0, 0.2).expect("valid sd");
    for s in 0..cfg.n_subjects {
        let baseline: f64 = rng.random_range(1.0..2.5);
        let rest_load: f64 = rng.random_range(0.85..0.95);
        let gain: f64 = rng.random_range(1.1..1.7);
        let mut kinds: Vec<Difficulty> = (0..cfg.tasks_per_subject)
            .map(|j| {
                if j % 2 == 0 {
                    Difficulty::Easy
                } else {
                    Difficulty::Difficult
                }
            })
            .collect();
        // Presentation order of easy/difficult varies per subject.
        if kinds.len() >= 2 && rng.random_bool(0.5) {
            kinds.swap(0, 1);
        }
        for (j, difficulty) in kinds.into_iter().enumerate() {
            let (mean_min, load_range) = match difficulty {
                Difficulty::Easy => (6.9, 0.10..0.50),
                _ => (13.1, 0.20..0.55),
            };
            let jitter: f64 = log_jitter.sample(rng);
            let minutes = mean_min * jitter.exp();
            let base: f64 = rng.random_range(load_range);
            let mut fractions = [
                (PhaseKind::Planning, 0.2, 0.04),
                (PhaseKind::Typing, 0.5, -0.04),
                (PhaseKind::Debugging, 0.3, 0.06),
            ]
            .map(|(k, f, off): (PhaseKind, f64, f64)| (k, f * rng.random_range(0.75..1.25), off));
            let total: f64 = fractions.iter().map(|f| f.1).sum();
            for f in fractions.iter_mut() {
                f.1 /= total;
            }
            let phases = fractions
                .iter()
                .map(|&(kind, frac, offset)| Phase {
                    kind,
                    // Whole seconds keep the manifest readable.
                    duration_s: (minutes * 60.0 * frac).round().max(1.0),
                    load_level: (base + offset + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0),
                })
                .collect();
            plans.push(SessionPlan {
                subject_id: format!("S{:02}", s + 1),
                task_id: format!("T{}", j + 1),
                difficulty,
                profile: LoadProfile {
                    phases,
                    noise_sd_c: cfg.noise_sd_c,
                    subject_baseline_nst_c: baseline,
                    rest_load_level: rest_load,
                    nasal_gain_c: gain,
                    decimals: Some(3),
                    ..LoadProfile::default()
                },
            });
        }
    }
    plans
}

/// Generates a study in memory. Session `i` draws its noise from stream
/// `i + 1` of the seed, so the result is identical under any [`Exec`].
pub fn simulate_study(cfg: &StudyConfig, seed: u64, exec: Exec) -> Result<SimulatedStudy> {
    if cfg.n_subjects == 0 || cfg.tasks_per_subject == 0 {
        return Err(Error::InvalidProfile(
            "a study needs at least one subject and one task".into(),
        ));
    }
    let mut rng = rng_for(seed, 0);
    let plans = plan_sessions(cfg, &mut rng);
    let indexed: Vec<(usize, &SessionPlan)> = plans.iter().enumerate().collect();
    let sessions: Vec<(SessionRecording, SessionTruth)> = exec
        .map(&indexed, |&(i, plan)| {
            simulate(
                &plan.profile,
                cfg.sample_period_s,
                &mut rng_for(seed, i as u64 + 1),
                &plan.subject_id,
                &plan.task_id,
            )
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let placeholder = TlxResponse {
        mental_demand: 50.0,
        own_performance: 50.0,
        effort: 50.0,
        frustration: 50.0,
    };
    let mut records: Vec<TaskRecord> = plans
        .iter()
        .zip(&sessions)
        .map(|(plan, (rec, _))| TaskRecord {
            subject_id: plan.subject_id.clone(),
            task_id: plan.task_id.clone(),
            difficulty: plan.difficulty,
            task_time_min: plan.profile.task_duration_s() / 60.0,
            recording: rec.clone(),
            tlx: placeholder,
        })
        .collect();

    let table = build_features(&records, &Config::default(), exec)?;
    for s in Subscale::ALL {
        let rel = cfg.truth.relation(s);
        let clean: Vec<f64> = table.rows.iter().map(|r| rel.predict(r)).collect();
        let sd = if clean.len() > 1 {
            sample_sd(&clean)
        } else {
            0.0
        };
        let noise = Normal::new(0.0, rel.noise_rel.abs() * sd)
            .map_err(|e| Error::InvalidProfile(format!("bad noise for {s}: {e}")))?;
        for (rec, y) in records.iter_mut().zip(clean) {
            let e: f64 = noise.sample(&mut rng);
            rec.tlx.set(s, (y + e).clamp(0.0, 100.0));
        }
    }

    Ok(SimulatedStudy {
        records,
        profiles: plans.into_iter().map(|p| p.profile).collect(),
        truth: GroundTruth {
            seed,
            truth: cfg.truth.clone(),
            sessions: sessions.into_iter().map(|(_, t)| t).collect(),
        },
    })
}

impl SimulatedStudy {
    pub fn feature_table(&self, config: &Config, exec: Exec) -> Result<FeatureTable> {
        build_features(&self.records, config, exec)
    }
}

/// Paths written by [`write_study`].
#[derive(Debug, Clone)]
pub struct StudyFiles {
    pub manifest: PathBuf,
    pub truth: PathBuf,
    pub samples: Vec<PathBuf>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRUTH_FILE: &str = "truth.json";

/// Writes `manifest.json`, `truth.json`, and one CSV per session under
/// `out_dir/samples/`.
pub fn write_study(study: &SimulatedStudy, out_dir: &Path) -> Result<StudyFiles> {
    let sample_dir = out_dir.join("samples");
    std::fs::create_dir_all(&sample_dir).map_err(|e| Error::io(&sample_dir, e))?;
    let mut sessions = Vec::with_capacity(study.records.len());
    let mut samples = Vec::with_capacity(study.records.len());
    for rec in &study.records {
        let rel = PathBuf::from("samples").join(format!("{}_{}.csv", rec.subject_id, rec.task_id));
        let path = out_dir.join(&rel);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_samples_csv(std::io::BufWriter::new(file), rec.recording.samples())?;
        sessions.push(ManifestEntry {
            subject_id: rec.subject_id.clone(),
            task_id: rec.task_id.clone(),
            difficulty: rec.difficulty,
            task_time_min: rec.task_time_min,
            samples_csv: rel,
            rest_interval_s: rec.recording.rest_interval().into(),
            task_interval_s: rec.recording.task_interval().into(),
            tlx: rec.tlx,
        });
        samples.push(path);
    }
    let manifest = out_dir.join(MANIFEST_FILE);
    Manifest { sessions }.write(&manifest)?;
    let truth = out_dir.join(TRUTH_FILE);
    let mut text = serde_json::to_string_pretty(&study.truth)?;
    text.push('\n');
    std::fs::write(&truth, text).map_err(|e| Error::io(&truth, e))?;
    Ok(StudyFiles {
        manifest,
        truth,
        samples,
    })
}

/// [`simulate_study`] followed by [`write_study`].
pub fn generate_study(
    cfg: &StudyConfig,
    seed: u64,
    out_dir: &Path,
    exec: Exec,
) -> Result<StudyFiles> {
    write_study(&simulate_study(cfg, seed, exec)?, out_dir)
}
