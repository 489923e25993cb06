//! Least-squares fitting, tolerance screening, and stepwise selection of
//! TLX models from the feature table.

mod linalg;
pub mod report;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{Config, Selection};
use crate::error::{Error, Result};
use crate::features::{FeatureTable, Predictor, Subscale};

pub use report::{build_report, ModelCell, ModelReport};

/// A named design column borrowed from the caller.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

impl<'a> Column<'a> {
    pub fn new(name: &'a str, values: &'a [f64]) -> Self {
        Column { name, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r2: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = mean(v);
    v.iter().map(|x| x - m).collect()
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(v: &[f64]) -> f64 {
    let ss: f64 = centered(v).iter().map(|x| x * x).sum();
    (ss / (v.len() as f64 - 1.0)).sqrt()
}

/// Ordinary least squares with an intercept.
///
/// Columns and target are centered (which projects out the intercept) and
/// the slopes come from a Householder QR of the centered design. The
/// intercept is recovered from the means afterwards.
pub fn fit_ols(x: &[Column<'_>], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    let p = x.len();
    if n < p + 2 {
        return Err(Error::InsufficientData(format!(
            "{p} predictor(s) need at least {} rows, got {n}",
            p + 2
        )));
    }
    for c in x {
        if c.values.len() != n {
            return Err(Error::InvalidConfig(format!(
                "column {} has {} rows, target has {n}",
                c.name,
                c.values.len()
            )));
        }
        if c.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "column {} has non-finite values",
                c.name
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("target has non-finite values".into()));
    }

    let yc = centered(y);
    let ss_tot: f64 = yc.iter().map(|v| v * v).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateTarget("response".into()));
    }

    let xc: Vec<Vec<f64>> = x.iter().map(|c| centered(c.values)).collect();
    let coefficients = linalg::lstsq(&xc, &yc).map_err(|j| {
        let mut columns: Vec<String> = x[..j].iter().map(|c| c.name.to_owned()).collect();
        if columns.is_empty() {
            columns.push("intercept".into());
        }
        columns.push(x[j].name.to_owned());
        Error::SingularDesign { columns }
    })?;

    let intercept = mean(y)
        - x.iter()
            .zip(&coefficients)
            .map(|(c, b)| b * mean(c.values))
            .sum::<f64>();
    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            let fitted: f64 = x
                .iter()
                .zip(&coefficients)
                .map(|(c, b)| b * c.values[i])
                .sum();
            y[i] - intercept - fitted
        })
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();

    Ok(OlsFit {
        intercept,
        coefficients,
        residuals,
        r2: 1.0 - ss_res / ss_tot,
    })
}

/// `1 − (1 − r²)(n − 1)/(n − p − 1)`.
pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> Result<f64> {
    if n <= p + 1 {
        return Err(Error::UndefinedAdjustment { n, p });
    }
    Ok(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64)
}

/// `b_j · s(x_j) / s(y)` with sample standard deviations.
pub fn standardized_coefficients(
    coefficients: &[f64],
    x: &[Column<'_>],
    y: &[f64],
) -> Result<Vec<f64>> {
    let sy = sample_sd(y);
    if sy.is_nan() || sy <= 0.0 {
        return Err(Error::DegenerateTarget("response".into()));
    }
    coefficients
        .iter()
        .zip(x)
        .map(|(b, c)| {
            let sx = sample_sd(c.values);
            if sx.is_nan() || sx <= 0.0 {
                return Err(Error::DegenerateColumn(c.name.to_owned()));
            }
            Ok(b * sx / sy)
        })
        .collect()
}

/// `1 − R²` of `candidate` regressed on `selected`; 1 when nothing is selected.
pub fn tolerance(candidate: Column<'_>, selected: &[Column<'_>]) -> Result<f64> {
    if selected.is_empty() {
        return Ok(1.0);
    }
    let fit = fit_ols(selected, candidate.values).map_err(|e| match e {
        Error::DegenerateTarget(_) => Error::DegenerateColumn(candidate.name.to_owned()),
        other => other,
    })?;
    Ok((1.0 - fit.r2).clamp(0.0, 1.0))
}

/// Candidate families: the time-only benchmark and the full biometric set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    TimeOnly,
    BiometricFull,
}

impl CandidateMode {
    pub const ALL: [CandidateMode; 2] = [CandidateMode::TimeOnly, CandidateMode::BiometricFull];

    pub fn predictors(self) -> &'static [Predictor] {
        match self {
            CandidateMode::TimeOnly => &[Predictor::LogTime],
            CandidateMode::BiometricFull => &Predictor::ALL,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CandidateMode::TimeOnly => "Time",
            CandidateMode::BiometricFull => "Time, WMAX, WAVE, and WSUM",
        }
    }
}

impl fmt::Display for CandidateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateMode::TimeOnly => "time_only",
            CandidateMode::BiometricFull => "biometric_full",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub target: Subscale,
    pub mode: CandidateMode,
    /// In order of admission.
    pub selected: Vec<Predictor>,
    pub intercept: f64,
    pub coefficients: BTreeMap<Predictor, f64>,
    pub std_coefficients: BTreeMap<Predictor, f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
    /// Tolerance of each selected variable at the moment it was admitted.
    pub tolerances: BTreeMap<Predictor, f64>,
}

impl FittedModel {
    pub fn contains(&self, p: Predictor) -> bool {
        self.selected.contains(&p)
    }
}

/// Forward selection on adjusted R² with tolerance screening.
///
/// Each step adds the admissible candidate (tolerance against the current
/// set ≥ the configured threshold) that yields the highest adjusted R²;
/// ties go to the earlier candidate. Selection stops when the best gain
/// does not exceed `min_improvement`. With [`Selection::ForwardBackward`],
/// every addition is followed by removals while a removal raises adjusted
/// R² by more than `min_improvement`.
pub fn stepwise_fit(
    table: &FeatureTable,
    target: Subscale,
    mode: CandidateMode,
    config: &Config,
) -> Result<FittedModel> {
    let columns: Vec<(Predictor, Vec<f64>)> = mode
        .predictors()
        .iter()
        .map(|&p| (p, table.column(p)))
        .collect();
    stepwise_columns(target, mode, &columns, &table.target(target), config)
}

/// [`stepwise_fit`] over explicit candidate columns, in tie-breaking order.
pub fn stepwise_columns(
    target: Subscale,
    mode: CandidateMode,
    candidates: &[(Predictor, Vec<f64>)],
    y: &[f64],
    config: &Config,
) -> Result<FittedModel> {
    config.validate()?;
    let n = y.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "model fitting needs n >= 3 rows, got {n}"
        )));
    }
    if sample_sd(y) == 0.0 || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateTarget(target.key().into()));
    }
    let threshold = config.effective_tolerance();
    let col = |i: usize| Column::new(candidates[i].0.key(), &candidates[i].1);

    let adj_of = |set: &[usize]| -> Option<f64> {
        if set.is_empty() {
            return Some(0.0);
        }
        let cols: Vec<Column> = set.iter().map(|&i| col(i)).collect();
        let fit = fit_ols(&cols, y).ok()?;
        adjusted_r2(fit.r2, n, set.len()).ok()
    };

    let mut selected: Vec<usize> = Vec::new();
    let mut admitted_tol: BTreeMap<usize, f64> = BTreeMap::new();
    let mut current = 0.0;

    loop {
        let sel_cols: Vec<Column> = selected.iter().map(|&i| col(i)).collect();
        let mut best: Option<(usize, f64, f64)> = None;
        for i in (0..candidates.len()).filter(|i| !selected.contains(i)) {
            let Ok(tol) = tolerance(col(i), &sel_cols) else {
                continue;
            };
            if tol < threshold {
                continue;
            }
            let mut trial = selected.clone();
            trial.push(i);
            let Some(adj) = adj_of(&trial) else {
                continue;
            };
            if best.is_none_or(|(_, b, _)| adj > b) {
                best = Some((i, adj, tol));
            }
        }
        let Some((i, adj, tol)) = best else { break };
        if adj - current <= config.min_improvement {
            break;
        }
        selected.push(i);
        admitted_tol.insert(i, tol);
        current = adj;

        if config.selection == Selection::ForwardBackward {
            loop {
                let mut best_drop: Option<(usize, f64)> = None;
                for pos in 0..selected.len() {
                    let mut trial = selected.clone();
                    trial.remove(pos);
                    let Some(adj) = adj_of(&trial) else { continue };
                    if best_drop.is_none_or(|(_, b)| adj > b) {
                        best_drop = Some((pos, adj));
                    }
                }
                match best_drop {
                    Some((pos, adj)) if adj - current > config.min_improvement => {
                        let dropped = selected.remove(pos);
                        admitted_tol.remove(&dropped);
                        current = adj;
                    }
                    _ => break,
                }
            }
        }
    }

    let sel_cols: Vec<Column> = selected.iter().map(|&i| col(i)).collect();
    let fit = fit_ols(&sel_cols, y)?;
    let std = standardized_coefficients(&fit.coefficients, &sel_cols, y)?;
    let adj_r2 = if selected.is_empty() {
        0.0
    } else {
        adjusted_r2(fit.r2, n, selected.len())?
    };
    let names: Vec<Predictor> = selected.iter().map(|&i| candidates[i].0).collect();
    Ok(FittedModel {
        target,
        mode,
        selected: names.clone(),
        intercept: fit.intercept,
        coefficients: names.iter().copied().zip(fit.coefficients).collect(),
        std_coefficients: names.iter().copied().zip(std).collect(),
        r2: if selected.is_empty() { 0.0 } else { fit.r2 },
        adj_r2,
        n,
        tolerances: selected
            .iter()
            .map(|i| (candidates[*i].0, admitted_tol[i]))
            .collect(),
    })
}
