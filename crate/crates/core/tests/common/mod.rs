#![allow(dead_code)]

use std::collections::BTreeMap;

use num::{BigInt, BigRational, Float, One, ToPrimitive, Zero};

use nstload::config::TempBand;
use nstload::features::{Predictor, Subscale};
use nstload::regress::{CandidateMode, FittedModel, ModelCell, ModelReport};
use nstload::signal::{Interval, SessionRecording, TemperatureSample};
use nstload::synth::{LinearRelation, TruthConfig};
use nstload::Config;

/// (forehead, nasal) per task window.
pub const WORKED: [(f64, f64); 4] = [(32.2, 34.9), (32.1, 34.7), (32.3, 34.8), (32.1, 34.7)];

/// One rest reading with NST 1.5, then one task reading per window.
pub fn worked_recording() -> SessionRecording {
    let mut samples = vec![TemperatureSample::new(0.0, 33.0, 34.5)];
    for (i, &(f, n)) in WORKED.iter().enumerate() {
        samples.push(TemperatureSample::new(240.0 + 120.0 * i as f64, f, n));
    }
    SessionRecording::new(
        "s1",
        "task",
        samples,
        Interval::new(0.0, 180.0).unwrap(),
        Interval::new(180.0, 660.0).unwrap(),
        TempBand::default(),
    )
    .unwrap()
}

/// Target with y = 50 + 0.5 wmax - 0.8 log_time and noise sd at 5% of the
/// clean sd.
pub const PLANTED_TARGET: Subscale = Subscale::MentalDemand;

pub fn planted_truth() -> TruthConfig {
    TruthConfig::planted(
        PLANTED_TARGET,
        LinearRelation {
            intercept: 50.0,
            wmax: 0.5,
            log_time: -0.8,
            noise_rel: 0.05,
            ..LinearRelation::default()
        },
    )
}

fn cell(target: Subscale, mode: CandidateMode, adj_r2: f64, std: &[(Predictor, f64)]) -> ModelCell {
    let std: BTreeMap<Predictor, f64> = std.iter().copied().collect();
    ModelCell::Fitted(FittedModel {
        target,
        mode,
        selected: std.keys().copied().collect(),
        intercept: 0.0,
        coefficients: std.clone(),
        std_coefficients: std.clone(),
        r2: adj_r2,
        adj_r2,
        n: 14,
        tolerances: std.keys().map(|&k| (k, 1.0)).collect(),
    })
}

/// A report with fixed reference values in every cell.
pub fn reference_report() -> ModelReport {
    use CandidateMode::*;
    use Predictor::*;
    use Subscale::*;
    let mut models: Vec<ModelCell> = [
        (MentalDemand, 0.20, -0.48),
        (OwnPerformance, -0.06, -0.08),
        (Effort, 0.30, -0.58),
        (Frustration, 0.01, -0.32),
    ]
    .iter()
    .map(|&(t, a, b)| cell(t, TimeOnly, a, &[(LogTime, b)]))
    .collect();
    models.extend([
        cell(
            MentalDemand,
            BiometricFull,
            0.27,
            &[(Wmax, 0.46), (LogTime, -0.80)],
        ),
        cell(
            OwnPerformance,
            BiometricFull,
            0.64,
            &[(Wave, -1.10), (Wsum, 1.22), (LogTime, -0.67)],
        ),
        cell(
            Effort,
            BiometricFull,
            0.56,
            &[(Wave, 0.31), (Wsum, 0.63), (LogTime, -1.25)],
        ),
        cell(
            Frustration,
            BiometricFull,
            0.43,
            &[(Wmax, 0.68), (Wave, -1.32)],
        ),
    ]);
    ModelReport {
        models,
        config: Config::default(),
    }
}

/// Cells of the text row whose label starts the line.
pub fn text_row<'a>(text: &'a str, label: &str) -> Vec<&'a str> {
    let line = text
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no row {label:?} in\n{text}"));
    line[label.len()..].split_whitespace().collect()
}

/// Exact OLS by the normal equations.
///
/// Every column is scaled by a power of two to integers, the normal
/// equations are solved by Cramer's rule with fraction-free (Bareiss)
/// determinants, and only the final ratios become rationals. R² and
/// standardized coefficients are invariant to the column scaling.
#[derive(Debug, Clone)]
pub struct ExactFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub std_coefficients: Vec<f64>,
}

/// Integer column `ints` with `value = ints / 2^shift`.
struct Scaled {
    ints: Vec<BigInt>,
    shift: i64,
}

fn scaled(v: &[f64]) -> Scaled {
    let parts: Vec<(i64, i64)> = v
        .iter()
        .map(|&x| {
            let (mantissa, exp, sign) = x.integer_decode();
            (i64::from(sign) * mantissa as i64, i64::from(exp))
        })
        .collect();
    let shift = parts
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| -e)
        .max()
        .unwrap_or(0)
        .max(0);
    let ints = parts
        .iter()
        .map(|&(m, e)| BigInt::from(m) << ((e + shift) as usize))
        .collect();
    Scaled { ints, shift }
}

fn det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let k = m.len();
    let mut negate = false;
    let mut prev = BigInt::one();
    for c in 0..k {
        let Some(p) = (c..k).find(|&r| !m[r][c].is_zero()) else {
            return BigInt::zero();
        };
        if p != c {
            m.swap(p, c);
            negate = !negate;
        }
        for r in c + 1..k {
            for j in c + 1..k {
                m[r][j] = (&m[r][j] * &m[c][c] - &m[r][c] * &m[c][j]) / &prev;
            }
        }
        prev = m[c][c].clone();
    }
    let d = m[k - 1][k - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// n * sum of squared deviations, an integer.
fn n_ssd(v: &[BigInt]) -> BigInt {
    let n = BigInt::from(v.len());
    let sum: BigInt = v.iter().sum();
    let sq: BigInt = v.iter().map(|x| x * x).sum();
    n * sq - &sum * &sum
}

struct Solution {
    /// Coefficients on the integer scale: intercept first, `numer[j] / den`.
    numer: Vec<BigInt>,
    den: BigInt,
    one_minus_r2: BigRational,
}

fn solve_exact(x: &[&[BigInt]], y: &[BigInt]) -> Option<Solution> {
    let n = y.len();
    let k = x.len() + 1;
    let z = |i: usize, j: usize| -> BigInt {
        if j == 0 {
            BigInt::one()
        } else {
            x[j - 1][i].clone()
        }
    };
    let mut a = vec![vec![BigInt::zero(); k]; k];
    let mut c = vec![BigInt::zero(); k];
    for i in 0..n {
        for r in 0..k {
            let zr = z(i, r);
            c[r] += &zr * &y[i];
            for s in 0..k {
                a[r][s] += &zr * z(i, s);
            }
        }
    }
    let den = det(a.clone());
    if den.is_zero() {
        return None;
    }
    let numer: Vec<BigInt> = (0..k)
        .map(|j| {
            let mut m = a.clone();
            for r in 0..k {
                m[r][j] = c[r].clone();
            }
            det(m)
        })
        .collect();
    let ssr_numer: BigInt = (0..n)
        .map(|i| {
            let fit: BigInt = (0..k).map(|j| z(i, j) * &numer[j]).sum();
            let e = &y[i] * &den - fit;
            &e * &e
        })
        .sum();
    let one_minus_r2 = BigRational::new(BigInt::from(n) * ssr_numer, &den * &den * n_ssd(y));
    Some(Solution {
        numer,
        den,
        one_minus_r2,
    })
}

fn f(v: &BigRational) -> f64 {
    v.to_f64().expect("representable")
}

fn pow2(shift: i64) -> BigRational {
    let one = BigInt::one();
    if shift >= 0 {
        BigRational::from_integer(one << shift as usize)
    } else {
        BigRational::new(one, BigInt::one() << (-shift) as usize)
    }
}

pub fn exact_ols(x: &[Vec<f64>], y: &[f64]) -> Option<ExactFit> {
    let xs: Vec<Scaled> = x.iter().map(|c| scaled(c)).collect();
    let ys = scaled(y);
    let cols: Vec<&[BigInt]> = xs.iter().map(|s| s.ints.as_slice()).collect();
    let sol = solve_exact(&cols, &ys.ints)?;
    let n = y.len() as i64;
    let p = x.len() as i64;
    let one = BigRational::one();
    let adj = &one - &sol.one_minus_r2 * BigRational::new((n - 1).into(), (n - p - 1).into());
    let beta = |j: usize| BigRational::new(sol.numer[j].clone(), sol.den.clone());
    let syy = n_ssd(&ys.ints);
    let coefficients = (0..x.len())
        .map(|j| f(&(beta(j + 1) * pow2(xs[j].shift - ys.shift))))
        .collect();
    let std_coefficients = (0..x.len())
        .map(|j| f(&beta(j + 1)) * f(&BigRational::new(n_ssd(&xs[j].ints), syy.clone())).sqrt())
        .collect();
    Some(ExactFit {
        intercept: f(&(beta(0) * pow2(-ys.shift))),
        coefficients,
        r2: f(&(&one - &sol.one_minus_r2)),
        adj_r2: f(&adj),
        std_coefficients,
    })
}

/// 1 - R² of `candidate` regressed on `selected`, computed exactly.
pub fn exact_tolerance(candidate: &[f64], selected: &[Vec<f64>]) -> f64 {
    if selected.is_empty() {
        return 1.0;
    }
    let xs: Vec<Scaled> = selected.iter().map(|c| scaled(c)).collect();
    let cols: Vec<&[BigInt]> = xs.iter().map(|s| s.ints.as_slice()).collect();
    let sol =
        solve_exact(&cols, &scaled(candidate).ints).expect("selected columns are independent");
    f(&sol.one_minus_r2)
}

pub fn rel_close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1e-6)
}
