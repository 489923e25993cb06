//! WNST and the three per-task summaries built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::NstSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WnstPoint {
    pub window_end_s: f64,
    pub wnst_c: f64,
}

/// Task-window NST relative to the rest baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WnstSeries {
    pub values: Vec<WnstPoint>,
    pub rest_nst_c: f64,
}

impl WnstSeries {
    pub fn wnst_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|p| p.wnst_c)
    }
}

/// `wsum` is in °C·windows, so it grows with task duration; `n_windows` is
/// kept alongside to make that visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub wmax: f64,
    pub wave: f64,
    pub wsum: f64,
    pub n_windows: usize,
}

pub fn wnst_series(nst: &NstSeries, rest_nst_c: f64) -> Result<WnstSeries> {
    if nst.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !rest_nst_c.is_finite() {
        return Err(Error::InvalidSample {
            row: None,
            reason: format!("rest NST {rest_nst_c} is not finite"),
        });
    }
    Ok(WnstSeries {
        values: nst
            .values
            .iter()
            .map(|w| WnstPoint {
                window_end_s: w.window_end_s,
                wnst_c: w.nst_c - rest_nst_c,
            })
            .collect(),
        rest_nst_c,
    })
}

pub fn summarize(w: &WnstSeries) -> Result<MetricSet> {
    let n = w.values.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    let wmax = w.wnst_values().fold(f64::NEG_INFINITY, f64::max);
    let wsum: f64 = w.wnst_values().sum();
    Ok(MetricSet {
        wmax,
        wave: wsum / n as f64,
        wsum,
        n_windows: n,
    })
}
