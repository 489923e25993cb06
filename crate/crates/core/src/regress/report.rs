//! The 4 targets × 2 candidate-family model grid and its renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{stepwise_fit, CandidateMode, FittedModel};
use crate::config::{Config, Selection};
use crate::error::{Error, Result};
use crate::features::{FeatureTable, Predictor, Subscale};
use crate::par::Exec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub target: Subscale,
    pub mode: CandidateMode,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelCell {
    Fitted(FittedModel),
    Failed(FailedCell),
}

impl ModelCell {
    pub fn target(&self) -> Subscale {
        match self {
            ModelCell::Fitted(m) => m.target,
            ModelCell::Failed(f) => f.target,
        }
    }

    pub fn mode(&self) -> CandidateMode {
        match self {
            ModelCell::Fitted(m) => m.mode,
            ModelCell::Failed(f) => f.mode,
        }
    }

    pub fn fitted(&self) -> Option<&FittedModel> {
        match self {
            ModelCell::Fitted(m) => Some(m),
            ModelCell::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    /// Time-only cells first, then the full candidate set; targets in
    /// [`Subscale::ALL`] order within each.
    pub models: Vec<ModelCell>,
    pub config: Config,
}

/// Fits every (target, candidate family) cell. A failing cell is recorded
/// as failed and the rest are still produced.
pub fn build_report(table: &FeatureTable, config: &Config, exec: Exec) -> Result<ModelReport> {
    config.validate()?;
    if table.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "model fitting needs n >= 3 rows, got {}",
            table.len()
        )));
    }
    let cells: Vec<(CandidateMode, Subscale)> = CandidateMode::ALL
        .iter()
        .flat_map(|&m| Subscale::ALL.iter().map(move |&t| (m, t)))
        .collect();
    let models = exec.map(&cells, |&(mode, target)| {
        match stepwise_fit(table, target, mode, config) {
            Ok(m) => ModelCell::Fitted(m),
            Err(e) => ModelCell::Failed(FailedCell {
                target,
                mode,
                error: e.to_string(),
            }),
        }
    });
    Ok(ModelReport {
        models,
        config: config.clone(),
    })
}

impl ModelReport {
    pub fn cell(&self, target: Subscale, mode: CandidateMode) -> Option<&ModelCell> {
        self.models
            .iter()
            .find(|c| c.target() == target && c.mode() == mode)
    }

    pub fn model(&self, target: Subscale, mode: CandidateMode) -> Option<&FittedModel> {
        self.cell(target, mode).and_then(ModelCell::fitted)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Adjusted-R² grid and standardized-coefficient grids as aligned text,
    /// two decimals per cell, `-` for variables left out of a model.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let headers: Vec<&str> = Subscale::ALL.iter().map(|s| s.label()).collect();

        out.push_str("Adjusted R^2 of each model\n");
        let rows: Vec<(String, Vec<String>)> = CandidateMode::ALL
            .iter()
            .map(|&mode| {
                let cells = Subscale::ALL
                    .iter()
                    .map(|&t| match self.cell(t, mode) {
                        Some(ModelCell::Fitted(m)) => fmt2(m.adj_r2),
                        Some(ModelCell::Failed(_)) => "failed".to_owned(),
                        None => "?".to_owned(),
                    })
                    .collect();
                (mode.label().to_owned(), cells)
            })
            .collect();
        write_grid(
            &mut out,
            "Candidates of independent variables",
            &headers,
            &rows,
        );

        for mode in [CandidateMode::BiometricFull, CandidateMode::TimeOnly] {
            let _ = writeln!(
                out,
                "\nStandardized partial regression coefficients ({})",
                mode.label()
            );
            let rows: Vec<(String, Vec<String>)> = Predictor::ALL
                .iter()
                .filter(|p| mode.predictors().contains(p))
                .map(|&p| {
                    let cells = Subscale::ALL
                        .iter()
                        .map(|&t| match self.cell(t, mode) {
                            Some(ModelCell::Fitted(m)) => m
                                .std_coefficients
                                .get(&p)
                                .map_or_else(|| "-".to_owned(), |v| fmt2(*v)),
                            Some(ModelCell::Failed(_)) => "failed".to_owned(),
                            None => "?".to_owned(),
                        })
                        .collect();
                    (p.label().to_owned(), cells)
                })
                .collect();
            write_grid(&mut out, "Independent variable", &headers, &rows);
        }

        out.push('\n');
        for note in self.footnotes() {
            let _ = writeln!(out, "{note}");
        }
        out
    }

    fn footnotes(&self) -> Vec<String> {
        let cfg = &self.config;
        let n = self.models.iter().find_map(|c| c.fitted().map(|m| m.n));
        let mut notes = vec![
            "\"-\": variable not included in the model.".to_owned(),
            format!(
                "Selection: {} on adjusted R^2 (min improvement {}); time enters as ln(minutes){}.",
                match cfg.selection {
                    Selection::Forward => "forward stepwise",
                    Selection::ForwardBackward => "forward-backward stepwise",
                },
                cfg.min_improvement,
                n.map(|n| format!("; n = {n}")).unwrap_or_default(),
            ),
        ];
        if cfg.paper_literal_tolerance {
            notes.push(
                "Tolerance rule applied literally (threshold 1.0): a candidate is admitted only if \
                 it is uncorrelated with every selected variable, so correlated metrics never enter \
                 together."
                    .to_owned(),
            );
        } else {
            notes.push(format!(
                "Tolerance threshold {}: candidates with 1 - R^2 against the selected set below this \
                 were not admitted. The literal reading of the rule (threshold 1.0) is available \
                 with --paper-literal-tolerance.",
                cfg.tolerance_threshold
            ));
        }
        for c in &self.models {
            if let ModelCell::Failed(f) = c {
                notes.push(format!(
                    "Failed cell {} / {}: {}",
                    f.target.label(),
                    f.mode,
                    f.error
                ));
            }
        }
        notes
    }
}

/// Two decimals; never prints a negative zero.
pub fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_owned()
    } else {
        s
    }
}

fn write_grid(out: &mut String, corner: &str, headers: &[&str], rows: &[(String, Vec<String>)]) {
    let first = rows
        .iter()
        .map(|(l, _)| l.len())
        .chain([corner.len()])
        .max()
        .unwrap_or(0);
    let widths: Vec<usize> = headers
        .iter()
        .enumerate()
        .map(|(j, h)| {
            rows.iter()
                .map(|(_, c)| c[j].len())
                .chain([h.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let _ = write!(out, "{corner:<first$}");
    for (h, w) in headers.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for (label, cells) in rows {
        let _ = write!(out, "{label:<first$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn model(
        target: Subscale,
        mode: CandidateMode,
        adj_r2: f64,
        std: &[(Predictor, f64)],
    ) -> ModelCell {
        let std: BTreeMap<Predictor, f64> = std.iter().copied().collect();
        ModelCell::Fitted(FittedModel {
            target,
            mode,
            selected: std.keys().copied().collect(),
            intercept: 50.0,
            coefficients: std.clone(),
            std_coefficients: std.clone(),
            r2: adj_r2.max(0.0) + 0.05,
            adj_r2,
            n: 14,
            tolerances: std.keys().map(|&k| (k, 1.0)).collect(),
        })
    }

    /// Reference grid: adjusted R² per family and the full-family
    /// standardized coefficients.
    fn reference_fixture() -> ModelReport {
        use CandidateMode::*;
        use Predictor::*;
        use Subscale::*;
        let time_only = [
            (MentalDemand, 0.20),
            (OwnPerformance, -0.06),
            (Effort, 0.30),
            (Frustration, 0.01),
        ];
        let mut models: Vec<ModelCell> = time_only
            .iter()
            .map(|&(t, a)| model(t, TimeOnly, a, &[(LogTime, -0.5)]))
            .collect();
        models.push(model(
            MentalDemand,
            BiometricFull,
            0.27,
            &[(Wmax, 0.46), (LogTime, -0.80)],
        ));
        models.push(model(
            OwnPerformance,
            BiometricFull,
            0.64,
            &[(Wave, -1.10), (Wsum, 1.22), (LogTime, -0.67)],
        ));
        models.push(model(
            Effort,
            BiometricFull,
            0.56,
            &[(Wave, 0.31), (Wsum, 0.63), (LogTime, -1.25)],
        ));
        models.push(model(
            Frustration,
            BiometricFull,
            0.43,
            &[(Wmax, 0.68), (Wave, -1.32)],
        ));
        ModelReport {
            models,
            config: Config::default(),
        }
    }

    fn row<'a>(text: &'a str, label: &str) -> Vec<&'a str> {
        let line = text
            .lines()
            .find(|l| l.starts_with(label) && !l.starts_with(&format!("{label},")))
            .unwrap_or_else(|| panic!("no row {label} in\n{text}"));
        line[label.len()..].split_whitespace().collect()
    }

    #[test]
    fn renders_reference_adjusted_r2_cells() {
        let text = reference_fixture().render_text();
        assert_eq!(row(&text, "Time "), ["0.20", "-0.06", "0.30", "0.01"]);
        assert_eq!(
            row(&text, "Time, WMAX, WAVE, and WSUM"),
            ["0.27", "0.64", "0.56", "0.43"]
        );
    }

    #[test]
    fn renders_exclusions_as_dash() {
        let text = reference_fixture().render_text();
        let full = text
            .split("Standardized partial regression coefficients (Time, WMAX")
            .nth(1)
            .unwrap();
        assert_eq!(row(full, "WMAX"), ["0.46", "-", "-", "0.68"]);
        assert_eq!(row(full, "WAVE"), ["-", "-1.10", "0.31", "-1.32"]);
        assert_eq!(row(full, "WSUM"), ["-", "1.22", "0.63", "-"]);
        assert_eq!(row(full, "Time"), ["-0.80", "-0.67", "-1.25", "-"]);
    }

    #[test]
    fn json_round_trip() {
        let mut rep = reference_fixture();
        rep.models.push(ModelCell::Failed(FailedCell {
            target: Subscale::Effort,
            mode: CandidateMode::TimeOnly,
            error: "boom".into(),
        }));
        let back = ModelReport::from_json(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn json_schema_field_names() {
        let v: serde_json::Value =
            serde_json::from_str(&reference_fixture().to_json().unwrap()).unwrap();
        let m = &v["models"][0];
        for key in [
            "target",
            "mode",
            "selected",
            "intercept",
            "coefficients",
            "std_coefficients",
            "r2",
            "adj_r2",
            "n",
            "tolerances",
        ] {
            assert!(m.get(key).is_some(), "missing {key}");
        }
        assert_eq!(m["mode"], "time_only");
        assert_eq!(m["selected"][0], "log_time");
        assert!(v["config"].is_object());
    }

    #[test]
    fn fmt2_handles_signs() {
        assert_eq!(fmt2(-0.06), "-0.06");
        assert_eq!(fmt2(-0.001), "0.00");
        assert_eq!(fmt2(0.245), "0.24");
        assert_eq!(fmt2(1.0), "1.00");
    }
}
