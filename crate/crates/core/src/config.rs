use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Window length used for the WNST grid: one value every two minutes.
pub const DEFAULT_WINDOW_SECS: f64 = 120.0;
/// Pre-task rest duration in seconds.
pub const DEFAULT_REST_SECS: f64 = 180.0;
pub const DEFAULT_TOLERANCE_THRESHOLD: f64 = 0.1;
/// Threshold used when the tolerance rule is applied literally ("below 1.0
/// is rejected"). Exact 1.0 would reject even orthogonal candidates that
/// pick up rounding noise.
pub const LITERAL_TOLERANCE_THRESHOLD: f64 = 1.0 - 1e-9;

/// How the rest interval is collapsed to a single baseline NST.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestAggregation {
    #[default]
    Mean,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    Forward,
    ForwardBackward,
}

/// Plausible skin-temperature range in °C; readings outside are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempBand {
    pub low: f64,
    pub high: f64,
}

impl Default for TempBand {
    fn default() -> Self {
        TempBand {
            low: 20.0,
            high: 45.0,
        }
    }
}

impl TempBand {
    pub fn contains(&self, celsius: f64) -> bool {
        celsius >= self.low && celsius <= self.high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub window_len_s: f64,
    pub rest_agg: RestAggregation,
    pub tolerance_threshold: f64,
    pub paper_literal_tolerance: bool,
    pub selection: Selection,
    pub min_improvement: f64,
    pub temp_band: TempBand,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            window_len_s: DEFAULT_WINDOW_SECS,
            rest_agg: RestAggregation::Mean,
            tolerance_threshold: DEFAULT_TOLERANCE_THRESHOLD,
            paper_literal_tolerance: false,
            selection: Selection::Forward,
            min_improvement: 0.0,
            temp_band: TempBand::default(),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_len_s.is_finite() && self.window_len_s > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "window length must be positive, got {}",
                self.window_len_s
            )));
        }
        if !(self.tolerance_threshold.is_finite()
            && (0.0..=1.0).contains(&self.tolerance_threshold))
        {
            return Err(Error::InvalidConfig(format!(
                "tolerance threshold must lie in [0, 1], got {}",
                self.tolerance_threshold
            )));
        }
        if !(self.min_improvement.is_finite() && self.min_improvement >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "min improvement must be non-negative, got {}",
                self.min_improvement
            )));
        }
        let band = self.temp_band;
        if !(band.low.is_finite() && band.high.is_finite() && band.low < band.high) {
            return Err(Error::InvalidConfig(format!(
                "temperature band [{}, {}] must satisfy low < high",
                band.low, band.high
            )));
        }
        Ok(())
    }

    /// The admission threshold actually applied during selection.
    pub fn effective_tolerance(&self) -> f64 {
        if self.paper_literal_tolerance {
            LITERAL_TOLERANCE_THRESHOLD
        } else {
            self.tolerance_threshold
        }
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
        assert_eq!(Config::default().effective_tolerance(), 0.1);
    }

    #[test]
    fn literal_mode_overrides_threshold() {
        let cfg = Config {
            paper_literal_tolerance: true,
            ..Config::default()
        };
        assert!(cfg.effective_tolerance() > 0.999_999);
        assert!(cfg.effective_tolerance() < 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            Config {
                window_len_s: 0.0,
                ..Config::default()
            },
            Config {
                tolerance_threshold: 1.5,
                ..Config::default()
            },
            Config {
                min_improvement: f64::NAN,
                ..Config::default()
            },
            Config {
                temp_band: TempBand {
                    low: 40.0,
                    high: 30.0,
                },
                ..Config::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn digest_tracks_content() {
        let a = Config::default();
        let b = Config {
            window_len_s: 60.0,
            ..Config::default()
        };
        assert_eq!(a.digest(), Config::default().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
