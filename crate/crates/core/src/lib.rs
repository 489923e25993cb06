//! Cognitive-load estimation from nasal and forehead skin temperature.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`signal`]: paired temperature readings → NST (nasal − forehead),
//!    averaged over two-minute task windows and over the pre-task rest.
//! 2. [`metrics`]: WNST (task window NST minus rest NST) and its maximum,
//!    mean, and sum (WMAX, WAVE, WSUM).
//! 3. [`features`]: one row per (subject, task) with the three metrics, the
//!    log task time, and four NASA-TLX subscale scores.
//! 4. [`regress`]: stepwise OLS with tolerance screening per subscale,
//!    against a time-only benchmark, rendered as adjusted-R² and
//!    standardized-coefficient grids.
//!
//! [`synth`] produces seeded studies with a known ground truth for
//! end-to-end checks.

pub mod config;
pub mod error;
pub mod features;
pub mod metrics;
pub mod par;
pub mod regress;
pub mod signal;
pub mod synth;

pub use config::Config;
pub use error::{Error, Result};
pub use par::Exec;
