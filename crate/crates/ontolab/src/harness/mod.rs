//! Experiment harness: config files in, deterministic CSV out.
//!
//! One process runs one experiment. The run writes its CSV products plus a
//! `manifest.txt` echoing the config, the crate version, and the wall time;
//! everything except the manifest is byte-reproducible for a fixed config and
//! seed.

pub mod config;
mod experiments;

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{run, validate, RunOutcome};

use crate::configspace::ConfigSpace;
use crate::rng;
use crate::state::StateVector;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ONTOLAB_OUT_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical invariant violated: {0}")]
    Invariant(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn config(message: impl Into<String>) -> Self {
        HarnessError::Config(message.into())
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        HarnessError::Invariant(message.into())
    }

    /// Process exit code: 2 config, 3 numerical invariant, 1 io.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Invariant(_) => 3,
            HarnessError::Io { .. } => 1,
        }
    }

    /// Single-line machine-readable record for stderr.
    pub fn error_record(&self) -> String {
        let kind = match self {
            HarnessError::Config(_) => "config",
            HarnessError::Invariant(_) => "invariant",
            HarnessError::Io { .. } => "io",
        };
        format!("error kind={kind} message=\"{}\"", self)
    }
}

/// Normalized state with pseudo-random complex Gaussian amplitudes,
/// deterministic in `seed`.
pub fn seeded_state(space: &Arc<ConfigSpace>, seed: u64) -> StateVector {
    let mut rng = rng::stream(seed, 0);
    let raw: Vec<Complex64> = (0..space.len())
        .map(|_| rng::complex_gaussian(&mut rng))
        .collect();
    let norm_sq: f64 = raw
        .iter()
        .enumerate()
        .map(|(i, a)| space.weight(i) * a.norm_sqr())
        .sum();
    let scale = 1.0 / norm_sq.sqrt();
    let amplitudes = raw.into_iter().map(|a| a * scale).collect();
    StateVector::from_internal(space.clone(), amplitudes).expect("explicitly normalized amplitudes")
}
