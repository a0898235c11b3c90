use std::num::NonZeroUsize;
use std::path::PathBuf;

use taskprob_core::analysis::Estimator;
use taskprob_core::crossval::OutlierThresholds;
use taskprob_core::lp::SolverOptions;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("--epsilon must lie strictly between 0 and 1, got {0}")]
    Epsilon(f64),
    #[error("outlier thresholds must satisfy 0 <= review <= strong <= 1, got review {review}, strong {strong}")]
    Thresholds { review: f64, strong: f64 },
    #[error("--bins must be at least 1")]
    Bins,
    #[error("--input is required for this command")]
    MissingInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub epsilon: f64,
    pub normalize_shares: bool,
    pub thresholds: OutlierThresholds,
    pub bins: usize,
    pub seed: u64,
    /// Cross-validation workers; no other stage is parallel.
    pub jobs: NonZeroUsize,
    pub dump_lp: bool,
    /// Adds per-stage wall-clock seconds to the manifest, which then differs
    /// between runs.
    pub record_timings: bool,
    pub estimator: Estimator,
    pub solver: SolverOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: PathBuf::from("out"),
            epsilon: 0.01,
            normalize_shares: true,
            thresholds: OutlierThresholds::default(),
            bins: 50,
            seed: 1,
            jobs: NonZeroUsize::MIN,
            dump_lp: false,
            record_timings: false,
            estimator: Estimator::Pearson,
            solver: SolverOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        let OutlierThresholds { strong, review } = self.thresholds;
        if !(0.0 <= review && review <= strong && strong <= 1.0) {
            return Err(ConfigError::Thresholds { review, strong });
        }
        if self.bins == 0 {
            return Err(ConfigError::Bins);
        }
        Ok(())
    }
}
