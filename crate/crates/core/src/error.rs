use crate::analysis::AnalysisError;
use crate::lp::LpError;

/// Stage label used in errors and summaries for the share LP.
pub const STAGE_SHARES: &str = "LP1 (task shares)";
/// Stage label for the probability LP.
pub const STAGE_PROBS: &str = "LP2 (task probabilities)";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("epsilon must lie in [0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("{stage}: {source}")]
    Solver {
        stage: &'static str,
        #[source]
        source: LpError,
    },
    #[error("{0} is infeasible")]
    Infeasible(&'static str),
    #[error("{0} is unbounded")]
    Unbounded(&'static str),
    #[error("coefficients cover {got} jobs, dataset has {expected}")]
    MissingCoefficients { expected: usize, got: usize },
    #[error("shares cover {got} tasks, dataset has {expected}")]
    MissingShares { expected: usize, got: usize },
    #[error("job index {0} out of range")]
    UnknownJob(usize),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<(), ModelError> {
    if (0.0..1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(ModelError::InvalidEpsilon(epsilon))
    }
}
