//! Cross-validation over a pool of scoped threads.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread;

use taskprob_core::ModelError;
use taskprob_core::crossval::{
    CrossvalReport, JobOutcome, OutlierThresholds, assemble, crossval_job,
};
use taskprob_core::dataset::Dataset;
use taskprob_core::lp::SolverOptions;
use taskprob_core::prob::TaskProbabilities;
use taskprob_core::share::TaskShareTable;

#[derive(Debug, Clone, Copy)]
pub struct CrossvalParams<'a> {
    pub dataset: &'a Dataset,
    pub shares: &'a TaskShareTable,
    pub epsilon: f64,
    pub full: &'a TaskProbabilities,
    pub thresholds: OutlierThresholds,
    pub bins: usize,
    pub options: SolverOptions,
}

/// Runs every leave-one-out solve on up to `threads` workers. The report is
/// identical for every thread count; on failure the error of the lowest
/// failing job index is returned.
pub fn run_crossval_parallel(
    params: &CrossvalParams<'_>,
    threads: NonZeroUsize,
) -> Result<CrossvalReport, ModelError> {
    let n = params.dataset.jobs().len();
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let workers = threads.get().min(n.max(1));
    let work = || {
        let mut done: Vec<(usize, Result<JobOutcome, ModelError>)> = Vec::new();
        while !failed.load(Ordering::Relaxed) {
            let j = next.fetch_add(1, Ordering::Relaxed);
            if j >= n {
                break;
            }
            let r = crossval_job(
                params.dataset,
                params.shares,
                params.epsilon,
                params.full,
                j,
                &params.thresholds,
                &params.options,
            );
            if r.is_err() {
                failed.store(true, Ordering::Relaxed);
            }
            done.push((j, r));
        }
        done
    };
    let mut results: Vec<(usize, Result<JobOutcome, ModelError>)> = if workers == 1 {
        work()
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|_| s.spawn(work)).collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("crossval worker panicked"))
                .collect()
        })
    };
    results.sort_by_key(|(j, _)| *j);
    let mut outcomes = Vec::with_capacity(n);
    for (_, r) in results {
        outcomes.push(r?);
    }
    assemble(outcomes, params.thresholds, params.bins)
}
