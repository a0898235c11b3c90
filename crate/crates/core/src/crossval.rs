//! Leave-one-out reconstruction of job probabilities.
//!
//! For job j the probability LP is solved without j. Each task of j then
//! gets the mean probability of its surviving related tasks, and p′(j) is
//! the share-weighted mean over the tasks where that mean is defined.
//!
//! The per-job step ([`crossval_job`]) is independent of every other job, so
//! callers may run it in any order or in parallel and combine the results
//! with [`assemble`], which orders them by job index.

use alloc::vec::Vec;

use crate::analysis::{Histogram, make_histogram};
use crate::dataset::Dataset;
use crate::error::ModelError;
use crate::lp::SolverOptions;
use crate::prob::{TaskProbabilities, solve_task_probs_excluding};
use crate::share::TaskShareTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierThresholds {
    pub strong: f64,
    pub review: f64,
}

impl Default for OutlierThresholds {
    fn default() -> Self {
        Self {
            strong: 0.5,
            review: 0.2,
        }
    }
}

impl OutlierThresholds {
    pub fn tier(&self, delta: f64) -> Tier {
        let d = delta.abs();
        if d > self.strong {
            Tier::StrongOutlier
        } else if d > self.review {
            Tier::Review
        } else {
            Tier::Consistent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Consistent,
    Review,
    StrongOutlier,
    Unreconstructable,
}

impl Tier {
    pub fn name(self) -> &'static str {
        match self {
            Tier::Consistent => "consistent",
            Tier::Review => "review",
            Tier::StrongOutlier => "strong outlier",
            Tier::Unreconstructable => "unreconstructable",
        }
    }
}

pub fn leave_one_out_solve(
    dataset: &Dataset,
    shares: &TaskShareTable,
    epsilon: f64,
    excluded_job: usize,
    options: &SolverOptions,
) -> Result<TaskProbabilities, ModelError> {
    solve_task_probs_excluding(dataset, shares, epsilon, Some(excluded_job), options)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborAverage {
    pub task: usize,
    /// `None` when no neighbour survives.
    pub p_prime: Option<f64>,
    pub neighbors: usize,
}

/// p′(t) for every task of `job`, averaging over neighbours present in
/// `loo`.
pub fn neighbor_average(
    dataset: &Dataset,
    loo: &TaskProbabilities,
    job: usize,
) -> Vec<NeighborAverage> {
    dataset
        .tasks_of(job)
        .iter()
        .map(|&t| {
            let values: Vec<f64> = dataset
                .graph()
                .neighbors(t)
                .iter()
                .filter_map(|&n| loo.get(n))
                .collect();
            let p_prime = if values.is_empty() {
                None
            } else {
                Some((values.iter().sum::<f64>() / values.len() as f64).clamp(0.0, 1.0))
            };
            NeighborAverage {
                task: t,
                p_prime,
                neighbors: values.len(),
            }
        })
        .collect()
}

/// `(p′(j), coverage)`; coverage is the share fraction of tasks with a
/// defined p′. `None` when no task with positive share is defined.
pub fn reconstruct_job(p_prime: &[NeighborAverage], shares: &TaskShareTable) -> Option<(f64, f64)> {
    let total: f64 = p_prime.iter().map(|n| shares.share(n.task)).sum();
    let (mut num, mut den) = (0.0, 0.0);
    for n in p_prime {
        if let Some(v) = n.p_prime {
            let s = shares.share(n.task);
            num += v * s;
            den += s;
        }
    }
    if den <= 0.0 {
        return None;
    }
    let coverage = if total > 0.0 { (den / total).min(1.0) } else { 0.0 };
    Some(((num / den).clamp(0.0, 1.0), coverage))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub task: usize,
    /// From the full LP.
    pub p: f64,
    pub p_prime: Option<f64>,
    pub neighbors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome {
    pub job: usize,
    pub p: f64,
    pub p_prime: Option<f64>,
    pub delta: Option<f64>,
    pub coverage: f64,
    pub tier: Tier,
    pub loo_objective: f64,
    pub tasks: Vec<TaskOutcome>,
}

/// Leave-one-out outcome of a single job. `full` is the solution of the
/// probability LP over all jobs.
pub fn crossval_job(
    dataset: &Dataset,
    shares: &TaskShareTable,
    epsilon: f64,
    full: &TaskProbabilities,
    job: usize,
    thresholds: &OutlierThresholds,
    options: &SolverOptions,
) -> Result<JobOutcome, ModelError> {
    let loo = leave_one_out_solve(dataset, shares, epsilon, job, options)?;
    let averages = neighbor_average(dataset, &loo, job);
    let p = dataset.jobs()[job].automation_prob;
    let (p_prime, coverage) = match reconstruct_job(&averages, shares) {
        Some((v, c)) => (Some(v), c),
        None => (None, 0.0),
    };
    let delta = p_prime.map(|q| p - q);
    let tier = delta.map_or(Tier::Unreconstructable, |d| thresholds.tier(d));
    let tasks = averages
        .iter()
        .map(|a| TaskOutcome {
            task: a.task,
            p: full.get(a.task).unwrap_or(f64::NAN),
            p_prime: a.p_prime,
            neighbors: a.neighbors,
        })
        .collect();
    Ok(JobOutcome {
        job,
        p,
        p_prime,
        delta,
        coverage,
        tier,
        loo_objective: loo.objective,
        tasks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalReport {
    pub thresholds: OutlierThresholds,
    /// One entry per job, in job order.
    pub jobs: Vec<JobOutcome>,
    /// p(j) − p′(j) over reconstructable jobs.
    pub job_delta_histogram: Histogram,
    /// p(t) − p′(t) over tasks with a defined p′.
    pub task_delta_histogram: Histogram,
    pub unreconstructable: Vec<usize>,
}

impl CrossvalReport {
    pub fn count(&self, tier: Tier) -> usize {
        self.jobs.iter().filter(|j| j.tier == tier).count()
    }

    /// Mean |p(j) − p′(j)| over reconstructable jobs.
    pub fn mean_abs_delta(&self) -> Option<f64> {
        self.job_delta_histogram.mean_abs
    }

    /// Fraction of reconstructable jobs with |delta| below `bound`.
    pub fn fraction_within(&self, bound: f64) -> Option<f64> {
        let deltas: Vec<f64> = self.jobs.iter().filter_map(|j| j.delta).collect();
        if deltas.is_empty() {
            return None;
        }
        let n = deltas.iter().filter(|d| d.abs() < bound).count();
        Some(n as f64 / deltas.len() as f64)
    }
}

/// Orders outcomes by job and builds the histograms.
pub fn assemble(
    mut outcomes: Vec<JobOutcome>,
    thresholds: OutlierThresholds,
    bins: usize,
) -> Result<CrossvalReport, ModelError> {
    outcomes.sort_by_key(|o| o.job);
    let job_deltas: Vec<f64> = outcomes.iter().filter_map(|o| o.delta).collect();
    let task_deltas: Vec<f64> = outcomes
        .iter()
        .flat_map(|o| o.tasks.iter())
        .filter_map(|t| t.p_prime.map(|q| t.p - q))
        .collect();
    let unreconstructable = outcomes
        .iter()
        .filter(|o| o.p_prime.is_none())
        .map(|o| o.job)
        .collect();
    Ok(CrossvalReport {
        thresholds,
        job_delta_histogram: make_histogram(&job_deltas, (-1.0, 1.0), bins)?,
        task_delta_histogram: make_histogram(&task_deltas, (-1.0, 1.0), bins)?,
        jobs: outcomes,
        unreconstructable,
    })
}

/// Sequential cross-validation over every job.
pub fn run_crossval(
    dataset: &Dataset,
    shares: &TaskShareTable,
    epsilon: f64,
    full: &TaskProbabilities,
    thresholds: OutlierThresholds,
    bins: usize,
    options: &SolverOptions,
) -> Result<CrossvalReport, ModelError> {
    let outcomes = (0..dataset.jobs().len())
        .map(|j| crossval_job(dataset, shares, epsilon, full, j, &thresholds, options))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(outcomes, thresholds, bins)
}
