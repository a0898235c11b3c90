//! Probability LP: one p(t) ∈ [0,1] per task such that each job's
//! share-weighted mean stays within `p(j)(1 ± ε)`, minimizing the summed
//! absolute difference over related task pairs.

use alloc::format;
use alloc::vec::Vec;

use crate::analysis::{AnalysisError, Histogram, make_histogram};
use crate::dataset::{Dataset, RelatednessGraph};
use crate::error::{ModelError, STAGE_PROBS, check_epsilon};
use crate::lp::{LpError, LpProblem, LpStatus, Relation, SolverOptions, VarId, solve_with};
use crate::share::TaskShareTable;

#[derive(Debug, Clone)]
pub struct ProbLp {
    pub problem: LpProblem,
    /// `None` for tasks of the excluded job.
    pub p: Vec<Option<VarId>>,
    /// Related task pairs with both ends present, in graph order.
    pub pairs: Vec<(usize, usize)>,
    pub diff: Vec<VarId>,
}

fn lp(e: LpError) -> ModelError {
    ModelError::Solver {
        stage: STAGE_PROBS,
        source: e,
    }
}

pub fn build_prob_lp(
    dataset: &Dataset,
    shares: &TaskShareTable,
    epsilon: f64,
) -> Result<ProbLp, ModelError> {
    build_prob_lp_excluding(dataset, shares, epsilon, None)
}

/// Builds the LP over all jobs except `excluded`. Variable and row names use
/// ids, so the result equals the LP of the dataset with that job removed.
pub fn build_prob_lp_excluding(
    dataset: &Dataset,
    shares: &TaskShareTable,
    epsilon: f64,
    excluded: Option<usize>,
) -> Result<ProbLp, ModelError> {
    check_epsilon(epsilon)?;
    let tasks = dataset.tasks();
    if shares.len() != tasks.len() {
        return Err(ModelError::MissingShares {
            expected: tasks.len(),
            got: shares.len(),
        });
    }
    if let Some(j) = excluded
        && j >= dataset.jobs().len() {
            return Err(ModelError::UnknownJob(j));
        }
    let keep = |t: usize| Some(dataset.job_of(t)) != excluded;

    let mut problem = LpProblem::new();
    let mut p = alloc::vec![None; tasks.len()];
    for (t, task) in tasks.iter().enumerate() {
        if keep(t) {
            p[t] = Some(
                problem
                    .add_var(format!("p({})", task.id), 0.0, 1.0, 0.0)
                    .map_err(lp)?,
            );
        }
    }
    let pairs: Vec<(usize, usize)> = dataset
        .graph()
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| keep(a) && keep(b))
        .collect();
    let mut diff = Vec::with_capacity(pairs.len());
    for &(a, b) in &pairs {
        diff.push(
            problem
                .add_var(format!("pd({},{})", tasks[a].id, tasks[b].id), 0.0, 1.0, 1.0)
                .map_err(lp)?,
        );
    }
    for (&(a, b), &d) in pairs.iter().zip(&diff) {
        let (pa, pb) = (p[a].unwrap(), p[b].unwrap());
        let (ia, ib) = (&tasks[a].id, &tasks[b].id);
        problem
            .add_constraint(
                format!("pd_pos({ia},{ib})"),
                [(pa, 1.0), (pb, -1.0), (d, -1.0)],
                Relation::Le,
                0.0,
            )
            .map_err(lp)?;
        problem
            .add_constraint(
                format!("pd_neg({ia},{ib})"),
                [(pb, 1.0), (pa, -1.0), (d, -1.0)],
                Relation::Le,
                0.0,
            )
            .map_err(lp)?;
    }
    for (j, job) in dataset.jobs().iter().enumerate() {
        if Some(j) == excluded {
            continue;
        }
        let terms: Vec<(VarId, f64)> = dataset
            .tasks_of(j)
            .iter()
            .filter(|&&t| shares.share(t) != 0.0)
            .map(|&t| (p[t].unwrap(), shares.share(t)))
            .collect();
        let pj = job.automation_prob;
        problem
            .add_constraint(
                format!("band_hi({})", job.id),
                terms.iter().copied(),
                Relation::Le,
                pj * (1.0 + epsilon),
            )
            .map_err(lp)?;
        problem
            .add_constraint(
                format!("band_lo({})", job.id),
                terms,
                Relation::Ge,
                pj * (1.0 - epsilon),
            )
            .map_err(lp)?;
    }
    Ok(ProbLp {
        problem,
        p,
        pairs,
        diff,
    })
}

/// Optimal task probabilities. Entries for an excluded job are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskProbabilities {
    pub epsilon: f64,
    pub values: Vec<Option<f64>>,
    pub pairs: Vec<(usize, usize)>,
    /// Δ per pair as returned by the solver.
    pub pair_slack: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub num_variables: usize,
    pub num_constraints: usize,
    /// Tasks with at least one pairwise term in the LP.
    pub anchored: Vec<bool>,
    pub excluded_job: Option<usize>,
}

impl TaskProbabilities {
    pub fn get(&self, task: usize) -> Option<f64> {
        self.values[task]
    }

    pub fn unanchored_count(&self) -> usize {
        self.values
            .iter()
            .zip(&self.anchored)
            .filter(|(v, a)| v.is_some() && !**a)
            .count()
    }

    /// `|p(a) − p(b)|` recomputed from the probabilities, per LP pair.
    pub fn pair_differences(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|&(a, b)| (self.values[a].unwrap() - self.values[b].unwrap()).abs())
            .collect()
    }

    /// Mean of [`TaskProbabilities::pair_differences`]; 0 without pairs.
    pub fn mean_pair_difference(&self) -> f64 {
        let d = self.pair_differences();
        if d.is_empty() {
            0.0
        } else {
            d.iter().sum::<f64>() / d.len() as f64
        }
    }
}

pub fn solve_task_probs(
    dataset: &Dataset,
    shares: &TaskShareTable,
    epsilon: f64,
) -> Result<TaskProbabilities, ModelError> {
    solve_task_probs_excluding(dataset, shares, epsilon, None, &SolverOptions::default())
}

pub fn solve_task_probs_excluding(
    dataset: &Dataset,
    shares: &TaskShareTable,
    epsilon: f64,
    excluded: Option<usize>,
    options: &SolverOptions,
) -> Result<TaskProbabilities, ModelError> {
    let built = build_prob_lp_excluding(dataset, shares, epsilon, excluded)?;
    let sol = solve_with(&built.problem, options).map_err(lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(ModelError::Infeasible(STAGE_PROBS)),
        LpStatus::Unbounded => return Err(ModelError::Unbounded(STAGE_PROBS)),
    }
    let mut anchored = alloc::vec![false; dataset.tasks().len()];
    for &(a, b) in &built.pairs {
        anchored[a] = true;
        anchored[b] = true;
    }
    Ok(TaskProbabilities {
        epsilon,
        values: built.p.iter().map(|v| v.map(|v| sol.value(v))).collect(),
        pair_slack: built.diff.iter().map(|&d| sol.value(d)).collect(),
        pairs: built.pairs,
        objective: sol.objective,
        iterations: sol.iterations,
        num_variables: built.problem.num_vars(),
        num_constraints: built.problem.num_constraints(),
        anchored,
        excluded_job: excluded,
    })
}

/// Objective of the feasible point `p(t) = p(j)`: the summed job probability
/// difference over related task pairs.
pub fn baseline_objective(dataset: &Dataset) -> f64 {
    let pj = |t: usize| dataset.jobs()[dataset.job_of(t)].automation_prob;
    dataset
        .graph()
        .edges()
        .iter()
        .map(|&(a, b)| (pj(a) - pj(b)).abs())
        .sum()
}

/// Histogram of `|p(t) − p(t′)|` over graph edges with both ends defined.
pub fn pair_diff_distribution(
    probs: &TaskProbabilities,
    graph: &RelatednessGraph,
    bins: usize,
) -> Result<Histogram, AnalysisError> {
    let diffs: Vec<f64> = graph
        .edges()
        .iter()
        .filter_map(|&(a, b)| Some((probs.get(a)? - probs.get(b)?).abs()))
        .collect();
    make_histogram(&diffs, (0.0, 1.0), bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{EdgeRecord, JobRecord, TaskRecord};
    use crate::share::uniform_shares;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn dataset(jobs: &[(&str, f64, usize)], edges: &[(&str, &str)]) -> Dataset {
        let mut jr = Vec::new();
        let mut tr = Vec::new();
        for &(j, p, n) in jobs {
            jr.push(JobRecord {
                job_id: j.to_string(),
                title: String::new(),
                automation_prob: p,
            });
            for k in 0..n {
                tr.push(TaskRecord {
                    task_id: format!("{j}.{k}"),
                    job_id: j.to_string(),
                    description: String::new(),
                    freq: [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
                });
            }
        }
        let er = edges
            .iter()
            .map(|(a, b)| EdgeRecord {
                task_id_a: a.to_string(),
                task_id_b: b.to_string(),
            })
            .collect();
        Dataset::from_records(jr, tr, er, vec![]).unwrap()
    }

    #[test]
    fn two_task_shape() {
        let d = dataset(&[("j", 0.5, 2)], &[("j.0", "j.1")]);
        let s = uniform_shares(&d);
        let lp = build_prob_lp(&d, &s, 0.01).unwrap();
        assert_eq!(lp.problem.num_vars(), 3);
        assert_eq!(lp.problem.num_constraints(), 4);
        assert_eq!(lp.problem.objective_terms(), 1);
    }

    #[test]
    fn zero_probability_job_forces_zero_tasks() {
        let d = dataset(
            &[("a", 0.0, 3), ("b", 1.0, 2)],
            &[("a.0", "b.0"), ("a.1", "b.1"), ("a.2", "b.0")],
        );
        let s = uniform_shares(&d);
        let lp = build_prob_lp(&d, &s, 0.01).unwrap();
        let band = &lp.problem.constraints()[6];
        assert_eq!((band.rhs, band.relation), (0.0, Relation::Le));
        let r = solve_task_probs(&d, &s, 0.01).unwrap();
        for t in 0..3 {
            assert_eq!(r.get(t), Some(0.0));
        }
        let mean: f64 = (3..5).map(|t| r.get(t).unwrap() * s.share(t)).sum();
        assert!(mean >= 0.99 - 1e-7);
        assert!(r.objective <= baseline_objective(&d) + 1e-9);
        assert!((r.mean_pair_difference() - r.objective / 3.0).abs() < 1e-9);
    }

    #[test]
    fn excluding_a_job_matches_smaller_dataset() {
        let d = dataset(&[("a", 0.3, 2), ("b", 0.6, 2)], &[("a.0", "b.1"), ("a.0", "a.1")]);
        let only_a = dataset(&[("a", 0.3, 2)], &[("a.0", "a.1")]);
        let lp = build_prob_lp_excluding(&d, &uniform_shares(&d), 0.01, Some(1)).unwrap();
        let small = build_prob_lp(&only_a, &uniform_shares(&only_a), 0.01).unwrap();
        assert_eq!(lp.problem, small.problem);
        assert_eq!(lp.p[2], None);
        assert!(matches!(
            build_prob_lp_excluding(&d, &uniform_shares(&d), 0.01, Some(5)),
            Err(ModelError::UnknownJob(5))
        ));
    }

    #[test]
    fn anchoring_and_histogram() {
        let d = dataset(&[("a", 1.0, 1), ("b", 0.0, 1), ("c", 0.5, 1)], &[("a.0", "b.0")]);
        let s = uniform_shares(&d);
        let r = solve_task_probs(&d, &s, 0.01).unwrap();
        assert_eq!(r.anchored, [true, true, false]);
        assert_eq!(r.unanchored_count(), 1);
        let h = pair_diff_distribution(&r, d.graph(), 10).unwrap();
        assert_eq!(h.counts[9], 1);
        // a.0 may drop to 0.99 inside its band
        assert!((h.mean.unwrap() - 0.99).abs() < 1e-12);
    }
}
