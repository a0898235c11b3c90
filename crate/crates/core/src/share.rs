//! Share LP: per-job bucket coefficients τ and the resulting task shares.
//!
//! For every job the shares `s(t) = Σℓ τℓ fℓ(t)` must sum to `1 ± ε`, with
//! `0 ≤ τ1 ≤ … ≤ τ7`. Related jobs pay `|τ_a,ℓ − τ_b,ℓ|` in the objective,
//! linearized by one slack δ per pair and bucket.

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::{BUCKETS, Dataset};
use crate::error::{ModelError, STAGE_SHARES, check_epsilon};
use crate::lp::{LpError, LpProblem, LpStatus, Relation, VarId, solve_with, SolverOptions};

/// The share LP together with the variable handles needed to read a solution.
#[derive(Debug, Clone)]
pub struct ShareLp {
    pub problem: LpProblem,
    pub tau: Vec<[VarId; BUCKETS]>,
    /// Related job pairs, `(smaller index, larger index)`.
    pub pairs: Vec<(usize, usize)>,
    pub delta: Vec<[VarId; BUCKETS]>,
}

fn lp(e: LpError) -> ModelError {
    ModelError::Solver {
        stage: STAGE_SHARES,
        source: e,
    }
}

pub fn build_share_lp(dataset: &Dataset, epsilon: f64) -> Result<ShareLp, ModelError> {
    check_epsilon(epsilon)?;
    let jobs = dataset.jobs();
    let pairs = dataset.derive_job_relatedness();
    let mut p = LpProblem::new();

    let mut tau = Vec::with_capacity(jobs.len());
    for job in jobs {
        let mut ids = [VarId(0); BUCKETS];
        for (l, id) in ids.iter_mut().enumerate() {
            *id = p
                .add_var(format!("tau({},{})", job.id, l + 1), 0.0, f64::INFINITY, 0.0)
                .map_err(lp)?;
        }
        tau.push(ids);
    }
    let mut delta = Vec::with_capacity(pairs.len());
    for &(a, b) in &pairs {
        let mut ids = [VarId(0); BUCKETS];
        for (l, id) in ids.iter_mut().enumerate() {
            *id = p
                .add_var(
                    format!("delta({},{},{})", jobs[a].id, jobs[b].id, l + 1),
                    0.0,
                    f64::INFINITY,
                    1.0,
                )
                .map_err(lp)?;
        }
        delta.push(ids);
    }

    for (k, &(a, b)) in pairs.iter().enumerate() {
        let (ja, jb) = (&jobs[a].id, &jobs[b].id);
        for l in 0..BUCKETS {
            let (d, ta, tb) = (delta[k][l], tau[a][l], tau[b][l]);
            p.add_constraint(
                format!("dpos({ja},{jb},{})", l + 1),
                [(d, 1.0), (ta, -1.0), (tb, 1.0)],
                Relation::Ge,
                0.0,
            )
            .map_err(lp)?;
            p.add_constraint(
                format!("dneg({ja},{jb},{})", l + 1),
                [(d, 1.0), (tb, -1.0), (ta, 1.0)],
                Relation::Ge,
                0.0,
            )
            .map_err(lp)?;
        }
    }

    for (j, job) in jobs.iter().enumerate() {
        // Σ_t Σ_ℓ τℓ fℓ(t) = Σ_ℓ τℓ Fℓ with Fℓ the bucket mass over the job's tasks.
        let mut mass = [0.0; BUCKETS];
        for &t in dataset.tasks_of(j) {
            for (m, f) in mass.iter_mut().zip(dataset.tasks()[t].freq.values()) {
                *m += f;
            }
        }
        let terms: Vec<(VarId, f64)> = (0..BUCKETS)
            .filter(|&l| mass[l] != 0.0)
            .map(|l| (tau[j][l], mass[l]))
            .collect();
        p.add_constraint(
            format!("band_hi({})", job.id),
            terms.iter().copied(),
            Relation::Le,
            1.0 + epsilon,
        )
        .map_err(lp)?;
        p.add_constraint(
            format!("band_lo({})", job.id),
            terms,
            Relation::Ge,
            1.0 - epsilon,
        )
        .map_err(lp)?;
        p.add_constraint(
            format!("tau1_nonneg({})", job.id),
            [(tau[j][0], 1.0)],
            Relation::Ge,
            0.0,
        )
        .map_err(lp)?;
        for l in 1..BUCKETS {
            p.add_constraint(
                format!("mono({},{})", job.id, l + 1),
                [(tau[j][l], 1.0), (tau[j][l - 1], -1.0)],
                Relation::Ge,
                0.0,
            )
            .map_err(lp)?;
        }
    }

    Ok(ShareLp {
        problem: p,
        tau,
        pairs,
        delta,
    })
}

/// Optimal coefficients of the share LP.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareCoefficients {
    pub epsilon: f64,
    pub tau: Vec<[f64; BUCKETS]>,
    pub pairs: Vec<(usize, usize)>,
    pub delta: Vec<[f64; BUCKETS]>,
    pub objective: f64,
    pub iterations: usize,
    pub num_variables: usize,
    pub num_constraints: usize,
    /// Jobs without any related partner; their τ is one arbitrary optimum.
    pub unconstrained: Vec<bool>,
}

impl ShareCoefficients {
    /// Objective divided by the number of δ variables (0 without pairs).
    pub fn mean_delta(&self) -> f64 {
        let n = self.delta.len() * BUCKETS;
        if n == 0 { 0.0 } else { self.objective / n as f64 }
    }

    /// Mean over all jobs and buckets of τ.
    pub fn mean_tau(&self) -> f64 {
        let n = self.tau.len() * BUCKETS;
        if n == 0 {
            return 0.0;
        }
        self.tau.iter().flatten().sum::<f64>() / n as f64
    }
}

pub fn solve_shares(dataset: &Dataset, epsilon: f64) -> Result<ShareCoefficients, ModelError> {
    solve_shares_with(dataset, epsilon, &SolverOptions::default())
}

pub fn solve_shares_with(
    dataset: &Dataset,
    epsilon: f64,
    options: &SolverOptions,
) -> Result<ShareCoefficients, ModelError> {
    let built = build_share_lp(dataset, epsilon)?;
    let sol = solve_with(&built.problem, options).map_err(lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(ModelError::Infeasible(STAGE_SHARES)),
        LpStatus::Unbounded => return Err(ModelError::Unbounded(STAGE_SHARES)),
    }
    let read = |ids: &[VarId; BUCKETS]| ids.map(|v| sol.value(v));
    let mut unconstrained = alloc::vec![true; dataset.jobs().len()];
    for &(a, b) in &built.pairs {
        unconstrained[a] = false;
        unconstrained[b] = false;
    }
    Ok(ShareCoefficients {
        epsilon,
        tau: built.tau.iter().map(|ids| monotone(read(ids))).collect(),
        delta: built.delta.iter().map(read).collect(),
        pairs: built.pairs,
        objective: sol.objective,
        iterations: sol.iterations,
        num_variables: built.problem.num_vars(),
        num_constraints: built.problem.num_constraints(),
        unconstrained,
    })
}

/// Removes roundoff below 0 and between buckets so τ is exactly
/// nonnegative and nondecreasing.
fn monotone(mut tau: [f64; BUCKETS]) -> [f64; BUCKETS] {
    tau[0] = tau[0].max(0.0);
    for l in 1..BUCKETS {
        tau[l] = tau[l].max(tau[l - 1]);
    }
    tau
}

/// Per-task shares, raw and rescaled so that each job sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskShareTable {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Σ raw shares per job.
    pub job_raw_sum: Vec<f64>,
    /// Whether [`TaskShareTable::share`] returns normalized values.
    pub use_normalized: bool,
}

impl TaskShareTable {
    /// The share fed to later stages.
    pub fn share(&self, task: usize) -> f64 {
        if self.use_normalized {
            self.normalized[task]
        } else {
            self.raw[task]
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Table from per-task raw shares; normalized values are derived.
    pub fn from_raw(dataset: &Dataset, raw: Vec<f64>, use_normalized: bool) -> Self {
        let mut normalized = raw.clone();
        let mut job_raw_sum = Vec::with_capacity(dataset.jobs().len());
        for j in 0..dataset.jobs().len() {
            let tasks = dataset.tasks_of(j);
            let sum: f64 = tasks.iter().map(|&t| raw[t]).sum();
            job_raw_sum.push(sum);
            if sum > 0.0 {
                for &t in tasks {
                    normalized[t] = raw[t] / sum;
                }
            }
        }
        Self {
            raw,
            normalized,
            job_raw_sum,
            use_normalized,
        }
    }
}

pub fn compute_shares(
    coeffs: &ShareCoefficients,
    dataset: &Dataset,
    normalize: bool,
) -> Result<TaskShareTable, ModelError> {
    if coeffs.tau.len() != dataset.jobs().len() {
        return Err(ModelError::MissingCoefficients {
            expected: dataset.jobs().len(),
            got: coeffs.tau.len(),
        });
    }
    let raw = dataset
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let tau = &coeffs.tau[dataset.job_of(t)];
            tau.iter().zip(task.freq.values()).map(|(a, f)| a * f).sum()
        })
        .collect();
    Ok(TaskShareTable::from_raw(dataset, raw, normalize))
}

/// Debug alternative: every task of a job gets `1/|T_j|`.
pub fn uniform_shares(dataset: &Dataset) -> TaskShareTable {
    let raw = (0..dataset.tasks().len())
        .map(|t| 1.0 / dataset.tasks_of(dataset.job_of(t)).len() as f64)
        .collect();
    TaskShareTable::from_raw(dataset, raw, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{EdgeRecord, JobRecord, TaskRecord};
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn dataset(jobs: &[(&str, &[[f64; 7]])], edges: &[(&str, &str)]) -> Dataset {
        let mut jr = Vec::new();
        let mut tr = Vec::new();
        for (j, tasks) in jobs {
            jr.push(JobRecord {
                job_id: j.to_string(),
                title: String::new(),
                automation_prob: 0.5,
            });
            for (k, f) in tasks.iter().enumerate() {
                tr.push(TaskRecord {
                    task_id: format!("{j}.{k}"),
                    job_id: j.to_string(),
                    description: String::new(),
                    freq: *f,
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

    const A: [f64; 7] = [0.2, 0.2, 0.2, 0.2, 0.2, 0.0, 0.0];
    const B: [f64; 7] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];

    #[test]
    fn two_related_jobs_have_expected_shape() {
        let d = dataset(&[("j1", &[A, B]), ("j2", &[B])], &[("j1.1", "j2.0")]);
        let s = build_share_lp(&d, 0.01).unwrap();
        assert_eq!(s.problem.num_vars(), 21);
        assert_eq!(s.problem.objective_terms(), 7);
        // 14 δ rows, 2×2 band rows, 2 τ1 rows, 2×6 monotone rows
        assert_eq!(s.problem.num_constraints(), 14 + 4 + 2 + 12);
    }

    #[test]
    fn lone_job_has_no_objective() {
        let d = dataset(&[("j1", &[A])], &[]);
        let s = build_share_lp(&d, 0.01).unwrap();
        assert_eq!(s.problem.num_vars(), 7);
        assert_eq!(s.problem.objective_terms(), 0);
        assert_eq!(s.problem.num_constraints(), 2 + 1 + 6);
        let c = solve_shares(&d, 0.01).unwrap();
        assert!(c.unconstrained[0]);
        assert_eq!(c.mean_delta(), 0.0);
    }

    #[test]
    fn tenth_of_hourly_bucket() {
        let d = dataset(&[("j1", &[B])], &[]);
        let mut c = solve_shares(&d, 0.01).unwrap();
        c.tau[0] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1];
        let s = compute_shares(&c, &d, false).unwrap();
        assert!((s.raw[0] - 0.1).abs() < 1e-15);
        assert_eq!(s.normalized[0], 1.0);
        c.tau[0] = [0.0; 7];
        assert_eq!(compute_shares(&c, &d, true).unwrap().raw[0], 0.0);
        c.tau.clear();
        assert!(matches!(
            compute_shares(&c, &d, true),
            Err(ModelError::MissingCoefficients { .. })
        ));
    }

    #[test]
    fn identical_jobs_need_no_slack() {
        let d = dataset(
            &[("j1", &[A, B, A]), ("j2", &[A, B, A])],
            &[("j1.0", "j2.0"), ("j1.1", "j2.1")],
        );
        let c = solve_shares(&d, 0.01).unwrap();
        assert_eq!(c.objective, 0.0);
        for l in 0..7 {
            assert!((c.tau[0][l] - c.tau[1][l]).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_divides_by_raw_sum() {
        let d = dataset(&[("j1", &[A, B])], &[]);
        let mut c = solve_shares(&d, 0.01).unwrap();
        c.tau[0] = [0.505; 7];
        let s = compute_shares(&c, &d, true).unwrap();
        assert!((s.job_raw_sum[0] - 1.01).abs() < 1e-12);
        assert_eq!(s.normalized[0] + s.normalized[1], 1.0);
        assert_eq!(s.share(0), s.normalized[0]);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let d = dataset(&[("j1", &[A])], &[]);
        assert_eq!(
            build_share_lp(&d, 1.0).unwrap_err(),
            ModelError::InvalidEpsilon(1.0)
        );
        assert!(build_share_lp(&d, -0.1).is_err());
    }

    #[test]
    fn uniform_debug_shares() {
        let d = dataset(&[("j1", &[A, B, B, A]), ("j2", &[B])], &[]);
        let s = uniform_shares(&d);
        assert_eq!(s.raw, [0.25, 0.25, 0.25, 0.25, 1.0]);
    }
}
