//! Synthetic datasets with planted coefficients, shares and probabilities.
//!
//! Jobs are split into contiguous clusters. Each cluster owns a pool of task
//! archetypes with a planted probability q. A job draws distinct archetypes
//! from its cluster; two tasks are related when their jobs are related and
//! they share an archetype. Job pairs inside a cluster are related with
//! probability `density`, across clusters with `cross_density`.
//!
//! Planted shares are multiples of 2^-20 and sum to exactly 1 per job. The
//! planted τ* is nondecreasing and every task's frequencies mix the two
//! buckets whose τ* bracket its share, so `Σℓ τ*ℓ fℓ = s*`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{
    AttributeRecord, BUCKETS, Dataset, EdgeRecord, JobRecord, TaskRecord, ValidationReport,
};

const SHARE_SCALE: u32 = 1 << 20;

pub const ATTR_EDUCATION: &str = "education";
pub const ATTR_DEDUCTIVE: &str = "deductive_reasoning";
pub const ATTR_AUTOMATION: &str = "degree_of_automation";

/// How archetype probabilities are drawn within one cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbModel {
    /// q = 1 with the given probability, else 0.
    Bernoulli(f64),
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub jobs: usize,
    pub clusters: usize,
    pub tasks_per_job: (usize, usize),
    pub archetypes_per_cluster: usize,
    pub density: f64,
    pub cross_density: f64,
    /// Cycled over clusters.
    pub prob_models: Vec<ProbModel>,
    /// Every job copies the tasks of job 0 (debug and zero-slack checks).
    pub identical_jobs: bool,
    /// Jobs whose probability is replaced by `1 − p`.
    pub flip_jobs: Vec<usize>,
    pub attributes: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            jobs: 100,
            clusters: 5,
            tasks_per_job: (8, 12),
            archetypes_per_cluster: 20,
            density: 0.3,
            cross_density: 0.0,
            prob_models: alloc::vec![
                ProbModel::Bernoulli(0.1),
                ProbModel::Uniform { lo: 0.0, hi: 1.0 },
                ProbModel::Bernoulli(0.5),
                ProbModel::Uniform { lo: 0.3, hi: 0.7 },
                ProbModel::Bernoulli(0.9),
            ],
            identical_jobs: false,
            flip_jobs: Vec::new(),
            attributes: true,
        }
    }
}

impl SynthConfig {
    /// Two clusters whose job probabilities sit near 0 and near 1.
    pub fn two_cluster() -> Self {
        Self {
            clusters: 2,
            archetypes_per_cluster: 25,
            density: 0.15,
            prob_models: alloc::vec![ProbModel::Bernoulli(0.1), ProbModel::Bernoulli(0.9)],
            ..Self::default()
        }
    }

    /// Clusters with all-0 or all-1 archetypes, so each job's planted
    /// probability agrees with its neighbours.
    pub fn consistent() -> Self {
        Self {
            prob_models: alloc::vec![ProbModel::Bernoulli(0.0), ProbModel::Bernoulli(1.0)],
            ..Self::default()
        }
    }

    /// Two jobs with identical tasks, related task by task.
    pub fn identical_pair() -> Self {
        Self {
            jobs: 2,
            clusters: 1,
            density: 1.0,
            identical_jobs: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("job count must be positive")]
    NoJobs,
    #[error("cluster count must lie in 1..={jobs}, got {clusters}")]
    BadClusters { clusters: usize, jobs: usize },
    #[error("tasks per job range {0}..={1} is empty or starts at zero")]
    BadTaskRange(usize, usize),
    #[error("{needed} tasks per job need at least that many archetypes, have {have}")]
    TooFewArchetypes { needed: usize, have: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    BadProbability { name: &'static str, value: f64 },
    #[error("no probability model given")]
    NoProbModels,
    #[error("flip index {0} is not a job")]
    BadFlip(usize),
    #[error("generated dataset failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// Everything the generator planted, indexed like the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub seed: u64,
    pub job_cluster: Vec<usize>,
    pub tau: Vec<[f64; BUCKETS]>,
    pub task_share: Vec<f64>,
    pub task_archetype: Vec<usize>,
    /// q per archetype, per cluster.
    pub archetype_prob: Vec<Vec<f64>>,
    pub task_prob: Vec<f64>,
    /// Σ s* q before any flip.
    pub job_prob: Vec<f64>,
    pub flipped: Vec<usize>,
}

fn check_unit(name: &'static str, value: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SynthError::BadProbability { name, value })
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.jobs == 0 {
            return Err(SynthError::NoJobs);
        }
        if self.clusters == 0 || self.clusters > self.jobs {
            return Err(SynthError::BadClusters {
                clusters: self.clusters,
                jobs: self.jobs,
            });
        }
        let (lo, hi) = self.tasks_per_job;
        if lo == 0 || lo > hi {
            return Err(SynthError::BadTaskRange(lo, hi));
        }
        if hi > self.archetypes_per_cluster {
            return Err(SynthError::TooFewArchetypes {
                needed: hi,
                have: self.archetypes_per_cluster,
            });
        }
        check_unit("density", self.density)?;
        check_unit("cross_density", self.cross_density)?;
        if self.prob_models.is_empty() {
            return Err(SynthError::NoProbModels);
        }
        for m in &self.prob_models {
            match *m {
                ProbModel::Bernoulli(l) => check_unit("bernoulli rate", l)?,
                ProbModel::Uniform { lo, hi } => {
                    check_unit("uniform lower end", lo)?;
                    check_unit("uniform upper end", hi)?;
                    if lo > hi {
                        return Err(SynthError::BadProbability {
                            name: "uniform lower end",
                            value: lo,
                        });
                    }
                }
            }
        }
        if let Some(&f) = self.flip_jobs.iter().find(|&&f| f >= self.jobs) {
            return Err(SynthError::BadFlip(f));
        }
        Ok(())
    }
}

/// Integer weights summing to 2^20, then scaled to shares.
fn dyadic_shares(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<u32> = raw
        .iter()
        .map(|r| (r / total * SHARE_SCALE as f64) as u32)
        .collect();
    let rest = SHARE_SCALE - w.iter().sum::<u32>();
    let big = (0..n).max_by_key(|&i| (w[i], core::cmp::Reverse(i))).unwrap();
    w[big] += rest;
    w.iter().map(|&x| x as f64 / SHARE_SCALE as f64).collect()
}

/// Nondecreasing τ* whose range brackets every share.
fn planted_tau(rng: &mut ChaCha8Rng, shares: &[f64]) -> [f64; BUCKETS] {
    let lo = shares.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = shares.iter().copied().fold(0.0, f64::max);
    let t1 = lo * rng.random_range(0.3..0.9);
    let t7 = hi * rng.random_range(1.1..1.6);
    let mut tau = [0.0; BUCKETS];
    for (l, t) in tau.iter_mut().enumerate() {
        let g = t1 * libm::pow(t7 / t1, l as f64 / (BUCKETS - 1) as f64);
        *t = if l == 0 || l == BUCKETS - 1 {
            g
        } else {
            (g * rng.random_range(0.85..1.15)).clamp(t1, t7)
        };
    }
    tau.sort_by(f64::total_cmp);
    tau
}

/// Two-bucket mix reproducing `share` under `tau`.
fn frequencies_for(tau: &[f64; BUCKETS], share: f64) -> [f64; BUCKETS] {
    let mut f = [0.0; BUCKETS];
    let l = (0..BUCKETS - 1)
        .find(|&l| share <= tau[l + 1])
        .unwrap_or(BUCKETS - 2);
    let (a, b) = (tau[l], tau[l + 1]);
    if b - a <= 0.0 {
        f[l] = 1.0;
        return f;
    }
    let w = ((b - share) / (b - a)).clamp(0.0, 1.0);
    f[l] = w;
    f[l + 1] = 1.0 - w;
    f
}

fn draw_prob(rng: &mut ChaCha8Rng, model: ProbModel) -> f64 {
    match model {
        ProbModel::Bernoulli(l) => {
            if rng.random_bool(l) {
                1.0
            } else {
                0.0
            }
        }
        ProbModel::Uniform { lo, hi } => {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        }
    }
}

/// Draws `k` distinct values from `0..n` in draw order.
fn distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

fn level(x: f64, lo: f64, hi: f64) -> f64 {
    libm::round(x).clamp(lo, hi)
}

pub fn generate_synthetic(
    config: &SynthConfig,
    seed: u64,
) -> Result<(Dataset, SynthTruth), SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.jobs;
    let width = format!("{n}").len();
    let job_id = |j: usize| format!("J{:0width$}", j + 1);
    let job_cluster: Vec<usize> = (0..n).map(|j| j * config.clusters / n).collect();

    let archetype_prob: Vec<Vec<f64>> = (0..config.clusters)
        .map(|c| {
            let model = config.prob_models[c % config.prob_models.len()];
            (0..config.archetypes_per_cluster)
                .map(|_| draw_prob(&mut rng, model))
                .collect()
        })
        .collect();

    let mut jobs = Vec::with_capacity(n);
    let mut tasks = Vec::new();
    let mut truth = SynthTruth {
        seed,
        job_cluster: job_cluster.clone(),
        tau: Vec::with_capacity(n),
        task_share: Vec::new(),
        task_archetype: Vec::new(),
        archetype_prob,
        task_prob: Vec::new(),
        job_prob: Vec::with_capacity(n),
        flipped: Vec::new(),
    };
    let mut job_tasks: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut template: Option<(Vec<usize>, Vec<f64>, [f64; BUCKETS])> = None;

    for j in 0..n {
        let c = job_cluster[j];
        let (arch, shares, tau) = match &template {
            Some(t) if config.identical_jobs => t.clone(),
            _ => {
                let k = rng.random_range(config.tasks_per_job.0..=config.tasks_per_job.1);
                let arch = distinct(&mut rng, config.archetypes_per_cluster, k);
                let shares = dyadic_shares(&mut rng, k);
                let tau = planted_tau(&mut rng, &shares);
                (arch, shares, tau)
            }
        };
        if template.is_none() {
            template = Some((arch.clone(), shares.clone(), tau));
        }
        let jid = job_id(j);
        let mut pj = 0.0;
        let mut mine = Vec::with_capacity(arch.len());
        for (k, (&a, &s)) in arch.iter().zip(&shares).enumerate() {
            let q = truth.archetype_prob[c][a];
            pj += s * q;
            mine.push(tasks.len());
            tasks.push(TaskRecord {
                task_id: format!("{jid}-T{:02}", k + 1),
                job_id: jid.clone(),
                description: format!("cluster {c} archetype {a}"),
                freq: frequencies_for(&tau, s),
            });
            truth.task_share.push(s);
            truth.task_archetype.push(a);
            truth.task_prob.push(q);
        }
        job_tasks.push(mine);
        truth.tau.push(tau);
        let pj = pj.clamp(0.0, 1.0);
        truth.job_prob.push(pj);
        jobs.push(JobRecord {
            job_id: jid,
            title: format!("Synthetic job {} (cluster {c})", j + 1),
            automation_prob: pj,
        });
    }

    let mut flips = config.flip_jobs.clone();
    flips.sort_unstable();
    flips.dedup();
    for &f in &flips {
        jobs[f].automation_prob = 1.0 - jobs[f].automation_prob;
    }
    truth.flipped = flips;

    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let d = if job_cluster[a] == job_cluster[b] {
                config.density
            } else {
                config.cross_density
            };
            if !rng.random_bool(d) {
                continue;
            }
            if job_cluster[a] == job_cluster[b] {
                for &ta in &job_tasks[a] {
                    for &tb in &job_tasks[b] {
                        if truth.task_archetype[ta] == truth.task_archetype[tb] {
                            edges.push(EdgeRecord {
                                task_id_a: tasks[ta].task_id.clone(),
                                task_id_b: tasks[tb].task_id.clone(),
                            });
                        }
                    }
                }
            } else {
                // Archetypes are per cluster; link one random task pair.
                let ta = job_tasks[a][rng.random_range(0..job_tasks[a].len())];
                let tb = job_tasks[b][rng.random_range(0..job_tasks[b].len())];
                edges.push(EdgeRecord {
                    task_id_a: tasks[ta].task_id.clone(),
                    task_id_b: tasks[tb].task_id.clone(),
                });
            }
        }
    }

    let mut attributes = Vec::new();
    if config.attributes {
        for job in &jobs {
            let p = job.automation_prob;
            let mut push = |name: &str, value: f64| {
                attributes.push(AttributeRecord {
                    job_id: job.job_id.clone(),
                    attribute: String::from(name),
                    value,
                })
            };
            let edu = level(12.0 - 11.0 * p + rng.random_range(-1.5..1.5), 1.0, 12.0);
            let ded = level(7.0 - 6.0 * p + rng.random_range(-1.0..1.0), 1.0, 7.0);
            let aut = level(1.0 + 4.0 * p + rng.random_range(-2.5..2.5), 1.0, 5.0);
            push(ATTR_EDUCATION, edu);
            push(ATTR_DEDUCTIVE, ded);
            push(ATTR_AUTOMATION, aut);
        }
    }

    let dataset =
        Dataset::from_records(jobs, tasks, edges, attributes).map_err(SynthError::Invalid)?;
    Ok((dataset, truth))
}
