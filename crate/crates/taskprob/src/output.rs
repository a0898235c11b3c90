//! Stage result files and the readers that let later stages reuse them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use taskprob_core::analysis::{Histogram, ScatterSeries};
use taskprob_core::crossval::CrossvalReport;
use taskprob_core::dataset::Dataset;
use taskprob_core::prob::TaskProbabilities;
use taskprob_core::share::{ShareCoefficients, TaskShareTable};

use crate::io::{LoadError, WriteError, write_csv, write_csv_header};

pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const JOB_PAIRS_FILE: &str = "job_pairs.csv";
pub const SHARES_FILE: &str = "shares.csv";
pub const TASK_PROBS_FILE: &str = "task_probs.csv";
pub const PAIR_DIFFS_FILE: &str = "pair_diffs.csv";
pub const CROSSVAL_JOBS_FILE: &str = "crossval_jobs.csv";
pub const CROSSVAL_TASKS_FILE: &str = "crossval_tasks.csv";
pub const CROSSVAL_HISTOGRAMS_FILE: &str = "crossval_histograms.json";
pub const HISTOGRAMS_FILE: &str = "histograms.json";
pub const ANALYSIS_FILE: &str = "analysis_summary.json";
pub const SHARE_SCATTER_FILE: &str = "fig_share_vs_probability.csv";

#[derive(Serialize)]
struct CoefficientRow<'a> {
    job_id: &'a str,
    tau1: f64,
    tau2: f64,
    tau3: f64,
    tau4: f64,
    tau5: f64,
    tau6: f64,
    tau7: f64,
    raw_share_sum: f64,
    related_jobs: bool,
}

#[derive(Serialize)]
struct JobPairRow<'a> {
    job_id_a: &'a str,
    job_id_b: &'a str,
    delta1: f64,
    delta2: f64,
    delta3: f64,
    delta4: f64,
    delta5: f64,
    delta6: f64,
    delta7: f64,
}

#[derive(Serialize, Deserialize)]
struct ShareRow {
    task_id: String,
    job_id: String,
    raw_share: f64,
    normalized_share: f64,
}

#[derive(Serialize, Deserialize)]
struct TaskProbRow {
    task_id: String,
    job_id: String,
    share: f64,
    p: f64,
    anchored: bool,
}

#[derive(Serialize)]
struct PairDiffRow<'a> {
    task_id_a: &'a str,
    task_id_b: &'a str,
    p_a: f64,
    p_b: f64,
    difference: f64,
}

#[derive(Serialize)]
struct CrossvalJobRow<'a> {
    job_id: &'a str,
    p: f64,
    p_prime: Option<f64>,
    delta: Option<f64>,
    coverage: f64,
    tier: &'static str,
    loo_objective: f64,
}

#[derive(Serialize)]
struct CrossvalTaskRow<'a> {
    task_id: &'a str,
    job_id: &'a str,
    p: f64,
    p_prime: Option<f64>,
    neighbors: usize,
}

#[derive(Serialize)]
struct ScatterRow<'a> {
    id: &'a str,
    x: f64,
    y: f64,
}

/// Serializable copy of [`Histogram`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramDoc {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub clamped: u64,
    pub mean: Option<f64>,
    pub mean_abs: Option<f64>,
}

impl From<&Histogram> for HistogramDoc {
    fn from(h: &Histogram) -> Self {
        Self {
            edges: h.edges.clone(),
            counts: h.counts.clone(),
            total: h.total,
            clamped: h.clamped,
            mean: h.mean,
            mean_abs: h.mean_abs,
        }
    }
}

pub fn write_coefficients(
    dir: &Path,
    dataset: &Dataset,
    coeffs: &ShareCoefficients,
    shares: &TaskShareTable,
) -> Result<(), WriteError> {
    write_csv(
        &dir.join(COEFFICIENTS_FILE),
        dataset.jobs().iter().enumerate().map(|(j, job)| {
            let [tau1, tau2, tau3, tau4, tau5, tau6, tau7] = coeffs.tau[j];
            CoefficientRow {
                job_id: &job.id,
                tau1,
                tau2,
                tau3,
                tau4,
                tau5,
                tau6,
                tau7,
                raw_share_sum: shares.job_raw_sum[j],
                related_jobs: !coeffs.unconstrained[j],
            }
        }),
    )?;
    let path = dir.join(JOB_PAIRS_FILE);
    if coeffs.pairs.is_empty() {
        let mut header = vec!["job_id_a", "job_id_b"];
        header.extend(["delta1", "delta2", "delta3", "delta4", "delta5", "delta6", "delta7"]);
        return write_csv_header(&path, &header);
    }
    write_csv(
        &path,
        coeffs.pairs.iter().zip(&coeffs.delta).map(|(&(a, b), d)| {
            let [delta1, delta2, delta3, delta4, delta5, delta6, delta7] = *d;
            JobPairRow {
                job_id_a: &dataset.jobs()[a].id,
                job_id_b: &dataset.jobs()[b].id,
                delta1,
                delta2,
                delta3,
                delta4,
                delta5,
                delta6,
                delta7,
            }
        }),
    )
}

pub fn write_shares(dir: &Path, dataset: &Dataset, shares: &TaskShareTable) -> Result<(), WriteError> {
    write_csv(
        &dir.join(SHARES_FILE),
        dataset.tasks().iter().enumerate().map(|(t, task)| ShareRow {
            task_id: task.id.clone(),
            job_id: task.job_id.clone(),
            raw_share: shares.raw[t],
            normalized_share: shares.normalized[t],
        }),
    )
}

fn mismatch(path: &Path, line: u64, reason: String) -> LoadError {
    LoadError::Malformed {
        path: path.to_path_buf(),
        line,
        reason,
    }
}

/// Reads `task_id`-keyed rows that must list every task of `dataset` in
/// order.
fn read_task_rows<T: for<'de> Deserialize<'de>>(
    path: &Path,
    dataset: &Dataset,
    id: impl Fn(&T) -> &str,
) -> Result<Vec<T>, LoadError> {
    let file = std::fs::File::open(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let mut rows = Vec::with_capacity(dataset.tasks().len());
    for (k, rec) in rdr.deserialize::<T>().enumerate() {
        let line = k as u64 + 2;
        let row = rec.map_err(|e| mismatch(path, line, e.to_string()))?;
        match dataset.tasks().get(k) {
            Some(task) if task.id == id(&row) => rows.push(row),
            _ => {
                return Err(mismatch(
                    path,
                    line,
                    format!("task `{}` does not match the dataset's task order", id(&row)),
                ));
            }
        }
    }
    if rows.len() != dataset.tasks().len() {
        return Err(mismatch(
            path,
            rows.len() as u64 + 2,
            format!("{} rows for {} tasks", rows.len(), dataset.tasks().len()),
        ));
    }
    Ok(rows)
}

/// Shares as written by [`write_shares`]; normalized values are recomputed
/// from the raw column.
pub fn read_shares(
    path: &Path,
    dataset: &Dataset,
    use_normalized: bool,
) -> Result<TaskShareTable, LoadError> {
    let rows = read_task_rows::<ShareRow>(path, dataset, |r| &r.task_id)?;
    Ok(TaskShareTable::from_raw(
        dataset,
        rows.iter().map(|r| r.raw_share).collect(),
        use_normalized,
    ))
}

pub fn write_task_probs(
    dir: &Path,
    dataset: &Dataset,
    shares: &TaskShareTable,
    probs: &TaskProbabilities,
) -> Result<(), WriteError> {
    write_csv(
        &dir.join(TASK_PROBS_FILE),
        dataset.tasks().iter().enumerate().map(|(t, task)| TaskProbRow {
            task_id: task.id.clone(),
            job_id: task.job_id.clone(),
            share: shares.share(t),
            p: probs.get(t).unwrap_or(f64::NAN),
            anchored: probs.anchored[t],
        }),
    )?;
    let path = dir.join(PAIR_DIFFS_FILE);
    if probs.pairs.is_empty() {
        return write_csv_header(&path, &["task_id_a", "task_id_b", "p_a", "p_b", "difference"]);
    }
    let tasks = dataset.tasks();
    write_csv(
        &path,
        probs.pairs.iter().map(|&(a, b)| {
            let (pa, pb) = (probs.get(a).unwrap(), probs.get(b).unwrap());
            PairDiffRow {
                task_id_a: &tasks[a].id,
                task_id_b: &tasks[b].id,
                p_a: pa,
                p_b: pb,
                difference: (pa - pb).abs(),
            }
        }),
    )
}

/// Probabilities as written by [`write_task_probs`]. Solver metadata is not
/// stored; the objective is recomputed from the pair differences.
pub fn read_task_probs(
    path: &Path,
    dataset: &Dataset,
    epsilon: f64,
) -> Result<TaskProbabilities, LoadError> {
    let rows = read_task_rows::<TaskProbRow>(path, dataset, |r| &r.task_id)?;
    for (k, r) in rows.iter().enumerate() {
        if !(0.0..=1.0).contains(&r.p) {
            return Err(mismatch(
                path,
                k as u64 + 2,
                format!("probability {} outside [0,1]", r.p),
            ));
        }
    }
    let values: Vec<Option<f64>> = rows.iter().map(|r| Some(r.p)).collect();
    let pairs = dataset.graph().edges().to_vec();
    let pair_slack: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| (rows[a].p - rows[b].p).abs())
        .collect();
    let mut anchored = vec![false; values.len()];
    for &(a, b) in &pairs {
        anchored[a] = true;
        anchored[b] = true;
    }
    Ok(TaskProbabilities {
        epsilon,
        objective: pair_slack.iter().sum(),
        values,
        pairs,
        pair_slack,
        iterations: 0,
        num_variables: 0,
        num_constraints: 0,
        anchored,
        excluded_job: None,
    })
}

pub fn write_crossval(dir: &Path, dataset: &Dataset, report: &CrossvalReport) -> Result<(), WriteError> {
    write_csv(
        &dir.join(CROSSVAL_JOBS_FILE),
        report.jobs.iter().map(|o| CrossvalJobRow {
            job_id: &dataset.jobs()[o.job].id,
            p: o.p,
            p_prime: o.p_prime,
            delta: o.delta,
            coverage: o.coverage,
            tier: o.tier.name(),
            loo_objective: o.loo_objective,
        }),
    )?;
    write_csv(
        &dir.join(CROSSVAL_TASKS_FILE),
        report.jobs.iter().flat_map(|o| {
            o.tasks.iter().map(|t| CrossvalTaskRow {
                task_id: &dataset.tasks()[t.task].id,
                job_id: &dataset.jobs()[o.job].id,
                p: t.p,
                p_prime: t.p_prime,
                neighbors: t.neighbors,
            })
        }),
    )
}

pub fn write_scatter(path: &Path, series: &ScatterSeries) -> Result<(), WriteError> {
    if series.is_empty() {
        return write_csv_header(path, &["id", "x", "y"]);
    }
    write_csv(
        path,
        series
            .ids
            .iter()
            .zip(series.x.iter().zip(&series.y))
            .map(|(id, (&x, &y))| ScatterRow { id, x, y }),
    )
}

/// File name for an attribute scatter; characters outside `[A-Za-z0-9_-]`
/// become `_`.
pub fn attribute_scatter_file(attribute: &str) -> String {
    let clean: String = attribute
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("fig_attribute_{clean}.csv")
}
