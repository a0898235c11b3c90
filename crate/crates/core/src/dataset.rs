//! Jobs, tasks, frequency distributions and the task relatedness graph.
//!
//! [`Dataset::from_records`] is the only constructor. It validates every record
//! and collects all problems into a [`ValidationReport`] instead of stopping
//! at the first one, so callers can show a full list.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Number of frequency buckets, from "yearly or less" to "hourly or more".
pub const BUCKETS: usize = 7;

/// Largest deviation of a frequency row sum from 1 that is silently rescaled.
pub const RENORMALIZE_BAND: f64 = 0.02;

/// Rows closer to 1 than this are kept bit-for-bit, so that writing and
/// reloading a dataset is idempotent.
const EXACT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyDistribution([f64; BUCKETS]);

#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyError {
    OutOfRange { bucket: usize, value: f64 },
    BadSum { sum: f64 },
}

impl FrequencyDistribution {
    /// Checks a raw row and rescales it when its sum is within
    /// [`RENORMALIZE_BAND`] of 1.
    pub fn new(raw: [f64; BUCKETS]) -> Result<Self, FrequencyError> {
        for (i, &v) in raw.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(FrequencyError::OutOfRange {
                    bucket: i + 1,
                    value: v,
                });
            }
        }
        let sum: f64 = raw.iter().sum();
        let dev = (sum - 1.0).abs();
        if dev > RENORMALIZE_BAND {
            return Err(FrequencyError::BadSum { sum });
        }
        if dev <= EXACT_SUM_TOL {
            return Ok(Self(raw));
        }
        Ok(Self(raw.map(|v| v / sum)))
    }

    pub fn values(&self) -> &[f64; BUCKETS] {
        &self.0
    }

    pub fn get(&self, bucket: usize) -> f64 {
        self.0[bucket]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: String,
    pub title: String,
    pub automation_prob: f64,
    pub attributes: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: String,
    pub job_id: String,
    pub description: String,
    pub freq: FrequencyDistribution,
}

/// Undirected graph on task indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelatednessGraph {
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl RelatednessGraph {
    /// Builds the graph from index pairs. Pairs are stored with the smaller
    /// index first, sorted, without repeats.
    pub fn new(task_count: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let set: BTreeSet<(usize, usize)> = pairs
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        let mut adjacency = alloc::vec![Vec::new(); task_count];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for n in &mut adjacency {
            n.sort_unstable();
        }
        Self {
            edges: set.into_iter().collect(),
            adjacency,
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, task: usize) -> &[usize] {
        &self.adjacency[task]
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Input row for a job, as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job_id: String,
    pub title: String,
    pub automation_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task_id: String,
    pub job_id: String,
    pub description: String,
    pub freq: [f64; BUCKETS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub task_id_a: String,
    pub task_id_b: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeRecord {
    pub job_id: String,
    pub attribute: String,
    pub value: f64,
}

/// Which input collection a problem was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    Jobs,
    Tasks,
    Edges,
    Attributes,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Jobs => "jobs",
            Source::Tasks => "tasks",
            Source::Edges => "related",
            Source::Attributes => "attributes",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    DuplicateJob(String),
    DuplicateTask(String),
    ProbabilityOutOfRange { job: String, value: f64 },
    JobWithoutTasks(String),
    UnknownJob { task: String, job: String },
    Frequency { task: String, error: FrequencyError },
    SelfLoop(String),
    DanglingEdge { a: String, b: String, missing: String },
    AttributeUnknownJob { job: String, attribute: String },
    AttributeNotFinite { job: String, attribute: String },
    DuplicateAttribute { job: String, attribute: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateJob(id) => write!(f, "duplicate job id `{id}`"),
            Issue::DuplicateTask(id) => write!(f, "duplicate task id `{id}`"),
            Issue::ProbabilityOutOfRange { job, value } => {
                write!(f, "job `{job}` has automation_prob {value} outside [0,1]")
            }
            Issue::JobWithoutTasks(id) => write!(f, "job without tasks: `{id}`"),
            Issue::UnknownJob { task, job } => {
                write!(f, "task `{task}` references unknown job `{job}`")
            }
            Issue::Frequency { task, error } => match error {
                FrequencyError::OutOfRange { bucket, value } => {
                    write!(f, "task `{task}`: f{bucket} = {value} outside [0,1]")
                }
                FrequencyError::BadSum { sum } => write!(
                    f,
                    "task `{task}`: frequency sum {sum} deviates from 1 by more than {RENORMALIZE_BAND}"
                ),
            },
            Issue::SelfLoop(id) => write!(f, "edge ({id},{id}) is a self-loop"),
            Issue::DanglingEdge { a, b, missing } => {
                write!(f, "edge ({a},{b}) references unknown task `{missing}`")
            }
            Issue::AttributeUnknownJob { job, attribute } => {
                write!(f, "attribute `{attribute}` references unknown job `{job}`")
            }
            Issue::AttributeNotFinite { job, attribute } => {
                write!(f, "attribute `{attribute}` of job `{job}` is not finite")
            }
            Issue::DuplicateAttribute { job, attribute } => {
                write!(f, "attribute `{attribute}` given twice for job `{job}`")
            }
        }
    }
}

/// A problem together with the record it came from. `record` is the 0-based
/// index within its collection; jobs without tasks point at the job record.
#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub source: Source,
    pub record: usize,
    pub issue: Issue,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Located>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, source: Source, record: usize, issue: Issue) {
        self.issues.push(Located {
            source,
            record,
            issue,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.issues {
            writeln!(f, "{} record {}: {}", l.source, l.record, l.issue)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    jobs: Vec<Job>,
    tasks: Vec<Task>,
    graph: RelatednessGraph,
    job_index: BTreeMap<String, usize>,
    task_index: BTreeMap<String, usize>,
    task_job: Vec<usize>,
    job_tasks: Vec<Vec<usize>>,
}

impl Dataset {
    /// Validates records and assembles a dataset. Jobs and tasks keep their
    /// input order; edges are stored once per unordered pair.
    pub fn from_records(
        jobs: Vec<JobRecord>,
        tasks: Vec<TaskRecord>,
        edges: Vec<EdgeRecord>,
        attributes: Vec<AttributeRecord>,
    ) -> Result<Self, ValidationReport> {
        let mut report = ValidationReport::default();

        let mut job_index = BTreeMap::new();
        let mut job_list = Vec::with_capacity(jobs.len());
        for (i, r) in jobs.into_iter().enumerate() {
            if job_index.contains_key(&r.job_id) {
                report.push(Source::Jobs, i, Issue::DuplicateJob(r.job_id));
                continue;
            }
            if !(0.0..=1.0).contains(&r.automation_prob) {
                report.push(
                    Source::Jobs,
                    i,
                    Issue::ProbabilityOutOfRange {
                        job: r.job_id.clone(),
                        value: r.automation_prob,
                    },
                );
            }
            job_index.insert(r.job_id.clone(), job_list.len());
            job_list.push((
                i,
                Job {
                    id: r.job_id,
                    title: r.title,
                    automation_prob: r.automation_prob,
                    attributes: BTreeMap::new(),
                },
            ));
        }

        let mut task_index = BTreeMap::new();
        let mut task_list = Vec::with_capacity(tasks.len());
        let mut task_job = Vec::with_capacity(tasks.len());
        let mut job_tasks = alloc::vec![Vec::new(); job_list.len()];
        for (i, r) in tasks.into_iter().enumerate() {
            if task_index.contains_key(&r.task_id) {
                report.push(Source::Tasks, i, Issue::DuplicateTask(r.task_id));
                continue;
            }
            let Some(&j) = job_index.get(&r.job_id) else {
                report.push(
                    Source::Tasks,
                    i,
                    Issue::UnknownJob {
                        task: r.task_id,
                        job: r.job_id,
                    },
                );
                continue;
            };
            let freq = match FrequencyDistribution::new(r.freq) {
                Ok(f) => f,
                Err(error) => {
                    report.push(
                        Source::Tasks,
                        i,
                        Issue::Frequency {
                            task: r.task_id,
                            error,
                        },
                    );
                    continue;
                }
            };
            let t = task_list.len();
            task_index.insert(r.task_id.clone(), t);
            job_tasks[j].push(t);
            task_job.push(j);
            task_list.push(Task {
                id: r.task_id,
                job_id: r.job_id,
                description: r.description,
                freq,
            });
        }

        for (j, (rec, job)) in job_list.iter().enumerate() {
            if job_tasks[j].is_empty() {
                report.push(Source::Jobs, *rec, Issue::JobWithoutTasks(job.id.clone()));
            }
        }

        let mut pairs = Vec::with_capacity(edges.len());
        for (i, e) in edges.into_iter().enumerate() {
            if e.task_id_a == e.task_id_b {
                report.push(Source::Edges, i, Issue::SelfLoop(e.task_id_a));
                continue;
            }
            let a = task_index.get(&e.task_id_a);
            let b = task_index.get(&e.task_id_b);
            match (a, b) {
                (Some(&a), Some(&b)) => pairs.push((a, b)),
                _ => {
                    let missing = if a.is_none() {
                        e.task_id_a.clone()
                    } else {
                        e.task_id_b.clone()
                    };
                    report.push(
                        Source::Edges,
                        i,
                        Issue::DanglingEdge {
                            a: e.task_id_a,
                            b: e.task_id_b,
                            missing,
                        },
                    );
                }
            }
        }

        for (i, r) in attributes.into_iter().enumerate() {
            let Some(&j) = job_index.get(&r.job_id) else {
                report.push(
                    Source::Attributes,
                    i,
                    Issue::AttributeUnknownJob {
                        job: r.job_id,
                        attribute: r.attribute,
                    },
                );
                continue;
            };
            if !r.value.is_finite() {
                report.push(
                    Source::Attributes,
                    i,
                    Issue::AttributeNotFinite {
                        job: r.job_id,
                        attribute: r.attribute,
                    },
                );
                continue;
            }
            let attrs = &mut job_list[j].1.attributes;
            if attrs.contains_key(&r.attribute) {
                report.push(
                    Source::Attributes,
                    i,
                    Issue::DuplicateAttribute {
                        job: r.job_id,
                        attribute: r.attribute,
                    },
                );
                continue;
            }
            attrs.insert(r.attribute, r.value);
        }

        if !report.is_clean() {
            return Err(report);
        }
        let graph = RelatednessGraph::new(task_list.len(), pairs);
        Ok(Self {
            jobs: job_list.into_iter().map(|(_, j)| j).collect(),
            tasks: task_list,
            graph,
            job_index,
            task_index,
            task_job,
            job_tasks,
        })
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn graph(&self) -> &RelatednessGraph {
        &self.graph
    }

    pub fn job_by_id(&self, id: &str) -> Option<usize> {
        self.job_index.get(id).copied()
    }

    pub fn task_by_id(&self, id: &str) -> Option<usize> {
        self.task_index.get(id).copied()
    }

    /// Index of the job owning task `t`.
    pub fn job_of(&self, t: usize) -> usize {
        self.task_job[t]
    }

    /// Task indices of job `j`, in input order.
    pub fn tasks_of(&self, j: usize) -> &[usize] {
        &self.job_tasks[j]
    }

    /// Records that reproduce this dataset through [`Dataset::from_records`].
    pub fn to_records(
        &self,
    ) -> (
        Vec<JobRecord>,
        Vec<TaskRecord>,
        Vec<EdgeRecord>,
        Vec<AttributeRecord>,
    ) {
        let jobs = self
            .jobs
            .iter()
            .map(|j| JobRecord {
                job_id: j.id.clone(),
                title: j.title.clone(),
                automation_prob: j.automation_prob,
            })
            .collect();
        let tasks = self
            .tasks
            .iter()
            .map(|t| TaskRecord {
                task_id: t.id.clone(),
                job_id: t.job_id.clone(),
                description: t.description.clone(),
                freq: *t.freq.values(),
            })
            .collect();
        let edges = self
            .graph
            .edges()
            .iter()
            .map(|&(a, b)| EdgeRecord {
                task_id_a: self.tasks[a].id.clone(),
                task_id_b: self.tasks[b].id.clone(),
            })
            .collect();
        let attributes = self
            .jobs
            .iter()
            .flat_map(|j| {
                j.attributes.iter().map(|(k, &v)| AttributeRecord {
                    job_id: j.id.clone(),
                    attribute: k.clone(),
                    value: v,
                })
            })
            .collect();
        (jobs, tasks, edges, attributes)
    }

    /// Pairs of distinct jobs owning at least one related task pair, as
    /// `(smaller index, larger index)`, sorted.
    pub fn derive_job_relatedness(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .graph
            .edges()
            .iter()
            .map(|&(a, b)| (self.task_job[a], self.task_job[b]))
            .filter(|(ja, jb)| ja != jb)
            .map(|(ja, jb)| (ja.min(jb), ja.max(jb)))
            .collect();
        set.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn job(id: &str, p: f64) -> JobRecord {
        JobRecord {
            job_id: id.to_string(),
            title: id.to_string(),
            automation_prob: p,
        }
    }

    fn task(id: &str, job: &str, freq: [f64; 7]) -> TaskRecord {
        TaskRecord {
            task_id: id.to_string(),
            job_id: job.to_string(),
            description: String::new(),
            freq,
        }
    }

    fn edge(a: &str, b: &str) -> EdgeRecord {
        EdgeRecord {
            task_id_a: a.to_string(),
            task_id_b: b.to_string(),
        }
    }

    const ONE: [f64; 7] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];

    #[test]
    fn renormalizes_inside_band_only() {
        let f = FrequencyDistribution::new([0.5, 0.51, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((f.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(
            FrequencyDistribution::new([0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.1]),
            Err(FrequencyError::BadSum { sum: 1.1 })
        );
        assert!(matches!(
            FrequencyDistribution::new([-0.1, 1.1, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(FrequencyError::OutOfRange { bucket: 1, .. })
        ));
    }

    #[test]
    fn job_without_tasks_is_reported() {
        let err = Dataset::from_records(vec![job("j1", 0.4)], vec![], vec![], vec![]).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].issue, Issue::JobWithoutTasks("j1".into()));
        assert!(err.to_string().contains("job without tasks"));
    }

    #[test]
    fn collects_every_issue() {
        let err = Dataset::from_records(
            vec![job("j1", 0.4), job("j1", 0.2), job("j2", 1.5)],
            vec![
                task("t1", "j1", ONE),
                task("t1", "j1", ONE),
                task("t2", "jx", ONE),
                task("t3", "j2", [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.1]),
            ],
            vec![edge("t1", "t1"), edge("t1", "t9")],
            vec![],
        )
        .unwrap_err();
        let kinds: Vec<_> = err.issues.iter().map(|l| (l.source, l.record)).collect();
        assert_eq!(
            kinds,
            [
                (Source::Jobs, 1),
                (Source::Jobs, 2),
                (Source::Tasks, 1),
                (Source::Tasks, 2),
                (Source::Tasks, 3),
                (Source::Jobs, 2),
                (Source::Edges, 0),
                (Source::Edges, 1),
            ]
        );
        assert!(matches!(
            &err.issues[7].issue,
            Issue::DanglingEdge { missing, .. } if missing == "t9"
        ));
    }

    #[test]
    fn job_relatedness_is_not_transitive() {
        let d = Dataset::from_records(
            vec![job("j1", 0.1), job("j2", 0.2), job("j3", 0.3)],
            vec![
                task("a", "j1", ONE),
                task("a2", "j1", ONE),
                task("b", "j2", ONE),
                task("c", "j3", ONE),
            ],
            vec![edge("b", "a"), edge("a", "a2"), edge("a", "b")],
            vec![],
        )
        .unwrap();
        assert_eq!(d.derive_job_relatedness(), [(0, 1)]);
        assert_eq!(d.graph().len(), 2);
        assert_eq!(d.graph().neighbors(0), [1, 2]);
        assert_eq!(d.tasks_of(0), [0, 1]);
        assert_eq!(d.job_of(2), 1);
    }

    #[test]
    fn attributes_attach_to_jobs() {
        let rec = |j: &str, a: &str, v: f64| AttributeRecord {
            job_id: j.into(),
            attribute: a.into(),
            value: v,
        };
        let d = Dataset::from_records(
            vec![job("j1", 0.1)],
            vec![task("a", "j1", ONE)],
            vec![],
            vec![rec("j1", "education", 3.0)],
        )
        .unwrap();
        assert_eq!(d.jobs()[0].attributes["education"], 3.0);
        let err = Dataset::from_records(
            vec![job("j1", 0.1)],
            vec![task("a", "j1", ONE)],
            vec![],
            vec![
                rec("j1", "x", 1.0),
                rec("j1", "x", 2.0),
                rec("j9", "x", 1.0),
                rec("j1", "y", f64::NAN),
            ],
        )
        .unwrap_err();
        assert_eq!(err.issues.len(), 3);
    }

    #[test]
    fn records_round_trip() {
        let d = Dataset::from_records(
            vec![job("j1", 0.1), job("j2", 0.7)],
            vec![
                task("a", "j1", [0.3, 0.3, 0.3, 0.105, 0.0, 0.0, 0.0]),
                task("b", "j2", ONE),
            ],
            vec![edge("b", "a")],
            vec![],
        )
        .unwrap();
        let (j, t, e, a) = d.to_records();
        let again = Dataset::from_records(j, t, e, a).unwrap();
        assert_eq!(d, again);
    }
}
