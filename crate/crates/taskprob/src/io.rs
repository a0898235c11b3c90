//! Dataset files: four CSVs in a directory, or one JSON document.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use taskprob_core::dataset::{
    AttributeRecord, Dataset, EdgeRecord, JobRecord, Source, TaskRecord,
};

pub const JOBS_FILE: &str = "jobs.csv";
pub const TASKS_FILE: &str = "tasks.csv";
pub const EDGES_FILE: &str = "related.csv";
pub const ATTRIBUTES_FILE: &str = "attributes.csv";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {reason}", path.display())]
    Malformed {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("{0}")]
    Invalid(InvalidDataset),
}

impl LoadError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        LoadError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// A validation issue traced back to its input file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IssueAt {
    pub file: PathBuf,
    /// 1-based line for CSV input, `None` for JSON.
    pub line: Option<u64>,
    /// 0-based record index within the file.
    pub record: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvalidDataset {
    pub issues: Vec<IssueAt>,
}

impl fmt::Display for InvalidDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            match i.line {
                Some(line) => write!(f, "{}:{line}: {}", i.file.display(), i.message)?,
                None => write!(f, "{} record {}: {}", i.file.display(), i.record, i.message)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputPaths {
    pub jobs: PathBuf,
    pub tasks: PathBuf,
    pub edges: PathBuf,
    pub attributes: Option<PathBuf>,
}

impl InputPaths {
    /// Standard file names inside `dir`; attributes only if present.
    pub fn in_dir(dir: &Path) -> Self {
        let attributes = dir.join(ATTRIBUTES_FILE);
        Self {
            jobs: dir.join(JOBS_FILE),
            tasks: dir.join(TASKS_FILE),
            edges: dir.join(EDGES_FILE),
            attributes: attributes.exists().then_some(attributes),
        }
    }

    fn path(&self, source: Source) -> &Path {
        match source {
            Source::Jobs => &self.jobs,
            Source::Tasks => &self.tasks,
            Source::Edges => &self.edges,
            Source::Attributes => self.attributes.as_deref().unwrap_or(Path::new("")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRow {
    pub job_id: String,
    pub title: String,
    pub automation_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task_id: String,
    pub job_id: String,
    pub description: String,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    pub f6: f64,
    pub f7: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub task_id_a: String,
    pub task_id_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRow {
    pub job_id: String,
    pub attribute: String,
    pub value: f64,
}

/// JSON mirror of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDoc {
    pub jobs: Vec<JobRow>,
    pub tasks: Vec<TaskRow>,
    pub related: Vec<EdgeRow>,
    #[serde(default)]
    pub attributes: Vec<AttributeRow>,
}

impl From<JobRow> for JobRecord {
    fn from(r: JobRow) -> Self {
        JobRecord {
            job_id: r.job_id,
            title: r.title,
            automation_prob: r.automation_prob,
        }
    }
}

impl From<TaskRow> for TaskRecord {
    fn from(r: TaskRow) -> Self {
        TaskRecord {
            task_id: r.task_id,
            job_id: r.job_id,
            description: r.description,
            freq: [r.f1, r.f2, r.f3, r.f4, r.f5, r.f6, r.f7],
        }
    }
}

impl From<EdgeRow> for EdgeRecord {
    fn from(r: EdgeRow) -> Self {
        EdgeRecord {
            task_id_a: r.task_id_a,
            task_id_b: r.task_id_b,
        }
    }
}

impl From<AttributeRow> for AttributeRecord {
    fn from(r: AttributeRow) -> Self {
        AttributeRecord {
            job_id: r.job_id,
            attribute: r.attribute,
            value: r.value,
        }
    }
}

impl DatasetDoc {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let (jobs, tasks, edges, attributes) = dataset.to_records();
        Self {
            jobs: jobs
                .into_iter()
                .map(|j| JobRow {
                    job_id: j.job_id,
                    title: j.title,
                    automation_prob: j.automation_prob,
                })
                .collect(),
            tasks: tasks
                .into_iter()
                .map(|t| {
                    let [f1, f2, f3, f4, f5, f6, f7] = t.freq;
                    TaskRow {
                        task_id: t.task_id,
                        job_id: t.job_id,
                        description: t.description,
                        f1,
                        f2,
                        f3,
                        f4,
                        f5,
                        f6,
                        f7,
                    }
                })
                .collect(),
            related: edges
                .into_iter()
                .map(|e| EdgeRow {
                    task_id_a: e.task_id_a,
                    task_id_b: e.task_id_b,
                })
                .collect(),
            attributes: attributes
                .into_iter()
                .map(|a| AttributeRow {
                    job_id: a.job_id,
                    attribute: a.attribute,
                    value: a.value,
                })
                .collect(),
        }
    }
}

/// Rows with the line each one started on.
fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, Vec<u64>), LoadError> {
    let file = File::open(path).map_err(|e| LoadError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let malformed = |line: u64, reason: String| LoadError::Malformed {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    let csv::ErrorKind::Io(io) = e.into_kind() else {
                        unreachable!()
                    };
                    return Err(LoadError::io(path, io));
                }
                let line = e.position().map_or(0, |p| p.line());
                return Err(malformed(line, e.to_string()));
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .deserialize(Some(&headers))
            .map_err(|e| malformed(line, deserialize_reason(&e)))?;
        rows.push(row);
        lines.push(line);
    }
    Ok((rows, lines))
}

fn deserialize_reason(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(i) => format!("field {}: {}", i + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

fn records<R, T: From<R>>(rows: Vec<R>) -> Vec<T> {
    rows.into_iter().map(T::from).collect()
}

/// Loads and validates the CSV files. Every validation issue is collected
/// and reported with its file and line.
pub fn load_dataset(paths: &InputPaths) -> Result<Dataset, LoadError> {
    let (jobs, job_lines) = read_csv::<JobRow>(&paths.jobs)?;
    let (tasks, task_lines) = read_csv::<TaskRow>(&paths.tasks)?;
    let (edges, edge_lines) = read_csv::<EdgeRow>(&paths.edges)?;
    let (attrs, attr_lines) = match &paths.attributes {
        Some(p) => read_csv::<AttributeRow>(p)?,
        None => (Vec::new(), Vec::new()),
    };
    Dataset::from_records(records(jobs), records(tasks), records(edges), records(attrs)).map_err(
        |report| {
            let line_of = |s: Source, r: usize| {
                let lines = match s {
                    Source::Jobs => &job_lines,
                    Source::Tasks => &task_lines,
                    Source::Edges => &edge_lines,
                    Source::Attributes => &attr_lines,
                };
                lines.get(r).copied()
            };
            LoadError::Invalid(InvalidDataset {
                issues: report
                    .issues
                    .iter()
                    .map(|l| IssueAt {
                        file: paths.path(l.source).to_path_buf(),
                        line: line_of(l.source, l.record),
                        record: l.record,
                        message: l.issue.to_string(),
                    })
                    .collect(),
            })
        },
    )
}

pub fn load_json(path: &Path) -> Result<Dataset, LoadError> {
    let file = File::open(path).map_err(|e| LoadError::io(path, e))?;
    let doc: DatasetDoc =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| LoadError::Malformed {
            path: path.to_path_buf(),
            line: e.line() as u64,
            reason: e.to_string(),
        })?;
    Dataset::from_records(
        records(doc.jobs),
        records(doc.tasks),
        records(doc.related),
        records(doc.attributes),
    )
    .map_err(|report| {
        LoadError::Invalid(InvalidDataset {
            issues: report
                .issues
                .iter()
                .map(|l| IssueAt {
                    file: path.to_path_buf(),
                    line: None,
                    record: l.record,
                    message: format!("{}: {}", l.source, l.issue),
                })
                .collect(),
        })
    })
}

/// A directory of CSVs or a `.json` document.
pub fn load_input(path: &Path) -> Result<Dataset, LoadError> {
    if path.is_dir() {
        load_dataset(&InputPaths::in_dir(path))
    } else {
        load_json(path)
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, std::io::Error> {
    File::create(path).map(BufWriter::new)
}

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

pub fn write_csv<T: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = T>,
) -> Result<(), WriteError> {
    let wrap = |source| WriteError {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(create(path).map_err(wrap)?);
    for row in rows {
        w.serialize(row).map_err(|e| wrap(e.into()))?;
    }
    w.flush().map_err(wrap)
}

/// Header-only CSV for an empty table.
pub fn write_csv_header(path: &Path, header: &[&str]) -> Result<(), WriteError> {
    let wrap = |source| WriteError {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(create(path).map_err(wrap)?);
    w.write_record(header).map_err(|e| wrap(e.into()))?;
    w.flush().map_err(wrap)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), WriteError> {
    let wrap = |source| WriteError {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create(path).map_err(wrap)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| wrap(e.into()))?;
    w.write_all(b"\n").map_err(wrap)?;
    w.flush().map_err(wrap)
}

/// Writes the four CSVs into `dir`. The attributes file is always written.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<(), WriteError> {
    let doc = DatasetDoc::from_dataset(dataset);
    write_csv(&dir.join(JOBS_FILE), &doc.jobs)?;
    write_csv(&dir.join(TASKS_FILE), &doc.tasks)?;
    if doc.related.is_empty() {
        write_csv_header(&dir.join(EDGES_FILE), &["task_id_a", "task_id_b"])?;
    } else {
        write_csv(&dir.join(EDGES_FILE), &doc.related)?;
    }
    if doc.attributes.is_empty() {
        write_csv_header(&dir.join(ATTRIBUTES_FILE), &["job_id", "attribute", "value"])
    } else {
        write_csv(&dir.join(ATTRIBUTES_FILE), &doc.attributes)
    }
}

pub fn write_dataset_json(dataset: &Dataset, path: &Path) -> Result<(), WriteError> {
    write_json(path, &DatasetDoc::from_dataset(dataset))
}
