//! Command-line interface.

use std::ffi::OsString;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use taskprob_core::analysis::Estimator;
use taskprob_core::crossval::OutlierThresholds;
use taskprob_core::dataset::{BUCKETS, Dataset};
use taskprob_core::synth::{SynthConfig, SynthTruth, generate_synthetic};

use crate::config::{ConfigError, RunConfig};
use crate::error::{AppError, EXIT_IO, EXIT_OK, EXIT_VALIDATION};
use crate::io::{self, IssueAt, LoadError, write_json};
use crate::output::{SHARES_FILE, TASK_PROBS_FILE, read_shares, read_task_probs};
use crate::pipeline::{Runner, ensure_dir, run_all};

pub const TRUTH_FILE: &str = "truth.json";

#[derive(Debug, Parser)]
#[command(name = "taskprob", version, about = "Task-level automation probabilities from job-level probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Dataset directory (jobs.csv, tasks.csv, related.csv, optional
    /// attributes.csv) or a JSON dataset file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Relative band half-width for share sums and job probabilities.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Feed raw shares (summing to 1 ± epsilon) to later stages.
    #[arg(long, global = true)]
    pub no_normalize_shares: bool,
    #[arg(long, global = true, default_value_t = 0.5)]
    pub outlier_strong: f64,
    #[arg(long, global = true, default_value_t = 0.2)]
    pub outlier_review: f64,
    #[arg(long, global = true, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Cross-validation worker threads; output does not depend on it.
    #[arg(long, global = true, default_value_t = NonZeroUsize::MIN)]
    pub jobs: NonZeroUsize,
    /// Also write the LPs in text LP format.
    #[arg(long, global = true)]
    pub dump_lp: bool,
    /// Record per-stage wall-clock seconds in the manifest (breaks
    /// byte-identical reruns).
    #[arg(long, global = true)]
    pub record_timings: bool,
    #[arg(long, global = true, value_enum, default_value_t = EstimatorArg::Pearson)]
    pub estimator: EstimatorArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Pearson,
    Spearman,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset and print a JSON report; exit 1 if it has issues.
    Validate,
    /// Solve the share LP; writes coefficients.csv, job_pairs.csv, shares.csv.
    Shares,
    /// Solve the probability LP; writes task_probs.csv, pair_diffs.csv.
    Probs(StageInputs),
    /// Leave-one-out cross-validation over all jobs.
    Crossval(StageInputs),
    /// Histograms, scatter series and correlations.
    Analyze(StageInputs),
    /// All stages in order.
    Run,
    /// Write a synthetic dataset and its planted truth to --out.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct StageInputs {
    /// Shares from a previous `shares` run [default: <out>/shares.csv].
    #[arg(long)]
    pub shares: Option<PathBuf>,
    /// Probabilities from a previous `probs` run [default:
    /// <out>/task_probs.csv]. Ignored by `probs`.
    #[arg(long)]
    pub probs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Default,
    TwoCluster,
    Consistent,
    IdenticalPair,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Default)]
    pub preset: Preset,
    #[arg(long)]
    pub num_jobs: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub tasks_min: Option<usize>,
    #[arg(long)]
    pub tasks_max: Option<usize>,
    #[arg(long)]
    pub archetypes: Option<usize>,
    /// Probability that two jobs of one cluster are related.
    #[arg(long)]
    pub density: Option<f64>,
    /// Probability that two jobs of different clusters are related.
    #[arg(long)]
    pub cross_density: Option<f64>,
    /// 0-based job index whose probability becomes 1 − p (repeatable).
    #[arg(long = "flip")]
    pub flip: Vec<usize>,
    #[arg(long)]
    pub no_attributes: bool,
    /// Also write the dataset as one JSON document.
    #[arg(long)]
    pub json: bool,
}

impl SynthArgs {
    pub fn config(&self) -> SynthConfig {
        let mut c = match self.preset {
            Preset::Default => SynthConfig::default(),
            Preset::TwoCluster => SynthConfig::two_cluster(),
            Preset::Consistent => SynthConfig::consistent(),
            Preset::IdenticalPair => SynthConfig::identical_pair(),
        };
        if let Some(v) = self.num_jobs {
            c.jobs = v;
        }
        if let Some(v) = self.clusters {
            c.clusters = v;
        }
        if let Some(v) = self.tasks_min {
            c.tasks_per_job.0 = v;
        }
        if let Some(v) = self.tasks_max {
            c.tasks_per_job.1 = v;
        }
        if let Some(v) = self.archetypes {
            c.archetypes_per_cluster = v;
        }
        if let Some(v) = self.density {
            c.density = v;
        }
        if let Some(v) = self.cross_density {
            c.cross_density = v;
        }
        c.flip_jobs.extend(&self.flip);
        if self.no_attributes {
            c.attributes = false;
        }
        c
    }
}

impl GlobalArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            input: self.input.clone(),
            out: self.out.clone(),
            epsilon: self.epsilon,
            normalize_shares: !self.no_normalize_shares,
            thresholds: OutlierThresholds {
                strong: self.outlier_strong,
                review: self.outlier_review,
            },
            bins: self.bins,
            seed: self.seed,
            jobs: self.jobs,
            dump_lp: self.dump_lp,
            record_timings: self.record_timings,
            estimator: match self.estimator {
                EstimatorArg::Pearson => Estimator::Pearson,
                EstimatorArg::Spearman => Estimator::Spearman,
            },
            ..RunConfig::default()
        }
    }
}

#[derive(Serialize)]
struct ValidationDoc {
    valid: bool,
    jobs: Option<usize>,
    tasks: Option<usize>,
    related_task_pairs: Option<usize>,
    related_job_pairs: Option<usize>,
    issues: Vec<IssueAt>,
}

fn validate(cfg: &RunConfig) -> i32 {
    let Some(input) = &cfg.input else {
        eprintln!("error: {}", ConfigError::MissingInput);
        return EXIT_VALIDATION;
    };
    let (doc, code) = match io::load_input(input) {
        Ok(ds) => (
            ValidationDoc {
                valid: true,
                jobs: Some(ds.jobs().len()),
                tasks: Some(ds.tasks().len()),
                related_task_pairs: Some(ds.graph().len()),
                related_job_pairs: Some(ds.derive_job_relatedness().len()),
                issues: Vec::new(),
            },
            EXIT_OK,
        ),
        Err(e) => {
            eprintln!("{e}");
            let (issues, code) = match e {
                LoadError::Invalid(inv) => (inv.issues, EXIT_VALIDATION),
                LoadError::Malformed { path, line, reason } => (
                    vec![IssueAt {
                        file: path,
                        line: Some(line),
                        record: line.saturating_sub(2) as usize,
                        message: reason,
                    }],
                    EXIT_VALIDATION,
                ),
                LoadError::Io { path, source } => (
                    vec![IssueAt {
                        file: path,
                        line: None,
                        record: 0,
                        message: source.to_string(),
                    }],
                    EXIT_IO,
                ),
            };
            (
                ValidationDoc {
                    valid: false,
                    jobs: None,
                    tasks: None,
                    related_task_pairs: None,
                    related_job_pairs: None,
                    issues,
                },
                code,
            )
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("report serializes")
    );
    code
}

fn load(cfg: &RunConfig) -> Result<Dataset, AppError> {
    let input = cfg.input.as_deref().ok_or(ConfigError::MissingInput)?;
    Ok(io::load_input(input)?)
}

fn stage_path(given: &Option<PathBuf>, out: &Path, default: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| out.join(default))
}

#[derive(Serialize)]
struct TruthJob<'a> {
    job_id: &'a str,
    cluster: usize,
    planted_prob: f64,
    automation_prob: f64,
    flipped: bool,
    tau: [f64; BUCKETS],
}

#[derive(Serialize)]
struct TruthTask<'a> {
    task_id: &'a str,
    archetype: usize,
    share: f64,
    prob: f64,
}

pub fn write_truth(path: &Path, dataset: &Dataset, truth: &SynthTruth) -> Result<(), AppError> {
    let jobs: Vec<TruthJob> = dataset
        .jobs()
        .iter()
        .enumerate()
        .map(|(j, job)| TruthJob {
            job_id: &job.id,
            cluster: truth.job_cluster[j],
            planted_prob: truth.job_prob[j],
            automation_prob: job.automation_prob,
            flipped: truth.flipped.contains(&j),
            tau: truth.tau[j],
        })
        .collect();
    let tasks: Vec<TruthTask> = dataset
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| TruthTask {
            task_id: &task.id,
            archetype: truth.task_archetype[t],
            share: truth.task_share[t],
            prob: truth.task_prob[t],
        })
        .collect();
    write_json(
        path,
        &json!({
            "seed": truth.seed,
            "archetype_prob": truth.archetype_prob,
            "jobs": jobs,
            "tasks": tasks,
        }),
    )?;
    Ok(())
}

fn synth(cfg: &RunConfig, args: &SynthArgs) -> Result<(), AppError> {
    let (dataset, truth) = generate_synthetic(&args.config(), cfg.seed)?;
    ensure_dir(&cfg.out)?;
    io::write_dataset(&dataset, &cfg.out)?;
    if args.json {
        io::write_dataset_json(&dataset, &cfg.out.join("dataset.json"))?;
    }
    write_truth(&cfg.out.join(TRUTH_FILE), &dataset, &truth)
}

fn execute(cli: &Cli) -> Result<(), AppError> {
    let cfg = cli.global.run_config();
    if let Command::Synth(args) = &cli.command {
        return synth(&cfg, args);
    }
    cfg.validate()?;
    let dataset = load(&cfg)?;
    ensure_dir(&cfg.out)?;
    match &cli.command {
        Command::Validate | Command::Synth(_) => unreachable!("handled above"),
        Command::Run => {
            run_all(&cfg, &dataset)?;
        }
        Command::Shares => {
            let mut r = Runner::new("shares", &cfg, &dataset);
            r.shares()?;
            r.finish("manifest_shares.json")?;
        }
        Command::Probs(inputs) => {
            let shares_path = stage_path(&inputs.shares, &cfg.out, SHARES_FILE);
            let shares = read_shares(&shares_path, &dataset, cfg.normalize_shares)?;
            let mut r = Runner::new("probs", &cfg, &dataset);
            r.probs(&shares)?;
            r.finish("manifest_probs.json")?;
        }
        Command::Crossval(inputs) | Command::Analyze(inputs) => {
            let shares_path = stage_path(&inputs.shares, &cfg.out, SHARES_FILE);
            let probs_path = stage_path(&inputs.probs, &cfg.out, TASK_PROBS_FILE);
            let shares = read_shares(&shares_path, &dataset, cfg.normalize_shares)?;
            let probs = read_task_probs(&probs_path, &dataset, cfg.epsilon)?;
            if let Command::Crossval(_) = cli.command {
                let mut r = Runner::new("crossval", &cfg, &dataset);
                r.crossval(&shares, &probs)?;
                r.finish("manifest_crossval.json")?;
            } else {
                let mut r = Runner::new("analyze", &cfg, &dataset);
                r.analyze(&shares, &probs)?;
                r.finish("manifest_analyze.json")?;
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    if let Command::Validate = cli.command {
        return validate(&cli.global.run_config());
    }
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_run_config() {
        let cli = Cli::try_parse_from(["taskprob", "run", "--input", "d"]).unwrap();
        let cfg = cli.global.run_config();
        let want = RunConfig {
            input: Some(PathBuf::from("d")),
            ..RunConfig::default()
        };
        assert_eq!(cfg, want);
    }

    #[test]
    fn flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "taskprob",
            "synth",
            "--preset",
            "two-cluster",
            "--flip",
            "3",
            "--flip",
            "5",
            "--seed",
            "9",
        ])
        .unwrap();
        let Command::Synth(args) = &cli.command else {
            panic!()
        };
        let c = args.config();
        assert_eq!(c.flip_jobs, [3, 5]);
        assert_eq!(c.clusters, 2);
        assert_eq!(cli.global.seed, 9);
    }
}
