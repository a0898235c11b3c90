//! Stage orchestration and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Value, json};
use taskprob_core::analysis::{
    attribute_names, attribute_vs_probability, make_histogram, share_vs_probability,
};
use taskprob_core::crossval::{CrossvalReport, Tier};
use taskprob_core::dataset::Dataset;
use taskprob_core::error::{STAGE_PROBS, STAGE_SHARES};
use taskprob_core::lp::{FEASIBILITY_TOL, LpProblem, OPTIMALITY_TOL, PivotRule, write_lp_format};
use taskprob_core::prob::{
    TaskProbabilities, baseline_objective, build_prob_lp, pair_diff_distribution,
    solve_task_probs_excluding,
};
use taskprob_core::share::{TaskShareTable, build_share_lp, compute_shares, solve_shares_with};

use crate::config::RunConfig;
use crate::error::AppError;
use crate::io::{WriteError, write_json};
use crate::output::{self, HistogramDoc};
use crate::parallel::{CrossvalParams, run_crossval_parallel};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STAGE_CROSSVAL: &str = "cross-validation";
pub const STAGE_ANALYSIS: &str = "analysis";

/// Task probabilities at most this far from 0 or 1 count as polarized.
pub const POLAR_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub epsilon: f64,
    pub normalize_shares: bool,
    pub outlier_strong: f64,
    pub outlier_review: f64,
    pub bins: usize,
    pub seed: u64,
    pub estimator: &'static str,
    pub dump_lp: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverEcho {
    pub pivot_rule: &'static str,
    pub bland_after_degenerate_pivots: Option<usize>,
    pub refactor_every: usize,
    pub max_iterations: usize,
    pub optimality_tol: f64,
    pub feasibility_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetEcho {
    pub jobs: usize,
    pub tasks: usize,
    pub related_task_pairs: usize,
    pub related_job_pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: &'static str,
    pub variables: Option<usize>,
    pub constraints: Option<usize>,
    pub objective: Option<f64>,
    pub iterations: Option<usize>,
    pub summary: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub input: Option<PathBuf>,
    pub config: ConfigEcho,
    pub solver: SolverEcho,
    pub dataset: DatasetEcho,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<BTreeMap<&'static str, f64>>,
}

pub struct Runner<'a> {
    cfg: &'a RunConfig,
    dataset: &'a Dataset,
    manifest: Manifest,
}

impl<'a> Runner<'a> {
    pub fn new(command: &str, cfg: &'a RunConfig, dataset: &'a Dataset) -> Self {
        let stall = match cfg.solver.rule {
            PivotRule::Bland => None,
            PivotRule::DantzigBland { stall } => Some(stall),
        };
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            input: cfg.input.clone(),
            config: ConfigEcho {
                epsilon: cfg.epsilon,
                normalize_shares: cfg.normalize_shares,
                outlier_strong: cfg.thresholds.strong,
                outlier_review: cfg.thresholds.review,
                bins: cfg.bins,
                seed: cfg.seed,
                estimator: cfg.estimator.name(),
                dump_lp: cfg.dump_lp,
            },
            solver: SolverEcho {
                pivot_rule: cfg.solver.rule.id(),
                bland_after_degenerate_pivots: stall,
                refactor_every: cfg.solver.refactor_every,
                max_iterations: cfg.solver.max_iterations,
                optimality_tol: OPTIMALITY_TOL,
                feasibility_tol: FEASIBILITY_TOL,
            },
            dataset: DatasetEcho {
                jobs: dataset.jobs().len(),
                tasks: dataset.tasks().len(),
                related_task_pairs: dataset.graph().len(),
                related_job_pairs: dataset.derive_job_relatedness().len(),
            },
            stages: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: cfg.record_timings.then(BTreeMap::new),
        };
        Self {
            cfg,
            dataset,
            manifest,
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn produced(&mut self, names: &[&str]) {
        self.manifest.outputs.extend(names.iter().map(|s| s.to_string()));
    }

    fn timed<T>(&mut self, stage: &'static str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let r = f(self);
        if let Some(t) = &mut self.manifest.wall_clock_seconds {
            t.insert(stage, start.elapsed().as_secs_f64());
        }
        r
    }

    fn dump(&mut self, name: &str, problem: &LpProblem) -> Result<(), AppError> {
        let mut text = String::new();
        write_lp_format(problem, &mut text).expect("writing to a String cannot fail");
        let path = self.out(name);
        std::fs::write(&path, text).map_err(|source| WriteError { path, source })?;
        self.produced(&[name]);
        Ok(())
    }

    pub fn shares(&mut self) -> Result<TaskShareTable, AppError> {
        let (cfg, ds) = (self.cfg, self.dataset);
        if cfg.dump_lp {
            let lp = build_share_lp(ds, cfg.epsilon)?;
            self.dump("lp1_shares.lp", &lp.problem)?;
        }
        let coeffs = self.timed(STAGE_SHARES, |_| solve_shares_with(ds, cfg.epsilon, &cfg.solver))?;
        let shares = compute_shares(&coeffs, ds, cfg.normalize_shares)?;
        output::write_coefficients(&cfg.out, ds, &coeffs, &shares)?;
        output::write_shares(&cfg.out, ds, &shares)?;
        self.produced(&[output::COEFFICIENTS_FILE, output::JOB_PAIRS_FILE, output::SHARES_FILE]);
        let sums = &shares.job_raw_sum;
        self.manifest.stages.push(StageRecord {
            stage: STAGE_SHARES,
            variables: Some(coeffs.num_variables),
            constraints: Some(coeffs.num_constraints),
            objective: Some(coeffs.objective),
            iterations: Some(coeffs.iterations),
            summary: json!({
                "related_job_pairs": coeffs.pairs.len(),
                "mean_delta": coeffs.mean_delta(),
                "mean_tau": coeffs.mean_tau(),
                "jobs_without_related_jobs": coeffs.unconstrained.iter().filter(|u| **u).count(),
                "min_raw_share_sum": sums.iter().copied().reduce(f64::min),
                "max_raw_share_sum": sums.iter().copied().reduce(f64::max),
            }),
        });
        Ok(shares)
    }

    pub fn probs(&mut self, shares: &TaskShareTable) -> Result<TaskProbabilities, AppError> {
        let (cfg, ds) = (self.cfg, self.dataset);
        if cfg.dump_lp {
            let lp = build_prob_lp(ds, shares, cfg.epsilon)?;
            self.dump("lp2_probabilities.lp", &lp.problem)?;
        }
        let probs = self.timed(STAGE_PROBS, |_| {
            solve_task_probs_excluding(ds, shares, cfg.epsilon, None, &cfg.solver)
        })?;
        output::write_task_probs(&cfg.out, ds, shares, &probs)?;
        self.produced(&[output::TASK_PROBS_FILE, output::PAIR_DIFFS_FILE]);
        self.manifest.stages.push(StageRecord {
            stage: STAGE_PROBS,
            variables: Some(probs.num_variables),
            constraints: Some(probs.num_constraints),
            objective: Some(probs.objective),
            iterations: Some(probs.iterations),
            summary: json!({
                "baseline_objective": baseline_objective(ds),
                "mean_pair_difference": probs.mean_pair_difference(),
                "tasks_without_related_tasks": probs.unanchored_count(),
            }),
        });
        Ok(probs)
    }

    pub fn crossval(
        &mut self,
        shares: &TaskShareTable,
        probs: &TaskProbabilities,
    ) -> Result<CrossvalReport, AppError> {
        let (cfg, ds) = (self.cfg, self.dataset);
        let params = CrossvalParams {
            dataset: ds,
            shares,
            epsilon: cfg.epsilon,
            full: probs,
            thresholds: cfg.thresholds,
            bins: cfg.bins,
            options: cfg.solver,
        };
        let report = self.timed(STAGE_CROSSVAL, |_| run_crossval_parallel(&params, cfg.jobs))?;
        output::write_crossval(&cfg.out, ds, &report)?;
        write_json(
            &self.out(output::CROSSVAL_HISTOGRAMS_FILE),
            &json!({
                "job_delta": HistogramDoc::from(&report.job_delta_histogram),
                "task_delta": HistogramDoc::from(&report.task_delta_histogram),
            }),
        )?;
        self.produced(&[
            output::CROSSVAL_JOBS_FILE,
            output::CROSSVAL_TASKS_FILE,
            output::CROSSVAL_HISTOGRAMS_FILE,
        ]);
        let mut tiers = BTreeMap::new();
        for t in [Tier::Consistent, Tier::Review, Tier::StrongOutlier, Tier::Unreconstructable] {
            tiers.insert(t.name(), report.count(t));
        }
        let strong: Vec<&str> = report
            .jobs
            .iter()
            .filter(|o| o.tier == Tier::StrongOutlier)
            .map(|o| ds.jobs()[o.job].id.as_str())
            .collect();
        self.manifest.stages.push(StageRecord {
            stage: STAGE_CROSSVAL,
            variables: None,
            constraints: None,
            objective: None,
            iterations: None,
            summary: json!({
                "solves": report.jobs.len(),
                "tiers": tiers,
                "strong_outliers": strong,
                "mean_abs_delta": report.mean_abs_delta(),
                "fraction_within_review_threshold": report.fraction_within(cfg.thresholds.review),
            }),
        });
        Ok(report)
    }

    pub fn analyze(
        &mut self,
        shares: &TaskShareTable,
        probs: &TaskProbabilities,
    ) -> Result<(), AppError> {
        let (cfg, ds) = (self.cfg, self.dataset);
        let values: Vec<f64> = probs.values.iter().flatten().copied().collect();
        let share_values: Vec<f64> = (0..shares.len()).map(|t| shares.share(t)).collect();
        let prob_hist = make_histogram(&values, (0.0, 1.0), cfg.bins).map_err(model)?;
        let diff_hist = pair_diff_distribution(probs, ds.graph(), cfg.bins).map_err(model)?;
        let share_hist = make_histogram(&share_values, (0.0, 1.0), cfg.bins).map_err(model)?;
        write_json(
            &self.out(output::HISTOGRAMS_FILE),
            &json!({
                "task_probability": HistogramDoc::from(&prob_hist),
                "pair_difference": HistogramDoc::from(&diff_hist),
                "task_share": HistogramDoc::from(&share_hist),
            }),
        )?;
        let scatter = share_vs_probability(ds, shares, probs, cfg.estimator).map_err(model)?;
        output::write_scatter(&self.out(output::SHARE_SCATTER_FILE), &scatter)?;
        self.produced(&[output::HISTOGRAMS_FILE, output::SHARE_SCATTER_FILE]);

        let mut attributes = BTreeMap::new();
        for name in attribute_names(ds) {
            let series = attribute_vs_probability(ds, &name, cfg.estimator).map_err(model)?;
            let file = output::attribute_scatter_file(&name);
            output::write_scatter(&self.out(&file), &series)?;
            attributes.insert(
                name,
                json!({"file": file, "points": series.len(), "skipped": series.skipped, "r": series.r}),
            );
            self.manifest.outputs.push(file);
        }
        let polar = values
            .iter()
            .filter(|&&v| v <= POLAR_MARGIN || v >= 1.0 - POLAR_MARGIN)
            .count();
        let summary = json!({
            "estimator": cfg.estimator.name(),
            "share_vs_probability": {
                "points": scatter.len(),
                "skipped": scatter.skipped,
                "r": scatter.r,
            },
            "attributes": attributes,
            "task_probability": {
                "count": values.len(),
                "mean": prob_hist.mean,
                "polarized_fraction": (!values.is_empty()).then(|| polar as f64 / values.len() as f64),
                "exactly_zero": values.iter().filter(|&&v| v == 0.0).count(),
                "exactly_one": values.iter().filter(|&&v| v == 1.0).count(),
            },
            "pair_difference": {
                "count": diff_hist.total,
                "mean": diff_hist.mean,
            },
        });
        write_json(&self.out(output::ANALYSIS_FILE), &summary)?;
        self.produced(&[output::ANALYSIS_FILE]);
        self.manifest.stages.push(StageRecord {
            stage: STAGE_ANALYSIS,
            variables: None,
            constraints: None,
            objective: None,
            iterations: None,
            summary,
        });
        Ok(())
    }

    /// Writes the manifest under `name` and returns it.
    pub fn finish(mut self, name: &str) -> Result<Manifest, AppError> {
        self.manifest.outputs.push(name.to_string());
        self.manifest.outputs.sort();
        self.manifest.outputs.dedup();
        write_json(&self.out(name), &self.manifest)?;
        Ok(self.manifest)
    }
}

fn model(e: taskprob_core::analysis::AnalysisError) -> AppError {
    AppError::Model(e.into())
}

/// All stages in order; the manifest goes to [`MANIFEST_FILE`].
pub fn run_all(cfg: &RunConfig, dataset: &Dataset) -> Result<Manifest, AppError> {
    let mut r = Runner::new("run", cfg, dataset);
    let shares = r.shares()?;
    let probs = r.probs(&shares)?;
    r.crossval(&shares, &probs)?;
    r.analyze(&shares, &probs)?;
    r.finish(MANIFEST_FILE)
}

pub fn ensure_dir(dir: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(dir).map_err(|source| AppError::Io {
        path: dir.to_path_buf(),
        source,
    })
}
