//! Acceptance checks 1 to 10. Everything runs from one test function so the
//! timed criteria do not compete with each other for CPU time.

use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskprob::parallel::{CrossvalParams, run_crossval_parallel};
use taskprob_core::analysis::{Estimator, attribute_vs_probability, pearson};
use taskprob_core::crossval::{OutlierThresholds, Tier};
use taskprob_core::dataset::{BUCKETS, Dataset, JobRecord, TaskRecord};
use taskprob_core::lp::{
    LpProblem, LpStatus, Relation, SolverOptions, enumerate_vertices_oracle, solve,
};
use taskprob_core::prob::{baseline_objective, solve_task_probs};
use taskprob_core::share::{TaskShareTable, compute_shares, solve_shares};
use taskprob_core::synth::{ProbModel, SynthConfig, generate_synthetic};

const EPS: f64 = 0.01;

type Outcome = Result<String, String>;
type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=8);
    let mut p = LpProblem::new();
    let mut interior = Vec::new();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = rng.random_range(-5..=0) as f64;
            let hi = lo + rng.random_range(1..=10) as f64;
            interior.push(rng.random_range(lo..=hi));
            let cost = rng.random_range(-5..=5) as f64;
            p.add_var(format!("x{j}"), lo, hi, cost).unwrap()
        })
        .collect();
    for i in 0..m {
        let terms: Vec<_> = vars
            .iter()
            .filter_map(|&v| {
                let a = rng.random_range(-3..=3) as f64;
                (rng.random_bool(0.7) && a != 0.0).then_some((v, a))
            })
            .collect();
        let activity: f64 = terms.iter().map(|&(v, a)| a * interior[v.index()]).sum();
        let relation = match rng.random_range(0..10) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        let slack = rng.random_range(0..=3) as f64;
        let rhs = if rng.random_bool(0.85) {
            match relation {
                Relation::Eq => activity,
                Relation::Le => (activity + slack).round(),
                Relation::Ge => (activity - slack).round(),
            }
        } else {
            rng.random_range(-10..=10) as f64
        };
        p.add_constraint(format!("r{i}"), terms, relation, rhs).unwrap();
    }
    p
}

fn c1_solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut feasible = 0;
    for k in 0..100 {
        let p = random_lp(&mut rng);
        let fast = solve(&p).map_err(|e| format!("instance {k}: {e}"))?;
        let slow = enumerate_vertices_oracle(&p).map_err(|e| format!("instance {k}: {e}"))?;
        check(fast.status == slow.status, format!("instance {k}: status differs"))?;
        if slow.status == LpStatus::Optimal {
            feasible += 1;
            let gap = (fast.objective - slow.objective).abs();
            check(gap <= 1e-9, format!("instance {k}: objective gap {gap:e}"))?;
        }
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(5), format!("took {t:?}"))?;
    Ok(format!("{feasible} feasible of 100 agree, {t:.2?}"))
}

fn c2_share_invariants() -> Outcome {
    let (d, _) = generate_synthetic(&SynthConfig::default(), 7).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let c = solve_shares(&d, EPS).map_err(|e| e.to_string())?;
    let s = compute_shares(&c, &d, true).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    for (j, tau) in c.tau.iter().enumerate() {
        check(tau[0] >= 0.0, format!("job {j}: negative tau"))?;
        check(tau.windows(2).all(|w| w[1] >= w[0]), format!("job {j}: tau not monotone"))?;
    }
    for (j, &sum) in s.job_raw_sum.iter().enumerate() {
        check(
            (0.99 - 1e-9..=1.01 + 1e-9).contains(&sum),
            format!("job {j}: raw share sum {sum}"),
        )?;
    }
    let mut worst: f64 = 0.0;
    for (k, &(a, b)) in c.pairs.iter().enumerate() {
        for l in 0..BUCKETS {
            worst = worst.max((c.delta[k][l] - (c.tau[a][l] - c.tau[b][l]).abs()).abs());
        }
    }
    check(worst <= 1e-7, format!("delta off by {worst:e}"))?;
    check(t < Duration::from_secs(30), format!("took {t:?}"))?;
    Ok(format!(
        "{} jobs, {} tasks, worst delta error {worst:e}, {t:.2?}",
        d.jobs().len(),
        d.tasks().len()
    ))
}

fn c3_zero_slack() -> Outcome {
    let (d, _) = generate_synthetic(&SynthConfig::identical_pair(), 1).map_err(|e| e.to_string())?;
    let c = solve_shares(&d, EPS).map_err(|e| e.to_string())?;
    check(c.objective.abs() <= 1e-9, format!("objective {}", c.objective))?;
    let gap = (0..BUCKETS)
        .map(|l| (c.tau[0][l] - c.tau[1][l]).abs())
        .fold(0.0, f64::max);
    check(gap <= 1e-9, format!("tau gap {gap:e}"))?;
    Ok(format!("objective {:e}, tau gap {gap:e}", c.objective))
}

fn c4_prob_invariants() -> Outcome {
    let cfg = SynthConfig {
        prob_models: vec![
            ProbModel::Bernoulli(0.0),
            ProbModel::Uniform { lo: 0.0, hi: 1.0 },
            ProbModel::Bernoulli(0.5),
        ],
        clusters: 3,
        ..SynthConfig::default()
    };
    let (d, _) = generate_synthetic(&cfg, 4).map_err(|e| e.to_string())?;
    let c = solve_shares(&d, EPS).map_err(|e| e.to_string())?;
    let s = compute_shares(&c, &d, true).map_err(|e| e.to_string())?;
    let p = solve_task_probs(&d, &s, EPS).map_err(|e| e.to_string())?;
    for (t, v) in p.values.iter().enumerate() {
        let v = v.ok_or(format!("task {t} undefined"))?;
        check((0.0..=1.0).contains(&v), format!("task {t}: p = {v}"))?;
    }
    let mut zero_jobs = 0;
    for (j, job) in d.jobs().iter().enumerate() {
        let tasks = d.tasks_of(j);
        let mean: f64 = tasks.iter().map(|&t| s.share(t) * p.get(t).unwrap()).sum();
        let pj = job.automation_prob;
        check(
            mean >= pj * (1.0 - EPS) - 1e-7 && mean <= pj * (1.0 + EPS) + 1e-7,
            format!("job {j}: mean {mean} vs p(j) {pj}"),
        )?;
        if pj == 0.0 {
            zero_jobs += 1;
            check(
                tasks.iter().all(|&t| p.get(t) == Some(0.0)),
                format!("job {j}: p(j) = 0 but a task is nonzero"),
            )?;
        }
    }
    check(zero_jobs > 0, "no zero-probability job generated")?;
    let base = baseline_objective(&d);
    check(p.objective <= base + 1e-9, format!("objective {} > baseline {base}", p.objective))?;
    Ok(format!(
        "{zero_jobs} zero jobs, objective {:.4} <= baseline {base:.4}",
        p.objective
    ))
}

fn judges_rows() -> Vec<(String, f64, f64)> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/judges.csv");
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.deserialize().map(|r| r.unwrap()).collect()
}

fn c5_judges() -> Outcome {
    let rows = judges_rows();
    check(rows.len() == 18, format!("{} rows", rows.len()))?;
    let total: f64 = rows.iter().map(|r| r.2).sum();
    let mean = rows.iter().map(|r| r.1 * r.2).sum::<f64>() / total;
    check((mean - 0.403).abs() <= 0.005, format!("weighted mean {mean}"))?;
    check(
        (0.40 * (1.0 - EPS)..=0.40 * (1.0 + EPS)).contains(&mean),
        format!("{mean} outside the band around 0.40"),
    )?;

    // The printed probabilities must also be a feasible point of the
    // probability LP for a one-job dataset carrying the printed shares.
    let jobs = vec![JobRecord {
        job_id: "judges".into(),
        title: "Judges".into(),
        automation_prob: 0.40,
    }];
    let tasks = rows
        .iter()
        .map(|(id, _, _)| TaskRecord {
            task_id: id.clone(),
            job_id: "judges".into(),
            description: String::new(),
            freq: [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        })
        .collect();
    let d = Dataset::from_records(jobs, tasks, vec![], vec![]).map_err(|e| e.to_string())?;
    let s = TaskShareTable::from_raw(&d, rows.iter().map(|r| r.2 / total).collect(), true);
    let p = solve_task_probs(&d, &s, EPS).map_err(|e| e.to_string())?;
    let lp_mean: f64 = (0..18).map(|t| s.share(t) * p.get(t).unwrap()).sum();
    check(
        (0.396 - 1e-7..=0.404 + 1e-7).contains(&lp_mean),
        format!("LP solution mean {lp_mean}"),
    )?;
    Ok(format!("weighted mean {mean:.5} (shares sum {total:.1})"))
}

fn c6_polarization() -> Outcome {
    let (d, _) = generate_synthetic(&SynthConfig::two_cluster(), 1).map_err(|e| e.to_string())?;
    let c = solve_shares(&d, EPS).map_err(|e| e.to_string())?;
    let s = compute_shares(&c, &d, true).map_err(|e| e.to_string())?;
    let p = solve_task_probs(&d, &s, EPS).map_err(|e| e.to_string())?;
    let values: Vec<f64> = p.values.iter().flatten().copied().collect();
    let polar = values.iter().filter(|&&v| v <= 0.05 || v >= 0.95).count();
    let frac = polar as f64 / values.len() as f64;
    check(frac >= 0.8, format!("polarized fraction {frac:.3}"))?;
    Ok(format!("polarized fraction {frac:.3} of {} tasks", values.len()))
}

fn crossval_consistent(flip: Option<usize>) -> Result<(taskprob_core::crossval::CrossvalReport, Duration), String> {
    let cfg = SynthConfig {
        flip_jobs: flip.into_iter().collect(),
        ..SynthConfig::consistent()
    };
    let (d, _) = generate_synthetic(&cfg, 5).map_err(|e| e.to_string())?;
    let c = solve_shares(&d, EPS).map_err(|e| e.to_string())?;
    let s = compute_shares(&c, &d, true).map_err(|e| e.to_string())?;
    let full = solve_task_probs(&d, &s, EPS).map_err(|e| e.to_string())?;
    let params = CrossvalParams {
        dataset: &d,
        shares: &s,
        epsilon: EPS,
        full: &full,
        thresholds: OutlierThresholds::default(),
        bins: 50,
        options: SolverOptions::default(),
    };
    let start = Instant::now();
    let report = run_crossval_parallel(&params, NonZeroUsize::new(4).unwrap())
        .map_err(|e| e.to_string())?;
    Ok((report, start.elapsed()))
}

fn c7_crossval() -> Outcome {
    let (report, t) = crossval_consistent(None)?;
    check(report.jobs.len() == 100, format!("{} jobs", report.jobs.len()))?;
    let mean = report.mean_abs_delta().ok_or("no reconstructable job")?;
    check(mean < 0.05, format!("mean |delta| {mean}"))?;
    let strong = report.count(Tier::StrongOutlier);
    check(strong == 0, format!("{strong} strong outliers without a flip"))?;
    let within = report.fraction_within(0.2).unwrap_or(0.0);
    check(within > 0.5, format!("fraction within 0.2 is {within}"))?;
    check(t < Duration::from_secs(120), format!("took {t:?}"))?;

    let flipped = 37;
    let (report, t2) = crossval_consistent(Some(flipped))?;
    let strong: Vec<usize> = report
        .jobs
        .iter()
        .filter(|o| o.tier == Tier::StrongOutlier)
        .map(|o| o.job)
        .collect();
    check(strong == [flipped], format!("strong outliers {strong:?}, flipped {flipped}"))?;
    check(t2 < Duration::from_secs(120), format!("took {t2:?}"))?;
    Ok(format!(
        "mean |delta| {mean:.4}, {:.0}% within 0.2, flip caught alone; {t:.1?} and {t2:.1?} for 100 solves",
        within * 100.0
    ))
}

fn c8_correlation() -> Outcome {
    let close = |r: Option<f64>, want: f64| r.is_some_and(|r| (r - want).abs() <= 1e-12);
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 5.0, 4.0]).map_err(|e| e.to_string())?;
    check(close(r, 3.5 / 23.75f64.sqrt()), format!("r = {r:?}"))?;
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).map_err(|e| e.to_string())?;
    check(close(r, 0.5), format!("r = {r:?}"))?;
    let xs = [0.3, -1.2, 4.5, 2.0, 7.25];
    let up: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
    let down: Vec<f64> = xs.iter().map(|x| -0.5 * x + 2.0).collect();
    check(close(pearson(&xs, &up).unwrap(), 1.0), "affine increasing")?;
    check(close(pearson(&xs, &down).unwrap(), -1.0), "affine decreasing")?;
    let (d, _) = generate_synthetic(&SynthConfig::default(), 3).map_err(|e| e.to_string())?;
    let r = attribute_vs_probability(&d, "education", Estimator::Pearson)
        .map_err(|e| e.to_string())?
        .r
        .ok_or("undefined r")?;
    check(r < -0.8, format!("planted attribute r = {r}"))?;
    Ok(format!("closed forms exact to 1e-12, planted attribute r = {r:.3} at n = 100"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_taskprob")
}

fn taskprob(args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn same_dirs(a: &Path, b: &Path) -> Result<(), String> {
    let (x, y) = (dir_contents(a), dir_contents(b));
    let names = |v: &[(String, Vec<u8>)]| v.iter().map(|f| f.0.clone()).collect::<Vec<_>>();
    check(names(&x) == names(&y), format!("file sets differ: {:?} vs {:?}", names(&x), names(&y)))?;
    for (f, g) in x.iter().zip(&y) {
        check(f.1 == g.1, format!("{} differs", f.0))?;
    }
    Ok(())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn c9_determinism(tmp: &Path) -> Outcome {
    let data = tmp.join("det_data");
    taskprob(&["synth", "--num-jobs", "30", "--seed", "21", "--out", p(&data)])?;
    let runs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|n| tmp.join(format!("det_{n}"))).collect();
    for (dir, jobs) in runs.iter().zip(["1", "1", "8"]) {
        taskprob(&["run", "--input", p(&data), "--out", p(dir), "--seed", "21", "--jobs", jobs])?;
    }
    same_dirs(&runs[0], &runs[1]).map_err(|e| format!("rerun: {e}"))?;
    same_dirs(&runs[0], &runs[2]).map_err(|e| format!("--jobs 1 vs 8: {e}"))?;
    Ok(format!("{} files identical across reruns and --jobs 1/8", dir_contents(&runs[0]).len()))
}

fn c10_end_to_end(tmp: &Path) -> Outcome {
    let data = tmp.join("e2e_data");
    let staged = tmp.join("e2e_staged");
    let full = tmp.join("e2e_full");

    let start = Instant::now();
    taskprob(&["synth", "--seed", "7", "--out", p(&data)])?;
    let synth = start.elapsed();
    taskprob(&["shares", "--input", p(&data), "--out", p(&staged)])?;
    taskprob(&["probs", "--input", p(&data), "--out", p(&staged)])?;
    taskprob(&["analyze", "--input", p(&data), "--out", p(&staged)])?;
    let without = start.elapsed();

    let start = Instant::now();
    taskprob(&["run", "--input", p(&data), "--out", p(&full)])?;
    let with = synth + start.elapsed();

    let d = taskprob::io::load_input(&data).map_err(|e| e.to_string())?;
    check(d.jobs().len() == 100, format!("{} jobs", d.jobs().len()))?;
    check(without < Duration::from_secs(60), format!("{without:?} without cross-validation"))?;
    check(with < Duration::from_secs(180), format!("{with:?} with cross-validation"))?;
    Ok(format!(
        "{} tasks: {without:.1?} without cross-validation, {with:.1?} with",
        d.tasks().len()
    ))
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 solver matches vertex enumeration", Box::new(c1_solver_oracle)),
        ("2 share LP invariants", Box::new(c2_share_invariants)),
        ("3 identical jobs need no slack", Box::new(c3_zero_slack)),
        ("4 probability LP invariants", Box::new(c4_prob_invariants)),
        ("5 judges fixture", Box::new(c5_judges)),
        ("6 polarization", Box::new(c6_polarization)),
        ("7 cross-validation recovery", Box::new(c7_crossval)),
        ("8 correlation", Box::new(c8_correlation)),
        ("9 determinism", Box::new(|| c9_determinism(tmp.path()))),
        ("10 end to end", Box::new(|| c10_end_to_end(tmp.path()))),
    ];
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                println!("criterion {name}: FAIL ({why})");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
