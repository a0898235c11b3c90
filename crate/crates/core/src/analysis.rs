//! Histograms, correlations and scatter series for reporting.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::prob::TaskProbabilities;
use crate::share::TaskShareTable;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("histogram range [{lo}, {hi}] is empty")]
    EmptyRange { lo: f64, hi: f64 },
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("no job carries attribute `{0}`")]
    UnknownAttribute(String),
}

/// Uniform-bin histogram. Values outside `[lo, hi]` land in the edge bins
/// and are counted in `clamped`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub clamped: u64,
    /// `None` for an empty input.
    pub mean: Option<f64>,
    pub mean_abs: Option<f64>,
}

pub fn make_histogram(
    values: &[f64],
    range: (f64, f64),
    bins: usize,
) -> Result<Histogram, AnalysisError> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(AnalysisError::NoBins);
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(AnalysisError::EmptyRange { lo, hi });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = alloc::vec![0u64; bins];
    let mut clamped = 0;
    for &v in values {
        if v < lo || v > hi {
            clamped += 1;
        }
        let i = libm::floor((v - lo) / width);
        let i = if i < 0.0 { 0 } else { (i as usize).min(bins - 1) };
        counts[i] += 1;
    }
    let n = values.len();
    let (mean, mean_abs) = if n == 0 {
        (None, None)
    } else {
        (
            Some(values.iter().sum::<f64>() / n as f64),
            Some(values.iter().map(|v| v.abs()).sum::<f64>() / n as f64),
        )
    };
    Ok(Histogram {
        edges,
        counts,
        total: n as u64,
        clamped,
        mean,
        mean_abs,
    })
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewPoints(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(())
}

/// Sample Pearson coefficient; `Ok(None)` when either variance is zero.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, AnalysisError> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (libm::sqrt(sxx) * libm::sqrt(syy))).clamp(-1.0, 1.0)))
}

/// Ranks starting at 1, ties share their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let mut out = alloc::vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut k = i;
        while k + 1 < order.len() && v[order[k + 1]] == v[order[i]] {
            k += 1;
        }
        let r = (i + k) as f64 / 2.0 + 1.0;
        for &o in &order[i..=k] {
            out[o] = r;
        }
        i = k + 1;
    }
    out
}

/// Spearman's rho: Pearson on average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, AnalysisError> {
    check_pair(xs, ys)?;
    pearson(&ranks(xs), &ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    #[default]
    Pearson,
    Spearman,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Pearson => "pearson",
            Estimator::Spearman => "spearman",
        }
    }

    pub fn correlate(self, xs: &[f64], ys: &[f64]) -> Result<Option<f64>, AnalysisError> {
        match self {
            Estimator::Pearson => pearson(xs, ys),
            Estimator::Spearman => spearman(xs, ys),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSeries {
    pub ids: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub estimator: Estimator,
    /// `None` when undefined (zero variance or fewer than two points).
    pub r: Option<f64>,
    /// Entities left out because they lack a value.
    pub skipped: usize,
}

impl ScatterSeries {
    fn new(
        ids: Vec<String>,
        x: Vec<f64>,
        y: Vec<f64>,
        estimator: Estimator,
        skipped: usize,
    ) -> Result<Self, AnalysisError> {
        let r = match estimator.correlate(&x, &y) {
            Ok(r) => r,
            Err(AnalysisError::TooFewPoints(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            ids,
            x,
            y,
            estimator,
            r,
            skipped,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// One point per task with a probability: x = share, y = p(t).
pub fn share_vs_probability(
    dataset: &Dataset,
    shares: &TaskShareTable,
    probs: &TaskProbabilities,
    estimator: Estimator,
) -> Result<ScatterSeries, AnalysisError> {
    if shares.len() != dataset.tasks().len() {
        return Err(AnalysisError::LengthMismatch(
            shares.len(),
            dataset.tasks().len(),
        ));
    }
    let (mut ids, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
    let mut skipped = 0;
    for (t, task) in dataset.tasks().iter().enumerate() {
        match probs.get(t) {
            Some(p) => {
                ids.push(task.id.clone());
                x.push(shares.share(t));
                y.push(p);
            }
            None => skipped += 1,
        }
    }
    ScatterSeries::new(ids, x, y, estimator, skipped)
}

/// One point per job carrying `attribute`: x = level, y = p(j).
pub fn attribute_vs_probability(
    dataset: &Dataset,
    attribute: &str,
    estimator: Estimator,
) -> Result<ScatterSeries, AnalysisError> {
    let (mut ids, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
    let mut skipped = 0;
    for job in dataset.jobs() {
        match job.attributes.get(attribute) {
            Some(&v) => {
                ids.push(job.id.clone());
                x.push(v);
                y.push(job.automation_prob);
            }
            None => skipped += 1,
        }
    }
    if ids.is_empty() {
        return Err(AnalysisError::UnknownAttribute(attribute.into()));
    }
    ScatterSeries::new(ids, x, y, estimator, skipped)
}

/// Attribute names present on at least one job, sorted.
pub fn attribute_names(dataset: &Dataset) -> Vec<String> {
    let set: alloc::collections::BTreeSet<&String> = dataset
        .jobs()
        .iter()
        .flat_map(|j| j.attributes.keys())
        .collect();
    set.into_iter().cloned().collect()
}
