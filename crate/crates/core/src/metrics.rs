//! Balanced accuracy, selection-structure diagnostics and funnel report
//! rendering.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backends::cosine;
use crate::corpus::Label;
use crate::funnel::{FunnelReport, StageReport};
use crate::par;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{preds} predictions for {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("gold labels contain no {0} examples")]
    MissingClass(Label),
    #[error("selection is empty")]
    EmptySelection,
    #[error("selected index {index} outside pool of {pool}")]
    OutOfPool { index: usize, pool: usize },
    #[error("sample size {sample} exceeds pool of {pool}")]
    SampleTooLarge { sample: usize, pool: usize },
    #[error("stage {stage}: {message}")]
    BrokenChain { stage: String, message: String },
}

/// Supported is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionCounts {
    pub fn from_labels(preds: &[Label], golds: &[Label]) -> Result<Self, MetricsError> {
        if preds.len() != golds.len() {
            return Err(MetricsError::LengthMismatch {
                preds: preds.len(),
                golds: golds.len(),
            });
        }
        let mut c = ConfusionCounts::default();
        for (p, g) in preds.iter().zip(golds) {
            match (g, p) {
                (Label::Supported, Label::Supported) => c.tp += 1,
                (Label::Supported, Label::Refuted) => c.fn_ += 1,
                (Label::Refuted, Label::Refuted) => c.tn += 1,
                (Label::Refuted, Label::Supported) => c.fp += 1,
            }
        }
        Ok(c)
    }

    pub fn tpr(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn tnr(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / (self.tp + self.fn_ + self.tn + self.fp) as f64
    }

    /// (TPR + TNR) / 2.
    pub fn balanced_accuracy(&self) -> Result<f64, MetricsError> {
        if self.tp + self.fn_ == 0 {
            return Err(MetricsError::MissingClass(Label::Supported));
        }
        if self.tn + self.fp == 0 {
            return Err(MetricsError::MissingClass(Label::Refuted));
        }
        Ok((self.tpr() + self.tnr()) / 2.0)
    }
}

pub fn balanced_accuracy(preds: &[Label], golds: &[Label]) -> Result<f64, MetricsError> {
    ConfusionCounts::from_labels(preds, golds)?.balanced_accuracy()
}

/// Cap on the coverage subsample.
pub const MAX_DIAGNOSTIC_SAMPLE: usize = 3000;
/// Neighbours averaged into a claim's isolation score.
pub const ISOLATION_NEIGHBOURS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionDiagnostics {
    pub d_med: f64,
    pub d_95: f64,
    pub outlier_share: f64,
    pub sample_size: usize,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn distance(u: &[f64], v: &[f64]) -> f64 {
    (1.0 - cosine(u, v)).max(0.0)
}

/// Mean cosine distance from each point to its nearest in-pool neighbours
/// (all other points when the pool has fewer than eleven).
pub fn isolation_scores(pool: &[&[f64]]) -> Vec<f64> {
    let n = pool.len();
    let k = ISOLATION_NEIGHBOURS.min(n.saturating_sub(1));
    par::map_indexed(n, |i| {
        if k == 0 {
            return 0.0;
        }
        let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| distance(pool[i], pool[j])).collect();
        d.select_nth_unstable_by(k - 1, f64::total_cmp);
        d[..k].iter().sum::<f64>() / k as f64
    })
}

/// Indices of the ceil(5%) most isolated pool points; ties go to the lower
/// index. Empty for pools of fewer than two points.
pub fn isolation_band(pool: &[&[f64]]) -> Vec<usize> {
    if pool.len() < 2 {
        return Vec::new();
    }
    let iso = isolation_scores(pool);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| iso[b].total_cmp(&iso[a]).then(a.cmp(&b)));
    let m = (pool.len() as f64 * 0.05).ceil() as usize;
    order.truncate(m);
    order.sort_unstable();
    order
}

/// The seeded pool subsample used for coverage distances.
pub fn diagnostic_sample(pool_len: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    let m = sample_size.min(MAX_DIAGNOSTIC_SAMPLE).min(pool_len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, pool_len, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Coverage quantiles of the nearest-selected distance over a seeded
/// subsample, plus the share of the selection inside the isolation band.
pub fn selection_diagnostics(
    pool: &[&[f64]],
    selected: &[usize],
    sample_size: usize,
    seed: u64,
) -> Result<SelectionDiagnostics, MetricsError> {
    if selected.is_empty() {
        return Err(MetricsError::EmptySelection);
    }
    if let Some(&index) = selected.iter().find(|&&i| i >= pool.len()) {
        return Err(MetricsError::OutOfPool {
            index,
            pool: pool.len(),
        });
    }
    if sample_size > pool.len() {
        return Err(MetricsError::SampleTooLarge {
            sample: sample_size,
            pool: pool.len(),
        });
    }
    let chosen: HashSet<usize> = selected.iter().copied().collect();
    let sample = diagnostic_sample(pool.len(), sample_size, seed);
    let mut dists = par::map(&sample, |&i| {
        if chosen.contains(&i) {
            0.0
        } else {
            chosen
                .iter()
                .map(|&j| distance(pool[i], pool[j]))
                .fold(f64::INFINITY, f64::min)
        }
    });
    dists.sort_by(f64::total_cmp);
    let band: HashSet<usize> = isolation_band(pool).into_iter().collect();
    let outlier_share = if band.is_empty() {
        0.0
    } else {
        chosen.iter().filter(|i| band.contains(i)).count() as f64 / chosen.len() as f64
    };
    Ok(SelectionDiagnostics {
        d_med: quantile(&dists, 0.5),
        d_95: quantile(&dists, 0.95),
        outlier_share,
        sample_size: sample.len(),
    })
}

/// Checks the report's accounting: per stage, output = input - rejected +
/// added; each input equals the previous output; only stages that add
/// records may grow.
pub fn validate_report(report: &FunnelReport) -> Result<(), MetricsError> {
    let broken = |s: &StageReport, message: String| MetricsError::BrokenChain {
        stage: s.name.clone(),
        message,
    };
    let mut prev: Option<&StageReport> = None;
    for s in &report.stages {
        if let Some(p) = prev {
            if s.input != p.output {
                return Err(broken(s, format!("input {} != previous output {}", s.input, p.output)));
            }
        }
        if s.input + s.added != s.output + s.rejected_total() {
            return Err(broken(
                s,
                format!(
                    "input {} + added {} != output {} + rejected {}",
                    s.input,
                    s.added,
                    s.output,
                    s.rejected_total()
                ),
            ));
        }
        if s.added == 0 && s.output > s.input {
            return Err(broken(s, format!("output {} exceeds input {}", s.output, s.input)));
        }
        prev = Some(s);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub table: String,
    pub json: String,
}

/// A text table and pretty JSON for a validated report.
pub fn stage_report_render(report: &FunnelReport) -> Result<RenderedReport, MetricsError> {
    validate_report(report)?;
    let mut table = String::new();
    let width = report.stages.iter().map(|s| s.name.len()).max().unwrap_or(5).max(5);
    writeln!(
        table,
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>6}  reasons",
        "stage", "input", "output", "rejected", "added"
    )
    .unwrap();
    for s in &report.stages {
        let reasons: Vec<String> = s.rejected.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(
            table,
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>6}  {}",
            s.name,
            s.input,
            s.output,
            s.rejected_total(),
            s.added,
            reasons.join(", ")
        )
        .unwrap();
    }
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    Ok(RenderedReport { table, json })
}
