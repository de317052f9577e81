//! Confusion matrices, per-label metrics and the multi-model benchmark.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{split, Corpus};
use crate::error::{Error, Result};
use crate::pipeline::{fit_model, FeatureChain, ModelKind, PipelineArtifact, RunConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {label} at position {index} is not 0 or 1")]
    BadLabel { index: usize, label: u8 },
    #[error("nothing to evaluate")]
    Empty,
}

/// `cells[true][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    pub cells: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.cells[0][0] + self.cells[1][1]
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.cells[c][0] + self.cells[c][1]
    }

    pub fn column_sum(&self, c: usize) -> u64 {
        self.cells[0][c] + self.cells[1][c]
    }

    pub fn true_positives(&self) -> u64 {
        self.cells[1][1]
    }

    pub fn false_positives(&self) -> u64 {
        self.cells[0][1]
    }

    pub fn false_negatives(&self) -> u64 {
        self.cells[1][0]
    }

    pub fn true_negatives(&self) -> u64 {
        self.cells[0][0]
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (index, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        for label in [t, p] {
            if label > 1 {
                return Err(EvalError::BadLabel { index, label });
            }
        }
        cm.cells[t as usize][p as usize] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Some metric had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub accuracy: f64,
    pub per_label: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Per-label metrics; zero denominators yield 0 and set `zero_division`.
pub fn metrics(cm: &ConfusionMatrix, model: &str) -> Result<EvalReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let per_label = (0..2)
        .map(|c| {
            let (precision, zp) = ratio(cm.cells[c][c], cm.column_sum(c));
            let (recall, zr) = ratio(cm.cells[c][c], cm.row_sum(c));
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label: c as u8,
                precision,
                recall,
                f1,
                support: cm.row_sum(c),
                zero_division: zp || zr,
            }
        })
        .collect();
    Ok(EvalReport {
        model: model.to_string(),
        accuracy: cm.trace() as f64 / total as f64,
        per_label,
        confusion: *cm,
    })
}

/// Micro-averaged precision: pooled true positives over pooled predictions.
pub fn micro_precision(cm: &ConfusionMatrix) -> f64 {
    let tp: u64 = (0..2).map(|c| cm.cells[c][c]).sum();
    let fp: u64 = (0..2).map(|c| cm.column_sum(c) - cm.cells[c][c]).sum();
    tp as f64 / (tp + fp) as f64
}

/// Micro-averaged recall: pooled true positives over pooled true members.
pub fn micro_recall(cm: &ConfusionMatrix) -> f64 {
    let tp: u64 = (0..2).map(|c| cm.cells[c][c]).sum();
    let fn_: u64 = (0..2).map(|c| cm.row_sum(c) - cm.cells[c][c]).sum();
    tp as f64 / (tp + fn_) as f64
}

/// Score a fitted pipeline on held-out documents through its frozen chain.
pub fn evaluate(artifact: &PipelineArtifact, test: &Corpus, threshold: f64) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(EvalError::Empty.into());
    }
    let scores = artifact.scores(&test.texts())?;
    let predicted: Vec<u8> = scores
        .iter()
        .map(|&s| artifact.model.label_for(s, threshold))
        .collect();
    let cm = confusion(&test.labels(), &predicted)?;
    Ok(metrics(&cm, artifact.model_kind.display_name())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFailure {
    pub model: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub train_size: usize,
    pub test_size: usize,
    pub feature_dim: usize,
    /// Sorted by accuracy, best first.
    pub reports: Vec<EvalReport>,
    pub failures: Vec<ModelFailure>,
}

/// Fit every requested model on one shared split and one shared feature
/// chain, then score each on the test part. A failing model is recorded and
/// the others still run.
pub fn benchmark(
    corpus: &Corpus,
    config: &RunConfig,
    kinds: &[ModelKind],
) -> Result<BenchmarkReport> {
    config.validate()?;
    let corpus = if config.split.dedup {
        corpus.dedup()
    } else {
        corpus.clone()
    };
    let parts = split(&corpus, &config.split_spec()).map_err(|e| Error::stage("split", e))?;
    let y_train = parts.train.labels();
    if !(y_train.contains(&0) && y_train.contains(&1)) {
        return Err(Error::stage(
            "corpus",
            crate::classifiers::FitError::SingleClass,
        ));
    }
    let y_test = parts.test.labels();
    let (chain, train_x) = FeatureChain::fit(&parts.train.texts(), &y_train, config)?;
    let test_x = chain.transform(&parts.test.texts());

    let outcomes: Vec<(ModelKind, Result<EvalReport>)> = kinds
        .par_iter()
        .map(|&kind| {
            let input = config.input_for(kind);
            let run = || -> Result<EvalReport> {
                let model = fit_model(kind, train_x.get(input), &y_train, config)
                    .map_err(|e| Error::stage("fit", e))?;
                let scores = model.predict_scores(test_x.get(input))?;
                let predicted: Vec<u8> = scores
                    .iter()
                    .map(|&s| model.label_for(s, config.threshold))
                    .collect();
                Ok(metrics(
                    &confusion(&y_test, &predicted)?,
                    kind.display_name(),
                )?)
            };
            (kind, run())
        })
        .collect();

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (kind, outcome) in outcomes {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(ModelFailure {
                model: kind.display_name().to_string(),
                error: e.to_string(),
            }),
        }
    }
    // stable: equal accuracies keep the requested order
    reports.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy));
    Ok(BenchmarkReport {
        train_size: parts.train.len(),
        test_size: parts.test.len(),
        feature_dim: chain.output_dim(),
        reports,
        failures,
    })
}

/// Fixed-point with up to 8 decimals, trailing zeros dropped.
pub fn format_metric(x: f64) -> String {
    let s = format!("{x:.8}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

const HEADERS: [&str; 7] = [
    "Model",
    "Accuracy",
    "Label",
    "Precision",
    "Recall",
    "F1-Score",
    "Support",
];

/// Aligned text table, one line per (model, label) pair.
pub fn format_table(reports: &[EvalReport], failures: &[ModelFailure]) -> String {
    let mut rows: Vec<[String; 7]> = Vec::new();
    for r in reports {
        for (i, m) in r.per_label.iter().enumerate() {
            let (model, acc) = if i == 0 {
                (r.model.clone(), format_metric(r.accuracy))
            } else {
                (String::new(), String::new())
            };
            rows.push([
                model,
                acc,
                m.label.to_string(),
                format_metric(m.precision),
                format_metric(m.recall),
                format_metric(m.f1),
                m.support.to_string(),
            ]);
        }
    }
    let mut widths = HEADERS.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let mut l = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i + 1 == cells.len() {
                l.push_str(cell);
            } else {
                let _ = write!(l, "{cell:<w$}  ");
            }
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(&HEADERS.map(String::from));
    for row in &rows {
        line(row);
    }
    for f in failures {
        let _ = writeln!(out, "{:<w$}  FAILED: {}", f.model, f.error, w = widths[0]);
    }
    out
}
