//! Classical binary classifiers over CSR feature matrices.
//!
//! Every model is fitted by a free function returning an immutable parameter
//! struct; [`ModelArtifact`] wraps them (plus the neural network) behind one
//! scoring/prediction interface.

mod forest;
mod linear;
mod naive_bayes;
mod tree;

pub use forest::{fit_forest, FeatureSubset, ForestParams, RandomForest};
pub use linear::{fit_linear_svm, fit_logistic, sigmoid, LinearModel, LogisticParams, SvmParams};
pub use naive_bayes::{fit_gaussian_nb, fit_multinomial_nb, GaussianNb, MultinomialNb};
pub use tree::{fit_tree, DecisionTree, TreeNode, TreeParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::Mlp;
use crate::sparse::SparseMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label {0} is not binary")]
    BadLabel(u8),
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("negative feature value {value} at row {row}, column {col}")]
    NegativeFeature { row: usize, col: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("model expects {expected} features, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl FitError {
    pub fn is_numeric(&self) -> bool {
        matches!(self, FitError::Diverged { .. })
    }
}

/// Validate `(x, y)` and return the per-class row counts.
pub(crate) fn class_counts(x: &SparseMatrix, y: &[u8]) -> Result<[usize; 2], FitError> {
    if x.n_rows() != y.len() {
        return Err(FitError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    let mut counts = [0usize; 2];
    for &label in y {
        if label > 1 {
            return Err(FitError::BadLabel(label));
        }
        counts[label as usize] += 1;
    }
    Ok(counts)
}

pub(crate) fn require_both_classes(x: &SparseMatrix, y: &[u8]) -> Result<[usize; 2], FitError> {
    let counts = class_counts(x, y)?;
    if counts.contains(&0) {
        return Err(FitError::SingleClass);
    }
    Ok(counts)
}

pub(crate) fn check_input_dim(x: &SparseMatrix, expected: usize) -> Result<(), FitError> {
    if x.n_cols() != expected {
        return Err(FitError::DimensionMismatch {
            expected,
            found: x.n_cols(),
        });
    }
    Ok(())
}

/// How a model's score becomes a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionRule {
    /// Score is P(label = 1); label is `score >= threshold`.
    Probability,
    /// Score is a raw margin; label is `margin >= 0` whatever the threshold.
    Margin,
    /// Score is the fraction of trees voting 1; label is a strict majority.
    Vote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ModelArtifact {
    MultinomialNb(MultinomialNb),
    GaussianNb(GaussianNb),
    Logistic(LinearModel),
    Svm(LinearModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    Mlp(Mlp),
}

impl ModelArtifact {
    pub fn input_dim(&self) -> usize {
        match self {
            ModelArtifact::MultinomialNb(m) => m.input_dim(),
            ModelArtifact::GaussianNb(m) => m.input_dim(),
            ModelArtifact::Logistic(m) | ModelArtifact::Svm(m) => m.weights.len(),
            ModelArtifact::Tree(m) => m.n_features(),
            ModelArtifact::Forest(m) => m.n_features(),
            ModelArtifact::Mlp(m) => m.params().input_dim,
        }
    }

    pub fn decision_rule(&self) -> DecisionRule {
        match self {
            ModelArtifact::Svm(_) => DecisionRule::Margin,
            ModelArtifact::Forest(_) => DecisionRule::Vote,
            _ => DecisionRule::Probability,
        }
    }

    pub fn label_for(&self, score: f64, threshold: f64) -> u8 {
        let positive = match self.decision_rule() {
            DecisionRule::Probability => score >= threshold,
            DecisionRule::Margin => score >= 0.0,
            DecisionRule::Vote => score > 0.5,
        };
        u8::from(positive)
    }

    /// Per-row score; see [`DecisionRule`] for its meaning.
    pub fn predict_scores(&self, x: &SparseMatrix) -> Result<Vec<f64>, FitError> {
        check_input_dim(x, self.input_dim())?;
        Ok(match self {
            ModelArtifact::MultinomialNb(m) => m.predict_proba(x),
            ModelArtifact::GaussianNb(m) => m.predict_proba(x),
            ModelArtifact::Logistic(m) => m.predict_proba(x),
            ModelArtifact::Svm(m) => m.decision_function(x),
            ModelArtifact::Tree(m) => m.predict_proba(x),
            ModelArtifact::Forest(m) => m.vote_fraction(x),
            ModelArtifact::Mlp(m) => m.predict_proba(x),
        })
    }

    pub fn predict(&self, x: &SparseMatrix, threshold: f64) -> Result<Vec<u8>, FitError> {
        Ok(self
            .predict_scores(x)?
            .into_iter()
            .map(|s| self.label_for(s, threshold))
            .collect())
    }

    /// Structural consistency of deserialized parameters.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ModelArtifact::MultinomialNb(m) => m.validate(),
            ModelArtifact::GaussianNb(m) => m.validate(),
            ModelArtifact::Logistic(m) | ModelArtifact::Svm(m) => m.validate(),
            ModelArtifact::Tree(m) => m.validate(),
            ModelArtifact::Forest(m) => m.validate(),
            ModelArtifact::Mlp(m) => m.params().validate().map_err(|e| e.to_string()),
        }
    }
}

pub(crate) fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
