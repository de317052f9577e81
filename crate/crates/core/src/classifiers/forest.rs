use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, TreeParams};
use super::{class_counts, FitError};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    Sqrt,
    All,
}

impl FeatureSubset {
    fn count(self, n_features: usize) -> usize {
        match self {
            FeatureSubset::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeatureSubset::All => n_features,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: FeatureSubset,
    pub bootstrap: bool,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        let tree = TreeParams::default();
        Self {
            n_trees: 100,
            max_depth: tree.max_depth,
            min_leaf: tree.min_leaf,
            features_per_split: FeatureSubset::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub features_per_split: FeatureSubset,
    pub bootstrap: bool,
    pub seed: u64,
}

/// Bagged CART trees. Tree `t` draws its bootstrap sample and feature
/// subsets from a generator seeded with `seed + t`, so trees can be grown in
/// parallel without changing the result.
pub fn fit_forest(
    x: &SparseMatrix,
    y: &[u8],
    params: &ForestParams,
) -> Result<RandomForest, FitError> {
    if params.n_trees < 1 {
        return Err(FitError::InvalidParam("n_trees must be at least 1".into()));
    }
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    tree_params.validate()?;
    class_counts(x, y)?;
    let n = y.len();
    if n == 0 {
        return Err(FitError::InvalidParam(
            "cannot fit a forest on zero rows".into(),
        ));
    }
    let m = params.features_per_split.count(x.n_cols());

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let mut weights = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weights.fill(1.0);
            }
            grow(x, y, &weights, &tree_params, Some(m), Some(&mut rng))
        })
        .collect();

    Ok(RandomForest {
        trees,
        features_per_split: params.features_per_split,
        bootstrap: params.bootstrap,
        seed: params.seed,
    })
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.trees.first().map_or(0, DecisionTree::n_features)
    }

    /// Fraction of trees voting for class 1.
    pub fn vote_fraction(&self, x: &SparseMatrix) -> Vec<f64> {
        let mut votes = vec![0usize; x.n_rows()];
        for tree in &self.trees {
            for (v, c) in votes.iter_mut().zip(tree.predict_class(x)) {
                *v += c as usize;
            }
        }
        let n = self.trees.len() as f64;
        votes.into_iter().map(|v| v as f64 / n).collect()
    }

    /// Majority vote; an even split goes to class 0.
    pub fn predict_class(&self, x: &SparseMatrix) -> Vec<u8> {
        self.vote_fraction(x)
            .into_iter()
            .map(|f| u8::from(f > 0.5))
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.trees.is_empty() {
            return Err("forest has no trees".into());
        }
        let k = self.n_features();
        for tree in &self.trees {
            if tree.n_features() != k {
                return Err("forest trees disagree on input dimension".into());
            }
            tree.validate()?;
        }
        Ok(())
    }
}
