use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_counts, FitError};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 32,
            min_leaf: 1,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<(), FitError> {
        if self.max_depth < 1 || self.min_leaf < 1 {
            return Err(FitError::InvalidParam(
                "max_depth and min_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: u8,
        /// (Weighted) training rows of each class that reached the leaf.
        counts: [f64; 2],
    },
}

/// CART classifier stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionTree {
    n_features: usize,
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            max = max.max(d);
            if let TreeNode::Split { left, right, .. } = self.nodes[id] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }

    fn leaf_for(&self, x: &SparseMatrix, i: usize) -> (u8, [f64; 2]) {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x.get(i, feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
                TreeNode::Leaf { class, counts } => return (class, counts),
            }
        }
    }

    pub fn predict_class(&self, x: &SparseMatrix) -> Vec<u8> {
        (0..x.n_rows()).map(|i| self.leaf_for(x, i).0).collect()
    }

    /// Fraction of class-1 training weight in the leaf each row lands in.
    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<f64> {
        (0..x.n_rows())
            .map(|i| {
                let (_, c) = self.leaf_for(x, i);
                c[1] / (c[0] + c[1])
            })
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (id, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    // children are always stored after their parent, so this also rules out cycles
                    if feature >= self.n_features
                        || !threshold.is_finite()
                        || left <= id
                        || right <= id
                        || left >= self.nodes.len()
                        || right >= self.nodes.len()
                    {
                        return Err(format!("tree node {id} is malformed"));
                    }
                }
                TreeNode::Leaf { class, counts } => {
                    if class > 1
                        || counts.iter().any(|c| c.is_nan() || *c < 0.0)
                        || counts[0] + counts[1] <= 0.0
                    {
                        return Err(format!("tree leaf {id} is malformed"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fit a CART tree with Gini impurity on every feature, unit sample weights.
pub fn fit_tree(x: &SparseMatrix, y: &[u8], params: &TreeParams) -> Result<DecisionTree, FitError> {
    params.validate()?;
    class_counts(x, y)?;
    if y.is_empty() {
        return Err(FitError::InvalidParam(
            "cannot fit a tree on zero rows".into(),
        ));
    }
    let weights = vec![1.0; y.len()];
    Ok(grow(x, y, &weights, params, None, None))
}

fn leaf(counts: [f64; 2]) -> TreeNode {
    TreeNode::Leaf {
        class: u8::from(counts[1] >= counts[0]),
        counts,
    }
}

/// `total * gini` of a node, i.e. `total - sum(count^2) / total`.
fn weighted_gini(c: [f64; 2]) -> f64 {
    let total = c[0] + c[1];
    if total == 0.0 {
        0.0
    } else {
        total - (c[0] * c[0] + c[1] * c[1]) / total
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Values of one feature inside a node: `(value, weight, label)` for stored
/// entries. Absent entries are implicit zeros.
type FeatureEntries = Vec<(f64, f64, u8)>;

/// Grow a tree on rows with positive `weights` (bootstrap multiplicities).
///
/// With `max_features = Some(m)` each split considers `m` features drawn
/// from those that are non-constant in the node; fewer candidates means all
/// of them are examined and `rng` is not touched.
pub(crate) fn grow(
    x: &SparseMatrix,
    y: &[u8],
    weights: &[f64],
    params: &TreeParams,
    max_features: Option<usize>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> DecisionTree {
    let n_features = x.n_cols();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut entries: Vec<FeatureEntries> = vec![Vec::new(); n_features];
    let mut touched: Vec<usize> = Vec::new();

    let root_rows: Vec<usize> = (0..y.len()).filter(|&i| weights[i] > 0.0).collect();
    nodes.push(leaf([1.0, 0.0]));
    let mut stack = vec![(0usize, root_rows, 0usize)];

    while let Some((id, rows, depth)) = stack.pop() {
        let mut counts = [0.0; 2];
        for &i in &rows {
            counts[y[i] as usize] += weights[i];
        }
        nodes[id] = leaf(counts);
        let total = counts[0] + counts[1];
        if counts[0] == 0.0
            || counts[1] == 0.0
            || depth >= params.max_depth
            || total < 2.0 * params.min_leaf as f64
        {
            continue;
        }

        for &j in &touched {
            entries[j].clear();
        }
        touched.clear();
        for &i in &rows {
            for (j, v) in x.row_iter(i) {
                if entries[j].is_empty() {
                    touched.push(j);
                }
                entries[j].push((v, weights[i], y[i]));
            }
        }
        touched.sort_unstable();

        let mut candidates: Vec<usize> = touched
            .iter()
            .copied()
            .filter(|&j| {
                let e = &entries[j];
                let stored: f64 = e.iter().map(|t| t.1).sum();
                stored < total || e.iter().any(|t| t.0 != e[0].0)
            })
            .collect();
        if let (Some(m), Some(rng)) = (max_features, rng.as_deref_mut()) {
            if candidates.len() > m {
                let mut picked: Vec<usize> = sample(rng, candidates.len(), m)
                    .into_iter()
                    .map(|p| candidates[p])
                    .collect();
                picked.sort_unstable();
                candidates = picked;
            }
        }

        let mut best: Option<Candidate> = None;
        let mut sorted: Vec<(f64, [f64; 2])> = Vec::new();
        for &j in &candidates {
            sorted.clear();
            let mut zero = counts;
            for &(v, w, label) in &entries[j] {
                let mut c = [0.0; 2];
                c[label as usize] = w;
                zero[label as usize] -= w;
                sorted.push((v, c));
            }
            if zero[0] > 0.0 || zero[1] > 0.0 {
                sorted.push((0.0, zero));
            }
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            // merge equal values
            let mut merged: Vec<(f64, [f64; 2])> = Vec::with_capacity(sorted.len());
            for &(v, c) in &sorted {
                match merged.last_mut() {
                    Some((last, acc)) if *last == v => {
                        acc[0] += c[0];
                        acc[1] += c[1];
                    }
                    _ => merged.push((v, c)),
                }
            }

            let mut left = [0.0; 2];
            for pair in merged.windows(2) {
                let (lo, c) = pair[0];
                let hi = pair[1].0;
                left[0] += c[0];
                left[1] += c[1];
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let (wl, wr) = (left[0] + left[1], right[0] + right[1]);
                if wl < params.min_leaf as f64 || wr < params.min_leaf as f64 {
                    continue;
                }
                let impurity = weighted_gini(left) + weighted_gini(right);
                let better = match &best {
                    None => true,
                    Some(b) => impurity < b.impurity - 1e-12 * total,
                };
                if better {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Candidate {
                        feature: j,
                        threshold,
                        impurity,
                    });
                }
            }
        }

        let Some(split) = best else { continue };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| x.get(i, split.feature) <= split.threshold);
        let left_id = nodes.len();
        nodes.push(leaf([1.0, 0.0]));
        nodes.push(leaf([1.0, 0.0]));
        nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_id,
            right: left_id + 1,
        };
        stack.push((left_id + 1, right_rows, depth + 1));
        stack.push((left_id, left_rows, depth + 1));
    }

    DecisionTree { n_features, nodes }
}
