use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{all_finite, require_both_classes, FitError};
use crate::sparse::SparseMatrix;

/// Logistic function, kept strictly inside (0, 1) for every finite input.
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn decision_function(&self, x: &SparseMatrix) -> Vec<f64> {
        (0..x.n_rows())
            .map(|i| x.row_dot(i, &self.weights) + self.bias)
            .collect()
    }

    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<f64> {
        self.decision_function(x).into_iter().map(sigmoid).collect()
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if !all_finite(&self.weights) || !self.bias.is_finite() {
            return Err("linear model parameters must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticParams {
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            lr: 0.1,
            l2: 1e-4,
            epochs: 50,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Mini-batch gradient descent on mean binary cross-entropy plus
/// `l2 / 2 * ||w||^2` (bias unregularized). Batches follow a seeded shuffle.
pub fn fit_logistic(
    x: &SparseMatrix,
    y: &[u8],
    params: &LogisticParams,
) -> Result<LinearModel, FitError> {
    if !(params.lr > 0.0 && params.lr.is_finite()) {
        return Err(FitError::InvalidParam(format!(
            "lr must be positive, got {}",
            params.lr
        )));
    }
    if params.l2 < 0.0 || params.batch_size == 0 {
        return Err(FitError::InvalidParam(
            "l2 must be >= 0 and batch_size >= 1".into(),
        ));
    }
    require_both_classes(x, y)?;

    let n = y.len();
    let mut model = LinearModel::zeros(x.n_cols());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut residual = Vec::with_capacity(params.batch_size);

    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        let mut data_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            residual.clear();
            for &i in batch {
                let z = x.row_dot(i, &model.weights) + model.bias;
                let target = f64::from(y[i]);
                data_loss += bce_from_logit(z, target);
                residual.push(sigmoid(z) - target);
            }
            let scale = params.lr / batch.len() as f64;
            let decay = 1.0 - params.lr * params.l2;
            model.weights.iter_mut().for_each(|w| *w *= decay);
            for (&i, &r) in batch.iter().zip(&residual) {
                for (j, v) in x.row_iter(i) {
                    model.weights[j] -= scale * r * v;
                }
            }
            model.bias -= scale * residual.iter().sum::<f64>();
        }
        let penalty = 0.5 * params.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
        if !(data_loss / n as f64 + penalty).is_finite() {
            return Err(FitError::Diverged { epoch });
        }
    }
    Ok(model)
}

/// `-[t ln s(z) + (1-t) ln(1-s(z))]` evaluated without forming `s(z)`.
pub(crate) fn bce_from_logit(z: f64, target: f64) -> f64 {
    z.max(0.0) - z * target + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 50,
            seed: 0,
        }
    }
}

/// Linear SVM by stochastic subgradient descent on
/// `lambda/2 * ||w||^2 + mean hinge`, step `1 / (lambda * t)`, one shuffled
/// pass per epoch. The bias is an extra constant-1 feature, so it is
/// regularized with the weights.
pub fn fit_linear_svm(
    x: &SparseMatrix,
    y: &[u8],
    params: &SvmParams,
) -> Result<LinearModel, FitError> {
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(FitError::InvalidParam(format!(
            "lambda must be positive, got {}",
            params.lambda
        )));
    }
    require_both_classes(x, y)?;

    let n = y.len();
    let dim = x.n_cols();
    // w = scale * v, with the bias stored at v[dim]
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0f64;
    let signed: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;

    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let margin = signed[i] * scale * (x.row_dot(i, &v[..dim]) + v[dim]);
            let shrink = 1.0 - eta * params.lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * signed[i] / scale;
                for (j, value) in x.row_iter(i) {
                    v[j] += step * value;
                }
                v[dim] += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|c| c * scale).collect();
        let hinge: f64 = (0..n)
            .map(|i| (1.0 - signed[i] * (x.row_dot(i, &w[..dim]) + w[dim])).max(0.0))
            .sum::<f64>()
            / n as f64;
        let objective = 0.5 * params.lambda * w.iter().map(|c| c * c).sum::<f64>() + hinge;
        if !objective.is_finite() {
            return Err(FitError::Diverged { epoch });
        }
    }
    Ok(LinearModel {
        weights: v[..dim].iter().map(|c| c * scale).collect(),
        bias: v[dim] * scale,
    })
}
