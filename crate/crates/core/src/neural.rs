//! Feed-forward network: dense(hidden, relu) → dropout → dense(1, sigmoid),
//! trained on mean binary cross-entropy with Adam.
//!
//! The first-layer weights are stored input-major (`input_dim` rows of
//! `hidden` values) so a sparse input row touches contiguous memory.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::sigmoid;
use crate::sparse::SparseMatrix;

pub const DEFAULT_HIDDEN: usize = 512;
/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` inside the loss.
pub const BCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("input has {found} features, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("non-finite gradient in parameter block {block}")]
    NonFiniteGradient { block: &'static str },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid network parameters: {0}")]
    InvalidParams(String),
}

impl NeuralError {
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            NeuralError::Diverged { .. } | NeuralError::NonFiniteGradient { .. }
        )
    }
}

pub const BLOCK_NAMES: [&str; 4] = ["w1", "b1", "w2", "b2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub input_dim: usize,
    pub hidden: usize,
    /// `input_dim × hidden`, input-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; input_dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    pub fn blocks(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, std::slice::from_ref(&self.b2)]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            std::slice::from_mut(&mut self.b2),
        ]
    }

    fn w1_row(&self, j: usize) -> &[f64] {
        &self.w1[j * self.hidden..(j + 1) * self.hidden]
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidParams(m.to_string()));
        if self.input_dim == 0 || self.hidden == 0 {
            return bad("dimensions must be positive");
        }
        if self.w1.len() != self.input_dim * self.hidden
            || self.b1.len() != self.hidden
            || self.w2.len() != self.hidden
        {
            return bad("block sizes do not match the declared dimensions");
        }
        if self
            .blocks()
            .iter()
            .any(|b| b.iter().any(|v| !v.is_finite()))
        {
            return bad("parameters must be finite");
        }
        Ok(())
    }
}

/// He-style initialization: `W1 ~ N(0, 2/k)`, `W2 ~ N(0, 2/hidden)`, zero biases.
pub fn init_params(input_dim: usize, hidden: usize, seed: u64) -> Result<MlpParams, NeuralError> {
    if input_dim == 0 || hidden == 0 {
        return Err(NeuralError::InvalidConfig(
            "input and hidden sizes must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = MlpParams::zeros(input_dim, hidden);
    let s1 = (2.0 / input_dim as f64).sqrt();
    let s2 = (2.0 / hidden as f64).sqrt();
    for w in p.w1.iter_mut() {
        *w = s1 * rng.sample::<f64, _>(StandardNormal);
    }
    for w in p.w2.iter_mut() {
        *w = s2 * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Train { dropout: f64 },
    Infer,
}

/// Activations of one batch, row-major `rows × hidden`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub rows: Vec<usize>,
    pub z1: Vec<f64>,
    /// Post-relu, post-dropout hidden activations.
    pub h: Vec<f64>,
    /// Dropout factor per hidden unit: 0 or `1/(1-rate)`; empty in inference.
    pub mask: Vec<f64>,
    pub logits: Vec<f64>,
    pub p: Vec<f64>,
}

fn check_dim(params: &MlpParams, x: &SparseMatrix) -> Result<(), NeuralError> {
    if x.n_cols() != params.input_dim {
        return Err(NeuralError::DimensionMismatch {
            expected: params.input_dim,
            found: x.n_cols(),
        });
    }
    Ok(())
}

/// Forward pass over the given rows of `x`. `rng` drives the dropout masks
/// and is only used in [`Mode::Train`] with a positive rate.
pub fn forward(
    params: &MlpParams,
    x: &SparseMatrix,
    rows: &[usize],
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<ForwardCache, NeuralError> {
    check_dim(params, x)?;
    let hdim = params.hidden;
    let mut z1 = Vec::with_capacity(rows.len() * hdim);
    let mut h = Vec::with_capacity(rows.len() * hdim);
    let mut mask = Vec::new();
    let mut logits = Vec::with_capacity(rows.len());
    let dropout = match mode {
        Mode::Train { dropout } if dropout > 0.0 => Some((dropout, 1.0 / (1.0 - dropout))),
        _ => None,
    };

    let mut z = vec![0.0; hdim];
    for &i in rows {
        z.copy_from_slice(&params.b1);
        for (j, v) in x.row_iter(i) {
            for (zk, wk) in z.iter_mut().zip(params.w1_row(j)) {
                *zk += v * wk;
            }
        }
        z1.extend_from_slice(&z);
        let start = h.len();
        h.extend(z.iter().map(|&v| v.max(0.0)));
        if let Some((rate, keep_scale)) = dropout {
            for hk in &mut h[start..] {
                let factor = if rng.random::<f64>() < rate {
                    0.0
                } else {
                    keep_scale
                };
                mask.push(factor);
                *hk *= factor;
            }
        }
        let logit = params.b2
            + h[start..]
                .iter()
                .zip(&params.w2)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        logits.push(logit);
    }
    let p = logits.iter().map(|&z| sigmoid(z)).collect();
    Ok(ForwardCache {
        rows: rows.to_vec(),
        z1,
        h,
        mask,
        logits,
        p,
    })
}

/// Batch-mean binary cross-entropy with probabilities clamped away from 0 and 1.
pub fn bce_loss(p: &[f64], y: &[f64]) -> f64 {
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &t)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    total / p.len() as f64
}

/// The same loss computed from logits, which stays accurate where `p`
/// rounds to 0 or 1. Capped at the clamped maximum of [`bce_loss`].
pub fn bce_loss_from_logits(logits: &[f64], y: &[f64]) -> f64 {
    let cap = -BCE_CLAMP.ln();
    let total: f64 = logits
        .iter()
        .zip(y)
        .map(|(&z, &t)| (z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()).min(cap))
        .sum();
    total / logits.len() as f64
}

fn labels_f64(y: &[u8], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| f64::from(y[i])).collect()
}

/// Gradients of the batch-mean BCE with respect to each parameter block.
pub fn backward(params: &MlpParams, x: &SparseMatrix, y: &[u8], cache: &ForwardCache) -> MlpParams {
    let mut grads = MlpParams::zeros(params.input_dim, params.hidden);
    backward_into(params, x, y, cache, &mut grads);
    grads
}

fn backward_into(
    params: &MlpParams,
    x: &SparseMatrix,
    y: &[u8],
    cache: &ForwardCache,
    grads: &mut MlpParams,
) {
    let hdim = params.hidden;
    for block in grads.blocks_mut() {
        block.fill(0.0);
    }
    let inv_b = 1.0 / cache.rows.len() as f64;
    let mut delta_h = vec![0.0; hdim];
    for (r, &i) in cache.rows.iter().enumerate() {
        let delta_out = (cache.p[r] - f64::from(y[i])) * inv_b;
        grads.b2 += delta_out;
        let h = &cache.h[r * hdim..(r + 1) * hdim];
        let z1 = &cache.z1[r * hdim..(r + 1) * hdim];
        for k in 0..hdim {
            grads.w2[k] += delta_out * h[k];
            let gate = if z1[k] > 0.0 { 1.0 } else { 0.0 };
            let drop = if cache.mask.is_empty() {
                1.0
            } else {
                cache.mask[r * hdim + k]
            };
            delta_h[k] = delta_out * params.w2[k] * gate * drop;
            grads.b1[k] += delta_h[k];
        }
        for (j, v) in x.row_iter(i) {
            let row = &mut grads.w1[j * hdim..(j + 1) * hdim];
            for (g, d) in row.iter_mut().zip(&delta_h) {
                *g += v * d;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub hidden: usize,
    #[serde(skip)]
    pub seed: u64,
    #[serde(skip)]
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 20,
            batch_size: 32,
            dropout: 0.5,
            hidden: DEFAULT_HIDDEN,
            seed: 0,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::InvalidConfig(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)".into());
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return bad("eps must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return bad("batch_size and hidden must be at least 1".into());
        }
        Ok(())
    }
}

/// Adam moment estimates, one accumulator per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(block_sizes: &[usize]) -> Self {
        Self {
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn for_params(params: &MlpParams) -> Self {
        Self::new(&params.blocks().map(<[f64]>::len))
    }
}

/// One bias-corrected Adam update. Rejects non-finite gradients before
/// touching the parameters or state.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<(), NeuralError> {
    assert_eq!(params.len(), grads.len(), "parameter/gradient block count");
    assert_eq!(params.len(), state.m.len(), "parameter/state block count");
    for (b, g) in grads.iter().enumerate() {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFiniteGradient {
                block: BLOCK_NAMES.get(b).copied().unwrap_or("?"),
            });
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - config.beta1.powi(t);
    let c2 = 1.0 - config.beta2.powi(t);
    for (b, (theta, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[b], &mut state.v[b]);
        for k in 0..theta.len() {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            theta[k] -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch's mini-batches (with dropout).
    pub loss: f64,
    /// Training accuracy in inference mode at the end of the epoch.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub history: Vec<EpochStats>,
}

/// Mini-batch Adam training. Batches larger than the data are clamped to the
/// row count. Seeds for initialization, shuffling and dropout are derived
/// from `config.seed`.
pub fn train(
    x: &SparseMatrix,
    y: &[u8],
    config: &TrainConfig,
) -> Result<TrainOutcome, NeuralError> {
    config.validate()?;
    if x.n_rows() != y.len() {
        return Err(NeuralError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if y.is_empty() {
        return Err(NeuralError::InvalidConfig(
            "cannot train on zero rows".into(),
        ));
    }
    let mut params = init_params(x.n_cols(), config.hidden, config.seed)?;
    train_from(x, y, config, &mut params).map(|history| TrainOutcome { params, history })
}

/// Continue training `params` for `config.epochs` epochs.
pub fn train_from(
    x: &SparseMatrix,
    y: &[u8],
    config: &TrainConfig,
    params: &mut MlpParams,
) -> Result<Vec<EpochStats>, NeuralError> {
    config.validate()?;
    check_dim(params, x)?;
    let n = y.len();
    let batch_size = config.batch_size.min(n.max(1));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut state = AdamState::for_params(params);
    let mut grads = MlpParams::zeros(params.input_dim, params.hidden);
    let mut order: Vec<usize> = (0..n).collect();
    let all: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(batch_size) {
            let cache = forward(
                params,
                x,
                batch,
                Mode::Train {
                    dropout: config.dropout,
                },
                &mut dropout_rng,
            )?;
            loss_sum += bce_loss_from_logits(&cache.logits, &labels_f64(y, batch));
            batches += 1;
            backward_into(params, x, y, &cache, &mut grads);
            let mut blocks = params.blocks_mut();
            let gb = grads.blocks();
            adam_step(&mut blocks, &gb, &mut state, config).map_err(|e| match e {
                NeuralError::NonFiniteGradient { .. } => NeuralError::Diverged { epoch },
                other => other,
            })?;
        }
        let loss = loss_sum / batches as f64;
        if !loss.is_finite() {
            return Err(NeuralError::Diverged { epoch });
        }
        let eval = forward(params, x, &all, Mode::Infer, &mut dropout_rng)?;
        let correct = eval
            .p
            .iter()
            .zip(y)
            .filter(|(&p, &t)| u8::from(p >= config.threshold) == t)
            .count();
        history.push(EpochStats {
            epoch,
            loss,
            accuracy: correct as f64 / n as f64,
        });
    }
    Ok(history)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub delta: f64,
    /// Coordinates sampled per block (all of them if the block is smaller).
    pub samples_per_block: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            delta: 1e-5,
            samples_per_block: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Maximum relative error per block, in [`BLOCK_NAMES`] order.
    pub per_block: [f64; 4],
    pub coordinates_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

fn batch_loss(
    params: &MlpParams,
    x: &SparseMatrix,
    y: &[u8],
    rows: &[usize],
) -> Result<f64, NeuralError> {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let cache = forward(params, x, rows, Mode::Infer, &mut unused)?;
    Ok(bce_loss_from_logits(&cache.logits, &labels_f64(y, rows)))
}

/// Compare analytic gradients against central differences of the batch loss
/// (dropout disabled) on randomly sampled coordinates of every block.
pub fn gradient_check(
    params: &MlpParams,
    x: &SparseMatrix,
    y: &[u8],
    config: &GradCheckConfig,
) -> Result<GradCheckReport, NeuralError> {
    gradient_check_with(params, x, y, config, backward)
}

/// [`gradient_check`] against an arbitrary analytic gradient routine.
pub fn gradient_check_with<F>(
    params: &MlpParams,
    x: &SparseMatrix,
    y: &[u8],
    config: &GradCheckConfig,
    analytic: F,
) -> Result<GradCheckReport, NeuralError>
where
    F: Fn(&MlpParams, &SparseMatrix, &[u8], &ForwardCache) -> MlpParams,
{
    if !(1e-6..=1e-4).contains(&config.delta) {
        return Err(NeuralError::InvalidConfig(format!(
            "finite-difference step must lie in [1e-6, 1e-4], got {}",
            config.delta
        )));
    }
    if x.n_rows() != y.len() {
        return Err(NeuralError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    let rows: Vec<usize> = (0..y.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cache = forward(params, x, &rows, Mode::Infer, &mut rng)?;
    let grads = analytic(params, x, y, &cache);

    let mut probe = params.clone();
    let mut per_block = [0.0f64; 4];
    let mut checked = 0;
    for (b, worst) in per_block.iter_mut().enumerate() {
        let len = params.blocks()[b].len();
        let picks = sample(&mut rng, len, config.samples_per_block.min(len));
        for k in picks {
            let original = params.blocks()[b][k];
            probe.blocks_mut()[b][k] = original + config.delta;
            let plus = batch_loss(&probe, x, y, &rows)?;
            probe.blocks_mut()[b][k] = original - config.delta;
            let minus = batch_loss(&probe, x, y, &rows)?;
            probe.blocks_mut()[b][k] = original;

            let numeric = (plus - minus) / (2.0 * config.delta);
            let a = grads.blocks()[b][k];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            *worst = worst.max(rel);
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: per_block.iter().copied().fold(0.0, f64::max),
        per_block,
        coordinates_checked: checked,
    })
}

/// A trained network frozen for inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mlp {
    params: MlpParams,
}

impl Mlp {
    pub fn new(params: MlpParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    /// Dropout-free P(label = 1) per row. Panics on a dimension mismatch;
    /// callers check the width first.
    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<f64> {
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        forward(&self.params, x, &rows, Mode::Infer, &mut unused)
            .expect("input width checked by caller")
            .p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn gaussian_batch(n: usize, k: usize, seed: u64) -> (SparseMatrix, Vec<u8>) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| r.sample(StandardNormal)).collect())
            .collect();
        let y = dense
            .iter()
            .map(|row| u8::from(row[0] + 0.5 * row[1] > 0.0))
            .collect();
        (SparseMatrix::from_dense(&dense), y)
    }

    #[test]
    fn init_examples() {
        let a = init_params(100, DEFAULT_HIDDEN, 5).unwrap();
        assert!(a.b1.iter().all(|&b| b == 0.0) && a.b2 == 0.0);
        assert_eq!(a, init_params(100, DEFAULT_HIDDEN, 5).unwrap());
        let n = a.w1.len() as f64;
        let mean = a.w1.iter().sum::<f64>() / n;
        let var = a.w1.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / (2.0 / 100.0) - 1.0).abs() < 0.2, "variance {var}");
    }

    #[test]
    fn forward_examples() {
        let x = SparseMatrix::from_dense(&[vec![3.0, -1.0]]);
        let zeros = MlpParams::zeros(2, DEFAULT_HIDDEN);
        assert_eq!(
            forward(&zeros, &x, &[0], Mode::Infer, &mut rng())
                .unwrap()
                .p,
            vec![0.5]
        );

        let mut p = MlpParams::zeros(1, DEFAULT_HIDDEN);
        p.w1.fill(1.0);
        p.w2.fill(1.0 / DEFAULT_HIDDEN as f64);
        let one = SparseMatrix::from_dense(&[vec![1.0]]);
        let out = forward(&p, &one, &[0], Mode::Infer, &mut rng()).unwrap().p[0];
        assert!((out - 0.731059).abs() < 1e-6);
        assert!((out - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);

        let trained = init_params(2, 16, 1).unwrap();
        let infer = forward(&trained, &x, &[0], Mode::Infer, &mut rng()).unwrap();
        let no_drop =
            forward(&trained, &x, &[0], Mode::Train { dropout: 0.0 }, &mut rng()).unwrap();
        assert_eq!(infer.p, no_drop.p);

        let narrow = SparseMatrix::from_dense(&[vec![1.0]]);
        assert_eq!(
            forward(&trained, &narrow, &[0], Mode::Infer, &mut rng()).unwrap_err(),
            NeuralError::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn dropout_masks_and_rescales() {
        let mut p = MlpParams::zeros(1, 1000);
        p.w1.fill(1.0);
        let x = SparseMatrix::from_dense(&[vec![1.0]]);
        let c = forward(&p, &x, &[0], Mode::Train { dropout: 0.5 }, &mut rng()).unwrap();
        assert!(c.h.iter().all(|&h| h == 0.0 || h == 2.0));
        let kept = c.h.iter().filter(|&&h| h > 0.0).count();
        assert!((400..600).contains(&kept));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn bce_examples() {
        assert!((bce_loss(&[0.5], &[1.0]) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(bce_loss(&[1.0 - 1e-12], &[1.0]) < 1e-11);
        assert!((bce_loss(&[0.9], &[0.0]) - 2.302585).abs() < 1e-6);
        assert!(bce_loss(&[0.0], &[1.0]).is_finite());
        assert!((bce_loss_from_logits(&[0.0], &[1.0]) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn output_gradient_is_residual() {
        let (x, y) = gaussian_batch(1, 3, 2);
        let p = init_params(3, 8, 2).unwrap();
        let c = forward(&p, &x, &[0], Mode::Infer, &mut rng()).unwrap();
        let g = backward(&p, &x, &y, &c);
        assert!((g.b2 - (c.p[0] - f64::from(y[0]))).abs() < 1e-15);
    }

    #[test]
    fn zero_input_zero_w1_gradient() {
        let x = SparseMatrix::zeros(4, 3);
        let mut p = init_params(3, 8, 3).unwrap();
        p.b1.iter_mut()
            .enumerate()
            .for_each(|(k, b)| *b = k as f64 * 0.1);
        let c = forward(&p, &x, &[0, 1, 2, 3], Mode::Infer, &mut rng()).unwrap();
        let g = backward(&p, &x, &[1, 0, 1, 1], &c);
        assert!(g.w1.iter().all(|&v| v == 0.0));
        assert!(g.b1.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn adam_examples() {
        let cfg = TrainConfig::default();
        let mut theta = vec![0.0, 0.0];
        let mut state = AdamState::new(&[2]);
        adam_step(&mut [&mut theta[..]], &[&[1.0, 1.0][..]], &mut state, &cfg).unwrap();
        for &t in &theta {
            assert!(t < 0.0 && (0.999e-3..=1e-3).contains(&t.abs()), "{t}");
        }
        assert_eq!(state.t, 1);

        let mut theta = vec![0.3];
        let mut state = AdamState::new(&[1]);
        adam_step(&mut [&mut theta[..]], &[&[0.0][..]], &mut state, &cfg).unwrap();
        assert_eq!(theta, vec![0.3]);

        let (mut a, mut b) = (vec![0.1], vec![0.1]);
        let mut state = AdamState::new(&[1, 1]);
        for g in [0.5, -2.0, 0.25] {
            adam_step(
                &mut [&mut a[..], &mut b[..]],
                &[&[g][..], &[g][..]],
                &mut state,
                &cfg,
            )
            .unwrap();
        }
        assert_eq!(a, b);

        let err = adam_step(
            &mut [&mut a[..]],
            &[&[f64::NAN][..]],
            &mut AdamState::new(&[1]),
            &cfg,
        );
        assert!(matches!(err, Err(NeuralError::NonFiniteGradient { .. })));
    }

    #[test]
    fn gradient_check_small_net() {
        let (x, y) = gaussian_batch(16, 6, 4);
        let p = init_params(6, 12, 4).unwrap();
        let report = gradient_check(&p, &x, &y, &GradCheckConfig::default()).unwrap();
        assert!(report.passes(1e-4), "{report:?}");
    }

    #[test]
    fn gradient_check_zero_gradient_point() {
        let (x, _) = gaussian_batch(8, 4, 5);
        let mut p = init_params(4, 8, 5).unwrap();
        p.b2 = 60.0;
        let report = gradient_check(&p, &x, &[1; 8], &GradCheckConfig::default()).unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn gradient_check_catches_corruption() {
        let (x, y) = gaussian_batch(16, 6, 6);
        let p = init_params(6, 12, 6).unwrap();
        let report = gradient_check_with(&p, &x, &y, &GradCheckConfig::default(), |p, x, y, c| {
            let mut g = backward(p, x, y, c);
            g.w2.iter_mut().for_each(|v| *v *= 2.0);
            g
        })
        .unwrap();
        assert!(report.max_rel_error > 1e-1);
        assert!(report.per_block[2] > 1e-1);
    }

    #[test]
    fn train_examples() {
        let (x, y) = gaussian_batch(64, 4, 7);
        let cfg = TrainConfig {
            epochs: 0,
            hidden: 8,
            ..Default::default()
        };
        let out = train(&x, &y, &cfg).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(out.params, init_params(4, 8, cfg.seed).unwrap());

        let cfg = TrainConfig {
            epochs: 3,
            hidden: 8,
            ..Default::default()
        };
        let a = train(&x, &y, &cfg).unwrap();
        let b = train(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.history.iter().map(|h| h.epoch).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );

        assert!(matches!(
            train(
                &x,
                &y,
                &TrainConfig {
                    dropout: 1.0,
                    ..cfg
                }
            ),
            Err(NeuralError::InvalidConfig(_))
        ));
    }
}
