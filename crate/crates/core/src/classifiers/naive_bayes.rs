use serde::{Deserialize, Serialize};

use super::{all_finite, require_both_classes, FitError};
use crate::sparse::SparseMatrix;

/// Posterior of class 1 from the two joint log-likelihoods.
fn posterior(jll0: f64, jll1: f64) -> f64 {
    let max = jll0.max(jll1);
    let (e0, e1) = ((jll0 - max).exp(), (jll1 - max).exp());
    e1 / (e0 + e1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultinomialNb {
    pub alpha: f64,
    pub class_log_prior: [f64; 2],
    /// `ln P(term | class)` per class, over the whole input dimension.
    pub feature_log_prob: [Vec<f64>; 2],
}

pub fn fit_multinomial_nb(
    x: &SparseMatrix,
    y: &[u8],
    alpha: f64,
) -> Result<MultinomialNb, FitError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(FitError::InvalidParam(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let class_n = require_both_classes(x, y)?;
    let v = x.n_cols();
    let mut mass = [vec![0.0; v], vec![0.0; v]];
    for (i, &label) in y.iter().enumerate() {
        for (j, value) in x.row_iter(i) {
            if value < 0.0 {
                return Err(FitError::NegativeFeature {
                    row: i,
                    col: j,
                    value,
                });
            }
            mass[label as usize][j] += value;
        }
    }
    let n = y.len() as f64;
    let feature_log_prob = mass.map(|counts| {
        let denom = (counts.iter().sum::<f64>() + alpha * v as f64).ln();
        counts.iter().map(|&c| (c + alpha).ln() - denom).collect()
    });
    Ok(MultinomialNb {
        alpha,
        class_log_prior: [(class_n[0] as f64 / n).ln(), (class_n[1] as f64 / n).ln()],
        feature_log_prob,
    })
}

impl MultinomialNb {
    pub fn input_dim(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    fn joint_log_likelihood(&self, x: &SparseMatrix, i: usize) -> [f64; 2] {
        [0, 1].map(|c| self.class_log_prior[c] + x.row_dot(i, &self.feature_log_prob[c]))
    }

    /// P(class 1 | row) for each row.
    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<f64> {
        (0..x.n_rows())
            .map(|i| {
                let [a, b] = self.joint_log_likelihood(x, i);
                posterior(a, b)
            })
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.feature_log_prob[0].len() != self.feature_log_prob[1].len() {
            return Err("multinomial NB likelihood vectors differ in length".into());
        }
        if !all_finite(&self.class_log_prior)
            || !all_finite(&self.feature_log_prob[0])
            || !all_finite(&self.feature_log_prob[1])
        {
            return Err("multinomial NB parameters must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianNb {
    pub class_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    /// Per-class feature variances, already including `epsilon`.
    pub var: [Vec<f64>; 2],
    pub epsilon: f64,
}

/// Mean and population variance of each column over `rows`, treating absent
/// entries as zeros. Two-pass so the variance does not cancel.
fn column_moments(x: &SparseMatrix, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut sum = vec![0.0; x.n_cols()];
    let mut nnz = vec![0usize; x.n_cols()];
    for &i in rows {
        for (j, v) in x.row_iter(i) {
            sum[j] += v;
            nnz[j] += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mut sq = vec![0.0; x.n_cols()];
    for &i in rows {
        for (j, v) in x.row_iter(i) {
            sq[j] += (v - mean[j]).powi(2);
        }
    }
    let var = sq
        .iter()
        .enumerate()
        .map(|(j, s)| (s + (rows.len() - nnz[j]) as f64 * mean[j] * mean[j]) / n)
        .collect();
    (mean, var)
}

/// Gaussian naive Bayes. `var_smoothing` times the largest feature variance
/// is added to every per-class variance; when all features are constant the
/// smoothing value itself is used so variances stay positive.
///
/// Works on the sparse rows directly (absent entries are zeros), which gives
/// the same estimates as densifying first.
pub fn fit_gaussian_nb(
    x: &SparseMatrix,
    y: &[u8],
    var_smoothing: f64,
) -> Result<GaussianNb, FitError> {
    if !(var_smoothing > 0.0 && var_smoothing.is_finite()) {
        return Err(FitError::InvalidParam(format!(
            "var_smoothing must be positive, got {var_smoothing}"
        )));
    }
    let class_n = require_both_classes(x, y)?;
    let all: Vec<usize> = (0..y.len()).collect();
    let (_, global_var) = column_moments(x, &all);
    let max_var = global_var.iter().copied().fold(0.0, f64::max);
    let epsilon = if max_var > 0.0 {
        var_smoothing * max_var
    } else {
        var_smoothing
    };

    let per_class = [0u8, 1].map(|c| {
        let rows: Vec<usize> = all.iter().copied().filter(|&i| y[i] == c).collect();
        let (mean, mut var) = column_moments(x, &rows);
        var.iter_mut().for_each(|v| *v += epsilon);
        (mean, var)
    });
    let n = y.len() as f64;
    let [(m0, v0), (m1, v1)] = per_class;
    Ok(GaussianNb {
        class_prior: [class_n[0] as f64 / n, class_n[1] as f64 / n],
        mean: [m0, m1],
        var: [v0, v1],
        epsilon,
    })
}

impl GaussianNb {
    pub fn input_dim(&self) -> usize {
        self.mean[0].len()
    }

    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<f64> {
        // Log-density of an all-zero row, corrected per stored entry below.
        let base = [0, 1].map(|c| {
            self.mean[c]
                .iter()
                .zip(&self.var[c])
                .map(|(m, v)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - m * m / (2.0 * v))
                .sum::<f64>()
                + self.class_prior[c].ln()
        });
        (0..x.n_rows())
            .map(|i| {
                let [a, b] = [0, 1].map(|c| {
                    let (mean, var) = (&self.mean[c], &self.var[c]);
                    base[c]
                        + x.row_iter(i)
                            .map(|(j, v)| {
                                (mean[j] * mean[j] - (v - mean[j]).powi(2)) / (2.0 * var[j])
                            })
                            .sum::<f64>()
                });
                posterior(a, b)
            })
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let k = self.mean[0].len();
        if self.mean[1].len() != k || self.var[0].len() != k || self.var[1].len() != k {
            return Err("Gaussian NB parameter vectors differ in length".into());
        }
        if self
            .var
            .iter()
            .flatten()
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err("Gaussian NB variances must be positive".into());
        }
        if !all_finite(&self.mean[0]) || !all_finite(&self.mean[1]) {
            return Err("Gaussian NB means must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn multinomial_hand_bayes() {
        // terms (a, b, c); class0 "a a b", class1 "b b c"
        let x = dense(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 1.0]]);
        let m = fit_multinomial_nb(&x, &[0, 1], 1.0).unwrap();
        let p1 = m.predict_proba(&dense(&[&[1.0, 1.0, 0.0]]))[0];
        let (c0, c1) = (0.5 * 0.5 * (1.0 / 3.0), 0.5 * (1.0 / 6.0) * 0.5);
        assert!((1.0 - p1 - c0 / (c0 + c1)).abs() < 1e-12);
        assert!((1.0 - p1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn multinomial_symmetry_and_priors() {
        let x = dense(&[&[1.0, 2.0, 0.0], &[1.0, 2.0, 0.0]]);
        let m = fit_multinomial_nb(&x, &[0, 1], 1.0).unwrap();
        assert!((m.predict_proba(&dense(&[&[3.0, 0.0, 1.0]]))[0] - 0.5).abs() < 1e-12);
        // unseen-only document on the symmetric fixture falls back to the priors
        assert!((m.predict_proba(&dense(&[&[0.0, 0.0, 5.0]]))[0] - 0.5).abs() < 1e-12);
        assert!((m.predict_proba(&SparseMatrix::zeros(1, 3))[0] - 0.5).abs() < 1e-12);
        for c in 0..2 {
            let total: f64 = m.feature_log_prob[c].iter().map(|l| l.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multinomial_errors() {
        let x = dense(&[&[1.0], &[-1.0]]);
        assert!(matches!(
            fit_multinomial_nb(&x, &[0, 1], 1.0),
            Err(FitError::NegativeFeature { row: 1, .. })
        ));
        assert!(matches!(
            fit_multinomial_nb(&x, &[0, 1], 0.0),
            Err(FitError::InvalidParam(_))
        ));
        assert_eq!(
            fit_multinomial_nb(&dense(&[&[1.0]]), &[1], 1.0),
            Err(FitError::SingleClass)
        );
    }

    #[test]
    fn gaussian_density_dominance() {
        let x = dense(&[&[1.0, 5.0], &[1.0, 5.0], &[3.0, 5.0], &[3.0, 5.0]]);
        let m = fit_gaussian_nb(&x, &[0, 0, 1, 1], 1e-9).unwrap();
        assert!(m.predict_proba(&dense(&[&[1.0, 5.0]]))[0] < 0.5);
        assert!(m.predict_proba(&dense(&[&[3.0, 5.0]]))[0] > 0.5);
    }

    #[test]
    fn gaussian_mirrored_midpoint() {
        let x = dense(&[&[-2.0], &[-1.0], &[1.0], &[2.0]]);
        let m = fit_gaussian_nb(&x, &[0, 0, 1, 1], 1e-9).unwrap();
        assert!((m.predict_proba(&dense(&[&[0.0]]))[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gaussian_hand_log_density() {
        // class0 mean 0 var 1, class1 mean 4 var 1
        let x = dense(&[&[-1.0], &[1.0], &[3.0], &[5.0]]);
        let m = fit_gaussian_nb(&x, &[0, 0, 1, 1], 1e-9).unwrap();
        assert!((m.mean[0][0]).abs() < 1e-12 && (m.mean[1][0] - 4.0).abs() < 1e-12);
        assert!((m.var[0][0] - 1.0).abs() < 1e-6);
        let p1 = m.predict_proba(&dense(&[&[1.0]]))[0];
        // log N(1;0,1) - log N(1;4,1) = (9 - 1) / 2 = 4
        let expected = 1.0 / (1.0 + 4f64.exp());
        assert!((p1 - expected).abs() < 1e-6);
        assert!(p1 < 0.5);
    }

    #[test]
    fn gaussian_sparse_matches_dense_moments() {
        let rows = vec![
            vec![0.0, 2.0],
            vec![1.5, 0.0],
            vec![0.0, 0.0],
            vec![4.0, 1.0],
        ];
        let x = SparseMatrix::from_dense(&rows);
        let m = fit_gaussian_nb(&x, &[0, 0, 1, 1], 1e-9).unwrap();
        for c in 0..2 {
            for j in 0..2 {
                let vals: Vec<f64> = rows[c * 2..c * 2 + 2].iter().map(|r| r[j]).collect();
                let mean = vals.iter().sum::<f64>() / 2.0;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0;
                assert!((m.mean[c][j] - mean).abs() < 1e-12);
                assert!((m.var[c][j] - m.epsilon - var).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_constant_features_keep_positive_variance() {
        let x = dense(&[&[1.0], &[1.0]]);
        let m = fit_gaussian_nb(&x, &[0, 1], 1e-9).unwrap();
        assert!(m.var.iter().flatten().all(|&v| v > 0.0));
        let p = m.predict_proba(&dense(&[&[1.0]]))[0];
        assert!((p - 0.5).abs() < 1e-12);
    }
}
