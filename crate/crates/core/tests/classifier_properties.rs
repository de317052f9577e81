use proptest::prelude::*;

use rsdetect::classifiers::{
    fit_forest, fit_gaussian_nb, fit_linear_svm, fit_logistic, fit_multinomial_nb, fit_tree,
    FeatureSubset, ForestParams, LogisticParams, ModelArtifact, SvmParams, TreeParams,
};
use rsdetect::sparse::SparseMatrix;

/// Small count matrices with both labels present.
fn labelled_counts(
    max_cols: usize,
    max_rows: usize,
) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
    (1..=max_cols, 2..=max_rows).prop_flat_map(|(cols, rows)| {
        (
            prop::collection::vec(prop::collection::vec(0u8..4, cols), rows),
            prop::collection::vec(0u8..2, rows - 2),
        )
            .prop_map(|(m, tail)| {
                let dense = m
                    .into_iter()
                    .map(|r| r.into_iter().map(f64::from).collect())
                    .collect();
                let mut y = vec![0, 1];
                y.extend(tail);
                (dense, y)
            })
    })
}

fn real_rows(max_cols: usize, max_rows: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
    (1..=max_cols, 2..=max_rows).prop_flat_map(|(cols, rows)| {
        (
            prop::collection::vec(
                prop::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], cols),
                rows,
            ),
            prop::collection::vec(0u8..2, rows - 2),
        )
            .prop_map(|(dense, tail)| {
                let mut y = vec![0, 1];
                y.extend(tail);
                (dense, y)
            })
    })
}

/// P(class 0 | doc) by multiplying raw smoothed probabilities over tokens.
fn brute_force_posterior(docs: &[Vec<f64>], y: &[u8], alpha: f64, test: &[f64]) -> f64 {
    let v = test.len();
    let joint: Vec<f64> = (0..2u8)
        .map(|c| {
            let members: Vec<&Vec<f64>> = docs
                .iter()
                .zip(y)
                .filter(|(_, &l)| l == c)
                .map(|(d, _)| d)
                .collect();
            let prior = members.len() as f64 / docs.len() as f64;
            let mut counts = vec![0.0; v];
            for d in &members {
                for (acc, x) in counts.iter_mut().zip(d.iter()) {
                    *acc += x;
                }
            }
            let total: f64 = counts.iter().sum::<f64>() + alpha * v as f64;
            let mut p = prior;
            for (j, &n) in test.iter().enumerate() {
                for _ in 0..n as usize {
                    p *= (counts[j] + alpha) / total;
                }
            }
            p
        })
        .collect();
    joint[0] / (joint[0] + joint[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multinomial_nb_matches_enumeration(
        (docs, y) in labelled_counts(5, 8),
        test in prop::collection::vec(0u8..3, 5),
        alpha in 0.1..2.0f64,
    ) {
        let v = docs[0].len();
        let test: Vec<f64> = test[..v].iter().map(|&c| f64::from(c)).collect();
        let model = fit_multinomial_nb(&SparseMatrix::from_dense(&docs), &y, alpha).unwrap();
        let p1 = model.predict_proba(&SparseMatrix::from_dense(std::slice::from_ref(&test)))[0];
        let oracle = brute_force_posterior(&docs, &y, alpha, &test);
        prop_assert!((1.0 - p1 - oracle).abs() < 1e-9, "model {} oracle {}", 1.0 - p1, oracle);
    }

    #[test]
    fn probabilities_in_unit_interval((dense, y) in real_rows(6, 20)) {
        let x = SparseMatrix::from_dense(&dense);
        let counts = SparseMatrix::from_dense(&dense.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect::<Vec<_>>());
        let scores = [
            fit_multinomial_nb(&counts, &y, 1.0).unwrap().predict_proba(&counts),
            fit_gaussian_nb(&x, &y, 1e-9).unwrap().predict_proba(&x),
            fit_logistic(&x, &y, &LogisticParams { epochs: 5, ..Default::default() }).unwrap().predict_proba(&x),
        ];
        for s in scores.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(s));
            prop_assert!(((1.0 - s) + s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn labels_follow_decision_rule((dense, y) in real_rows(5, 16), threshold in 0.0..1.0f64) {
        let x = SparseMatrix::from_dense(&dense);
        let models = [
            ModelArtifact::GaussianNb(fit_gaussian_nb(&x, &y, 1e-9).unwrap()),
            ModelArtifact::Logistic(fit_logistic(&x, &y, &LogisticParams { epochs: 5, ..Default::default() }).unwrap()),
            ModelArtifact::Svm(fit_linear_svm(&x, &y, &SvmParams { epochs: 5, ..Default::default() }).unwrap()),
            ModelArtifact::Tree(fit_tree(&x, &y, &TreeParams::default()).unwrap()),
            ModelArtifact::Forest(fit_forest(&x, &y, &ForestParams { n_trees: 5, ..Default::default() }).unwrap()),
        ];
        for model in &models {
            let scores = model.predict_scores(&x).unwrap();
            let labels = model.predict(&x, threshold).unwrap();
            for (s, l) in scores.iter().zip(&labels) {
                let expected = match model {
                    ModelArtifact::Svm(_) => *s >= 0.0,
                    ModelArtifact::Forest(_) => *s > 0.5,
                    _ => *s >= threshold,
                };
                prop_assert_eq!(*l, u8::from(expected));
            }
        }
    }

    #[test]
    fn single_tree_forest_is_tree((dense, y) in real_rows(10, 50)) {
        let x = SparseMatrix::from_dense(&dense);
        let tree = fit_tree(&x, &y, &TreeParams::default()).unwrap();
        let forest = fit_forest(&x, &y, &ForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: FeatureSubset::All,
            ..Default::default()
        }).unwrap();
        prop_assert_eq!(forest.predict_class(&x), tree.predict_class(&x));
    }

    #[test]
    fn fits_are_reproducible((dense, y) in real_rows(6, 20), seed in any::<u64>()) {
        let x = SparseMatrix::from_dense(&dense);
        let lp = LogisticParams { epochs: 3, seed, ..Default::default() };
        prop_assert_eq!(fit_logistic(&x, &y, &lp).unwrap(), fit_logistic(&x, &y, &lp).unwrap());
        let sp = SvmParams { epochs: 3, seed, ..Default::default() };
        prop_assert_eq!(fit_linear_svm(&x, &y, &sp).unwrap(), fit_linear_svm(&x, &y, &sp).unwrap());
        let fp = ForestParams { n_trees: 4, seed, ..Default::default() };
        prop_assert_eq!(fit_forest(&x, &y, &fp).unwrap(), fit_forest(&x, &y, &fp).unwrap());
    }
}

#[test]
fn tree_and_forest_memorize_distinct_rows() {
    let dense: Vec<Vec<f64>> = (0..12)
        .map(|i| vec![i as f64, (i * 7 % 5) as f64])
        .collect();
    let y: Vec<u8> = (0..12).map(|i| u8::from(i % 3 == 0)).collect();
    let x = SparseMatrix::from_dense(&dense);
    let tree = fit_tree(
        &x,
        &y,
        &TreeParams {
            max_depth: usize::MAX,
            min_leaf: 1,
        },
    )
    .unwrap();
    assert_eq!(tree.predict_class(&x), y);
}
