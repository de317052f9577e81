//! N-gram vocabularies, count and TF-IDF matrices, and chi-square feature selection.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::SparseMatrix;
use crate::textprep::TokenSeq;

#[derive(Debug, Error, PartialEq)]
pub enum VectorizeError {
    #[error("invalid n-gram spec: {0}")]
    BadNgramSpec(String),
    #[error("no documents to build a vocabulary from")]
    NoDocuments,
    #[error("vocabulary is empty after min_df={min_df} filtering")]
    EmptyVocabulary { min_df: usize },
    #[error("invalid vocabulary: {0}")]
    BadVocabulary(String),
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("negative feature value {value} at row {row}, column {col}")]
    NegativeValue { row: usize, col: usize, value: f64 },
    #[error("label {0} is not binary")]
    BadLabel(u8),
    #[error("chi-square needs both classes present")]
    SingleClass,
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NgramSpec {
    pub min_n: usize,
    pub max_n: usize,
    pub min_df: usize,
}

impl Default for NgramSpec {
    fn default() -> Self {
        Self {
            min_n: 1,
            max_n: 3,
            min_df: 1,
        }
    }
}

impl NgramSpec {
    pub fn new(min_n: usize, max_n: usize, min_df: usize) -> Result<Self, VectorizeError> {
        let spec = Self {
            min_n,
            max_n,
            min_df,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), VectorizeError> {
        let bad = |msg: &str| Err(VectorizeError::BadNgramSpec(msg.to_string()));
        if self.min_n < 1 {
            return bad("min_n must be at least 1");
        }
        if self.max_n > 3 {
            return bad("max_n must be at most 3");
        }
        if self.min_n > self.max_n {
            return bad("min_n must not exceed max_n");
        }
        if self.min_df < 1 {
            return bad("min_df must be at least 1");
        }
        Ok(())
    }

    /// Contiguous space-joined n-grams of `tokens`, shortest first.
    pub fn ngrams<'a>(&self, tokens: &'a [String]) -> impl Iterator<Item = String> + 'a {
        (self.min_n..=self.max_n).flat_map(move |n| tokens.windows(n).map(|w| w.join(" ")))
    }
}

/// Fitted n-gram → column mapping. Terms are sorted lexicographically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    spec: NgramSpec,
    terms: Vec<String>,
    df: Vec<usize>,
    index: HashMap<String, usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.terms == other.terms && self.df == other.df
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyRepr {
    ngram: NgramSpec,
    terms: Vec<String>,
    df: Vec<usize>,
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            ngram: v.spec,
            terms: v.terms,
            df: v.df,
        }
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = VectorizeError;

    fn try_from(r: VocabularyRepr) -> Result<Self, Self::Error> {
        r.ngram.validate()?;
        if r.terms.len() != r.df.len() {
            return Err(VectorizeError::BadVocabulary(format!(
                "{} terms but {} document frequencies",
                r.terms.len(),
                r.df.len()
            )));
        }
        if r.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(VectorizeError::BadVocabulary(
                "terms are not strictly sorted".into(),
            ));
        }
        Ok(Self::from_parts(r.ngram, r.terms, r.df))
    }
}

impl Vocabulary {
    fn from_parts(spec: NgramSpec, terms: Vec<String>, df: Vec<usize>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            spec,
            terms,
            df,
            index,
        }
    }

    pub fn spec(&self) -> &NgramSpec {
        &self.spec
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

pub fn build_vocab(docs: &[TokenSeq], spec: &NgramSpec) -> Result<Vocabulary, VectorizeError> {
    spec.validate()?;
    if docs.is_empty() {
        return Err(VectorizeError::NoDocuments);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen = HashSet::new();
    for doc in docs {
        seen.clear();
        for gram in spec.ngrams(doc.as_slice()) {
            if seen.insert(gram.clone()) {
                *df.entry(gram).or_insert(0) += 1;
            }
        }
    }
    let (terms, df): (Vec<_>, Vec<_>) = df.into_iter().filter(|&(_, d)| d >= spec.min_df).unzip();
    if terms.is_empty() {
        return Err(VectorizeError::EmptyVocabulary {
            min_df: spec.min_df,
        });
    }
    Ok(Vocabulary::from_parts(*spec, terms, df))
}

/// Document-term occurrence counts. Out-of-vocabulary n-grams are ignored.
pub fn count_transform(docs: &[TokenSeq], vocab: &Vocabulary) -> SparseMatrix {
    SparseMatrix::from_rows(
        vocab.len(),
        docs.iter().map(|doc| {
            vocab
                .spec
                .ngrams(doc.as_slice())
                .filter_map(|g| vocab.column(&g).map(|j| (j, 1.0)))
                .collect::<Vec<_>>()
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfidfWeights {
    pub idf: Vec<f64>,
    pub l2_normalize: bool,
}

/// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1` per column.
pub fn fit_idf(counts: &SparseMatrix, l2_normalize: bool) -> TfidfWeights {
    let n = counts.n_rows() as f64;
    let mut df = vec![0usize; counts.n_cols()];
    for &j in counts.indices() {
        df[j] += 1;
    }
    let idf = df
        .iter()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    TfidfWeights { idf, l2_normalize }
}

pub fn tfidf_transform(
    counts: &SparseMatrix,
    weights: &TfidfWeights,
) -> Result<SparseMatrix, VectorizeError> {
    check_cols(counts, weights.idf.len())?;
    Ok(counts.map_rows(|_, idx, vals| {
        for (v, &j) in vals.iter_mut().zip(idx) {
            *v *= weights.idf[j];
        }
        if weights.l2_normalize {
            let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                vals.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }))
}

fn check_cols(x: &SparseMatrix, expected: usize) -> Result<(), VectorizeError> {
    if x.n_cols() != expected {
        return Err(VectorizeError::DimensionMismatch {
            expected,
            found: x.n_cols(),
        });
    }
    Ok(())
}

/// Chi-square statistic of each column against the binary labels, treating
/// column mass as observed frequencies. Columns with zero total score 0.
pub fn chi2_scores(x: &SparseMatrix, y: &[u8]) -> Result<Vec<f64>, VectorizeError> {
    if x.n_rows() != y.len() {
        return Err(VectorizeError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    let mut class_n = [0usize; 2];
    for &label in y {
        if label > 1 {
            return Err(VectorizeError::BadLabel(label));
        }
        class_n[label as usize] += 1;
    }
    if class_n.contains(&0) {
        return Err(VectorizeError::SingleClass);
    }

    let mut observed = vec![[0.0f64; 2]; x.n_cols()];
    for (i, &label) in y.iter().enumerate() {
        for (j, v) in x.row_iter(i) {
            if v < 0.0 {
                return Err(VectorizeError::NegativeValue {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            observed[j][label as usize] += v;
        }
    }
    let n = y.len() as f64;
    let prior = [class_n[0] as f64 / n, class_n[1] as f64 / n];
    Ok(observed
        .iter()
        .map(|o| {
            let total = o[0] + o[1];
            if total == 0.0 {
                return 0.0;
            }
            (0..2)
                .map(|c| {
                    let expected = total * prior[c];
                    (o[c] - expected).powi(2) / expected
                })
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chi2Selector {
    pub scores: Vec<f64>,
    /// Retained input columns, ascending.
    pub selected: Vec<usize>,
    pub k: usize,
}

impl Chi2Selector {
    pub fn n_input(&self) -> usize {
        self.scores.len()
    }

    pub fn n_output(&self) -> usize {
        self.selected.len()
    }
}

/// Keep the `k` highest-scoring columns (clamped to the column count);
/// ties go to the lower column index.
pub fn select_k_best(scores: &[f64], k: usize) -> Result<Chi2Selector, VectorizeError> {
    if k == 0 {
        return Err(VectorizeError::ZeroK);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k.min(scores.len()));
    order.sort_unstable();
    Ok(Chi2Selector {
        scores: scores.to_vec(),
        selected: order,
        k,
    })
}

pub fn project(x: &SparseMatrix, selector: &Chi2Selector) -> Result<SparseMatrix, VectorizeError> {
    check_cols(x, selector.n_input())?;
    Ok(x.select_columns(&selector.selected))
}
