//! End-to-end pipeline: text → tokens → n-gram counts → TF-IDF → chi-square
//! selection → classifier, captured in one versioned JSON artifact.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    fit_forest, fit_gaussian_nb, fit_linear_svm, fit_logistic, fit_multinomial_nb, fit_tree,
    FitError, ForestParams, LogisticParams, ModelArtifact, SvmParams, TreeParams,
};
use crate::corpus::{default_label_names, Corpus, SplitSpec};
use crate::error::{Error, Result};
use crate::neural::{self, Mlp, TrainConfig};
use crate::sparse::SparseMatrix;
use crate::textprep::{CleanConfig, Preprocessor, StopwordList, SuffixRuleTable};
use crate::vectorize::{
    build_vocab, chi2_scores, count_transform, fit_idf, project, select_k_best, tfidf_transform,
    Chi2Selector, NgramSpec, TfidfWeights, Vocabulary,
};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mnb,
    Gnb,
    Logreg,
    Svm,
    Tree,
    Forest,
    Nn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Nn,
        ModelKind::Svm,
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Gnb,
        ModelKind::Logreg,
        ModelKind::Mnb,
    ];

    /// The command-line token.
    pub fn token(self) -> &'static str {
        match self {
            ModelKind::Mnb => "mnb",
            ModelKind::Gnb => "gnb",
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Nn => "nn",
        }
    }

    /// Name used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Mnb => "Multinomial Naive Bayes",
            ModelKind::Gnb => "Gaussian Naive Bayes Classifier",
            ModelKind::Logreg => "Logistic Regression",
            ModelKind::Svm => "Support Vector Machines (SVM)",
            ModelKind::Tree => "Decision Trees",
            ModelKind::Forest => "Random Forest Classifier",
            ModelKind::Nn => "Neural Network",
        }
    }

    pub fn default_input(self) -> FeatureInput {
        match self {
            ModelKind::Mnb => FeatureInput::Counts,
            _ => FeatureInput::Tfidf,
        }
    }

    fn matches(self, model: &ModelArtifact) -> bool {
        matches!(
            (self, model),
            (ModelKind::Mnb, ModelArtifact::MultinomialNb(_))
                | (ModelKind::Gnb, ModelArtifact::GaussianNb(_))
                | (ModelKind::Logreg, ModelArtifact::Logistic(_))
                | (ModelKind::Svm, ModelArtifact::Svm(_))
                | (ModelKind::Tree, ModelArtifact::Tree(_))
                | (ModelKind::Forest, ModelArtifact::Forest(_))
                | (ModelKind::Nn, ModelArtifact::Mlp(_))
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model `{s}` (expected one of mnb, gnb, logreg, svm, tree, forest, nn)"
                ))
            })
    }
}

/// Which matrix a classifier consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureInput {
    Tfidf,
    Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train_ratio: f64,
    pub stratified: bool,
    pub dedup: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let spec = SplitSpec::default();
        Self {
            train_ratio: spec.train_ratio,
            stratified: spec.stratified,
            dedup: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub clean: CleanConfig,
    pub remove_stopwords: bool,
    /// Replaces the bundled stopword list when set.
    pub stopwords_file: Option<PathBuf>,
    pub stem: bool,
    /// Replaces the bundled suffix table when set.
    pub suffix_file: Option<PathBuf>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            clean: CleanConfig::default(),
            remove_stopwords: true,
            stopwords_file: None,
            stem: true,
            suffix_file: None,
        }
    }
}

impl PreprocessConfig {
    pub fn build(&self) -> Result<Preprocessor> {
        let stopwords = match (&self.remove_stopwords, &self.stopwords_file) {
            (false, _) => None,
            (true, Some(path)) => Some(StopwordList::from_file(path)?),
            (true, None) => Some(StopwordList::default_list()),
        };
        let stemmer = match (&self.stem, &self.suffix_file) {
            (false, _) => None,
            (true, Some(path)) => Some(SuffixRuleTable::from_file(path)?),
            (true, None) => Some(SuffixRuleTable::default_table()),
        };
        Ok(Preprocessor::new(self.clean.clone(), stopwords, stemmer)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub ngram: NgramSpec,
    /// Number of chi-square-selected features (clamped to the vocabulary size).
    pub k: usize,
    pub l2_normalize: bool,
    /// Force every model onto one matrix; by default multinomial NB reads
    /// counts and the rest read TF-IDF.
    pub input: Option<FeatureInput>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            ngram: NgramSpec::default(),
            k: 5000,
            l2_normalize: true,
            input: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnbConfig {
    pub alpha: f64,
}

impl Default for MnbConfig {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnbConfig {
    pub var_smoothing: f64,
}

impl Default for GnbConfig {
    fn default() -> Self {
        Self {
            var_smoothing: 1e-9,
        }
    }
}

/// Per-model hyperparameters. Seeds are not configurable per model: every
/// model is seeded from [`RunConfig::seed`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfigs {
    pub mnb: MnbConfig,
    pub gnb: GnbConfig,
    pub logreg: LogisticParams,
    pub svm: SvmParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub nn: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub split: SplitConfig,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub models: ModelConfigs,
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            split: SplitConfig::default(),
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            models: ModelConfigs::default(),
            threshold: 0.5,
        }
    }
}

impl RunConfig {
    /// Parse a JSON config; unknown keys are errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split.train_ratio > 0.0 && self.split.train_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split.train_ratio must lie in (0, 1), got {}",
                self.split.train_ratio
            )));
        }
        if self.features.k == 0 {
            return Err(Error::Config("features.k must be at least 1".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        self.features
            .ngram
            .validate()
            .map_err(|e| Error::Config(format!("features.ngram: {e}")))?;
        self.preprocess
            .clean
            .validate()
            .map_err(|e| Error::Config(format!("preprocess.clean: {e}")))?;
        self.models
            .nn
            .validate()
            .map_err(|e| Error::Config(format!("models.nn: {e}")))?;
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_ratio: self.split.train_ratio,
            seed: self.seed,
            stratified: self.split.stratified,
        }
    }

    pub fn input_for(&self, kind: ModelKind) -> FeatureInput {
        self.features.input.unwrap_or_else(|| kind.default_input())
    }
}

/// Projected training or inference features in both representations.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub counts: SparseMatrix,
    pub tfidf: SparseMatrix,
}

impl Features {
    pub fn get(&self, input: FeatureInput) -> &SparseMatrix {
        match input {
            FeatureInput::Tfidf => &self.tfidf,
            FeatureInput::Counts => &self.counts,
        }
    }
}

/// The fitted text → feature transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureChain {
    pub preprocessor: Preprocessor,
    pub vocabulary: Vocabulary,
    pub tfidf: TfidfWeights,
    pub selector: Chi2Selector,
}

impl FeatureChain {
    /// Fit on training texts and return the chain with the training features.
    pub fn fit(texts: &[&str], labels: &[u8], config: &RunConfig) -> Result<(Self, Features)> {
        let preprocessor = config
            .preprocess
            .build()
            .map_err(|e| Error::stage("textprep", e))?;
        let docs: Vec<_> = texts.iter().map(|t| preprocessor.process(t)).collect();
        let vocabulary =
            build_vocab(&docs, &config.features.ngram).map_err(|e| Error::stage("vectorize", e))?;
        let counts = count_transform(&docs, &vocabulary);
        let tfidf = fit_idf(&counts, config.features.l2_normalize);
        let weighted =
            tfidf_transform(&counts, &tfidf).map_err(|e| Error::stage("vectorize", e))?;
        let scores = chi2_scores(&weighted, labels).map_err(|e| Error::stage("select", e))?;
        let selector =
            select_k_best(&scores, config.features.k).map_err(|e| Error::stage("select", e))?;
        let features = Features {
            counts: project(&counts, &selector).map_err(|e| Error::stage("select", e))?,
            tfidf: project(&weighted, &selector).map_err(|e| Error::stage("select", e))?,
        };
        Ok((
            Self {
                preprocessor,
                vocabulary,
                tfidf,
                selector,
            },
            features,
        ))
    }

    pub fn transform(&self, texts: &[&str]) -> Features {
        let docs: Vec<_> = texts.iter().map(|t| self.preprocessor.process(t)).collect();
        let counts = count_transform(&docs, &self.vocabulary);
        let weighted = tfidf_transform(&counts, &self.tfidf).expect("chain dimensions validated");
        Features {
            counts: project(&counts, &self.selector).expect("chain dimensions validated"),
            tfidf: project(&weighted, &self.selector).expect("chain dimensions validated"),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.selector.n_output()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let v = self.vocabulary.len();
        if self.tfidf.idf.len() != v {
            return Err(format!(
                "vocabulary has {v} terms but idf has {}",
                self.tfidf.idf.len()
            ));
        }
        if self.selector.n_input() != v {
            return Err(format!(
                "vocabulary has {v} terms but selector scores {}",
                self.selector.n_input()
            ));
        }
        if self.selector.selected.windows(2).any(|w| w[0] >= w[1])
            || self.selector.selected.iter().any(|&j| j >= v)
        {
            return Err("selector columns must be ascending and within the vocabulary".into());
        }
        if self.tfidf.idf.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err("idf weights must be positive".into());
        }
        Ok(())
    }
}

/// Fit one classifier on prepared features. Seeds come from `config.seed`.
pub fn fit_model(
    kind: ModelKind,
    x: &SparseMatrix,
    y: &[u8],
    config: &RunConfig,
) -> Result<ModelArtifact> {
    let m = &config.models;
    let seed = config.seed;
    let model = match kind {
        ModelKind::Mnb => ModelArtifact::MultinomialNb(fit_multinomial_nb(x, y, m.mnb.alpha)?),
        ModelKind::Gnb => ModelArtifact::GaussianNb(fit_gaussian_nb(x, y, m.gnb.var_smoothing)?),
        ModelKind::Logreg => {
            ModelArtifact::Logistic(fit_logistic(x, y, &LogisticParams { seed, ..m.logreg })?)
        }
        ModelKind::Svm => ModelArtifact::Svm(fit_linear_svm(x, y, &SvmParams { seed, ..m.svm })?),
        ModelKind::Tree => ModelArtifact::Tree(fit_tree(x, y, &m.tree)?),
        ModelKind::Forest => {
            ModelArtifact::Forest(fit_forest(x, y, &ForestParams { seed, ..m.forest })?)
        }
        ModelKind::Nn => {
            let cfg = TrainConfig {
                seed,
                threshold: config.threshold,
                ..m.nn
            };
            ModelArtifact::Mlp(Mlp::new(neural::train(x, y, &cfg)?.params))
        }
    };
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineArtifact {
    pub format_version: u64,
    pub model_kind: ModelKind,
    pub label_names: BTreeMap<u8, String>,
    pub threshold: f64,
    pub input: FeatureInput,
    pub chain: FeatureChain,
    pub model: ModelArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
    pub label_name: String,
    /// No selected feature fired, so the model saw an all-zero row.
    pub oov: bool,
}

pub fn fit_pipeline(
    train: &Corpus,
    config: &RunConfig,
    kind: ModelKind,
) -> Result<PipelineArtifact> {
    config.validate()?;
    let train = if config.split.dedup {
        train.dedup()
    } else {
        train.clone()
    };
    let labels = train.labels();
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::stage("corpus", FitError::SingleClass));
    }
    let (chain, features) = FeatureChain::fit(&train.texts(), &labels, config)?;
    let input = config.input_for(kind);
    let model = fit_model(kind, features.get(input), &labels, config)
        .map_err(|e| Error::stage("fit", e))?;
    Ok(PipelineArtifact {
        format_version: FORMAT_VERSION,
        model_kind: kind,
        label_names: train.label_names().clone(),
        threshold: config.threshold,
        input,
        chain,
        model,
    })
}

impl PipelineArtifact {
    pub fn scores(&self, texts: &[&str]) -> Result<Vec<f64>> {
        let features = self.chain.transform(texts);
        Ok(self.model.predict_scores(features.get(self.input))?)
    }

    pub fn predict(&self, texts: &[&str]) -> Result<Vec<Prediction>> {
        let features = self.chain.transform(texts);
        let x = features.get(self.input);
        let scores = self.model.predict_scores(x)?;
        Ok(scores
            .into_iter()
            .enumerate()
            .map(|(i, score)| {
                let label = self.model.label_for(score, self.threshold);
                Prediction {
                    label,
                    score,
                    label_name: self.label_name(label),
                    oov: x.row(i).0.is_empty(),
                }
            })
            .collect())
    }

    pub fn predict_one(&self, text: &str) -> Result<Prediction> {
        Ok(self.predict(&[text])?.remove(0))
    }

    fn label_name(&self, label: u8) -> String {
        self.label_names
            .get(&label)
            .cloned()
            .unwrap_or_else(|| default_label_names()[&label].clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Version {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        self.chain.validate().map_err(Error::Inconsistent)?;
        if !self.model_kind.matches(&self.model) {
            return Err(Error::Inconsistent(format!(
                "model_kind `{}` does not match the stored model",
                self.model_kind
            )));
        }
        self.model.validate().map_err(Error::Inconsistent)?;
        if self.model.input_dim() != self.chain.output_dim() {
            return Err(Error::Inconsistent(format!(
                "selector yields {} features but the model expects {}",
                self.chain.output_dim(),
                self.model.input_dim()
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Inconsistent("threshold must be finite".into()));
        }
        if self.label_names.keys().any(|&k| k > 1) {
            return Err(Error::Inconsistent(
                "label names must be keyed by 0 and 1".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parse and validate an artifact. The version is checked before the
    /// rest of the schema so newer files fail with a version error.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: "<document>".into(),
            message: if e.is_eof() {
                format!("truncated file: {e}")
            } else {
                e.to_string()
            },
        })?;
        let version = value.get("format_version").ok_or_else(|| Error::Schema {
            path: "format_version".into(),
            message: "missing field".into(),
        })?;
        let version = version.as_u64().ok_or_else(|| Error::Schema {
            path: "format_version".into(),
            message: "expected an unsigned integer".into(),
        })?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let artifact: PipelineArtifact =
            serde_path_to_error::deserialize(value).map_err(|e| Error::Schema {
                path: e.path().to_string(),
                message: e.into_inner().to_string(),
            })?;
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
