//! Labeled tweet corpus: CSV ingestion, label encoding and train/test splitting.
//!
//! The on-disk format is a UTF-8 CSV with the header `text,label`. Labels are
//! `1`/`0` or the strings `depressive`/`non-depressive`.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NEGATIVE: u8 = 0;
pub const POSITIVE: u8 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("bad header: expected `text,label`, found `{found}`")]
    BadHeader { found: String },
    #[error("row {row}: expected 2 columns, found {found}")]
    ColumnCount { row: usize, found: usize },
    #[error(
        "row {row}: unparseable label `{label}` (expected 0, 1, depressive or non-depressive)"
    )]
    BadLabel { row: usize, label: String },
    #[error("row {row}: empty text")]
    EmptyText { row: usize },
    #[error("row {row}: malformed csv: {message}")]
    Malformed { row: usize, message: String },
    #[error("empty corpus")]
    Empty,
    #[error("train ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error("corpus of {n} documents is too small to give nonempty train and test sets at ratio {ratio}")]
    TooSmall { n: usize, ratio: f64 },
    #[error("cannot write corpus: {0}")]
    Write(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub text: String,
    pub label: u8,
}

impl LabeledDocument {
    pub fn new(text: impl Into<String>, label: u8) -> Self {
        debug_assert!(label <= 1);
        Self {
            text: text.into(),
            label,
        }
    }
}

/// Default human-readable names of the two labels.
pub fn default_label_names() -> BTreeMap<u8, String> {
    BTreeMap::from([
        (NEGATIVE, "non-depressive".to_string()),
        (POSITIVE, "depressive".to_string()),
    ])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<LabeledDocument>,
    label_names: BTreeMap<u8, String>,
}

impl Default for Corpus {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl FromIterator<LabeledDocument> for Corpus {
    fn from_iter<I: IntoIterator<Item = LabeledDocument>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl Corpus {
    pub fn new(docs: Vec<LabeledDocument>) -> Self {
        Self {
            docs,
            label_names: default_label_names(),
        }
    }

    pub fn docs(&self) -> &[LabeledDocument] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn label_names(&self) -> &BTreeMap<u8, String> {
        &self.label_names
    }

    pub fn texts(&self) -> Vec<&str> {
        self.docs.iter().map(|d| d.text.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.docs.iter().map(|d| d.label).collect()
    }

    /// Drop repeated texts, keeping the first occurrence.
    pub fn dedup(&self) -> Corpus {
        let mut seen = HashSet::new();
        self.docs
            .iter()
            .filter(|d| seen.insert(d.text.as_str()))
            .cloned()
            .collect()
    }

    fn select(&self, indices: &[usize]) -> Corpus {
        Corpus {
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
            label_names: self.label_names.clone(),
        }
    }
}

pub fn parse_label(raw: &str) -> Option<u8> {
    let raw = raw.trim();
    match raw {
        "0" => Some(NEGATIVE),
        "1" => Some(POSITIVE),
        _ if raw.eq_ignore_ascii_case("non-depressive") => Some(NEGATIVE),
        _ if raw.eq_ignore_ascii_case("depressive") => Some(POSITIVE),
        _ => None,
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CorpusError::Unreadable {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_csv(file)
}

/// Parse a corpus from any reader. Row numbers in errors are 1-based and
/// count data rows only (the header is not a row).
pub fn read_csv<R: Read>(reader: R) -> Result<Corpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| CorpusError::Malformed {
        row: 0,
        message: e.to_string(),
    })?;
    let names: Vec<String> = header
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if names != ["text", "label"] {
        return Err(CorpusError::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut docs = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CorpusError::Malformed {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(CorpusError::ColumnCount {
                row,
                found: record.len(),
            });
        }
        let text = record[0].trim();
        if text.is_empty() {
            return Err(CorpusError::EmptyText { row });
        }
        let label = parse_label(&record[1]).ok_or_else(|| CorpusError::BadLabel {
            row,
            label: record[1].to_string(),
        })?;
        docs.push(LabeledDocument::new(text, label));
    }
    if docs.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(Corpus::new(docs))
}

pub fn write_csv<W: Write>(corpus: &Corpus, writer: W) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| CorpusError::Write(e.to_string());
    wtr.write_record(["text", "label"]).map_err(err)?;
    for doc in corpus.docs() {
        wtr.write_record([
            doc.text.as_str(),
            if doc.label == POSITIVE { "1" } else { "0" },
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| CorpusError::Write(e.to_string()))
}

pub fn save_csv(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let file =
        std::fs::File::create(path.as_ref()).map_err(|e| CorpusError::Write(e.to_string()))?;
    write_csv(corpus, std::io::BufWriter::new(file))
}

pub fn class_counts(corpus: &Corpus) -> BTreeMap<u8, usize> {
    let mut counts = BTreeMap::new();
    for doc in corpus.docs() {
        *counts.entry(doc.label).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_ratio: 0.8,
            seed: 42,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Corpus,
    pub test: Corpus,
}

/// Number of training documents for `n` documents at `ratio`: `floor(n * ratio)`.
pub fn train_size(n: usize, ratio: f64) -> usize {
    // The epsilon keeps products like 100 * 0.29 from flooring one short.
    ((n as f64) * ratio + 1e-9).floor() as usize
}

pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<DataSplit, CorpusError> {
    if !(spec.train_ratio > 0.0 && spec.train_ratio < 1.0) {
        return Err(CorpusError::BadRatio(spec.train_ratio));
    }
    let n = corpus.len();
    let n_train = train_size(n, spec.train_ratio);
    if n < 2 || n_train == 0 || n_train == n {
        return Err(CorpusError::TooSmall {
            n,
            ratio: spec.train_ratio,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_idx = Vec::with_capacity(n_train);
    if spec.stratified {
        let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, doc) in corpus.docs().iter().enumerate() {
            by_class.entry(doc.label).or_default().push(i);
        }
        let quotas = stratified_quotas(
            &by_class.values().map(Vec::len).collect::<Vec<_>>(),
            n_train,
            spec.train_ratio,
        );
        for (members, quota) in by_class.values_mut().zip(quotas) {
            members.shuffle(&mut rng);
            train_idx.extend_from_slice(&members[..quota]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        train_idx.extend_from_slice(&all[..n_train]);
    }

    train_idx.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train_idx {
        in_train[i] = true;
    }
    let test_idx: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    Ok(DataSplit {
        train: corpus.select(&train_idx),
        test: corpus.select(&test_idx),
    })
}

/// Per-class training quotas: floor of each class's share, with the leftover
/// documents handed to the classes with the largest fractional parts.
fn stratified_quotas(class_sizes: &[usize], n_train: usize, ratio: f64) -> Vec<usize> {
    let exact: Vec<f64> = class_sizes.iter().map(|&c| c as f64 * ratio).collect();
    let mut quotas: Vec<usize> = exact
        .iter()
        .zip(class_sizes)
        .map(|(&e, &c)| ((e + 1e-9).floor() as usize).min(c))
        .collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - quotas[a] as f64;
        let fb = exact[b] - quotas[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = n_train.saturating_sub(quotas.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quotas[c] < class_sizes[c] {
            quotas[c] += 1;
            remaining -= 1;
        }
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture() -> Corpus {
        Corpus::new(vec![
            LabeledDocument::new(
                "mata thiyena lokuma prashnaya hemade genama hithana eka.",
                1,
            ),
            LabeledDocument::new("oya hondin inna mama ne eth kamak ne", 1),
            LabeledDocument::new("mama ada ude jim ekata gihiin yoga kala.", 0),
            LabeledDocument::new("api heta muhudata yanawa", 0),
        ])
    }

    fn balanced(n: usize) -> Corpus {
        (0..n)
            .map(|i| LabeledDocument::new(format!("doc {i}"), (i % 2) as u8))
            .collect()
    }

    #[test]
    fn loads_table_rows() {
        let csv = "text,label\n\
            mata thiyena lokuma prashnaya hemade genama hithana eka.,1\n\
            mama ada ude jim ekata gihiin yoga kala.,0\n";
        let corpus = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.docs()[0].label, 1);
        assert_eq!(
            corpus.docs()[0].text,
            "mata thiyena lokuma prashnaya hemade genama hithana eka."
        );
        assert_eq!(corpus.docs()[1].label, 0);
    }

    #[test]
    fn accepts_label_strings_and_quoting() {
        let csv = "text,label\n\"hello, world\",depressive\n\"say \"\"hi\"\"\",non-depressive\n";
        let corpus = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(corpus.labels(), vec![1, 0]);
        assert_eq!(corpus.docs()[0].text, "hello, world");
        assert_eq!(corpus.docs()[1].text, "say \"hi\"");
    }

    #[test]
    fn header_only_is_empty_corpus() {
        let err = read_csv("text,label\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Empty));
        assert_eq!(err.to_string(), "empty corpus");
    }

    #[test]
    fn bad_label_reports_row() {
        let err = read_csv("text,label\na,1\nb,2\n".as_bytes()).unwrap_err();
        match err {
            CorpusError::BadLabel { row, label } => {
                assert_eq!(row, 2);
                assert_eq!(label, "2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            read_csv("label,text\n1,a\n".as_bytes()),
            Err(CorpusError::BadHeader { .. })
        ));
        assert!(matches!(
            read_csv("text,label,extra\na,1,x\n".as_bytes()),
            Err(CorpusError::BadHeader { .. })
        ));
        assert!(matches!(
            read_csv("text,label\na,1,x\n".as_bytes()),
            Err(CorpusError::ColumnCount { row: 1, found: 3 })
        ));
        assert!(matches!(
            read_csv("text,label\n   ,1\n".as_bytes()),
            Err(CorpusError::EmptyText { row: 1 })
        ));
        assert!(matches!(
            load_csv("/definitely/not/here.csv"),
            Err(CorpusError::Unreadable { .. })
        ));
    }

    #[test]
    fn counts() {
        assert!(class_counts(&Corpus::default()).is_empty());
        let c = class_counts(&fixture());
        assert_eq!(c, BTreeMap::from([(0, 2), (1, 2)]));
    }

    #[test]
    fn full_dataset_split_sizes() {
        assert_eq!(train_size(6014, 0.8), 4811);
        let corpus: Corpus = (0..6014)
            .map(|i| LabeledDocument::new(format!("t{i}"), u8::from(i < 2997)))
            .collect();
        let s = split(&corpus, &SplitSpec::default()).unwrap();
        assert_eq!(s.train.len(), 4811);
        assert_eq!(s.test.len(), 1203);
    }

    #[test]
    fn stratified_ten() {
        let s = split(&balanced(10), &SplitSpec::default()).unwrap();
        assert_eq!(class_counts(&s.train), BTreeMap::from([(0, 4), (1, 4)]));
        assert_eq!(class_counts(&s.test), BTreeMap::from([(0, 1), (1, 1)]));
    }

    #[test]
    fn split_is_deterministic() {
        let c = balanced(37);
        let spec = SplitSpec {
            seed: 9,
            ..Default::default()
        };
        assert_eq!(split(&c, &spec).unwrap(), split(&c, &spec).unwrap());
    }

    #[test]
    fn split_rejects_tiny_or_bad_ratio() {
        assert!(matches!(
            split(&balanced(1), &SplitSpec::default()),
            Err(CorpusError::TooSmall { .. })
        ));
        assert!(matches!(
            split(
                &balanced(2),
                &SplitSpec {
                    train_ratio: 0.4,
                    ..Default::default()
                }
            ),
            Err(CorpusError::TooSmall { .. })
        ));
        assert!(matches!(
            split(
                &balanced(10),
                &SplitSpec {
                    train_ratio: 1.0,
                    ..Default::default()
                }
            ),
            Err(CorpusError::BadRatio(_))
        ));
    }

    #[test]
    fn dedup_keeps_first() {
        let c = Corpus::new(vec![
            LabeledDocument::new("a", 1),
            LabeledDocument::new("b", 0),
            LabeledDocument::new("a", 0),
        ]);
        assert_eq!(c.dedup().labels(), vec![1, 0]);
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_csv(&fixture(), &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), fixture());
    }

    proptest! {
        #[test]
        fn split_partitions_input(
            labels in prop::collection::vec(0u8..2, 2..120),
            ratio in 0.05f64..0.95,
            seed in any::<u64>(),
            stratified in any::<bool>(),
        ) {
            let corpus: Corpus = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| LabeledDocument::new(format!("d{}", i % 7), l))
                .collect();
            let spec = SplitSpec { train_ratio: ratio, seed, stratified };
            let n_train = train_size(corpus.len(), ratio);
            match split(&corpus, &spec) {
                Err(CorpusError::TooSmall { .. }) => prop_assert!(n_train == 0 || n_train == corpus.len()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
                Ok(s) => {
                    prop_assert_eq!(s.train.len(), n_train);
                    let mut joined: Vec<_> = s.train.docs().iter().chain(s.test.docs()).cloned().collect();
                    let mut original = corpus.docs().to_vec();
                    joined.sort_by(|a, b| (&a.text, a.label).cmp(&(&b.text, b.label)));
                    original.sort_by(|a, b| (&a.text, a.label).cmp(&(&b.text, b.label)));
                    prop_assert_eq!(joined, original);
                    if stratified {
                        let total = class_counts(&corpus);
                        let train = class_counts(&s.train);
                        for (label, &count) in &total {
                            let got = *train.get(label).unwrap_or(&0) as f64;
                            prop_assert!((got - ratio * count as f64).abs() <= 1.0 + 1e-9);
                        }
                    }
                }
            }
        }
    }
}
