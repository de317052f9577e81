//! Seeded synthetic data for benchmarks and tests.
//!
//! [`generate`] builds a two-class corpus of Romanized-looking words where
//! each class draws tokens from its own keyword list and a fixed share of
//! the lists overlaps. [`separable_dense`] gives a small linearly separable
//! numeric set for the network tests.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{Corpus, LabeledDocument};
use crate::sparse::SparseMatrix;
use crate::textprep::StopwordList;

const ONSETS: [&str; 16] = [
    "k", "g", "ch", "j", "t", "d", "n", "p", "b", "m", "y", "r", "l", "s", "h", "th",
];
const VOWELS: [&str; 5] = ["a", "i", "u", "e", "o"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    pub words_per_class: usize,
    /// Fraction of each class's keyword list shared with the other class.
    pub overlap: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_docs: 600,
            words_per_class: 100,
            overlap: 0.2,
            min_len: 8,
            max_len: 20,
            seed: 42,
        }
    }
}

/// `n` distinct syllable words (2 to 4 consonant-vowel pairs), none of
/// them a bundled stopword.
pub fn syllable_words(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let stop = StopwordList::default_list();
    let mut seen = BTreeSet::new();
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.random_range(2..=4);
        let w: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS.choose(rng).unwrap(),
                    VOWELS.choose(rng).unwrap()
                )
            })
            .collect();
        if !stop.contains(&w) && seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

/// Keyword lists for the two classes; the first `overlap * words_per_class`
/// entries of each are shared.
pub fn class_vocabularies(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> [Vec<String>; 2] {
    let shared = (spec.overlap * spec.words_per_class as f64).round() as usize;
    let own = spec.words_per_class - shared;
    let pool = syllable_words(shared + 2 * own, rng);
    let common = &pool[..shared];
    let zero = common
        .iter()
        .chain(&pool[shared..shared + own])
        .cloned()
        .collect();
    let one = common
        .iter()
        .chain(&pool[shared + own..])
        .cloned()
        .collect();
    [zero, one]
}

/// Balanced corpus with labels alternating 0, 1, 0, ...; a few documents
/// carry mentions, hashtags, URLs and capitals so cleaning has work to do.
pub fn generate(spec: &SyntheticSpec) -> Corpus {
    assert!(
        spec.min_len >= 1 && spec.min_len <= spec.max_len,
        "bad document length range"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab = class_vocabularies(spec, &mut rng);
    let docs = (0..spec.n_docs)
        .map(|i| {
            let label = (i % 2) as u8;
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let mut words: Vec<String> = (0..len)
                .map(|_| vocab[label as usize].choose(&mut rng).unwrap().clone())
                .collect();
            match rng.random_range(0..10) {
                0 => words.insert(0, "@friend".into()),
                1 => words.push("#mood".into()),
                2 => words.push("https://t.co/x1".into()),
                3 => words[0] = words[0].to_uppercase(),
                _ => {}
            }
            LabeledDocument::new(words.join(" "), label)
        })
        .collect();
    Corpus::new(docs)
}

/// Mix of known keywords and unseen strings, for round-trip checks.
pub fn random_texts(n: usize, seed: u64) -> Vec<String> {
    let spec = SyntheticSpec {
        seed,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let vocab = class_vocabularies(
        &SyntheticSpec::default(),
        &mut ChaCha8Rng::seed_from_u64(spec.seed),
    );
    let unseen = syllable_words(50, &mut rng);
    (0..n)
        .map(|_| {
            let len = rng.random_range(0..12);
            (0..len)
                .map(|_| match rng.random_range(0..3) {
                    0 => vocab[0].choose(&mut rng).unwrap().as_str(),
                    1 => vocab[1].choose(&mut rng).unwrap().as_str(),
                    _ => unseen.choose(&mut rng).unwrap().as_str(),
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Gaussian rows labelled by the sign of a fixed linear function.
pub fn separable_dense(n: usize, k: usize, seed: u64) -> (SparseMatrix, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let direction: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| u8::from(r.iter().zip(&direction).map(|(a, b)| a * b).sum::<f64>() > 0.0))
        .collect();
    (SparseMatrix::from_dense(&rows), y)
}
