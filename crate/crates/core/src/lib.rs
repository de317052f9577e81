//! Screening toolkit for depressive content in Romanized Sinhala tweets.
//!
//! The crate is organised along the data flow of the pipeline:
//!
//! * [`corpus`]: CSV ingestion, label encoding and train/test splitting.
//! * [`textprep`]: cleaning, tokenization, stopword removal and suffix stemming.
//! * [`vectorize`]: n-gram vocabularies, CSR count/TF-IDF matrices and chi-square selection.
//! * [`classifiers`]: naive Bayes (multinomial and Gaussian), logistic regression,
//!   linear SVM, CART decision tree and random forest.
//! * [`neural`]: the dense(512, relu) → dropout → dense(1, sigmoid) network trained with Adam.
//! * [`eval`]: confusion matrices, per-label metrics and the multi-model benchmark.
//! * [`pipeline`]: the fitted end-to-end chain, run configuration and persistence.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod neural;
pub mod pipeline;
pub mod sparse;
pub mod synthetic;
pub mod textprep;
pub mod vectorize;

pub use error::{Error, ErrorCategory, Result};
