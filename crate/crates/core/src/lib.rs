//! Topic classification of translated speech.
//!
//! Training translations are segmented into one-minute documents, featurized
//! with tf-idf, and factorized with NMF into a topic dictionary. New (possibly
//! noisy, machine-translated) documents are labeled against that fixed
//! dictionary and scored against silver labels.

pub mod bleu;
pub mod corpus;
pub mod degrade;
pub mod demo;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod nmf;
pub mod pipeline;
pub mod rng;
pub mod sparse;
pub mod synth;
pub mod textprep;
pub mod topics;

pub use error::{Error, ErrorClass, Result};
