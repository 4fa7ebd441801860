//! Weakly supervised stance classification of tweets and pre/post event
//! sentiment analysis.
//!
//! The pipeline labels a training corpus in bulk from the known stance of
//! influential accounts, compares several feature extractors and classifier
//! families (multinomial Naive Bayes, a linear SVM, a k-means classifier and
//! an LSTM), and then runs the outcome analysis on event-related tweets:
//! clustering over (sentiment, latitude, longitude), per-city aggregation and
//! overall vs. within-cohort pre/post comparisons with Student's t-tests.

pub mod cli;
pub mod cohort;
pub mod corpus;
mod error;
pub mod features;
pub mod geo;
pub mod kmeans;
pub mod linear_models;
pub mod model;
pub mod neural;
pub mod seed;
pub mod stance;
pub mod stats;

pub use error::{Error, Result};
pub use stance::Stance;
