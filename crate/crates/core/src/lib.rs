//! Procedural visual-illusion stimuli, paired-polarity prompts and the
//! perception-vs-memory metrics computed from model answers.

pub mod answer;
pub mod catalog;
pub mod dataset;
pub mod metrics;
pub mod prompt;
pub mod scene;
