//! Contradiction and disagreement detection between tweet pairs, cast as
//! three-way textual entailment (ENT / CON / UNK).
//!
//! The pipeline is:
//!
//! 1. [`corpus`] loads labelled tweet pairs (RTE pair files or thread records).
//! 2. [`normalize`] cleans, tags, lowercases and stems each tweet.
//! 3. [`align`] runs iterative local alignment over the stem sequences.
//! 4. [`features`] turns a normalized pair into six similarity features.
//! 5. [`stats`] summarizes per-class feature distributions with rank tests.
//! 6. [`learn`] and [`evaluate`] train nearest-centroid and random-forest
//!    classifiers and score them with leave-one-event-out cross-validation.

pub mod align;
pub mod corpus;
pub mod evaluate;
pub mod features;
pub mod learn;
pub mod normalize;
pub mod rng;
pub mod stats;
pub mod synth;

pub use corpus::{RteLabel, Scenario, TweetPair};
pub use features::FeatureVector;
pub use normalize::NormalizedTweet;
