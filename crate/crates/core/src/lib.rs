//! Desk-scale laboratory for friend-training: cross-task self-training where
//! two models of different tasks vet each other's pseudo-labels through a
//! shared translation space.
//!
//! The crate provides a synthetic friend-task pair (span labeling over a
//! dialogue vs. rewriting its last utterance), linear surrogate task models,
//! the translation matcher and augmented selector, the iterative training
//! loop, evaluation metrics, and a closed-form/Monte-Carlo simulator for the
//! selection error-rate analysis.

pub mod data;
pub mod datagen;
pub mod error;
pub mod matcher;
pub mod metrics;
pub mod models;
pub mod num;
pub mod rng;
pub mod selector;
pub mod theory;
pub mod train_loop;

pub use data::{ArgumentSet, Instance, PredicateRef, Role, Span, Speaker, TokenSeq, Utterance};
pub use error::CoreError;
pub use num::{geometric_mean, levenshtein, norm_edit_distance_score, Score};
