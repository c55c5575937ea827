//! Software effort estimation by fuzzy analogy.
//!
//! Historical projects are loaded into a [`dataset::Dataset`], every attribute
//! is described by a fuzzy partition ([`fuzzy`]), projects are compared
//! attribute by attribute ([`similarity`]) and a new project's effort is
//! adapted from its most similar analogs ([`estimator`]). [`evaluation`] runs
//! leave-one-out MMRE scoring and [`report`] renders the results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod estimator;
pub mod evaluation;
pub mod fuzzy;
pub mod report;
pub mod similarity;

use thiserror::Error;

/// Version tag written into every output file.
pub const FORMAT_VERSION: &str = "fuzzy-effort/1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] dataset::DataError),
    #[error(transparent)]
    Fuzzy(#[from] fuzzy::FuzzyError),
    #[error(transparent)]
    Similarity(#[from] similarity::SimilarityError),
    #[error(transparent)]
    Estimate(#[from] estimator::EstimateError),
    #[error(transparent)]
    Eval(#[from] evaluation::EvalError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
}
