//! Predicting Standard Occupational Classification (SOC) codes from free-form
//! job descriptions.
//!
//! The crate provides two text representations (TF-IDF n-grams and PV-DBOW
//! paragraph vectors), seven multiclass classifiers, a k-fold benchmark
//! harness and a persisted end-to-end [`pipeline::Pipeline`].

pub mod classify;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod text;

pub use error::{Error, Result};
