//! Surrogate generation, substitution strategies and leakage models for
//! BRAT-annotated clinical text.

pub mod analytic;
pub mod brat;
pub mod corpus;
pub mod error;
pub mod leakage;
pub mod report;
pub mod rewrite;
pub mod seed;
pub mod special;
pub mod stats;
pub mod strategy;
pub mod surrogate;
pub mod synthetic;
pub mod table;
pub mod text;

pub use error::{Error, Result};
