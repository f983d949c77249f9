//! Identifiability analysis for hidden Markov models via the Kruskal rank of
//! row-wise tensor products.
//!
//! Layers, bottom up: [`matrix`] (dense matrices, rank under a tolerance
//! policy), [`tensor`] (Kronecker and row-wise tensor products, letter
//! codec, permutation-scaling detection), [`krank`] (Kruskal rank with
//! certificates), [`hmm`] (parameter sets and sequence probabilities) and
//! [`identifiability`] (verdicts, equivalent-model constructions, generic
//! sample bounds). [`ssh`] holds the sleep-stage model used as a case study.

pub mod error;
pub mod hmm;
pub mod identifiability;
pub mod krank;
pub mod matrix;
pub mod ssh;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::{Matrix, Tolerance};
