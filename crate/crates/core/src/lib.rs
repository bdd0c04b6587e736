//! Log discrepancies of surface singularities and complements on curves.

#![allow(clippy::result_large_err)]

pub mod blowup;
pub mod cli;
pub mod complement;
pub mod discrepancy;
pub mod dual_graph;
pub mod linalg;
pub mod oracle;
pub mod rational;

pub use rational::Rational;
