//! Demographic counterfactual auditing for multiple-choice QA predictors.
//!
//! The pipeline masks gender-indicative tokens in curated vignettes, renders
//! every vignette under a grid of demographic profiles, drives an external
//! predictor over the variants, and reports how often its answers move away
//! from the demographics-free baseline.

pub mod dataset;
pub mod digest;
pub mod dimensions;
pub mod gateway;
pub mod metrics;
pub mod report;
pub mod templates;
pub mod text;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
