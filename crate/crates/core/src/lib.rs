//! Evaluation toolkit for synthetic-image generative models.
//!
//! * [`embedding`]: feature-matrix files, manifests and the seeded real split.
//! * [`frechet`]: Gaussian fits, Fréchet distances and relative Fréchet distances.
//! * [`stats`]: t-tests, two-sample KS and Pearson correlation.
//! * [`vtt`]: visual Turing test response tables and their statistics.
//! * [`ranking`]: metric tables, rankings, rank agreement and reports.
//! * [`service`]: the HTTP service that administers visual Turing tests.

pub mod embedding;
pub mod error;
mod float_serde;
pub mod frechet;
pub mod provenance;
pub mod ranking;
pub mod service;
pub mod stats;
pub mod vtt;

pub use error::{Error, Result};
