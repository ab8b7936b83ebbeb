//! Spanner diffusion Stein discrepancies for weighted samples.
//!
//! A [`WeightedSample`] is compared with a target known through its score
//! ([`TargetModel`]) under a [`DiffusionSpec`]. The discrepancy is the sum of
//! `d` coordinate linear programs over a [`SpannerGraph`] of the sample; see
//! [`steinlp::spanner_stein_discrepancy`].

pub mod config;
pub mod diffusion;
pub mod error;
pub mod lp;
pub mod metrics;
pub mod operators;
pub mod sample;
pub mod samplers;
pub mod spanner;
pub mod steinlp;
pub mod target;
pub mod targets;

pub use diffusion::DiffusionSpec;
pub use error::{Error, Result};
pub use operators::OperatorData;
pub use sample::{load_sample, save_sample, WeightMode, WeightedSample};
pub use spanner::SpannerGraph;
pub use steinlp::{spanner_stein_discrepancy, DiscrepancyOptions, SteinScales, SteinWitness};
pub use target::TargetModel;
