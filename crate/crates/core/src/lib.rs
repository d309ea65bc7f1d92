//! Scene discovery from image embeddings.
//!
//! Embeddings are rescaled to norm `sqrt(d)`, compared with a Gaussian
//! similarity, clustered with an ensemble of DBSCAN runs and then split
//! until every cluster looks like an isotropic Gaussian. Each cluster gets
//! heuristic camera poses, and [`scoring`] rates a submission against
//! ground truth by relative-pose mAA and clustering quality.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod embedding;
pub mod error;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod pose;
pub mod scoring;
pub mod sigreg;
pub mod synth;

pub use error::{Error, Result};
