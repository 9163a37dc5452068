//! k-hop similar graph generation and the machinery to test whether GCNs
//! trained on a graph and on its k-hop similar counterpart agree.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adam;
pub mod components;
pub mod distance;
pub mod error;
pub mod experiment;
pub mod gcn;
pub mod graph;
pub mod khop;
pub mod matrix;
pub mod metrics;
pub mod reach;
pub mod rng;
pub mod sbm;
pub mod train;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use graph::Graph;
pub use matrix::DenseMatrix;
