//! Eigenpairs of the graph p-Laplacian (`p > 2`) computed as saddle points of
//! spectral energy functions over edge and node weights.
//!
//! Each flow step solves a regularized weighted-Laplacian generalized
//! eigenproblem and moves the weights by an explicit Euler step. The
//! [`analysis`] module checks the results: nonlinear residuals, Morse and
//! linear indices, finite-difference derivative checks, and the node/edge
//! duality map.

pub mod analysis;
pub mod cli;
pub mod energy;
pub mod error;
pub mod flow;
pub mod graph;
pub mod linear;
pub mod operators;

pub use analysis::EigenReport;
pub use error::{Error, Result};
pub use flow::{FlowConfig, FlowTrace, Init};
pub use graph::{Edge, Graph};
pub use linear::Spectrum;
pub use operators::WeightPair;
