//! SGD near non-isolated minima.
//!
//! Landscapes with an exactly known minimizer set, sampled certificates of
//! local convexity conditions, the SGD iteration with stopped-process
//! bookkeeping, closed-form stability and concentration bounds, and Monte
//! Carlo estimates to hold the bounds against.

pub mod bounds;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod experiment;
pub mod landscape;
pub mod minima;
pub mod montecarlo;
pub mod rng;
pub mod sgd;
mod special;
pub mod stats;
pub mod vecops;

pub use error::{Error, Result};
pub use landscape::{hessian_fd, make_landscape, Evaluation, Family, Landscape, LandscapeSpec, Objective};
pub use minima::{dist_and_project, MinimaSet, NeighborhoodSpec, ProjectionResult};
