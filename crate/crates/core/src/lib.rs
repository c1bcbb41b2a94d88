//! Sum-of-norms convex clustering.
//!
//! The crate is organised around the pieces of a convex clustering run:
//!
//! * [`data`] and [`problem`]: observations, partitions, the objective and its dual.
//! * [`prox`]: the per-edge group soft-threshold and dual-ball projection kernels.
//! * [`graph`]: sparse edge-set construction (MST, k-NN, disjoint MSTs) and weights.
//! * [`solver`]: AMA (dual proximal gradient ascent, optionally accelerated) and ADMM.
//! * [`path`]: warm-started solution paths, compression of fused blocks, dendrograms.
//! * [`theory`]: closed-form perfect-recovery intervals and empirical harnesses.
//! * [`selection`]: missing data via majorization-minimization, hold-out and eBIC
//!   selection of the tuning parameter, adaptive reweighting, the adjusted Rand index.
//! * [`generate`], [`io`], [`config`] and [`run`]: synthetic data, CSV/JSON output and
//!   the command-line driver.

pub mod config;
pub mod data;
pub mod error;
pub mod generate;
pub mod graph;
pub mod io;
pub mod path;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod run;
pub mod selection;
pub mod solver;
pub mod theory;

pub use data::{DataMatrix, Partition};
pub use error::{Error, Result};
pub use graph::{GraphProvenance, WeightGraph};
pub use problem::ClusteringProblem;
pub use solver::{SolverConfig, SolverMethod, SolverState};
