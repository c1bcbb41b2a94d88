use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::{local_scales, DistanceTable, WeightGraph};

/// Concave fusion penalty `phi_ij` applied to `||u_i - u_j||`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LlaPenalty {
    /// `phi(z) = log(z + delta) - log(delta)`.
    LogDelta { delta: f64 },
    /// `phi_ij(z) = int_0^z exp(-t^2 / (sigma_i sigma_j)) dt`, one scale per observation.
    GaussianIntegral { scales: Vec<f64> },
}

impl LlaPenalty {
    /// Gaussian form with local scales computed from `data` as for kernel weights.
    pub fn gaussian_from_data(data: &DataMatrix, neighbors: Option<usize>) -> Self {
        let dist = DistanceTable::new(data.values());
        LlaPenalty::GaussianIntegral {
            scales: local_scales(&dist, neighbors).sigma,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            LlaPenalty::LogDelta { delta } if !(*delta > 0.0 && delta.is_finite()) => {
                Err(Error::invalid(format!("delta must be positive, got {delta}")))
            }
            LlaPenalty::GaussianIntegral { scales } if scales.len() != n => {
                Err(Error::shape(format!("{} scales for {n} observations", scales.len())))
            }
            LlaPenalty::GaussianIntegral { scales } if scales.iter().any(|s| !(*s > 0.0)) => {
                Err(Error::invalid("Gaussian scales must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, i: usize, j: usize, z: f64) -> f64 {
        match self {
            LlaPenalty::LogDelta { delta } => (z + delta).ln() - delta.ln(),
            LlaPenalty::GaussianIntegral { scales } => {
                let s = (scales[i] * scales[j]).sqrt();
                0.5 * PI.sqrt() * s * erf(z / s)
            }
        }
    }

    pub fn derivative(&self, i: usize, j: usize, z: f64) -> f64 {
        match self {
            LlaPenalty::LogDelta { delta } => 1.0 / (z + delta),
            LlaPenalty::GaussianIntegral { scales } => (-z * z / (scales[i] * scales[j])).exp(),
        }
    }
}

/// One local linear approximation step: each edge gets weight
/// `phi'(||u_i - u_j||)`. Weights that underflow are clamped to the smallest
/// positive double so the topology is kept.
pub fn lla_reweight(u: &DMatrix<f64>, graph: &WeightGraph, penalty: &LlaPenalty) -> Result<WeightGraph> {
    if u.ncols() != graph.num_nodes() {
        return Err(Error::shape("centroid count differs from graph size"));
    }
    penalty.validate(graph.num_nodes())?;
    let w: Vec<f64> = graph
        .edges()
        .iter()
        .map(|e| {
            let d = (u.column(e.i) - u.column(e.j)).norm();
            penalty.derivative(e.i, e.j, d).max(f64::MIN_POSITIVE)
        })
        .collect();
    graph.with_weights(&w)
}

/// `1/2 ||X - U||^2 + gamma sum_(ij in E) phi_ij(||u_i - u_j||)` over the
/// graph's edges (its weights are ignored).
pub fn folded_concave_objective(
    x: &DMatrix<f64>,
    u: &DMatrix<f64>,
    graph: &WeightGraph,
    gamma: f64,
    penalty: &LlaPenalty,
) -> Result<f64> {
    if x.shape() != u.shape() || u.ncols() != graph.num_nodes() {
        return Err(Error::shape("data, centroids and graph disagree"));
    }
    penalty.validate(graph.num_nodes())?;
    let fit = 0.5 * (x - u).norm_squared();
    let pen: f64 = graph
        .edges()
        .iter()
        .map(|e| penalty.value(e.i, e.j, (u.column(e.i) - u.column(e.j)).norm()))
        .sum();
    Ok(fit + gamma * pen)
}
