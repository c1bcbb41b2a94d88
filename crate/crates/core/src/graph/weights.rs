use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DistanceTable, Edge, EdgeSet, GraphProvenance, WeightGraph};
use crate::data::median;
use crate::error::{Error, Result};

/// Edge weighting rule.
///
/// `neighbors` is the number of nearest neighbours whose median distance sets a
/// node's local scale; `None` means `max(3, floor(n/10))`, capped at `n - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightKind {
    Uniform,
    InverseEuclidean,
    Gaussian {
        neighbors: Option<usize>,
    },
    /// `(1 - alpha) + alpha * gaussian`.
    ConvexCombo {
        alpha: f64,
        neighbors: Option<usize>,
    },
}

impl WeightKind {
    pub fn gaussian() -> Self {
        WeightKind::Gaussian { neighbors: None }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightKind::Gaussian { neighbors: Some(0) } | WeightKind::ConvexCombo { neighbors: Some(0), .. } => {
                Err(Error::invalid("local-scale neighbour count must be >= 1"))
            }
            WeightKind::ConvexCombo { alpha, .. } if !(0.0..=1.0).contains(&alpha) => {
                Err(Error::invalid(format!("alpha={alpha} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Uniform => write!(f, "uniform"),
            WeightKind::InverseEuclidean => write!(f, "inverse"),
            WeightKind::Gaussian { neighbors: None } => write!(f, "gaussian"),
            WeightKind::Gaussian { neighbors: Some(m) } => write!(f, "gaussian:{m}"),
            WeightKind::ConvexCombo { alpha, neighbors: None } => write!(f, "combo:{alpha}"),
            WeightKind::ConvexCombo {
                alpha,
                neighbors: Some(m),
            } => write!(f, "combo:{alpha}:{m}"),
        }
    }
}

impl FromStr for WeightKind {
    type Err = Error;

    /// `uniform`, `inverse`, `gaussian[:m]`, `combo:alpha[:m]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("bad weight spec '{s}'"));
        let neighbors = |idx: usize| -> Result<Option<usize>> {
            parts
                .get(idx)
                .map(|a| a.parse::<usize>().map_err(|_| bad()))
                .transpose()
        };
        let kind = match parts[0] {
            "uniform" => WeightKind::Uniform,
            "inverse" | "inverse_euclidean" => WeightKind::InverseEuclidean,
            "gaussian" => WeightKind::Gaussian {
                neighbors: neighbors(1)?,
            },
            "combo" | "convex_combo" => WeightKind::ConvexCombo {
                alpha: parts.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?,
                neighbors: neighbors(2)?,
            },
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Per-node local scatter `sigma_i`: median distance from `x_i` to its
/// `neighbors` nearest other points (self excluded).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalScales {
    pub sigma: Vec<f64>,
    pub neighbors: usize,
}

pub fn default_scale_neighbors(n: usize) -> usize {
    (n / 10).max(3).min(n.saturating_sub(1)).max(1)
}

pub fn local_scales(dist: &DistanceTable, neighbors: Option<usize>) -> LocalScales {
    let n = dist.len();
    let m = neighbors
        .unwrap_or_else(|| default_scale_neighbors(n))
        .min(n.saturating_sub(1));
    let sigma = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = dist
                .neighbors_by_distance(i)
                .into_iter()
                .take(m)
                .map(|j| dist.get(i, j))
                .collect();
            median(&mut d)
        })
        .collect();
    LocalScales { sigma, neighbors: m }
}

fn gaussian_kernel(d: f64, si: f64, sj: f64) -> f64 {
    let s = si * sj;
    if s > 0.0 {
        (-d * d / s).exp()
    } else if d == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Weights every edge of `edges` according to `kind`.
pub fn assign_weights(edges: &EdgeSet, dist: &DistanceTable, kind: &WeightKind) -> Result<WeightGraph> {
    kind.validate()?;
    for &(i, j) in &edges.pairs {
        if dist.get(i, j) <= 0.0 && !matches!(kind, WeightKind::Uniform) {
            return Err(Error::InvalidData(format!(
                "observations {i} and {j} coincide; merge duplicates before weighting"
            )));
        }
    }
    let scales = match kind {
        WeightKind::Gaussian { neighbors } | WeightKind::ConvexCombo { neighbors, .. } => {
            Some(local_scales(dist, *neighbors))
        }
        _ => None,
    };
    let mut out = Vec::with_capacity(edges.len());
    for &(i, j) in &edges.pairs {
        let d = dist.get(i, j);
        let w = match kind {
            WeightKind::Uniform => 1.0,
            WeightKind::InverseEuclidean => 1.0 / d,
            WeightKind::Gaussian { .. } => {
                let s = &scales.as_ref().unwrap().sigma;
                gaussian_kernel(d, s[i], s[j])
            }
            WeightKind::ConvexCombo { alpha, .. } => {
                let s = &scales.as_ref().unwrap().sigma;
                (1.0 - alpha) + alpha * gaussian_kernel(d, s[i], s[j])
            }
        };
        if !(w > 0.0) {
            return Err(Error::InvalidData(format!(
                "edge ({i},{j}) weight underflowed to {w}; the kernel scale is too small for this distance"
            )));
        }
        out.push(Edge { i, j, w });
    }
    WeightGraph::new(edges.n, out, edges.provenance)
}

/// Three-level weights on the complete graph: `within` for pairs sharing a
/// cluster label, `between` for pairs sharing only a super-cluster label, and
/// `across` otherwise.
pub fn level_weights(
    labels: &[usize],
    super_labels: &[usize],
    (within, between, across): (f64, f64, f64),
) -> Result<WeightGraph> {
    if labels.len() != super_labels.len() {
        return Err(Error::shape("label vectors differ in length"));
    }
    let n = labels.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = if labels[i] == labels[j] {
                within
            } else if super_labels[i] == super_labels[j] {
                between
            } else {
                across
            };
            edges.push(Edge { i, j, w });
        }
    }
    WeightGraph::new(n, edges, GraphProvenance::Custom)
}
