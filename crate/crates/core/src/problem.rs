//! The convex clustering objective, its dual, and component separability.
//!
//! For data `X` (`p x n`), node multiplicities `m_i` and weights `w_ij` on the
//! edge set `E`, the primal objective is
//!
//! ```text
//! E(U) = 1/2 sum_i m_i ||x_i - u_i||^2 + gamma sum_{(i,j) in E} w_ij ||u_i - u_j||
//! ```
//!
//! Splitting `v_ij = u_i - u_j` with multipliers `z_ij` and eliminating `U`
//! (`u_i = x_i - (Z A)_i / m_i`) gives the dual
//!
//! ```text
//! D(Z) = <Z A, X> - 1/2 sum_i ||(Z A)_i||^2 / m_i,   ||z_ij|| <= gamma w_ij.
//! ```

use nalgebra::DMatrix;

use crate::data::{DataMatrix, Partition};
use crate::error::{Error, Result};
use crate::graph::WeightGraph;
use crate::solver::IncidenceOperator;

/// Relative slack used when checking dual feasibility and the sign of the gap.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ClusteringProblem {
    data: DataMatrix,
    graph: WeightGraph,
    gamma: f64,
    node_weights: Vec<f64>,
}

impl ClusteringProblem {
    pub fn new(data: DataMatrix, graph: WeightGraph, gamma: f64) -> Result<Self> {
        let n = data.len();
        Self::with_node_weights(data, graph, gamma, vec![1.0; n])
    }

    /// Problem whose fit term weights observation `i` by `node_weights[i]`
    /// (a multiplicity for merged duplicates or compressed blocks).
    pub fn with_node_weights(data: DataMatrix, graph: WeightGraph, gamma: f64, node_weights: Vec<f64>) -> Result<Self> {
        if graph.num_nodes() != data.len() {
            return Err(Error::shape(format!(
                "graph has {} nodes, data has {} observations",
                graph.num_nodes(),
                data.len()
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if node_weights.len() != data.len() || node_weights.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::invalid("node weights must be positive, one per observation"));
        }
        Ok(Self {
            data,
            graph,
            gamma,
            node_weights,
        })
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn graph(&self) -> &WeightGraph {
        &self.graph
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::with_node_weights(self.data.clone(), self.graph.clone(), gamma, self.node_weights.clone())
    }

    pub fn with_graph(&self, graph: WeightGraph) -> Result<Self> {
        Self::with_node_weights(self.data.clone(), graph, self.gamma, self.node_weights.clone())
    }

    /// Dual-ball radius `gamma * w_l` of every edge.
    pub fn radii(&self) -> Vec<f64> {
        self.graph.weights().map(|w| self.gamma * w).collect()
    }

    fn check_nodes(&self, u: &DMatrix<f64>) -> Result<()> {
        if u.shape() != self.data.values().shape() {
            return Err(Error::shape(format!(
                "centroids are {}x{}, data is {}x{}",
                u.nrows(),
                u.ncols(),
                self.dim(),
                self.len()
            )));
        }
        Ok(())
    }

    fn check_edges(&self, z: &DMatrix<f64>) -> Result<()> {
        if z.shape() != (self.dim(), self.graph.num_edges()) {
            return Err(Error::shape(format!(
                "edge variables are {}x{}, expected {}x{}",
                z.nrows(),
                z.ncols(),
                self.dim(),
                self.graph.num_edges()
            )));
        }
        Ok(())
    }

    /// `1/2 sum m_i c_ki (x_ki - u_ki)^2` with `c` the 0/1 observed mask when present.
    pub fn fit_term(&self, u: &DMatrix<f64>) -> Result<f64> {
        self.check_nodes(u)?;
        let x = self.data.values();
        let entry = self.data.entry_weights();
        let mut total = 0.0;
        for i in 0..self.len() {
            let mut col = 0.0;
            for k in 0..self.dim() {
                let c = entry.as_ref().map_or(1.0, |e| e[(k, i)]);
                if c > 0.0 {
                    let r = x[(k, i)] - u[(k, i)];
                    col += c * r * r;
                }
            }
            total += self.node_weights[i] * col;
        }
        Ok(0.5 * total)
    }

    /// `sum w_ij ||u_i - u_j||` (without the factor `gamma`).
    pub fn penalty_term(&self, u: &DMatrix<f64>) -> Result<f64> {
        self.check_nodes(u)?;
        Ok(self
            .graph
            .edges()
            .iter()
            .map(|e| e.w * (u.column(e.i) - u.column(e.j)).norm())
            .sum())
    }

    /// Primal objective; observed entries only when the data carries a mask.
    pub fn objective_value(&self, u: &DMatrix<f64>) -> Result<f64> {
        Ok(self.fit_term(u)? + self.gamma * self.penalty_term(u)?)
    }

    /// `U = X - Z A diag(1/m)`.
    pub fn centroids_from_dual(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_edges(z)?;
        let op = IncidenceOperator::new(&self.graph);
        let mut u = op.scatter(z);
        for (i, m) in self.node_weights.iter().enumerate() {
            u.column_mut(i).scale_mut(-1.0 / m);
        }
        u += self.data.values();
        Ok(u)
    }

    /// Largest relative violation `(||z_l|| - gamma w_l) / max(1, gamma w_l)`,
    /// with the offending edge; `None` when every edge is within slack.
    pub fn dual_violation(&self, z: &DMatrix<f64>) -> Result<Option<(usize, f64)>> {
        self.check_edges(z)?;
        let mut worst: Option<(usize, f64)> = None;
        for (l, r) in self.radii().into_iter().enumerate() {
            let excess = (z.column(l).norm() - r) / r.max(1.0);
            if excess > FEASIBILITY_SLACK && worst.is_none_or(|(_, w)| excess > w) {
                worst = Some((l, excess));
            }
        }
        Ok(worst)
    }

    /// Dual value `D(Z)`; errors when `Z` leaves its balls.
    pub fn dual_value(&self, z: &DMatrix<f64>) -> Result<f64> {
        if self.data.mask().is_some() {
            return Err(Error::invalid(
                "the dual is defined for complete data; solve masked data with solve_missing",
            ));
        }
        if let Some((edge, excess)) = self.dual_violation(z)? {
            return Err(Error::DualInfeasible { edge, excess });
        }
        let op = IncidenceOperator::new(&self.graph);
        let za = op.scatter(z);
        Ok(dual_from_scatter(&za, self.data.values(), &self.node_weights))
    }

    /// `(D(Z), E(U) - D(Z))` for a solver state.
    pub fn dual_objective_and_gap(&self, u: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DualReport> {
        let dual = self.dual_value(z)?;
        let primal = self.objective_value(u)?;
        Ok(DualReport {
            dual,
            primal,
            gap: primal - dual,
        })
    }

    /// Restriction to the observations in `nodes` (ascending) and their induced edges.
    pub fn restrict(&self, nodes: &[usize]) -> Result<Self> {
        Self::with_node_weights(
            self.data.select(nodes)?,
            self.graph.induced(nodes),
            self.gamma,
            nodes.iter().map(|&i| self.node_weights[i]).collect(),
        )
    }

    /// Per-component subproblems; the objective separates over them exactly.
    pub fn split_components(&self) -> Result<Vec<(Vec<usize>, ClusteringProblem)>> {
        self.graph
            .connected_components()
            .blocks()
            .into_iter()
            .map(|nodes| {
                let sub = self.restrict(&nodes)?;
                Ok((nodes, sub))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualReport {
    pub dual: f64,
    pub primal: f64,
    pub gap: f64,
}

pub(crate) fn dual_from_scatter(za: &DMatrix<f64>, x: &DMatrix<f64>, node_weights: &[f64]) -> f64 {
    let p = x.nrows();
    let (zs, xs) = (za.as_slice(), x.as_slice());
    let mut linear = 0.0;
    let mut quad = 0.0;
    for (i, m) in node_weights.iter().enumerate() {
        let (zi, xi) = (&zs[i * p..(i + 1) * p], &xs[i * p..(i + 1) * p]);
        let mut sq = 0.0;
        for (a, b) in zi.iter().zip(xi) {
            linear += a * b;
            sq += a * a;
        }
        quad += sq / m;
    }
    linear - 0.5 * quad
}

/// Convenience: partition into connected components of the weight graph.
pub fn connected_components(graph: &WeightGraph) -> Partition {
    graph.connected_components()
}
