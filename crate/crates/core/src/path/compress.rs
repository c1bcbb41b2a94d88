use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::data::{DataMatrix, Partition};
use crate::error::{Error, Result};
use crate::graph::{Edge, GraphProvenance, WeightGraph};
use crate::problem::ClusteringProblem;

/// A problem over fused blocks: super-node `k` carries the (weighted) block
/// mean, multiplicity `n_k`, and total weight `w^(k,l)` to every other block.
///
/// For partition-constant centroids the original objective equals the
/// compressed objective plus [`constant`](CompressedProblem::constant).
#[derive(Clone, Debug)]
pub struct CompressedProblem {
    pub problem: ClusteringProblem,
    pub partition: Partition,
    /// `1/2 sum_i m_i ||x_i - xbar_k(i)||^2`.
    pub constant: f64,
    /// For each original edge: the compressed edge it feeds and the orientation
    /// sign, or `None` for edges inside a block.
    pub edge_map: Vec<Option<(usize, f64)>>,
}

pub fn compress(problem: &ClusteringProblem, partition: &Partition) -> Result<CompressedProblem> {
    let n = problem.len();
    if partition.len() != n {
        return Err(Error::shape(format!(
            "partition covers {} observations, problem has {n}",
            partition.len()
        )));
    }
    if problem.data().mask().is_some() {
        return Err(Error::invalid("compression needs complete data"));
    }
    let k = partition.num_clusters();
    let x = problem.data().values();
    let m = problem.node_weights();
    let labels = partition.labels();
    let mut mult = vec![0.0; k];
    let mut means = DMatrix::zeros(problem.dim(), k);
    for i in 0..n {
        mult[labels[i]] += m[i];
        let mut col = means.column_mut(labels[i]);
        col.axpy(m[i], &x.column(i), 1.0);
    }
    for (b, w) in mult.iter().enumerate() {
        means.column_mut(b).scale_mut(1.0 / w);
    }
    let constant = 0.5
        * (0..n)
            .map(|i| m[i] * (x.column(i) - means.column(labels[i])).norm_squared())
            .sum::<f64>();

    let mut totals: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in problem.graph().edges() {
        let (a, b) = (labels[e.i], labels[e.j]);
        if a != b {
            *totals.entry((a.min(b), a.max(b))).or_insert(0.0) += e.w;
        }
    }
    let index: BTreeMap<(usize, usize), usize> = totals.keys().enumerate().map(|(pos, key)| (*key, pos)).collect();
    let edge_map = problem
        .graph()
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (labels[e.i], labels[e.j]);
            (a != b).then(|| (index[&(a.min(b), a.max(b))], if a < b { 1.0 } else { -1.0 }))
        })
        .collect();
    let edges = totals.into_iter().map(|((i, j), w)| Edge { i, j, w }).collect();
    let graph = WeightGraph::new(k, edges, GraphProvenance::Custom)?;
    let compressed = ClusteringProblem::with_node_weights(DataMatrix::new(means)?, graph, problem.gamma(), mult)?;
    Ok(CompressedProblem {
        problem: compressed,
        partition: partition.clone(),
        constant,
        edge_map,
    })
}

impl CompressedProblem {
    /// Member centroids: each observation gets its block's centroid.
    pub fn broadcast(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        u.select_columns(self.partition.labels())
    }

    /// Sums original edge duals onto compressed edges (with orientation), which
    /// keeps them feasible for the summed weights.
    pub fn aggregate_duals(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(z.nrows(), self.problem.graph().num_edges());
        for (l, target) in self.edge_map.iter().enumerate() {
            if let Some((e, sign)) = target {
                let mut col = out.column_mut(*e);
                col.axpy(*sign, &z.column(l), 1.0);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_ama, SolverConfig};

    fn four_points() -> ClusteringProblem {
        let x = DMatrix::from_row_slice(1, 4, &[0.0, 0.2, 5.0, 5.3]);
        let edges = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| Edge { i, j, w: 1.0 }))
            .collect();
        let g = WeightGraph::new(4, edges, GraphProvenance::Full).unwrap();
        ClusteringProblem::new(DataMatrix::new(x).unwrap(), g, 0.3).unwrap()
    }

    #[test]
    fn identity_partition_reproduces_problem() {
        let pr = four_points();
        let c = compress(&pr, &Partition::singletons(4)).unwrap();
        assert_eq!(c.problem.data(), pr.data());
        assert_eq!(c.problem.graph().edges(), pr.graph().edges());
        assert_eq!(c.constant, 0.0);
    }

    #[test]
    fn single_block_is_grand_mean() {
        let c = compress(&four_points(), &Partition::single_block(4)).unwrap();
        assert_eq!(c.problem.len(), 1);
        assert!((c.problem.data().values()[(0, 0)] - 2.625).abs() < 1e-15);
        assert_eq!(c.problem.graph().num_edges(), 0);
        assert_eq!(c.problem.node_weights(), &[4.0]);
    }

    #[test]
    fn fused_pairs_match_full_solve() {
        let pr = four_points();
        let cfg = SolverConfig::default().with_tolerance(1e-13);
        let full = solve_ama(&pr, &cfg, None).unwrap();
        let part = Partition::from_labels(&[0, 0, 1, 1]);
        let c = compress(&pr, &part).unwrap();
        assert_eq!(c.problem.graph().edges()[0].w, 4.0);
        let small = solve_ama(&c.problem, &cfg, Some(&c.aggregate_duals(&full.z))).unwrap();
        let u = c.broadcast(&small.u);
        assert!((&u - &full.u).amax() < 1e-8, "{u} vs {}", full.u);
        let lhs = c.problem.objective_value(&small.u).unwrap() + c.constant;
        let rhs = pr.objective_value(&u).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs());
    }
}
