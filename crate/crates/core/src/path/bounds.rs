//! Certified bracket for the full-fusion threshold of a connected problem.
//!
//! Everything sits at the weighted mean exactly when some edge flow `z` moves
//! the residuals `m_i (x_i - mean)` around the graph with `|z_l| <= gamma w_l`.
//! A spanning tree carries a unique such flow, so its worst `|z_l| / w_l` is an
//! upper bound. Every cut `S` forces `|sum_{i in S} m_i (x_i - mean)|` across
//! edges of total weight `w(S)`, which gives lower bounds.

use nalgebra::DVector;

use crate::graph::DisjointSets;
use crate::problem::ClusteringProblem;

/// `(lower, upper)` with `lower <= gamma* <= upper`. Both are zero when the
/// data already sit at one point. Assumes a connected graph with `n >= 2`.
pub(crate) fn fusion_bracket(problem: &ClusteringProblem) -> (f64, f64) {
    let n = problem.len();
    let x = problem.data().values();
    let m = problem.node_weights();
    let total: f64 = m.iter().sum();
    let mut mean = DVector::zeros(x.nrows());
    for (i, col) in x.column_iter().enumerate() {
        mean += col * (m[i] / total);
    }
    let resid: Vec<DVector<f64>> = x.column_iter().enumerate().map(|(i, c)| (c - &mean) * m[i]).collect();

    // Maximum-weight spanning tree, rooted at node 0.
    let edges = problem.graph().edges();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| edges[b].w.total_cmp(&edges[a].w));
    let mut sets = DisjointSets::new(n);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &k in &order {
        let e = edges[k];
        if sets.union(e.i, e.j) {
            adj[e.i].push((e.j, e.w));
            adj[e.j].push((e.i, e.w));
        }
    }
    let mut parent = vec![usize::MAX; n];
    let mut parent_w = vec![0.0; n];
    let mut depth = vec![0usize; n];
    let mut bfs = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    seen[0] = true;
    bfs.push(0);
    let mut head = 0;
    while head < bfs.len() {
        let v = bfs[head];
        head += 1;
        for &(u, w) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                parent[u] = v;
                parent_w[u] = w;
                depth[u] = depth[v] + 1;
                bfs.push(u);
            }
        }
    }
    debug_assert_eq!(bfs.len(), n, "graph must be connected");

    // Subtree residual sums are the tree flows.
    let mut flow = resid.clone();
    for &v in bfs.iter().skip(1).rev() {
        let f = flow[v].clone();
        flow[parent[v]] += f;
    }

    // Cut weight of each subtree, accumulated edge by edge along tree paths so
    // that tiny weights are not lost to cancellation.
    let mut cut = vec![0.0; n];
    let mut degree = vec![0.0; n];
    for e in edges {
        degree[e.i] += e.w;
        degree[e.j] += e.w;
        let (mut a, mut b) = (e.i, e.j);
        while a != b {
            if depth[a] >= depth[b] {
                cut[a] += e.w;
                a = parent[a];
            } else {
                cut[b] += e.w;
                b = parent[b];
            }
        }
    }

    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    for &v in bfs.iter().skip(1) {
        let f = flow[v].norm();
        upper = upper.max(f / parent_w[v]);
        lower = lower.max(f / cut[v]);
    }
    for i in 0..n {
        lower = lower.max(resid[i].norm() / degree[i]);
    }
    (lower.min(upper), upper)
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::data::DataMatrix;
    use crate::graph::{Edge, GraphProvenance, WeightGraph};

    fn problem(x: &[f64], edges: &[(usize, usize, f64)]) -> ClusteringProblem {
        let data = DataMatrix::new(DMatrix::from_row_slice(1, x.len(), x)).unwrap();
        let edges = edges.iter().map(|&(i, j, w)| Edge { i, j, w }).collect();
        let g = WeightGraph::new(x.len(), edges, GraphProvenance::Custom).unwrap();
        ClusteringProblem::new(data, g, 0.0).unwrap()
    }

    #[test]
    fn tree_bracket_is_tight() {
        // Path 0-1-2 at 0, 1, 5: mean 2, flows 2 and 3 over weights 1 and 0.5.
        let (lo, hi) = fusion_bracket(&problem(&[0.0, 1.0, 5.0], &[(0, 1, 1.0), (1, 2, 0.5)]));
        assert!((hi - 6.0).abs() < 1e-12);
        assert!((lo - hi).abs() < 1e-12);
    }

    #[test]
    fn cycle_bracket_contains_threshold() {
        // Four points on a unit cycle; the symmetric flow needs gamma = 1.
        let p = problem(
            &[-1.5, -0.5, 0.5, 1.5],
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)],
        );
        let (lo, hi) = fusion_bracket(&p);
        assert!(lo <= 1.0 + 1e-12 && hi >= 1.0 - 1e-12 && lo > 0.0, "{lo} {hi}");
    }

    #[test]
    fn tiny_bridge_weight_survives() {
        let (lo, hi) = fusion_bracket(&problem(
            &[0.0, 0.0, 10.0, 10.0],
            &[(0, 1, 1.0), (2, 3, 1.0), (1, 2, 1e-46)],
        ));
        assert!((lo / 1e47 - 1.0).abs() < 1e-9 && (hi / 1e47 - 1.0).abs() < 1e-9);
    }
}
