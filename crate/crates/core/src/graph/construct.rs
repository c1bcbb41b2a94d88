use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::{DisjointSets, GraphProvenance};
use crate::error::{Error, Result};

/// Dense pairwise Euclidean distances, O(n^2) memory.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    n: usize,
    d: Vec<f64>,
}

impl DistanceTable {
    pub fn new(values: &DMatrix<f64>) -> Self {
        let n = values.ncols();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = (values.column(i) - values.column(j)).norm();
                d[i * n + j] = dij;
                d[j * n + i] = dij;
            }
        }
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Other nodes ordered by `(distance, index)`.
    pub fn neighbors_by_distance(&self, i: usize) -> Vec<usize> {
        let mut others: Vec<usize> = (0..self.n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| self.get(i, a).total_cmp(&self.get(i, b)).then(a.cmp(&b)));
        others
    }

    /// All pairs `i < j` in `(distance, i, j)` order.
    fn sorted_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .collect();
        pairs.sort_by(|a, b| self.get(a.0, a.1).total_cmp(&self.get(b.0, b.1)).then(a.cmp(b)));
        pairs
    }
}

/// Unweighted edge set with `i < j`, sorted by `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSet {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    pub provenance: GraphProvenance,
    pub warnings: Vec<String>,
}

impl EdgeSet {
    fn from_set(n: usize, set: BTreeSet<(usize, usize)>, provenance: GraphProvenance) -> Self {
        Self {
            n,
            pairs: set.into_iter().collect(),
            provenance,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        let set: BTreeSet<(usize, usize)> = self.pairs.iter().chain(&other.pairs).copied().collect();
        self.pairs = set.into_iter().collect();
        self.warnings.extend(other.warnings.iter().cloned());
    }

    pub fn total_length(&self, dist: &DistanceTable) -> f64 {
        self.pairs.iter().map(|&(i, j)| dist.get(i, j)).sum()
    }
}

/// Kruskal over `pairs` (already in priority order) skipping `used`.
fn kruskal<'a>(n: usize, pairs: impl Iterator<Item = &'a (usize, usize)>) -> Vec<(usize, usize)> {
    let mut ds = DisjointSets::new(n);
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for &(i, j) in pairs {
        if ds.union(i, j) {
            tree.push((i, j));
            if tree.len() + 1 == n {
                break;
            }
        }
    }
    tree
}

/// Euclidean minimum spanning tree; ties broken by the smaller index pair.
pub fn build_mst(dist: &DistanceTable) -> EdgeSet {
    let n = dist.len();
    if n < 2 {
        let mut e = EdgeSet::from_set(n, BTreeSet::new(), GraphProvenance::Mst);
        e.warnings.push(format!("MST on {n} node(s) has no edges"));
        return e;
    }
    let pairs = dist.sorted_pairs();
    EdgeSet::from_set(n, kruskal(n, pairs.iter()).into_iter().collect(), GraphProvenance::Mst)
}

/// Symmetrised k-nearest-neighbour graph: `(i, j)` is kept when either end is
/// among the other's `k` nearest. Ties at the k-th distance go to the smaller index.
pub fn build_knn(dist: &DistanceTable, k: usize) -> Result<EdgeSet> {
    let n = dist.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k-NN needs 1 <= k <= n-1 (k={k}, n={n})")));
    }
    let mut set = BTreeSet::new();
    for i in 0..n {
        for &j in dist.neighbors_by_distance(i).iter().take(k) {
            set.insert((i.min(j), i.max(j)));
        }
    }
    Ok(EdgeSet::from_set(n, set, GraphProvenance::Knn))
}

/// Union of `m` edge-disjoint trees, the `t`-th being the MST over edges not
/// used by trees `1..t`. Stops early, with a warning, once the unused edges no
/// longer span.
pub fn build_dmsts(dist: &DistanceTable, m: usize) -> EdgeSet {
    let n = dist.len();
    let pairs = dist.sorted_pairs();
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut warnings = Vec::new();
    for t in 0..m {
        let tree = kruskal(n, pairs.iter().filter(|p| !used.contains(p)));
        if tree.len() + 1 != n || n < 2 {
            warnings.push(format!("only {t} of {m} edge-disjoint spanning trees could be formed"));
            break;
        }
        used.extend(tree);
    }
    let mut e = EdgeSet::from_set(n, used, GraphProvenance::Dmsts);
    e.warnings = warnings;
    e
}

/// Individual trees of a DMST construction, for inspection.
pub fn dmst_trees(dist: &DistanceTable, m: usize) -> Vec<Vec<(usize, usize)>> {
    let n = dist.len();
    let pairs = dist.sorted_pairs();
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut trees = Vec::new();
    for _ in 0..m {
        let tree = kruskal(n, pairs.iter().filter(|p| !used.contains(p)));
        if tree.len() + 1 != n || n < 2 {
            break;
        }
        used.extend(tree.iter().copied());
        trees.push(tree);
    }
    trees
}

pub fn build_full(n: usize) -> EdgeSet {
    let set = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    EdgeSet::from_set(n, set, GraphProvenance::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> DistanceTable {
        DistanceTable::new(&DMatrix::from_row_slice(1, xs.len(), xs))
    }

    fn random_points(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(p, n, |_, _| rng.random::<f64>())
    }

    #[test]
    fn mst_on_line() {
        let e = build_mst(&line(&[0.0, 1.0, 3.0]));
        assert_eq!(e.pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(build_mst(&line(&[0.0, 2.0])).pairs, vec![(0, 1)]);
        let single = build_mst(&line(&[5.0]));
        assert!(single.is_empty() && !single.warnings.is_empty());
    }

    #[test]
    fn mst_has_n_minus_one_edges() {
        for n in 2..12 {
            let d = DistanceTable::new(&random_points(n, 3, n as u64));
            assert_eq!(build_mst(&d).len(), n - 1);
        }
    }

    #[test]
    fn mst_beats_random_spanning_trees() {
        let pts = random_points(15, 2, 7);
        let d = DistanceTable::new(&pts);
        let best = build_mst(&d).total_length(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            // Random spanning tree: Kruskal over a shuffled pair list.
            let mut pairs: Vec<(usize, usize)> = (0..15).flat_map(|i| ((i + 1)..15).map(move |j| (i, j))).collect();
            for k in (1..pairs.len()).rev() {
                pairs.swap(k, rng.random_range(0..=k));
            }
            let tree = kruskal(15, pairs.iter());
            let len: f64 = tree.iter().map(|&(i, j)| d.get(i, j)).sum();
            assert!(best <= len + 1e-12);
        }
    }

    #[test]
    fn knn_examples() {
        let d = line(&[0.0, 1.0, 3.0]);
        assert_eq!(build_knn(&d, 1).unwrap().pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(build_knn(&line(&[0.0, 1.0]), 1).unwrap().len(), 1);
        let d5 = DistanceTable::new(&random_points(6, 2, 3));
        assert_eq!(build_knn(&d5, 5).unwrap().len(), 15);
        assert!(build_knn(&d5, 6).is_err());
        assert!(build_knn(&d5, 0).is_err());
    }

    #[test]
    fn knn_edge_bound() {
        let d = DistanceTable::new(&random_points(30, 2, 11));
        for k in 1..6 {
            assert!(build_knn(&d, k).unwrap().len() <= k * 30);
        }
    }

    #[test]
    fn knn_tie_goes_to_smaller_index() {
        // Node 1 is equidistant from 0 and 2.
        let d = line(&[0.0, 1.0, 2.0, 10.0]);
        let e = build_knn(&d, 1).unwrap();
        assert!(e.pairs.contains(&(0, 1)));
        assert!(e.pairs.contains(&(2, 3)) || e.pairs.contains(&(1, 2)));
        let nb = d.neighbors_by_distance(1);
        assert_eq!(nb[0], 0);
    }

    #[test]
    fn dmsts_first_tree_is_mst_and_trees_disjoint() {
        let d = DistanceTable::new(&random_points(12, 2, 5));
        let trees = dmst_trees(&d, 3);
        assert_eq!(trees.len(), 3);
        let mst = build_mst(&d);
        let mut first = trees[0].clone();
        first.sort();
        assert_eq!(first, mst.pairs);
        let mut all: Vec<(usize, usize)> = trees.concat();
        let total = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), total);
        assert_eq!(build_dmsts(&d, 3).len(), 3 * 11);
        assert_eq!(build_dmsts(&d, 1).pairs, mst.pairs);
    }

    #[test]
    fn dmsts_four_points() {
        // MST is the path 0-1-2-3; the complement {02, 13, 03} is also a spanning tree.
        let pts = DMatrix::from_column_slice(2, 4, &[0.0, 0.0, 1.0, 0.1, 2.0, 0.3, 3.0, 0.0]);
        let d = DistanceTable::new(&pts);
        let e = build_dmsts(&d, 2);
        assert_eq!(e.len(), 6);
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn dmsts_infeasible_returns_maximal_collection() {
        let d = DistanceTable::new(&random_points(5, 2, 1));
        let e = build_dmsts(&d, 10);
        assert!(!e.warnings.is_empty());
        assert_eq!(e.len() % 4, 0);
        assert!(e.len() <= 10);
    }
}
