//! Weight graphs over observations.

mod construct;
mod weights;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Partition};
use crate::error::{Error, Result};

pub use construct::{build_dmsts, build_full, build_knn, build_mst, dmst_trees, DistanceTable, EdgeSet};
pub use weights::{assign_weights, level_weights, local_scales, LocalScales, WeightKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphProvenance {
    Mst,
    Knn,
    MstPlusKnn,
    Dmsts,
    Full,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph on `n` nodes with positive weights, edges stored with `i < j`
/// in a fixed order. Per-edge solver arrays are indexed by position in [`edges`].
///
/// [`edges`]: WeightGraph::edges
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightGraph {
    n: usize,
    edges: Vec<Edge>,
    provenance: GraphProvenance,
}

impl WeightGraph {
    /// Validates and normalises `(i, j, w)` triples. Pairs given as `i > j` are
    /// swapped; duplicates and self-loops are rejected.
    pub fn new(n: usize, edges: Vec<Edge>, provenance: GraphProvenance) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in edges {
            let (i, j) = if e.i <= e.j { (e.i, e.j) } else { (e.j, e.i) };
            if i == j {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            if j >= n {
                return Err(Error::invalid(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(Error::invalid(format!("edge ({i},{j}) has weight {}", e.w)));
            }
            if !seen.insert((i, j)) {
                return Err(Error::invalid(format!("duplicate edge ({i},{j})")));
            }
            out.push(Edge { i, j, w: e.w });
        }
        Ok(Self {
            n,
            edges: out,
            provenance,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            provenance: GraphProvenance::Custom,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn provenance(&self) -> GraphProvenance {
        self.provenance
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.iter().map(|e| e.w)
    }

    /// Same topology, new weights (one per edge, same order).
    pub fn with_weights(&self, w: &[f64]) -> Result<Self> {
        if w.len() != self.edges.len() {
            return Err(Error::shape(format!(
                "{} weights for {} edges",
                w.len(),
                self.edges.len()
            )));
        }
        let edges = self
            .edges
            .iter()
            .zip(w)
            .map(|(e, &w)| Edge { i: e.i, j: e.j, w })
            .collect();
        Self::new(self.n, edges, self.provenance)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.i] += 1;
            d[e.j] += 1;
        }
        d
    }

    pub fn connected_components(&self) -> Partition {
        connected_components(self)
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || connected_components(self).num_clusters() == 1
    }

    /// Induced subgraph on `nodes` (given in ascending order), relabelled `0..len`.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            pos[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| pos[e.i] != usize::MAX && pos[e.j] != usize::MAX)
            .map(|e| Edge {
                i: pos[e.i],
                j: pos[e.j],
                w: e.w,
            })
            .collect();
        Self {
            n: nodes.len(),
            edges,
            provenance: self.provenance,
        }
    }

    /// Union of two graphs on the same nodes; shared edges keep `self`'s weight.
    pub fn union(&self, other: &WeightGraph, provenance: GraphProvenance) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::shape("graph union over different node counts"));
        }
        let mut seen: std::collections::HashSet<(usize, usize)> = self.edges.iter().map(|e| (e.i, e.j)).collect();
        let mut edges = self.edges.clone();
        for e in &other.edges {
            if seen.insert((e.i, e.j)) {
                edges.push(*e);
            }
        }
        edges.sort_by_key(|e| (e.i, e.j));
        Ok(Self {
            n: self.n,
            edges,
            provenance,
        })
    }

    /// Writes the `i,j,w` edge-list CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,w")?;
        for e in &self.edges {
            writeln!(w, "{},{},{}", e.i, e.j, crate::io::fmt_f64(e.w))?;
        }
        Ok(())
    }

    /// Reads an `i,j,w` edge list. `n` defaults to one past the largest index.
    pub fn read_csv<R: BufRead>(r: R, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('i')) {
                continue;
            }
            let parse_err = |m: &str| Error::Parse {
                line: lineno + 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(parse_err("expected three fields i,j,w"));
            }
            let i = f[0].parse::<usize>().map_err(|_| parse_err("bad node index"))?;
            let j = f[1].parse::<usize>().map_err(|_| parse_err("bad node index"))?;
            let w = f[2].parse::<f64>().map_err(|_| parse_err("bad weight"))?;
            edges.push(Edge { i, j, w });
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|e| e.i.max(e.j) + 1).max().unwrap_or(0));
        Self::new(n, edges, GraphProvenance::Custom)
    }
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `false` when already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    pub fn partition(&mut self) -> Partition {
        let roots: Vec<usize> = (0..self.parent.len()).map(|i| self.find(i)).collect();
        Partition::from_labels(&roots)
    }
}

pub fn connected_components(graph: &WeightGraph) -> Partition {
    let mut ds = DisjointSets::new(graph.num_nodes());
    for e in graph.edges() {
        ds.union(e.i, e.j);
    }
    ds.partition()
}

/// Edge-set construction method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum GraphMethod {
    Mst,
    Knn { k: usize },
    MstPlusKnn { k: usize },
    Dmsts { m: usize },
    Full,
}

impl fmt::Display for GraphMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphMethod::Mst => write!(f, "mst"),
            GraphMethod::Knn { k } => write!(f, "knn:{k}"),
            GraphMethod::MstPlusKnn { k } => write!(f, "mst+knn:{k}"),
            GraphMethod::Dmsts { m } => write!(f, "dmsts:{m}"),
            GraphMethod::Full => write!(f, "full"),
        }
    }
}

impl FromStr for GraphMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s.as_str(), None),
        };
        let count = |default: usize| -> Result<usize> {
            arg.map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| Error::invalid(format!("bad graph parameter '{a}'")))
            })
        };
        let m = match head {
            "mst" => GraphMethod::Mst,
            "knn" => GraphMethod::Knn { k: count(3)? },
            "mst+knn" | "knn+mst" => GraphMethod::MstPlusKnn { k: count(3)? },
            "dmsts" | "dmst" => GraphMethod::Dmsts { m: count(3)? },
            "full" | "complete" => GraphMethod::Full,
            other => return Err(Error::invalid(format!("unknown graph method '{other}'"))),
        };
        m.validate()?;
        Ok(m)
    }
}

impl GraphMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphMethod::Knn { k: 0 } | GraphMethod::MstPlusKnn { k: 0 } => Err(Error::invalid("k must be at least 1")),
            GraphMethod::Dmsts { m: 0 } => Err(Error::invalid("M must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Graph construction plus weighting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub method: GraphMethod,
    pub weights: WeightKind,
}

/// Constructed graph with connectivity status and construction warnings.
#[derive(Clone, Debug)]
pub struct BuiltGraph {
    pub graph: WeightGraph,
    pub connected: bool,
    pub warnings: Vec<String>,
}

impl GraphSpec {
    pub fn new(method: GraphMethod, weights: WeightKind) -> Self {
        Self { method, weights }
    }

    pub fn build(&self, data: &DataMatrix) -> Result<BuiltGraph> {
        self.method.validate()?;
        self.weights.validate()?;
        let dist = DistanceTable::new(data.values());
        let n = data.len();
        let mut warnings = Vec::new();
        let edges = match self.method {
            GraphMethod::Mst => build_mst(&dist),
            GraphMethod::Knn { k } => build_knn(&dist, k)?,
            GraphMethod::MstPlusKnn { k } => {
                let mut e = build_mst(&dist);
                e.union_with(&build_knn(&dist, k)?);
                e.provenance = GraphProvenance::MstPlusKnn;
                e
            }
            GraphMethod::Dmsts { m } => build_dmsts(&dist, m),
            GraphMethod::Full => build_full(n),
        };
        warnings.extend(edges.warnings.iter().cloned());
        let graph = assign_weights(&edges, &dist, &self.weights)?;
        let connected = graph.is_connected();
        if !connected {
            warnings.push(format!(
                "graph has {} connected components; the solution path cannot end in one cluster",
                graph.connected_components().num_clusters()
            ));
        }
        Ok(BuiltGraph {
            graph,
            connected,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, j: usize) -> Edge {
        Edge { i, j, w: 1.0 }
    }

    #[test]
    fn validation() {
        assert!(WeightGraph::new(3, vec![e(0, 0)], GraphProvenance::Custom).is_err());
        assert!(WeightGraph::new(3, vec![e(0, 3)], GraphProvenance::Custom).is_err());
        assert!(WeightGraph::new(3, vec![e(0, 1), e(1, 0)], GraphProvenance::Custom).is_err());
        assert!(WeightGraph::new(3, vec![Edge { i: 0, j: 1, w: 0.0 }], GraphProvenance::Custom).is_err());
        let g = WeightGraph::new(3, vec![e(2, 1)], GraphProvenance::Custom).unwrap();
        assert_eq!((g.edges()[0].i, g.edges()[0].j), (1, 2));
    }

    #[test]
    fn components() {
        assert_eq!(WeightGraph::empty(4).connected_components().num_clusters(), 4);
        let tree = WeightGraph::new(4, vec![e(0, 1), e(1, 2), e(1, 3)], GraphProvenance::Custom).unwrap();
        assert_eq!(tree.connected_components().num_clusters(), 1);
        let two = WeightGraph::new(
            6,
            vec![e(0, 1), e(1, 2), e(0, 2), e(3, 4), e(4, 5), e(3, 5)],
            GraphProvenance::Custom,
        )
        .unwrap();
        let p = two.connected_components();
        assert_eq!(p.num_clusters(), 2);
        assert_eq!(p.sizes(), vec![3, 3]);
    }

    #[test]
    fn csv_round_trip() {
        let g = WeightGraph::new(
            4,
            vec![Edge { i: 0, j: 3, w: 0.1 }, Edge { i: 1, j: 2, w: 2.5 }],
            GraphProvenance::Custom,
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"i,j,w\n"));
        let back = WeightGraph::read_csv(&buf[..], Some(4)).unwrap();
        assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("mst".parse::<GraphMethod>().unwrap(), GraphMethod::Mst);
        assert_eq!("knn:5".parse::<GraphMethod>().unwrap(), GraphMethod::Knn { k: 5 });
        assert_eq!(
            "mst+knn:3".parse::<GraphMethod>().unwrap(),
            GraphMethod::MstPlusKnn { k: 3 }
        );
        assert!("knn:0".parse::<GraphMethod>().is_err());
        assert!("ring".parse::<GraphMethod>().is_err());
    }
}
