use serde::Serialize;
use serde_json::{json, Value};

use super::ClusterPath;
use crate::data::Partition;
use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// Node of a merge tree: ids `0..n` are leaves (observations), higher ids are merges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DendrogramNode {
    pub id: usize,
    /// Fusion `gamma` for merges, `0` for leaves.
    pub height: f64,
    pub children: Vec<usize>,
    /// Smallest observation index below this node.
    pub min_member: usize,
    pub size: usize,
}

/// Merge tree (or forest, for disconnected graphs) read off a path.
///
/// A merge's height is the first grid `gamma` at which its two sides share a
/// cluster. Several clusters fusing at one grid point become a chain of
/// equal-height binary merges taken in order of smallest member index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dendrogram {
    pub nodes: Vec<DendrogramNode>,
    pub roots: Vec<usize>,
    pub num_leaves: usize,
}

impl Dendrogram {
    pub fn from_path(path: &ClusterPath) -> Result<Self> {
        let n = path.snapshots.first().map_or(0, |s| s.partition.len());
        let steps: Vec<(f64, Partition)> = path.snapshots.iter().map(|s| (s.gamma, s.partition.clone())).collect();
        Self::from_partitions(n, &steps)
    }

    /// Builds from `(gamma, partition)` pairs in increasing `gamma` order.
    /// Fails with [`Error::NonMonotoneFusion`] if a later partition splits a
    /// block of an earlier one.
    pub fn from_partitions(n: usize, steps: &[(f64, Partition)]) -> Result<Self> {
        let mut nodes: Vec<DendrogramNode> = (0..n)
            .map(|i| DendrogramNode {
                id: i,
                height: 0.0,
                children: Vec::new(),
                min_member: i,
                size: 1,
            })
            .collect();
        // Current tree node for each observation's cluster, keyed by partition block.
        let mut previous = Partition::singletons(n);
        let mut prev_gamma = 0.0;
        let mut cluster_node: Vec<usize> = (0..n).collect();
        for (gamma, part) in steps {
            if part.len() != n {
                return Err(Error::shape("partitions along the path differ in length"));
            }
            if !previous.refines(part) {
                return Err(Error::NonMonotoneFusion {
                    gamma_before: prev_gamma,
                    gamma_after: *gamma,
                });
            }
            // Tree nodes of the previous blocks, grouped by their new block.
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); part.num_clusters()];
            let mut seen = vec![false; previous.num_clusters()];
            for i in 0..n {
                let old = previous.labels()[i];
                if !seen[old] {
                    seen[old] = true;
                    groups[part.labels()[i]].push(cluster_node[old]);
                }
            }
            let mut new_nodes = vec![0; part.num_clusters()];
            for (b, mut members) in groups.into_iter().enumerate() {
                members.sort_by_key(|&id| nodes[id].min_member);
                let mut acc = members[0];
                for &next in &members[1..] {
                    let id = nodes.len();
                    nodes.push(DendrogramNode {
                        id,
                        height: *gamma,
                        children: vec![acc, next],
                        min_member: nodes[acc].min_member.min(nodes[next].min_member),
                        size: nodes[acc].size + nodes[next].size,
                    });
                    acc = id;
                }
                new_nodes[b] = acc;
            }
            cluster_node = new_nodes;
            previous = part.clone();
            prev_gamma = *gamma;
        }
        let mut roots = cluster_node;
        roots.sort_by_key(|&id| nodes[id].min_member);
        Ok(Self {
            nodes,
            roots,
            num_leaves: n,
        })
    }

    pub fn num_merges(&self) -> usize {
        self.nodes.len() - self.num_leaves
    }

    /// Merge nodes in creation order, i.e. by nondecreasing height.
    pub fn merges(&self) -> &[DendrogramNode] {
        &self.nodes[self.num_leaves..]
    }

    /// Observations under `node`, ascending.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(id) = stack.pop() {
            if id < self.num_leaves {
                out.push(id);
            } else {
                stack.extend(&self.nodes[id].children);
            }
        }
        out.sort_unstable();
        out
    }

    /// Copy with each merge's height replaced by its rank among distinct fusion heights.
    pub fn with_rank_heights(&self) -> Self {
        let mut out = self.clone();
        let mut rank = 0.0;
        let mut last = f64::NAN;
        for node in out.nodes[self.num_leaves..].iter_mut() {
            if node.height != last {
                rank += 1.0;
                last = node.height;
            }
            node.height = rank;
        }
        out
    }

    fn node_json(&self, id: usize) -> Value {
        let node = &self.nodes[id];
        let children: Vec<Value> = node.children.iter().map(|&c| self.node_json(c)).collect();
        json!({ "node": id, "height": node.height, "children": children })
    }

    /// One `{node, height, children}` object per tree; a single tree is
    /// returned bare, a forest as an array.
    pub fn to_json(&self) -> Value {
        let trees: Vec<Value> = self.roots.iter().map(|&r| self.node_json(r)).collect();
        if trees.len() == 1 {
            trees.into_iter().next().unwrap()
        } else {
            Value::Array(trees)
        }
    }

    fn newick_node(&self, id: usize, parent_height: f64, labels: Option<&[String]>, out: &mut String) {
        let node = &self.nodes[id];
        if id < self.num_leaves {
            match labels {
                Some(l) => out.push_str(&l[id]),
                None => out.push_str(&id.to_string()),
            }
        } else {
            out.push('(');
            for (k, &c) in node.children.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                self.newick_node(c, node.height, labels, out);
            }
            out.push(')');
        }
        out.push(':');
        out.push_str(&fmt_f64(parent_height - node.height));
    }

    /// Newick with branch lengths equal to height differences; one line per tree.
    /// Leaves are named by observation index unless `labels` is given.
    pub fn to_newick(&self, labels: Option<&[String]>) -> String {
        let mut lines = Vec::new();
        for &r in &self.roots {
            let mut s = String::new();
            if r < self.num_leaves {
                match labels {
                    Some(l) => s.push_str(&l[r]),
                    None => s.push_str(&r.to_string()),
                }
            } else {
                let node = &self.nodes[r];
                s.push('(');
                for (k, &c) in node.children.iter().enumerate() {
                    if k > 0 {
                        s.push(',');
                    }
                    self.newick_node(c, node.height, labels, &mut s);
                }
                s.push(')');
            }
            s.push(';');
            lines.push(s);
        }
        lines.join("\n")
    }
}
