use nalgebra::DMatrix;

use crate::graph::WeightGraph;

/// Implicit edge-incidence matrix `A` (`|E| x n`, row `l` = `e_i - e_j`).
///
/// Matrices are column-major `p x n` (nodes) or `p x |E|` (edges); every
/// application is a single sweep over the edge list, `O(p|E|)`.
#[derive(Clone, Debug)]
pub struct IncidenceOperator {
    n: usize,
    heads: Vec<usize>,
    tails: Vec<usize>,
}

impl IncidenceOperator {
    pub fn new(graph: &WeightGraph) -> Self {
        let (heads, tails) = graph.edges().iter().map(|e| (e.i, e.j)).unzip();
        Self {
            n: graph.num_nodes(),
            heads,
            tails,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.heads.len()
    }

    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        (self.heads[edge], self.tails[edge])
    }

    /// `out = U A^T`: column `l` holds `u_i - u_j`.
    pub fn differences_into(&self, u: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let p = u.nrows();
        debug_assert_eq!(out.shape(), (p, self.num_edges()));
        let us = u.as_slice();
        let os = out.as_mut_slice();
        for (l, (&i, &j)) in self.heads.iter().zip(&self.tails).enumerate() {
            let (ui, uj) = (&us[i * p..(i + 1) * p], &us[j * p..(j + 1) * p]);
            for ((o, a), b) in os[l * p..(l + 1) * p].iter_mut().zip(ui).zip(uj) {
                *o = a - b;
            }
        }
    }

    pub fn differences(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(u.nrows(), self.num_edges());
        self.differences_into(u, &mut out);
        out
    }

    /// `out = Z A`: node `i` receives `+z_l` for edges `(i, .)` and `-z_l` for `(., i)`.
    pub fn scatter_into(&self, z: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let p = z.nrows();
        debug_assert_eq!(out.shape(), (p, self.n));
        out.fill(0.0);
        let zs = z.as_slice();
        let os = out.as_mut_slice();
        for (l, (&i, &j)) in self.heads.iter().zip(&self.tails).enumerate() {
            let zl = &zs[l * p..(l + 1) * p];
            for (o, v) in os[i * p..(i + 1) * p].iter_mut().zip(zl) {
                *o += v;
            }
            for (o, v) in os[j * p..(j + 1) * p].iter_mut().zip(zl) {
                *o -= v;
            }
        }
    }

    pub fn scatter(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(z.nrows(), self.n);
        self.scatter_into(z, &mut out);
        out
    }

    /// `A^T A x` for a node vector, i.e. the unit-weight graph Laplacian.
    pub fn laplacian_apply(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&i, &j) in self.heads.iter().zip(&self.tails) {
            let d = x[i] - x[j];
            out[i] += d;
            out[j] -= d;
        }
    }

    /// Largest eigenvalue of `D^{-1/2} A^T A D^{-1/2}` with `D = diag(node_weights)`,
    /// by power iteration. This is the Lipschitz constant of the dual gradient.
    pub fn spectral_norm_sq(&self, node_weights: &[f64]) -> f64 {
        let n = self.n;
        if self.num_edges() == 0 || n == 0 {
            return 0.0;
        }
        let inv_sqrt: Vec<f64> = node_weights.iter().map(|m| 1.0 / m.sqrt()).collect();
        // Deterministic, non-symmetric start so no eigenvector is missed by symmetry.
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
        let mut y = vec![0.0; n];
        let mut scaled = vec![0.0; n];
        let mut lambda = 0.0;
        for _ in 0..500 {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            for k in 0..n {
                scaled[k] = x[k] * inv_sqrt[k];
            }
            self.laplacian_apply(&scaled, &mut y);
            for k in 0..n {
                y[k] *= inv_sqrt[k];
            }
            let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            std::mem::swap(&mut x, &mut y);
            if (next - lambda).abs() <= 1e-10 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        // Rayleigh quotients approach from below; pad so the step stays safe.
        lambda * 1.01
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphProvenance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, m: usize, seed: u64) -> WeightGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = std::collections::BTreeSet::new();
        while set.len() < m {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        let edges = set.into_iter().map(|(i, j)| Edge { i, j, w: 1.0 }).collect();
        WeightGraph::new(n, edges, GraphProvenance::Custom).unwrap()
    }

    #[test]
    fn adjoint_pair() {
        let g = random_graph(10, 20, 1);
        let a = IncidenceOperator::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = DMatrix::from_fn(3, 10, |_, _| rng.random::<f64>());
        let z = DMatrix::from_fn(3, 20, |_, _| rng.random::<f64>());
        // <U A^T, Z> = <U, Z A>
        let lhs = a.differences(&u).dot(&z);
        let rhs = u.dot(&a.scatter(&z));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn composition_is_laplacian() {
        let g = random_graph(12, 25, 3);
        let a = IncidenceOperator::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let x = DMatrix::from_fn(1, 12, |_, _| rng.random::<f64>() - 0.5);
            let via_a = a.scatter(&a.differences(&x));
            let mut lap = vec![0.0; 12];
            a.laplacian_apply(x.as_slice(), &mut lap);
            for k in 0..12 {
                assert!((via_a[k] - lap[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_norm_of_single_edge() {
        let g = random_graph(2, 1, 0);
        let a = IncidenceOperator::new(&g);
        let l = a.spectral_norm_sq(&[1.0, 1.0]);
        assert!((2.0..=2.0 * 1.011).contains(&l));
        // Node weights 1 and 3: eigenvalue 1 + 1/3.
        let l = a.spectral_norm_sq(&[1.0, 3.0]);
        assert!((4.0 / 3.0..=4.0 / 3.0 * 1.011).contains(&l));
    }

    #[test]
    fn spectral_norm_bounds_complete_graph() {
        // Complete graph on n nodes: lambda_max = n.
        let n = 7;
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| Edge { i, j, w: 1.0 }))
            .collect();
        let g = WeightGraph::new(n, edges, GraphProvenance::Full).unwrap();
        let l = IncidenceOperator::new(&g).spectral_norm_sq(&vec![1.0; n]);
        assert!((7.0 - 1e-6..=7.0 * 1.011).contains(&l));
    }
}
