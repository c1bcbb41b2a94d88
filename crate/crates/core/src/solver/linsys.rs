//! The ADMM centroid system `U M = R` with `M = diag(m) + rho A^T A`.
//!
//! `M` is symmetric positive definite and diagonally dominant. Up to
//! [`DIRECT_LIMIT`] nodes it is factored once as `P M P^T = L D L^T` (reverse
//! Cuthill-McKee ordering, up-looking sparse LDL); above that, each solve runs
//! Jacobi-preconditioned conjugate gradients.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::IncidenceOperator;
use crate::error::{Error, Result};

pub const DIRECT_LIMIT: usize = 10_000;

/// Relative residual target for the iterative route.
pub const CG_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Direct up to [`DIRECT_LIMIT`] nodes, iterative above.
    #[default]
    Auto,
    Direct,
    Iterative,
}

/// Symmetric sparse matrix in compressed-column form, upper triangle only
/// (row index `<=` column index within each column, rows ascending).
#[derive(Clone, Debug)]
struct UpperCsc {
    n: usize,
    colptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

/// `L D L^T` factor of a permuted SPD matrix.
#[derive(Clone, Debug)]
pub struct SparseLdl {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl SparseLdl {
    /// Factors `diag(diag) + rho * L(edges)` where `L` is the unit-weight Laplacian.
    pub fn laplacian(diag: &[f64], rho: f64, edges: &[(usize, usize)]) -> Result<Self> {
        let n = diag.len();
        let perm = reverse_cuthill_mckee(n, edges);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // Assemble the permuted upper triangle column by column.
        let mut cols: Vec<Vec<(usize, f64)>> = (0..n).map(|k| vec![(k, diag[perm[k]])]).collect();
        for &(i, j) in edges {
            let (a, b) = (inv[i], inv[j]);
            let (r, c) = (a.min(b), a.max(b));
            cols[r][0].1 += rho;
            cols[c][0].1 += rho;
            cols[c].push((r, -rho));
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        colptr.push(0);
        for mut col in cols {
            col.sort_by_key(|e| e.0);
            // Merge repeated entries (parallel edges are not expected, but harmless).
            let mut last = NONE;
            for (r, v) in col {
                if r == last {
                    *vals.last_mut().unwrap() += v;
                } else {
                    rows.push(r);
                    vals.push(v);
                    last = r;
                }
            }
            colptr.push(rows.len());
        }
        let a = UpperCsc { n, colptr, rows, vals };
        Self::factor(&a, perm)
    }

    fn factor(a: &UpperCsc, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        // Symbolic: elimination tree and column counts.
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for idx in a.colptr[k]..a.colptr[k + 1] {
                let mut i = a.rows[idx];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        // Numeric: up-looking, one row of L per step.
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        flag.iter_mut().for_each(|f| *f = NONE);
        lnz.iter_mut().for_each(|c| *c = 0);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for idx in a.colptr[k]..a.colptr[k + 1] {
                let mut i = a.rows[idx];
                y[i] += a.vals[idx];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let end = lp[i] + lnz[i];
                for q in lp[i]..end {
                    y[li[q]] -= lx[q] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                li[end] = k;
                lx[end] = lki;
                lnz[i] += 1;
            }
            if !(d[k] > 0.0 && d[k].is_finite()) {
                return Err(Error::Factorization { pivot: perm[k] });
            }
        }
        Ok(Self { n, perm, lp, li, lx, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Nonzeros strictly below the diagonal of `L`.
    pub fn factor_nonzeros(&self) -> usize {
        self.li.len()
    }

    /// Solves `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        for (k, &old) in self.perm.iter().enumerate() {
            work[k] = b[old];
        }
        for j in 0..self.n {
            let wj = work[j];
            for q in self.lp[j]..self.lp[j + 1] {
                work[self.li[q]] -= self.lx[q] * wj;
            }
        }
        for j in 0..self.n {
            work[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut s = work[j];
            for q in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[q] * work[self.li[q]];
            }
            work[j] = s;
        }
        for (k, &old) in self.perm.iter().enumerate() {
            b[old] = work[k];
        }
    }
}

/// Reverse Cuthill-McKee ordering of the graph, component by component,
/// each started from a pseudo-peripheral node.
fn reverse_cuthill_mckee(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for a in adj.iter_mut() {
        a.sort_by_key(|&v| (degree[v], v));
        a.dedup();
    }
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &start in &by_degree {
        if placed[start] {
            continue;
        }
        // Pseudo-peripheral root: jump to the farthest node while eccentricity grows.
        let mut root = start;
        let (mut ecc, mut far) = farthest(&adj, root, &placed);
        for _ in 0..8 {
            let (e, f) = farthest(&adj, far, &placed);
            if e <= ecc {
                break;
            }
            root = far;
            ecc = e;
            far = f;
        }
        let mut queue = VecDeque::from([root]);
        placed[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !placed[w] {
                    placed[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// `(eccentricity, farthest node)` of `root` among unblocked nodes; the
/// farthest node is the lowest-degree one in the last level.
fn farthest(adj: &[Vec<usize>], root: usize, blocked: &[bool]) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let (mut ecc, mut far) = (0, root);
    while let Some(v) = queue.pop_front() {
        if dist[v] > ecc || (dist[v] == ecc && adj[v].len() < adj[far].len()) {
            ecc = dist[v];
            far = v;
        }
        for &w in &adj[v] {
            if !blocked[w] && dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (ecc, far)
}

#[derive(Clone, Debug)]
enum Route {
    Direct(SparseLdl),
    Iterative,
}

/// Cached solver for `U M = R`, assembled once per `(graph, node weights, rho)`.
#[derive(Clone, Debug)]
pub struct LaplacianSystem {
    op: IncidenceOperator,
    diag: Vec<f64>,
    /// Inverse diagonal of `M`, the Jacobi preconditioner.
    precond: Vec<f64>,
    rho: f64,
    route: Route,
}

impl LaplacianSystem {
    pub fn new(op: &IncidenceOperator, node_weights: &[f64], rho: f64, solver: LinearSolver) -> Result<Self> {
        if node_weights.len() != op.num_nodes() {
            return Err(Error::shape("node weights do not match the graph"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        let direct = match solver {
            LinearSolver::Auto => op.num_nodes() <= DIRECT_LIMIT,
            LinearSolver::Direct => true,
            LinearSolver::Iterative => false,
        };
        let route = if direct {
            let edges: Vec<(usize, usize)> = (0..op.num_edges()).map(|l| op.endpoints(l)).collect();
            Route::Direct(SparseLdl::laplacian(node_weights, rho, &edges)?)
        } else {
            Route::Iterative
        };
        let mut deg = vec![0.0; op.num_nodes()];
        for l in 0..op.num_edges() {
            let (i, j) = op.endpoints(l);
            deg[i] += 1.0;
            deg[j] += 1.0;
        }
        let precond = node_weights
            .iter()
            .zip(&deg)
            .map(|(m, d)| 1.0 / (m + rho * d))
            .collect();
        Ok(Self {
            op: op.clone(),
            diag: node_weights.to_vec(),
            precond,
            rho,
            route,
        })
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.route, Route::Direct(_))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `out = x M` for a single row vector `x` (equivalently `M x`).
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.op.laplacian_apply(x, out);
        for ((o, xi), m) in out.iter_mut().zip(x).zip(&self.diag) {
            *o = m * xi + self.rho * *o;
        }
    }

    /// Solves `U M = rhs` (`p x n`). `guess` seeds the iterative route.
    pub fn solve(&self, rhs: &DMatrix<f64>, guess: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
        let (p, n) = rhs.shape();
        if n != self.diag.len() {
            return Err(Error::shape(format!(
                "right-hand side has {n} columns, system has {}",
                self.diag.len()
            )));
        }
        let mut out = DMatrix::zeros(p, n);
        let mut row = vec![0.0; n];
        let mut work = vec![0.0; n];
        for k in 0..p {
            for i in 0..n {
                row[i] = rhs[(k, i)];
            }
            match &self.route {
                Route::Direct(ldl) => ldl.solve_in_place(&mut row, &mut work),
                Route::Iterative => {
                    let b = row.clone();
                    match guess {
                        Some(g) => (0..n).for_each(|i| row[i] = g[(k, i)]),
                        None => (0..n).for_each(|i| row[i] = b[i] * self.precond[i]),
                    }
                    self.conjugate_gradient(&b, &mut row)?;
                }
            }
            for i in 0..n {
                out[(k, i)] = row[i];
            }
        }
        Ok(out)
    }

    fn conjugate_gradient(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        let n = b.len();
        let precond = &self.precond;
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        let mut ax = vec![0.0; n];
        self.apply(x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let mut zv: Vec<f64> = r.iter().zip(precond).map(|(a, c)| a * c).collect();
        let mut pv = zv.clone();
        let mut rz: f64 = r.iter().zip(&zv).map(|(a, c)| a * c).sum();
        let mut ap = vec![0.0; n];
        for iteration in 0..(10 * n + 100) {
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= CG_TOLERANCE * bnorm {
                return Ok(());
            }
            self.apply(&pv, &mut ap);
            let pap: f64 = pv.iter().zip(&ap).map(|(a, c)| a * c).sum();
            if !(pap > 0.0) {
                return Err(Error::NumericalFailure {
                    iteration,
                    what: "conjugate gradient curvature".into(),
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * pv[i];
                r[i] -= alpha * ap[i];
                zv[i] = r[i] * precond[i];
            }
            let rz_new: f64 = r.iter().zip(&zv).map(|(a, c)| a * c).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                pv[i] = zv[i] + beta * pv[i];
            }
        }
        Err(Error::NumericalFailure {
            iteration: 10 * n + 100,
            what: "conjugate gradient did not reach tolerance".into(),
        })
    }
}

/// Solves the ADMM centroid system for every row of `rhs`.
pub fn admm_u_solve(system: &LaplacianSystem, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    system.solve(rhs, None)
}
