//! Fixed-`gamma` solvers: AMA (dual proximal gradient ascent) and ADMM.
//!
//! Both work on the split problem `min E(U)` subject to `v_l = u_i - u_j` and
//! share the state layout of [`SolverState`]: centroids `U` (`p x n`), split
//! variables `V` and duals `Z` (`p x |E|`, column `l` for edge `l`).

mod admm;
mod ama;
mod incidence;
mod kkt;
mod linsys;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ClusteringProblem;

pub use admm::{solve_admm, AdmmIterate, AdmmRound, AdmmWorkspace};
pub use ama::solve_ama;
pub use incidence::IncidenceOperator;
pub use kkt::{kkt_report, KktReport};
pub use linsys::{admm_u_solve, LaplacianSystem, LinearSolver, SparseLdl};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Ama,
    AmaAccelerated,
    Admm,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ama" => Ok(SolverMethod::Ama),
            "ama_accelerated" | "fama" => Ok(SolverMethod::AmaAccelerated),
            "admm" => Ok(SolverMethod::Admm),
            other => Err(Error::invalid(format!("unknown solver method '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// AMA step is `rho` as given.
    Fixed,
    /// AMA step is `0.95 / lambda_max`, the dual gradient's Lipschitz constant
    /// estimated by power iteration.
    AutoSpectral,
}

/// Solver settings.
///
/// Convergence is tested on scale-aware quantities: the gap against
/// `gap_tolerance * max(1, |E(U)|)` and residuals against
/// `residual_tolerance * max(1, max |x|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// ADMM penalty, or the AMA step under [`StepRule::Fixed`].
    pub rho: f64,
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub residual_tolerance: f64,
    pub step_rule: StepRule,
    pub linear_solver: LinearSolver,
    /// Keep one [`IterationRecord`] per iteration.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Ama,
            rho: 1.0,
            max_iterations: 100_000,
            gap_tolerance: 1e-8,
            residual_tolerance: 1e-8,
            step_rule: StepRule::AutoSpectral,
            linear_solver: LinearSolver::Auto,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn new(method: SolverMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    /// Same method with both tolerances set to `tol`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.gap_tolerance = tol;
        self.residual_tolerance = tol;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        if !(self.gap_tolerance > 0.0 && self.residual_tolerance > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Diagnostics of one iteration, evaluated at the iterate entering it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub duality_gap: f64,
    /// `max_l (||z_l|| - gamma w_l)`, clamped below at zero.
    pub max_dual_violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub method: SolverMethod,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    /// Wall time spent in the iteration loop.
    pub loop_seconds: f64,
}

impl SolverState {
    pub fn seconds_per_iteration(&self) -> f64 {
        self.loop_seconds / self.iterations.max(1) as f64
    }
}

/// Dual warm start; `v` is used by ADMM only.
#[derive(Clone, Debug, PartialEq)]
pub struct WarmStart {
    pub z: DMatrix<f64>,
    pub v: Option<DMatrix<f64>>,
}

impl WarmStart {
    pub fn from_state(state: &SolverState) -> Self {
        Self {
            z: state.z.clone(),
            v: Some(state.v.clone()),
        }
    }
}

/// Dispatches on `config.method`.
pub fn solve(problem: &ClusteringProblem, config: &SolverConfig, warm: Option<&WarmStart>) -> Result<SolverState> {
    match config.method {
        SolverMethod::Ama | SolverMethod::AmaAccelerated => solve_ama(problem, config, warm.map(|w| &w.z)),
        SolverMethod::Admm => {
            let pair = warm.map(|w| (w.v.as_ref(), &w.z));
            match pair {
                Some((Some(v), z)) => solve_admm(problem, config, Some((v, z))),
                Some((None, z)) => {
                    // Without V, start the splits at the differences implied by Z.
                    let u = problem.centroids_from_dual(&project_onto_balls(problem, z)?)?;
                    let v = IncidenceOperator::new(problem.graph()).differences(&u);
                    solve_admm(problem, config, Some((&v, z)))
                }
                None => solve_admm(problem, config, None),
            }
        }
    }
}

pub(crate) fn require_complete(problem: &ClusteringProblem) -> Result<()> {
    if problem.data().mask().is_some() {
        return Err(Error::invalid("data has missing entries; use selection::solve_missing"));
    }
    Ok(())
}

/// Checks a warm-start matrix's shape and projects its columns onto the dual balls.
pub(crate) fn project_onto_balls(problem: &ClusteringProblem, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let shape = (problem.dim(), problem.graph().num_edges());
    if z.shape() != shape {
        return Err(Error::shape(format!(
            "warm start is {}x{}, expected {}x{}",
            z.nrows(),
            z.ncols(),
            shape.0,
            shape.1
        )));
    }
    let mut z = z.clone();
    for (l, r) in problem.radii().into_iter().enumerate() {
        crate::prox::project_dual_ball_in_place(z.column_mut(l), r);
    }
    Ok(z)
}

pub(crate) fn check_finite(m: &DMatrix<f64>, iteration: usize, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure {
            iteration,
            what: what.to_string(),
        })
    }
}

/// `max(1, max |x|)`, the unit in which residual tolerances are read.
pub(crate) fn residual_scale(problem: &ClusteringProblem) -> f64 {
    problem.data().values().amax().max(1.0)
}

/// Penalty `sum w_l ||d_l||` from precomputed differences.
pub(crate) fn penalty_from_differences(d: &DMatrix<f64>, weights: &[f64]) -> f64 {
    d.column_iter().zip(weights).map(|(c, w)| w * c.norm()).sum()
}

pub(crate) fn fit_from_centroids(u: &DMatrix<f64>, x: &DMatrix<f64>, node_weights: &[f64]) -> f64 {
    let p = x.nrows();
    let (us, xs) = (u.as_slice(), x.as_slice());
    let mut total = 0.0;
    for (i, m) in node_weights.iter().enumerate() {
        let sq: f64 = us[i * p..(i + 1) * p]
            .iter()
            .zip(&xs[i * p..(i + 1) * p])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += m * sq;
    }
    0.5 * total
}

pub(crate) fn max_violation(z: &DMatrix<f64>, radii: &[f64]) -> f64 {
    z.column_iter()
        .zip(radii)
        .map(|(c, r)| c.norm() - r)
        .fold(0.0, f64::max)
}
