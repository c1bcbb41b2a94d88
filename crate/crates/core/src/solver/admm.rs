use std::time::Instant;

use nalgebra::DMatrix;

use super::{
    check_finite, fit_from_centroids, max_violation, penalty_from_differences, project_onto_balls, require_complete,
    residual_scale, IncidenceOperator, IterationRecord, LaplacianSystem, LinearSolver, SolverConfig, SolverMethod,
    SolverState,
};
use crate::error::{Error, Result};
use crate::problem::{dual_from_scatter, ClusteringProblem};
use crate::prox::prox_group_norm_into;

/// Primal and dual variables carried between ADMM rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmIterate {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

/// Residuals of one round: `max_l ||u_i - u_j - v_l||` and
/// `rho * max_i ||((V_new - V) A)_i||`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmRound {
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Graph-dependent ADMM data that survives changes of `gamma`: the incidence
/// operator and the factored system `diag(m) + rho A^T A`.
#[derive(Clone, Debug)]
pub struct AdmmWorkspace {
    op: IncidenceOperator,
    system: LaplacianSystem,
    node_weights: Vec<f64>,
    rho: f64,
}

impl AdmmWorkspace {
    pub fn new(problem: &ClusteringProblem, rho: f64, linear_solver: LinearSolver) -> Result<Self> {
        let op = IncidenceOperator::new(problem.graph());
        let system = LaplacianSystem::new(&op, problem.node_weights(), rho, linear_solver)?;
        Ok(Self {
            op,
            system,
            node_weights: problem.node_weights().to_vec(),
            rho,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn system(&self) -> &LaplacianSystem {
        &self.system
    }

    /// `U = X`, `V = X A^T`, `Z = 0`: the fixed point for `gamma = 0`.
    pub fn cold_start(&self, x: &DMatrix<f64>) -> AdmmIterate {
        AdmmIterate {
            u: x.clone(),
            v: self.op.differences(x),
            z: DMatrix::zeros(x.nrows(), self.op.num_edges()),
        }
    }

    /// One `(U, V, Z)` round with dual-ball radii `radii` (`gamma * w_l`).
    pub fn round(&self, x: &DMatrix<f64>, radii: &[f64], it: &mut AdmmIterate) -> Result<AdmmRound> {
        let rho = self.rho;
        let p = x.nrows();
        // U M = X diag(m) + (rho V - Z) A
        let mut w = it.v.clone() * rho;
        w -= &it.z;
        let mut rhs = self.op.scatter(&w);
        for (i, m) in self.node_weights.iter().enumerate() {
            let mut col = rhs.column_mut(i);
            col.axpy(*m, &x.column(i), 1.0);
        }
        it.u = self.system.solve(&rhs, Some(&it.u))?;
        let d = self.op.differences(&it.u);

        // V: group soft-threshold of d + z / rho; Z: dual ascent on d - v.
        let mut y = it.z.clone() / rho;
        y += &d;
        let mut v_new = DMatrix::zeros(p, self.op.num_edges());
        let mut primal: f64 = 0.0;
        for (l, r) in radii.iter().enumerate() {
            prox_group_norm_into(y.column(l), r / rho, v_new.column_mut(l));
            primal = primal.max((d.column(l) - v_new.column(l)).norm());
        }
        let mut change = v_new.clone();
        change -= &it.v;
        let dual = rho
            * self
                .op
                .scatter(&change)
                .column_iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        let mut step = d;
        step -= &v_new;
        it.z += step * rho;
        it.v = v_new;
        Ok(AdmmRound {
            primal_residual: primal,
            dual_residual: dual,
        })
    }
}

/// ADMM on the split problem with a cached factorization of `M`.
///
/// The iteration stops once the primal and dual residuals and the duality gap
/// are all within tolerance. `Z` stays inside its balls after every round, so
/// the gap is always defined.
pub fn solve_admm(
    problem: &ClusteringProblem,
    config: &SolverConfig,
    warm_start: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
) -> Result<SolverState> {
    config.validate()?;
    require_complete(problem)?;
    if config.method != SolverMethod::Admm {
        return Err(Error::invalid("solve_admm called with a non-ADMM method"));
    }
    let ws = AdmmWorkspace::new(problem, config.rho, config.linear_solver)?;
    solve_admm_with(problem, config, &ws, warm_start)
}

/// [`solve_admm`] reusing a workspace built for the same graph and node weights.
pub(crate) fn solve_admm_with(
    problem: &ClusteringProblem,
    config: &SolverConfig,
    ws: &AdmmWorkspace,
    warm_start: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
) -> Result<SolverState> {
    let x = problem.data().values();
    let radii = problem.radii();
    let weights: Vec<f64> = problem.graph().weights().collect();
    let mut it = ws.cold_start(x);
    if let Some((v, z)) = warm_start {
        if v.shape() != it.v.shape() {
            return Err(Error::shape("warm-start V does not match the edge count"));
        }
        it.v = v.clone();
        it.z = project_onto_balls(problem, z)?;
    }
    let res_tol = config.residual_tolerance * residual_scale(problem);
    let mut za = DMatrix::zeros(problem.dim(), problem.len());
    let mut history = Vec::new();
    let start = Instant::now();
    let mut iteration = 0;
    let (mut round, mut gap, mut dual, mut primal, mut converged);
    loop {
        iteration += 1;
        round = ws.round(x, &radii, &mut it)?;
        check_finite(&it.u, iteration, "centroids")?;
        ws.op.scatter_into(&it.z, &mut za);
        dual = dual_from_scatter(&za, x, problem.node_weights());
        let d = ws.op.differences(&it.u);
        primal = fit_from_centroids(&it.u, x, problem.node_weights())
            + problem.gamma() * penalty_from_differences(&d, &weights);
        gap = primal - dual;
        if config.record_history {
            history.push(IterationRecord {
                dual_objective: dual,
                primal_objective: primal,
                duality_gap: gap,
                max_dual_violation: max_violation(&it.z, &radii),
            });
        }
        converged = round.primal_residual <= res_tol
            && round.dual_residual <= res_tol
            && gap <= config.gap_tolerance * primal.abs().max(1.0);
        if converged || iteration >= config.max_iterations {
            break;
        }
    }
    let loop_seconds = start.elapsed().as_secs_f64();
    Ok(SolverState {
        method: SolverMethod::Admm,
        u: it.u,
        v: it.v,
        z: it.z,
        iterations: iteration,
        primal_residual: round.primal_residual,
        dual_residual: round.dual_residual,
        duality_gap: gap.max(0.0),
        dual_objective: dual,
        primal_objective: primal,
        converged,
        history,
        loop_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataMatrix;
    use crate::graph::{Edge, GraphProvenance, WeightGraph};

    fn two_point(gamma: f64) -> ClusteringProblem {
        let data = DataMatrix::new(DMatrix::from_row_slice(1, 2, &[0.0, 4.0])).unwrap();
        let g = WeightGraph::new(2, vec![Edge { i: 0, j: 1, w: 1.0 }], GraphProvenance::Custom).unwrap();
        ClusteringProblem::new(data, g, gamma).unwrap()
    }

    fn admm() -> SolverConfig {
        SolverConfig::new(SolverMethod::Admm)
    }

    #[test]
    fn gamma_zero_returns_data_after_first_update() {
        let s = solve_admm(&two_point(0.0), &admm(), None).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        assert_eq!(s.u, DMatrix::from_row_slice(1, 2, &[0.0, 4.0]));
    }

    #[test]
    fn two_point_closed_form() {
        let cfg = admm().with_tolerance(1e-12);
        let s = solve_admm(&two_point(1.0), &cfg, None).unwrap();
        assert!(s.converged);
        assert!((s.u[(0, 0)] - 1.0).abs() < 1e-10 && (s.u[(0, 1)] - 3.0).abs() < 1e-10);
        let s = solve_admm(&two_point(3.0), &cfg, None).unwrap();
        assert!((s.u[(0, 0)] - 2.0).abs() < 1e-10 && (s.u[(0, 1)] - 2.0).abs() < 1e-10);
        assert_eq!(s.v[(0, 0)], 0.0);
    }

    #[test]
    fn duals_stay_feasible_every_round() {
        let pr = two_point(1.0);
        let ws = AdmmWorkspace::new(&pr, 0.5, LinearSolver::Direct).unwrap();
        let x = pr.data().values();
        let mut it = ws.cold_start(x);
        for _ in 0..50 {
            ws.round(x, &pr.radii(), &mut it).unwrap();
            assert!(it.z[(0, 0)].abs() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn warm_start_from_solution_converges_at_once() {
        let cfg = admm().with_tolerance(1e-12);
        let pr = two_point(1.0);
        let s = solve_admm(&pr, &cfg, None).unwrap();
        let again = solve_admm(&pr, &cfg, Some((&s.v, &s.z))).unwrap();
        assert!(again.converged);
        assert!(again.iterations <= 2);
        assert!(solve_admm(&pr, &SolverConfig::default(), None).is_err());
    }
}
