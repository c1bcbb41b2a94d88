use std::time::Instant;

use nalgebra::DMatrix;

use super::{
    check_finite, fit_from_centroids, max_violation, penalty_from_differences, project_onto_balls, require_complete,
    residual_scale, IncidenceOperator, IterationRecord, SolverConfig, SolverMethod, SolverState, StepRule,
};
use crate::error::{Error, Result};
use crate::problem::{dual_from_scatter, ClusteringProblem};
use crate::prox::project_dual_ball_in_place;

/// Everything the dual determines at one `Z`.
struct DualPoint {
    u: DMatrix<f64>,
    d: DMatrix<f64>,
    dual: f64,
}

struct Evaluator<'a> {
    op: IncidenceOperator,
    x: &'a DMatrix<f64>,
    m: &'a [f64],
    za: DMatrix<f64>,
}

impl Evaluator<'_> {
    fn eval(&mut self, z: &DMatrix<f64>) -> DualPoint {
        self.op.scatter_into(z, &mut self.za);
        let dual = dual_from_scatter(&self.za, self.x, self.m);
        let mut u = self.x.clone();
        let p = u.nrows();
        for (i, m) in self.m.iter().enumerate() {
            let zi = &self.za.as_slice()[i * p..(i + 1) * p];
            for (o, v) in u.as_mut_slice()[i * p..(i + 1) * p].iter_mut().zip(zi) {
                *o -= v / m;
            }
        }
        let d = self.op.differences(&u);
        DualPoint { u, d, dual }
    }
}

/// `out = P_C(z + t d)`; returns `max_l ||out_l - z_l|| / t`.
fn projected_step(z: &DMatrix<f64>, d: &DMatrix<f64>, t: f64, radii: &[f64], out: &mut DMatrix<f64>) -> f64 {
    out.copy_from(z);
    for (o, v) in out.as_mut_slice().iter_mut().zip(d.as_slice()) {
        *o += t * v;
    }
    let mut r: f64 = 0.0;
    for (l, radius) in radii.iter().enumerate() {
        project_dual_ball_in_place(out.column_mut(l), *radius);
        r = r.max((out.column(l) - z.column(l)).norm());
    }
    r / t
}

/// AMA: proximal gradient ascent on the dual, with optional momentum.
///
/// Each iteration evaluates `U = X - Z A diag(1/m)`, the dual value, the gap,
/// and the dual step residual `max_l ||P(z_l + t d_l) - z_l|| / t`. The solve
/// stops at the first iterate where both the gap and the residual are within
/// tolerance. The accelerated variant falls back to the plain step whenever the
/// momentum step would lower the dual, so the dual sequence is nondecreasing
/// in both variants.
pub fn solve_ama(
    problem: &ClusteringProblem,
    config: &SolverConfig,
    warm_start: Option<&DMatrix<f64>>,
) -> Result<SolverState> {
    config.validate()?;
    require_complete(problem)?;
    let accelerated = match config.method {
        SolverMethod::Ama => false,
        SolverMethod::AmaAccelerated => true,
        SolverMethod::Admm => return Err(Error::invalid("solve_ama called with method admm")),
    };
    let (p, ne) = (problem.dim(), problem.graph().num_edges());
    let radii = problem.radii();
    let weights: Vec<f64> = problem.graph().weights().collect();
    let op = IncidenceOperator::new(problem.graph());
    let step = match config.step_rule {
        StepRule::Fixed => config.rho,
        StepRule::AutoSpectral => {
            let lambda = op.spectral_norm_sq(problem.node_weights());
            if lambda > 0.0 {
                0.95 / lambda
            } else {
                1.0
            }
        }
    };
    let gap_scale_tol = config.gap_tolerance;
    let res_tol = config.residual_tolerance * residual_scale(problem);

    let mut z = match warm_start {
        Some(w) => project_onto_balls(problem, w)?,
        None => DMatrix::zeros(p, ne),
    };
    let mut ev = Evaluator {
        op,
        x: problem.data().values(),
        m: problem.node_weights(),
        za: DMatrix::zeros(p, problem.len()),
    };
    let mut history = Vec::new();
    let mut cur = ev.eval(&z);
    let mut z_prev = z.clone();
    let mut theta = 1.0_f64;
    let mut plain = DMatrix::zeros(p, ne);
    let mut candidate = DMatrix::zeros(p, ne);
    let start = Instant::now();

    let mut iteration = 0;
    let (mut gap, mut primal, mut residual, mut converged);
    loop {
        iteration += 1;
        check_finite(&cur.u, iteration, "centroids")?;
        primal = fit_from_centroids(&cur.u, ev.x, ev.m) + problem.gamma() * penalty_from_differences(&cur.d, &weights);
        gap = primal - cur.dual;
        residual = projected_step(&z, &cur.d, step, &radii, &mut plain);
        if config.record_history {
            history.push(IterationRecord {
                dual_objective: cur.dual,
                primal_objective: primal,
                duality_gap: gap,
                max_dual_violation: max_violation(&z, &radii),
            });
        }
        converged = gap <= gap_scale_tol * primal.abs().max(1.0) && residual <= res_tol;
        if converged || iteration >= config.max_iterations {
            break;
        }

        let mut next = None;
        if accelerated {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;
            if beta > 0.0 {
                let mut y = &z + (&z - &z_prev) * beta;
                // y need not be feasible; the dual gradient is still well defined there.
                let at_y = ev.eval(&y);
                projected_step(&y, &at_y.d, step, &radii, &mut candidate);
                let trial = ev.eval(&candidate);
                if trial.dual >= cur.dual {
                    theta = theta_next;
                    std::mem::swap(&mut y, &mut candidate);
                    next = Some((y, trial));
                } else {
                    theta = 1.0;
                }
            } else {
                theta = theta_next;
            }
        }
        let (z_new, point) = match next {
            Some(pair) => pair,
            None => {
                let point = ev.eval(&plain);
                (plain.clone(), point)
            }
        };
        z_prev = std::mem::replace(&mut z, z_new);
        cur = point;
    }
    let loop_seconds = start.elapsed().as_secs_f64();

    // Split variables: the AMA v-update, prox of the penalty at d + z / t.
    let mut v = z.clone();
    v += &cur.d * step;
    v -= &plain;
    v /= step;

    Ok(SolverState {
        method: config.method,
        u: cur.u,
        v,
        z,
        iterations: iteration,
        primal_residual: residual,
        dual_residual: 0.0,
        duality_gap: gap.max(0.0),
        dual_objective: cur.dual,
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

    #[test]
    fn gamma_zero_converges_immediately() {
        let s = solve_ama(&two_point(0.0), &SolverConfig::default(), None).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        assert_eq!(s.u, DMatrix::from_row_slice(1, 2, &[0.0, 4.0]));
        assert_eq!(s.z, DMatrix::zeros(1, 1));
    }

    #[test]
    fn two_point_closed_form() {
        for method in [SolverMethod::Ama, SolverMethod::AmaAccelerated] {
            let cfg = SolverConfig::new(method).with_tolerance(1e-12);
            let s = solve_ama(&two_point(1.0), &cfg, None).unwrap();
            assert!(s.converged);
            assert!((s.u[(0, 0)] - 1.0).abs() < 1e-10 && (s.u[(0, 1)] - 3.0).abs() < 1e-10);
            let s = solve_ama(&two_point(3.0), &cfg, None).unwrap();
            assert!((s.u[(0, 0)] - 2.0).abs() < 1e-10 && (s.u[(0, 1)] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let cfg = SolverConfig::default().with_tolerance(1e-15).with_max_iterations(1);
        let s = solve_ama(&two_point(1.0), &cfg, None).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn warm_start_is_projected() {
        let warm = DMatrix::from_row_slice(1, 1, &[-50.0]);
        let cfg = SolverConfig::default().with_tolerance(1e-12);
        let s = solve_ama(&two_point(1.0), &cfg, Some(&warm)).unwrap();
        assert!(s.converged);
        assert!((s.z[(0, 0)] + 1.0).abs() < 1e-10);
        assert!(solve_ama(&two_point(1.0), &cfg, Some(&DMatrix::zeros(2, 1))).is_err());
    }

    #[test]
    fn history_is_monotone() {
        let data = DataMatrix::new(DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 5.0, 6.0, 0.0, 1.0, 0.0, 2.0])).unwrap();
        let edges = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| Edge { i, j, w: 1.0 }))
            .collect();
        let g = WeightGraph::new(4, edges, GraphProvenance::Full).unwrap();
        let pr = ClusteringProblem::new(data, g, 0.7).unwrap();
        for method in [SolverMethod::Ama, SolverMethod::AmaAccelerated] {
            let s = solve_ama(&pr, &SolverConfig::new(method).with_history(), None).unwrap();
            assert!(s.converged);
            for w in s.history.windows(2) {
                assert!(w[1].dual_objective >= w[0].dual_objective - 1e-12);
            }
            assert!(s.history.iter().all(|h| h.max_dual_violation <= 1e-12));
        }
    }
}
