use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::WeightGraph;
use crate::problem::ClusteringProblem;
use crate::solver::{self, SolverConfig, SolverState, WarmStart};

#[derive(Clone, Debug, PartialEq)]
pub struct MissingOptions {
    pub solver: SolverConfig,
    /// Stop when the relative change of the observed-entry objective falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Allowed increase of the objective between outer iterations, relative
    /// to `max(1, |objective|)`, before reporting [`Error::MmViolation`].
    pub slack: f64,
}

impl Default for MissingOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default().with_tolerance(1e-10),
            tolerance: 1e-8,
            max_iterations: 1000,
            slack: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MissingSolution {
    /// Inner solver state of the last accepted outer iteration.
    pub state: SolverState,
    /// Data with the missing entries filled from the final centroids.
    pub imputed: DMatrix<f64>,
    /// Observed-entry objective, starting at the initial imputation.
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MissingSolution {
    pub fn u(&self) -> &DMatrix<f64> {
        &self.state.u
    }
}

fn fill(data: &DataMatrix, u: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = data.values().clone();
    if let Some(mask) = data.mask() {
        for (k, o) in mask.iter().enumerate() {
            if !o {
                x[k] = u[k];
            }
        }
    }
    x
}

/// Minimizes the objective restricted to observed entries by
/// majorization-minimization: fill the missing entries from the current
/// centroids, solve the complete-data problem, repeat.
///
/// Missing entries start at their feature's observed mean. An outer step whose
/// complete-data solve fails to lower the surrogate is not taken and ends the
/// loop, so the recorded objectives are non-increasing up to rounding; a larger
/// increase is reported as [`Error::MmViolation`].
pub fn solve_missing(
    data: &DataMatrix,
    graph: &WeightGraph,
    gamma: f64,
    options: &MissingOptions,
) -> Result<MissingSolution> {
    if !(options.tolerance > 0.0) || options.max_iterations == 0 {
        return Err(Error::invalid("MM tolerance must be positive and max_iterations >= 1"));
    }
    let masked = ClusteringProblem::new(data.clone(), graph.clone(), gamma)?;
    if data.mask().is_none() {
        let state = solver::solve(&masked, &options.solver, None)?;
        let objective = state.primal_objective;
        return Ok(MissingSolution {
            imputed: data.values().clone(),
            state,
            objectives: vec![objective],
            iterations: 1,
            converged: true,
        });
    }

    let mut u = data.mean_imputed();
    let mut objective = masked.objective_value(&u)?;
    let mut objectives = vec![objective];
    let mut warm: Option<WarmStart> = None;
    let mut last: Option<SolverState> = None;
    let mut converged = false;
    for iteration in 1..=options.max_iterations {
        let filled = fill(data, &u);
        let complete = ClusteringProblem::new(DataMatrix::new(filled)?, graph.clone(), gamma)?;
        let state = solver::solve(&complete, &options.solver, warm.as_ref())?;
        if complete.objective_value(&state.u)? >= complete.objective_value(&u)? {
            // The inner solve could not improve on the current point.
            converged = true;
            if last.is_none() {
                last = Some(state);
            }
            break;
        }
        let next = masked.objective_value(&state.u)?;
        let increase = next - objective;
        if increase > options.slack * objective.abs().max(1.0) {
            return Err(Error::MmViolation { iteration, increase });
        }
        let change = (objective - next).abs() / objective.abs().max(1.0);
        objectives.push(next);
        objective = next;
        u = state.u.clone();
        warm = Some(WarmStart::from_state(&state));
        last = Some(state);
        if change <= options.tolerance {
            converged = true;
            break;
        }
    }
    let mut state = last.expect("at least one outer iteration ran");
    state.u = u;
    Ok(MissingSolution {
        imputed: fill(data, &state.u),
        iterations: objectives.len() - 1,
        objectives,
        converged,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphProvenance};

    fn complete(n: usize) -> WeightGraph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                e.push(Edge { i, j, w: 1.0 });
            }
        }
        WeightGraph::new(n, e, GraphProvenance::Full).unwrap()
    }

    fn masked_blobs() -> DataMatrix {
        let x = DMatrix::from_column_slice(2, 6, &[0.0, 0.0, 0.2, 0.1, 0.1, 0.3, 5.0, 5.0, 5.2, 5.1, 5.1, 5.3]);
        let mut mask = DMatrix::from_element(2, 6, true);
        mask[(1, 4)] = false;
        DataMatrix::with_mask(x, Some(mask)).unwrap()
    }

    #[test]
    fn fully_observed_matches_plain_solve() {
        let data = DataMatrix::new(DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 3.0])).unwrap();
        let g = complete(3);
        let opts = MissingOptions::default();
        let a = solve_missing(&data, &g, 0.3, &opts).unwrap();
        let b = solver::solve(&ClusteringProblem::new(data, g, 0.3).unwrap(), &opts.solver, None).unwrap();
        assert_eq!(a.state.u, b.u);
    }

    #[test]
    fn gamma_zero_keeps_observed_and_initial_fill() {
        let data = masked_blobs();
        let s = solve_missing(&data, &complete(6), 0.0, &MissingOptions::default()).unwrap();
        let init = data.mean_imputed();
        assert_eq!(s.imputed, init);
        for k in 0..2 {
            for i in 0..6 {
                if data.is_observed(k, i) {
                    assert_eq!(s.u()[(k, i)], data.values()[(k, i)]);
                }
            }
        }
    }

    #[test]
    fn hidden_entry_lands_in_its_cluster() {
        let data = masked_blobs();
        // Strong ties within each blob, weak ones across.
        let w: Vec<f64> = complete(6)
            .edges()
            .iter()
            .map(|e| if (e.i < 3) == (e.j < 3) { 1.0 } else { 0.01 })
            .collect();
        let g = complete(6).with_weights(&w).unwrap();
        let s = solve_missing(&data, &g, 0.05, &MissingOptions::default()).unwrap();
        assert!(s.converged);
        let v = s.imputed[(1, 4)];
        assert!((4.9..=5.4).contains(&v), "imputed {v}");
        assert!(s.objectives.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
