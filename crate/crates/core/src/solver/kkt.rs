use serde::{Deserialize, Serialize};

use super::{IncidenceOperator, SolverState};
use crate::data::median_pairwise_distance;
use crate::error::Result;
use crate::problem::ClusteringProblem;

/// Optimality diagnostics for a state.
///
/// `stationarity` is `max_i ||m_i (u_i - x_i) + (Z~ A)_i||` where `Z~` takes
/// the forced subgradient `gamma w_l d_l / ||d_l||` on unfused edges and the
/// state's (projected) `z_l` on fused ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub duality_gap: f64,
    /// `max_l (||z_l|| - gamma w_l)`, zero when feasible.
    pub dual_violation: f64,
    pub stationarity: f64,
    /// `max_l ||z_l - Z~_l||`: disagreement between the state's duals and the
    /// subgradients the centroids require.
    pub complementarity: f64,
    pub optimal: bool,
}

/// Edges with `||u_i - u_j|| <= fusion_tol * median pairwise distance` count as fused.
pub fn kkt_report(
    problem: &ClusteringProblem,
    state: &SolverState,
    tolerance: f64,
    fusion_tol: f64,
) -> Result<KktReport> {
    let op = IncidenceOperator::new(problem.graph());
    let x = problem.data().values();
    let d = op.differences(&state.u);
    let radii = problem.radii();
    let scale = median_pairwise_distance(x).max(f64::MIN_POSITIVE);
    let mut implied = state.z.clone();
    let mut violation: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    for (l, r) in radii.iter().enumerate() {
        let zn = state.z.column(l).norm();
        violation = violation.max(zn - r);
        let dn = d.column(l).norm();
        if dn > fusion_tol * scale {
            implied.set_column(l, &(d.column(l) * (r / dn)));
        } else if zn > *r {
            implied.column_mut(l).scale_mut(r / zn);
        }
        complementarity = complementarity.max((state.z.column(l) - implied.column(l)).norm());
    }
    let za = op.scatter(&implied);
    let mut stationarity: f64 = 0.0;
    for (i, m) in problem.node_weights().iter().enumerate() {
        let g = (state.u.column(i) - x.column(i)) * *m + za.column(i);
        stationarity = stationarity.max(g.norm());
    }
    let gap = problem.objective_value(&state.u)? - problem.dual_value(&implied)?;
    let gap = gap.max(0.0);
    let optimal =
        gap <= tolerance && violation <= tolerance && stationarity <= tolerance && complementarity <= tolerance;
    Ok(KktReport {
        duality_gap: gap,
        dual_violation: violation.max(0.0),
        stationarity,
        complementarity,
        optimal,
    })
}
