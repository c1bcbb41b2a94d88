//! Solution paths over a `gamma` grid, fusion detection, and dendrograms.

mod bounds;
mod compress;
mod dendrogram;
mod export;
mod grid;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{median_pairwise_distance, Partition};
use crate::error::{Error, Result};
use crate::graph::WeightGraph;
use crate::problem::ClusteringProblem;
use crate::solver::{self, AdmmWorkspace, SolverConfig, SolverState, WarmStart};

pub use compress::{compress, CompressedProblem};
pub use dendrogram::{Dendrogram, DendrogramNode};
pub use export::{write_labels_csv, write_path_csv};
pub use grid::{geometric, GridSpec};

/// Default fusion tolerance, relative to the median pairwise data distance.
pub const FUSION_TOLERANCE: f64 = 1e-6;

/// Absolute threshold below which a centroid difference counts as a fusion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionRule {
    pub tolerance: f64,
    pub scale: f64,
}

impl FusionRule {
    pub fn for_data(x: &DMatrix<f64>, tolerance: f64) -> Self {
        Self {
            tolerance,
            scale: median_pairwise_distance(x),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.tolerance * self.scale
    }

    /// Components of the edges whose centroid difference is within the
    /// threshold or whose split variable is exactly zero.
    pub fn detect(&self, u: &DMatrix<f64>, v: Option<&DMatrix<f64>>, graph: &WeightGraph) -> Partition {
        let thr = self.threshold();
        let mut ds = crate::graph::DisjointSets::new(graph.num_nodes());
        for (l, e) in graph.edges().iter().enumerate() {
            let split_zero = v.is_some_and(|v| v.column(l).iter().all(|&c| c == 0.0));
            if split_zero || (u.column(e.i) - u.column(e.j)).norm() <= thr {
                ds.union(e.i, e.j);
            }
        }
        ds.partition()
    }
}

/// Fusion partition of a solved state with threshold `tolerance * median pairwise distance`.
pub fn detect_fusions(state: &SolverState, problem: &ClusteringProblem, tolerance: f64) -> Partition {
    FusionRule::for_data(problem.data().values(), tolerance).detect(&state.u, Some(&state.v), problem.graph())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// Solve to tolerance at each point; compress fused blocks so fusions persist.
    #[default]
    Exact,
    /// Solve to tolerance on the full problem with no compression.
    Strict,
    /// One warm-started ADMM round per grid point.
    Carp,
}

impl std::str::FromStr for PathMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(PathMode::Exact),
            "strict" => Ok(PathMode::Strict),
            "carp" => Ok(PathMode::Carp),
            other => Err(Error::invalid(format!("unknown path mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathOptions {
    pub mode: PathMode,
    pub solver: SolverConfig,
    pub fusion_tolerance: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            mode: PathMode::Exact,
            solver: SolverConfig::default(),
            fusion_tolerance: FUSION_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub gamma: f64,
    pub partition: Partition,
    /// Full `p x n` centroid matrix.
    pub u: DMatrix<f64>,
    /// Distinct centroids, `p x K`, column `k` for block `k`.
    pub centroids: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub duality_gap: f64,
}

impl Snapshot {
    pub fn num_clusters(&self) -> usize {
        self.partition.num_clusters()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathTruncation {
    pub gamma: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPath {
    pub mode: PathMode,
    pub snapshots: Vec<Snapshot>,
    /// Set when a solve failed; snapshots stop before the failing `gamma`.
    pub truncated: Option<PathTruncation>,
}

impl ClusterPath {
    pub fn gammas(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.gamma).collect()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Fails with [`Error::PathTruncated`] if the path was cut short.
    pub fn complete(self) -> Result<Self> {
        match &self.truncated {
            Some(t) => Err(Error::PathTruncated {
                gamma: t.gamma,
                source: Box::new(Error::InvalidData(t.message.clone())),
            }),
            None => Ok(self),
        }
    }

    pub fn dendrogram(&self) -> Result<Dendrogram> {
        Dendrogram::from_path(self)
    }
}

fn snapshot(
    original: &ClusteringProblem,
    gamma: f64,
    u: DMatrix<f64>,
    partition: Partition,
    state: &SolverState,
) -> Result<Snapshot> {
    let centroids = DMatrix::from_fn(original.dim(), partition.num_clusters(), |k, b| {
        let first = partition.labels().iter().position(|&l| l == b).unwrap();
        u[(k, first)]
    });
    let objective = original.with_gamma(gamma)?.objective_value(&u)?;
    Ok(Snapshot {
        gamma,
        partition,
        u,
        centroids,
        objective,
        iterations: state.iterations,
        converged: state.converged,
        duality_gap: state.duality_gap,
    })
}

/// Partition-constant centroids: fused blocks share their member mean.
fn snap_to_blocks(u: &DMatrix<f64>, partition: &Partition, weights: &[f64]) -> DMatrix<f64> {
    let k = partition.num_clusters();
    let mut sums = DMatrix::zeros(u.nrows(), k);
    let mut mass = vec![0.0; k];
    for (i, &l) in partition.labels().iter().enumerate() {
        let mut col = sums.column_mut(l);
        col.axpy(weights[i], &u.column(i), 1.0);
        mass[l] += weights[i];
    }
    for (l, m) in mass.iter().enumerate() {
        sums.column_mut(l).scale_mut(1.0 / m);
    }
    sums.select_columns(partition.labels())
}

/// Solves along `grid` (nonnegative, strictly increasing); `problem.gamma()` is ignored.
pub fn compute_path(problem: &ClusteringProblem, grid: &[f64], options: &PathOptions) -> Result<ClusterPath> {
    GridSpec::explicit(grid.to_vec())?;
    options.solver.validate()?;
    let rule = FusionRule::for_data(problem.data().values(), options.fusion_tolerance);
    match options.mode {
        PathMode::Carp => carp_path(problem, grid, options, rule),
        mode => exact_path(problem, grid, options, rule, mode == PathMode::Exact),
    }
}

fn exact_path(
    problem: &ClusteringProblem,
    grid: &[f64],
    options: &PathOptions,
    rule: FusionRule,
    compress_fused: bool,
) -> Result<ClusterPath> {
    let mode = if compress_fused {
        PathMode::Exact
    } else {
        PathMode::Strict
    };
    let mut current = problem.clone();
    // Original observation -> node of `current`.
    let mut membership = Partition::singletons(problem.len());
    let mut warm: Option<WarmStart> = None;
    let mut snapshots = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let pr = current.with_gamma(gamma)?;
        let state = match solver::solve(&pr, &options.solver, warm.as_ref()) {
            Ok(s) => s,
            Err(e) => {
                return Ok(ClusterPath {
                    mode,
                    snapshots,
                    truncated: Some(PathTruncation {
                        gamma,
                        message: e.to_string(),
                    }),
                })
            }
        };
        let local = rule.detect(&state.u, Some(&state.v), pr.graph());
        let u_local = snap_to_blocks(&state.u, &local, pr.node_weights());
        let u_full = u_local.select_columns(membership.labels());
        let partition = membership.coarsen(&local);
        snapshots.push(snapshot(problem, gamma, u_full, partition, &state)?);

        if compress_fused && local.num_clusters() < pr.len() {
            let c = compress(&pr, &local)?;
            warm = Some(WarmStart {
                z: c.aggregate_duals(&state.z),
                v: None,
            });
            membership = membership.coarsen(&local);
            current = c.problem;
        } else {
            warm = Some(WarmStart::from_state(&state));
        }
    }
    Ok(ClusterPath {
        mode,
        snapshots,
        truncated: None,
    })
}

fn carp_path(
    problem: &ClusteringProblem,
    grid: &[f64],
    options: &PathOptions,
    rule: FusionRule,
) -> Result<ClusterPath> {
    solver::require_complete(problem)?;
    let ws = AdmmWorkspace::new(problem, options.solver.rho, options.solver.linear_solver)?;
    let x = problem.data().values();
    let weights: Vec<f64> = problem.graph().weights().collect();
    let mut it = ws.cold_start(x);
    let mut snapshots = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let radii: Vec<f64> = weights.iter().map(|w| gamma * w).collect();
        let round = ws.round(x, &radii, &mut it)?;
        let partition = rule.detect(&it.u, Some(&it.v), problem.graph());
        let state = SolverState {
            method: solver::SolverMethod::Admm,
            u: it.u.clone(),
            v: it.v.clone(),
            z: it.z.clone(),
            iterations: 1,
            primal_residual: round.primal_residual,
            dual_residual: round.dual_residual,
            duality_gap: f64::NAN,
            dual_objective: f64::NAN,
            primal_objective: f64::NAN,
            converged: false,
            history: Vec::new(),
            loop_seconds: 0.0,
        };
        snapshots.push(snapshot(problem, gamma, it.u.clone(), partition, &state)?);
    }
    Ok(ClusterPath {
        mode: PathMode::Carp,
        snapshots,
        truncated: None,
    })
}

/// Smallest grid-free `gamma` (within a factor 2) at which everything fuses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaMax {
    pub value: f64,
    /// One value per connected component, in component order.
    pub per_component: Vec<f64>,
    /// `false` when the graph is disconnected; `value` is then the largest
    /// component value and full fusion never happens.
    pub connected: bool,
}

/// Finds `gamma` with one cluster at `gamma` and several at `gamma / 2`, per
/// connected component, by doubling then halving inside a certified bracket.
/// On a tree the bracket is tight and the exact threshold is returned.
pub fn gamma_max(problem: &ClusteringProblem, options: &PathOptions) -> Result<GammaMax> {
    let rule = FusionRule::for_data(problem.data().values(), options.fusion_tolerance);
    let parts = problem.split_components()?;
    let mut per_component = Vec::with_capacity(parts.len());
    for (_, sub) in &parts {
        per_component.push(component_gamma_max(sub, &options.solver, rule)?);
    }
    let value = per_component.iter().copied().fold(0.0, f64::max);
    Ok(GammaMax {
        value,
        per_component,
        connected: parts.len() <= 1,
    })
}

/// Returned thresholds are nudged this far past the fusion point: exactly at
/// it the fused dual touches its constraint boundary and iterative solvers
/// approach the mean only sublinearly.
const FUSION_MARGIN: f64 = 1.0 + 1e-3;

fn component_gamma_max(problem: &ClusteringProblem, config: &SolverConfig, rule: FusionRule) -> Result<f64> {
    if problem.len() < 2 {
        return Ok(0.0);
    }
    let fused = |gamma: f64, warm: Option<&WarmStart>| -> Result<(bool, WarmStart)> {
        let pr = problem.with_gamma(gamma)?;
        let state = solver::solve(&pr, config, warm)?;
        let k = rule.detect(&state.u, Some(&state.v), pr.graph()).num_clusters();
        Ok((k == 1, WarmStart::from_state(&state)))
    };
    let (lower, upper) = bounds::fusion_bracket(problem);
    if upper == 0.0 || upper <= lower * (1.0 + 1e-12) {
        return Ok(upper * FUSION_MARGIN);
    }
    // Doubling from the certified lower bound; `upper` is known to fuse, so the
    // search stops there even when the solver cannot resolve the fused state.
    let mut gamma = lower;
    let (mut ok, mut warm) = fused(gamma, None)?;
    while !ok {
        gamma *= 2.0;
        if gamma >= upper {
            gamma = upper;
            break;
        }
        (ok, warm) = fused(gamma, Some(&warm))?;
    }
    while gamma / 2.0 >= lower {
        let (half_ok, _) = fused(gamma / 2.0, None)?;
        if !half_ok {
            break;
        }
        gamma /= 2.0;
    }
    Ok(gamma * FUSION_MARGIN)
}

/// Convenience: resolves `grid` (computing `gamma_max` when needed) and runs [`compute_path`].
pub fn compute_path_spec(problem: &ClusteringProblem, grid: &GridSpec, options: &PathOptions) -> Result<ClusterPath> {
    let gmax = if grid.needs_gamma_max() {
        Some(gamma_max(problem, options)?.value)
    } else {
        None
    };
    compute_path(problem, &grid.resolve(gmax)?, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataMatrix;
    use crate::graph::{Edge, GraphProvenance};

    fn two_point() -> ClusteringProblem {
        let data = DataMatrix::new(DMatrix::from_row_slice(1, 2, &[0.0, 4.0])).unwrap();
        let g = WeightGraph::new(2, vec![Edge { i: 0, j: 1, w: 1.0 }], GraphProvenance::Custom).unwrap();
        ClusteringProblem::new(data, g, 0.0).unwrap()
    }

    fn opts(mode: PathMode) -> PathOptions {
        PathOptions {
            mode,
            solver: SolverConfig::default().with_tolerance(1e-12),
            ..PathOptions::default()
        }
    }

    #[test]
    fn zero_grid_gives_singletons() {
        let p = compute_path(&two_point(), &[0.0], &opts(PathMode::Exact)).unwrap();
        assert_eq!(p.snapshots[0].num_clusters(), 2);
        assert_eq!(p.snapshots[0].u, DMatrix::from_row_slice(1, 2, &[0.0, 4.0]));
    }

    #[test]
    fn two_point_fuses_at_half_distance() {
        let grid = geometric(0.5, 3.5, 15);
        for mode in [PathMode::Exact, PathMode::Strict] {
            let p = compute_path(&two_point(), &grid, &opts(mode)).unwrap();
            for s in &p.snapshots {
                let want = if s.gamma >= 2.0 { 1 } else { 2 };
                assert_eq!(s.num_clusters(), want, "gamma {}", s.gamma);
            }
        }
        let at = compute_path(&two_point(), &[1.0, 2.0], &opts(PathMode::Exact)).unwrap();
        assert_eq!(at.snapshots[1].num_clusters(), 1);
    }

    #[test]
    fn gamma_max_brackets_threshold() {
        let g = gamma_max(&two_point(), &opts(PathMode::Exact)).unwrap();
        assert!(g.value >= 2.0 && g.value < 4.0, "{g:?}");
        assert!(g.connected);
        let single = ClusteringProblem::new(
            DataMatrix::new(DMatrix::from_row_slice(2, 1, &[1.0, 2.0])).unwrap(),
            WeightGraph::empty(1),
            0.0,
        )
        .unwrap();
        assert_eq!(gamma_max(&single, &PathOptions::default()).unwrap().value, 0.0);
    }

    #[test]
    fn solver_failure_truncates() {
        // Masked data cannot be solved directly, so the first point fails.
        let partial = DataMatrix::with_mask(
            DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 1.0, 1.0]),
            Some(DMatrix::from_row_slice(2, 2, &[true, true, false, true])),
        )
        .unwrap();
        let g = WeightGraph::new(2, vec![Edge { i: 0, j: 1, w: 1.0 }], GraphProvenance::Custom).unwrap();
        let pr = ClusteringProblem::new(partial, g, 0.0).unwrap();
        let p = compute_path(&pr, &[0.5, 1.0], &opts(PathMode::Exact)).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.truncated.as_ref().unwrap().gamma, 0.5);
        assert!(matches!(p.complete(), Err(Error::PathTruncated { .. })));
    }

    #[test]
    fn carp_runs_one_round_per_point() {
        let grid = geometric(0.05, 3.0, 40);
        let p = compute_path(&two_point(), &grid, &opts(PathMode::Carp)).unwrap();
        assert_eq!(p.len(), 40);
        assert!(p.snapshots.iter().all(|s| s.iterations == 1));
        assert_eq!(p.snapshots.last().unwrap().num_clusters(), 1);
    }
}
