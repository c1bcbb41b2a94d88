//! Closed-form perfect-recovery intervals and empirical checks of recovery and
//! 1-Lipschitz stability.
//!
//! All bounds are expressed in the `gamma` units of [`ClusteringProblem`]
//! (fit term with a factor 1/2, each undirected edge counted once).

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::data::{DataMatrix, Partition};
use crate::error::{Error, Result};
use crate::graph::WeightGraph;
use crate::path::{geometric, FusionRule, FUSION_TOLERANCE};
use crate::problem::ClusteringProblem;
use crate::rng;
use crate::solver::{self, SolverConfig};

/// A bound that may be infinite. Serialized as a number or the string `"unbounded"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn value(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    fn lt(self, other: Bound) -> bool {
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => a < b,
            (Bound::Finite(_), Bound::Unbounded) => true,
            (Bound::Unbounded, _) => false,
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(v) => s.serialize_f64(*v),
            Bound::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryFamily {
    PanahiUniform,
    SunWeighted,
    ZhuTwoCubes,
}

/// `gamma` range over which recovery of a partition is guaranteed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecoveryInterval {
    pub lower: Bound,
    pub upper: Bound,
    pub feasible: bool,
    pub family: RecoveryFamily,
}

impl RecoveryInterval {
    fn new(lower: Bound, upper: Bound, family: RecoveryFamily) -> Self {
        Self {
            lower,
            upper,
            feasible: lower.lt(upper),
            family,
        }
    }
}

/// Per-block diameters, sizes and means, and pairwise set distances.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionGeometry {
    pub diameters: Vec<f64>,
    /// `K x K`, minimum cross-block distance, zero diagonal.
    pub set_distances: DMatrix<f64>,
    /// `p x K` block means.
    pub means: DMatrix<f64>,
    pub sizes: Vec<usize>,
}

impl PartitionGeometry {
    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn mean_distance(&self, k: usize, l: usize) -> f64 {
        (self.means.column(k) - self.means.column(l)).norm()
    }
}

pub fn partition_geometry(data: &DataMatrix, partition: &Partition) -> Result<PartitionGeometry> {
    if partition.len() != data.len() {
        return Err(Error::shape(format!(
            "partition covers {} observations, data has {}",
            partition.len(),
            data.len()
        )));
    }
    if data.mask().is_some() {
        return Err(Error::invalid("partition geometry needs fully observed data"));
    }
    let x = data.values();
    let k = partition.num_clusters();
    let labels = partition.labels();
    let mut diameters = vec![0.0; k];
    let mut set_distances = DMatrix::from_element(k, k, f64::INFINITY);
    for b in 0..k {
        set_distances[(b, b)] = 0.0;
    }
    for i in 0..x.ncols() {
        for j in (i + 1)..x.ncols() {
            let d = (x.column(i) - x.column(j)).norm();
            let (a, b) = (labels[i], labels[j]);
            if a == b {
                diameters[a] = f64::max(diameters[a], d);
            } else if d < set_distances[(a, b)] {
                set_distances[(a, b)] = d;
                set_distances[(b, a)] = d;
            }
        }
    }
    Ok(PartitionGeometry {
        diameters,
        set_distances,
        means: partition.block_means(x),
        sizes: partition.sizes(),
    })
}

/// Uniform-weight interval: `max_k D(P_k)/n_k` to `min_{k != l} |xbar_k - xbar_l| / (2n)`.
pub fn panahi_interval(geometry: &PartitionGeometry, n: usize) -> Result<RecoveryInterval> {
    let k = geometry.num_blocks();
    if k < 2 {
        return Err(Error::invalid(
            "the uniform-weight upper bound needs at least two blocks",
        ));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let lower = (0..k)
        .map(|b| geometry.diameters[b] / geometry.sizes[b] as f64)
        .fold(0.0, f64::max);
    let mut upper = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            upper = upper.min(geometry.mean_distance(a, b) / (2.0 * n as f64));
        }
    }
    Ok(RecoveryInterval::new(
        Bound::Finite(lower),
        Bound::Finite(upper),
        RecoveryFamily::PanahiUniform,
    ))
}

/// Weighted interval.
///
/// The lower bound takes, per block, the smallest `n_k w_ij - mu_ij` over
/// same-block pairs as its denominator; a nonpositive denominator makes the
/// lower bound unbounded. The upper bound is unbounded when no weight crosses blocks.
pub fn sun_interval(
    geometry: &PartitionGeometry,
    graph: &WeightGraph,
    partition: &Partition,
) -> Result<RecoveryInterval> {
    let n = graph.num_nodes();
    if partition.len() != n || geometry.total_size() != n {
        return Err(Error::shape("graph, partition and geometry disagree on n"));
    }
    let k = partition.num_clusters();
    let labels = partition.labels();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for e in graph.edges() {
        w[(e.i, e.j)] += e.w;
        w[(e.j, e.i)] += e.w;
    }
    // s[(i, l)] = total weight from observation i into block l.
    let mut s = DMatrix::<f64>::zeros(n, k);
    for i in 0..n {
        for p in 0..n {
            s[(i, labels[p])] += w[(i, p)];
        }
    }
    let blocks = partition.blocks();

    let mut lower = Bound::Finite(0.0);
    for (b, members) in blocks.iter().enumerate() {
        let nk = members.len() as f64;
        let mut denom = f64::INFINITY;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if !(w[(i, j)] > 0.0) {
                    return Err(Error::invalid(format!(
                        "observations {i} and {j} share block {b} but have no positive weight"
                    )));
                }
                let mu: f64 = (0..k).filter(|&l| l != b).map(|l| (s[(i, l)] - s[(j, l)]).abs()).sum();
                denom = denom.min(nk * w[(i, j)] - mu);
            }
        }
        if members.len() < 2 {
            continue;
        }
        if denom <= 0.0 {
            lower = Bound::Unbounded;
            break;
        }
        if let Bound::Finite(v) = lower {
            lower = Bound::Finite(v.max(geometry.diameters[b] / denom));
        }
    }

    // Total weight between blocks, and each block's outgoing share per member.
    let mut between = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        for l in 0..k {
            between[(labels[i], l)] += s[(i, l)];
        }
    }
    let outgoing: Vec<f64> = (0..k)
        .map(|b| {
            let total: f64 = (0..k).filter(|&m| m != b).map(|m| between[(b, m)]).sum();
            total / blocks[b].len() as f64
        })
        .collect();
    let mut upper = Bound::Unbounded;
    for a in 0..k {
        for b in (a + 1)..k {
            let denom = outgoing[a] + outgoing[b];
            if denom > 0.0 {
                let v = geometry.mean_distance(a, b) / denom;
                upper = match upper {
                    Bound::Finite(u) => Bound::Finite(u.min(v)),
                    Bound::Unbounded => Bound::Finite(v),
                };
            }
        }
    }
    Ok(RecoveryInterval::new(lower, upper, RecoveryFamily::SunWeighted))
}

/// Imbalance factor `2 n_other (n_k - 1) / n_k^2 + 1` multiplying block `k`'s half-edge norm.
pub fn zhu_size_factor(n_k: usize, n_other: usize) -> f64 {
    let nk = n_k as f64;
    2.0 * n_other as f64 * (nk - 1.0) / (nk * nk) + 1.0
}

/// Two-cube interval for cubes with half-edge vectors `s1`, `s2` holding
/// `n1`, `n2` points whose set distance is `distance`.
///
/// The classical statement `2/n size <= gamma <= 2/n d` is written for a fit
/// term without the factor 1/2; in this crate's units both ends are halved.
pub fn zhu_two_cubes(s1: &[f64], s2: &[f64], n1: usize, n2: usize, distance: f64) -> Result<RecoveryInterval> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("both cubes need at least one point"));
    }
    if s1.iter().chain(s2).any(|v| !(*v >= 0.0)) || !(distance >= 0.0) {
        return Err(Error::invalid("half-edges and distance must be >= 0"));
    }
    let norm = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let size = f64::max(zhu_size_factor(n1, n2) * norm(s1), zhu_size_factor(n2, n1) * norm(s2));
    let n = (n1 + n2) as f64;
    Ok(RecoveryInterval::new(
        Bound::Finite(size / n),
        Bound::Finite(distance / n),
        RecoveryFamily::ZhuTwoCubes,
    ))
}

/// Settings shared by the empirical harnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnessOptions {
    pub solver: SolverConfig,
    pub fusion_tolerance: f64,
    /// Bisection steps on each side when probing the empirical recovery range.
    pub bisection_steps: usize,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default().with_tolerance(1e-10),
            fusion_tolerance: FUSION_TOLERANCE,
            bisection_steps: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub interval: RecoveryInterval,
    pub gammas: Vec<f64>,
    pub recovered: Vec<bool>,
    pub pass_rate: f64,
    /// Smallest and largest `gamma` found to recover the partition; the
    /// interval is assumed to be contiguous.
    pub empirical_lower: Option<f64>,
    pub empirical_upper: Bound,
}

/// `count` sample points strictly inside the interval: log-spaced when the
/// lower end is positive, evenly spaced otherwise. An unbounded upper end is
/// replaced by successive doublings.
pub fn interval_samples(interval: &RecoveryInterval, count: usize) -> Result<Vec<f64>> {
    let lo = match interval.lower {
        Bound::Finite(v) if interval.feasible => v,
        _ => return Err(Error::invalid("recovery interval is infeasible")),
    };
    let t = |k: usize| (k + 1) as f64 / (count + 1) as f64;
    Ok(match interval.upper {
        Bound::Finite(hi) if lo > 0.0 => {
            let g = geometric(lo, hi, count + 2);
            g[1..=count].to_vec()
        }
        Bound::Finite(hi) => (0..count).map(|k| lo + t(k) * (hi - lo)).collect(),
        Bound::Unbounded => {
            let base = if lo > 0.0 { lo } else { 1.0 };
            (0..count).map(|k| base * 2f64.powi(k as i32 + 1)).collect()
        }
    })
}

fn recovers(problem: &ClusteringProblem, gamma: f64, truth: &Partition, options: &HarnessOptions) -> Result<bool> {
    let pr = problem.with_gamma(gamma)?;
    let state = solver::solve(&pr, &options.solver, None)?;
    let rule = FusionRule::for_data(pr.data().values(), options.fusion_tolerance);
    Ok(rule.detect(&state.u, Some(&state.v), pr.graph()) == *truth)
}

/// Solves at `trials` points inside a feasible interval and checks that the
/// fusion partition equals `truth`; then bisects outward for the widest
/// empirically recovering range.
pub fn verify_recovery(
    data: &DataMatrix,
    truth: &Partition,
    graph: &WeightGraph,
    interval: &RecoveryInterval,
    trials: usize,
    options: &HarnessOptions,
) -> Result<RecoveryReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let gammas = interval_samples(interval, trials)?;
    let problem = ClusteringProblem::new(data.clone(), graph.clone(), 0.0)?;
    let truth = Partition::from_labels(truth.labels());
    let recovered = gammas
        .par_iter()
        .map(|&g| recovers(&problem, g, &truth, options))
        .collect::<Result<Vec<bool>>>()?;
    let passes = recovered.iter().filter(|&&r| r).count();

    let hits: Vec<f64> = gammas
        .iter()
        .zip(&recovered)
        .filter(|(_, &r)| r)
        .map(|(&g, _)| g)
        .collect();
    let (empirical_lower, empirical_upper) = match (hits.first(), hits.last()) {
        (Some(&first), Some(&last)) => {
            // Halve until recovery fails, then bisect forward.
            let mut lo = first;
            let mut fail = None;
            for _ in 0..60 {
                lo /= 2.0;
                if !recovers(&problem, lo, &truth, options)? {
                    fail = Some(lo);
                    break;
                }
            }
            let lower = match fail {
                Some(f) => bisect(f, 2.0 * f, options.bisection_steps, |g| {
                    recovers(&problem, g, &truth, options)
                })?,
                None if recovers(&problem, 0.0, &truth, options)? => 0.0,
                None => lo,
            };
            // Double until recovery fails, then bisect back.
            let mut hi = last;
            let mut fail = None;
            for _ in 0..60 {
                hi *= 2.0;
                if !recovers(&problem, hi, &truth, options)? {
                    fail = Some(hi);
                    break;
                }
            }
            let upper = match fail {
                Some(f) => Bound::Finite(bisect_upper(f / 2.0, f, options.bisection_steps, |g| {
                    recovers(&problem, g, &truth, options)
                })?),
                None => Bound::Unbounded,
            };
            (Some(lower), upper)
        }
        _ => (None, Bound::Unbounded),
    };
    Ok(RecoveryReport {
        interval: *interval,
        gammas,
        recovered,
        pass_rate: passes as f64 / trials as f64,
        empirical_lower,
        empirical_upper,
    })
}

/// Smallest recovering point in `(bad, good]` to within the bisection budget.
fn bisect(mut bad: f64, mut good: f64, steps: usize, mut ok: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    for _ in 0..steps {
        let mid = 0.5 * (bad + good);
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Largest recovering point in `[good, bad)`.
fn bisect_upper(mut good: f64, mut bad: f64, steps: usize, mut ok: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    for _ in 0..steps {
        let mid = 0.5 * (good + bad);
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub gamma: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Every ratio within `1 + 1e-8`.
    pub passed: bool,
}

/// Slack allowed on the stability ratio for solver error.
pub const LIPSCHITZ_SLACK: f64 = 1e-8;

/// Compares solutions at `X` and `X + dX` for `trials` Gaussian perturbations
/// with entrywise scale `perturbation_scale`; weights are held fixed.
pub fn lipschitz_harness(
    data: &DataMatrix,
    graph: &WeightGraph,
    gamma: f64,
    trials: usize,
    perturbation_scale: f64,
    seed: u64,
    options: &HarnessOptions,
) -> Result<LipschitzReport> {
    if !(perturbation_scale >= 0.0 && perturbation_scale.is_finite()) {
        return Err(Error::invalid("perturbation scale must be finite and >= 0"));
    }
    let problem = ClusteringProblem::new(data.clone(), graph.clone(), gamma)?;
    let base = solver::solve(&problem, &options.solver, None)?;
    let x = data.values();
    let mut rng = rng::stream(seed, "lipschitz");
    let deltas: Vec<DMatrix<f64>> = (0..trials)
        .map(|_| {
            DMatrix::from_fn(x.nrows(), x.ncols(), |_, _| {
                let e: f64 = StandardNormal.sample(&mut rng);
                perturbation_scale * e
            })
        })
        .collect();
    let ratios = deltas
        .par_iter()
        .map(|dx| {
            let dnorm = dx.norm();
            if dnorm == 0.0 {
                return Ok(0.0);
            }
            let moved = ClusteringProblem::new(DataMatrix::new(x + dx)?, graph.clone(), gamma)?;
            let state = solver::solve(&moved, &options.solver, Some(&solver::WarmStart::from_state(&base)))?;
            Ok((&state.u - &base.u).norm() / dnorm)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LipschitzReport {
        gamma,
        passed: max_ratio <= 1.0 + LIPSCHITZ_SLACK,
        ratios,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assign_weights, build_full, DistanceTable, Edge, GraphProvenance, WeightKind};

    fn line(xs: &[f64]) -> DataMatrix {
        DataMatrix::new(DMatrix::from_row_slice(1, xs.len(), xs)).unwrap()
    }

    fn complete_uniform(n: usize) -> WeightGraph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                e.push(Edge { i, j, w: 1.0 });
            }
        }
        WeightGraph::new(n, e, GraphProvenance::Full).unwrap()
    }

    #[test]
    fn geometry_on_the_line() {
        let g = partition_geometry(&line(&[0.0, 1.0, 4.0]), &Partition::from_labels(&[0, 0, 1])).unwrap();
        assert_eq!(g.diameters, vec![1.0, 0.0]);
        assert_eq!(g.set_distances[(0, 1)], 3.0);
        assert_eq!(g.sizes, vec![2, 1]);
        assert_eq!(g.mean_distance(0, 1), 3.5);
        let one = partition_geometry(&line(&[0.0, 1.0, 4.0]), &Partition::single_block(3)).unwrap();
        assert_eq!(one.diameters, vec![4.0]);
    }

    #[test]
    fn panahi_two_singletons() {
        let g = partition_geometry(&line(&[0.0, 4.0]), &Partition::singletons(2)).unwrap();
        let iv = panahi_interval(&g, 2).unwrap();
        assert_eq!(iv.lower, Bound::Finite(0.0));
        assert_eq!(iv.upper, Bound::Finite(1.0));
        assert!(iv.feasible);
        assert!(panahi_interval(
            &partition_geometry(&line(&[0.0, 4.0]), &Partition::single_block(2)).unwrap(),
            2
        )
        .is_err());
    }

    #[test]
    fn equal_means_are_infeasible() {
        let data = line(&[-1.0, 1.0, -2.0, 2.0]);
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        let iv = panahi_interval(&partition_geometry(&data, &p).unwrap(), 4).unwrap();
        assert_eq!(iv.upper, Bound::Finite(0.0));
        assert!(!iv.feasible);
    }

    #[test]
    fn sun_matches_panahi_lower_on_uniform_complete_graph() {
        let data = line(&[0.0, 0.3, 0.5, 5.0, 5.4, 9.0]);
        let p = Partition::from_labels(&[0, 0, 0, 1, 1, 2]);
        let geo = partition_geometry(&data, &p).unwrap();
        let a = panahi_interval(&geo, 6).unwrap();
        let b = sun_interval(&geo, &complete_uniform(6), &p).unwrap();
        let (la, lb) = (a.lower.value().unwrap(), b.lower.value().unwrap());
        assert!((la - lb).abs() <= 1e-12);
        assert!(b.upper.value().unwrap() >= a.upper.value().unwrap());
    }

    #[test]
    fn sun_without_cross_weights_is_unbounded_above() {
        let data = line(&[0.0, 0.3, 5.0, 5.2]);
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        let g = WeightGraph::new(
            4,
            vec![Edge { i: 0, j: 1, w: 1.0 }, Edge { i: 2, j: 3, w: 1.0 }],
            GraphProvenance::Custom,
        )
        .unwrap();
        let iv = sun_interval(&partition_geometry(&data, &p).unwrap(), &g, &p).unwrap();
        assert_eq!(iv.upper, Bound::Unbounded);
        assert_eq!(iv.lower, Bound::Finite(0.15));
        assert!(iv.feasible);
        assert_eq!(serde_json::to_value(iv).unwrap()["upper"], "unbounded");
    }

    #[test]
    fn sun_requires_intra_block_weights() {
        let data = line(&[0.0, 0.3, 5.0]);
        let p = Partition::from_labels(&[0, 0, 1]);
        let g = WeightGraph::new(3, vec![Edge { i: 1, j: 2, w: 1.0 }], GraphProvenance::Custom).unwrap();
        assert!(sun_interval(&partition_geometry(&data, &p).unwrap(), &g, &p).is_err());
    }

    #[test]
    fn zhu_formula_properties() {
        let pts = zhu_two_cubes(&[0.0, 0.0], &[0.0], 3, 4, 2.0).unwrap();
        assert_eq!(pts.lower, Bound::Finite(0.0));
        assert!(pts.feasible);
        let a = zhu_two_cubes(&[0.5], &[0.5], 5, 5, 3.0).unwrap();
        let b = zhu_two_cubes(&[0.5], &[0.5], 5, 5, 6.0).unwrap();
        assert_eq!(2.0 * a.upper.value().unwrap(), b.upper.value().unwrap());
        assert!(zhu_two_cubes(&[1.0], &[1.0], 0, 5, 1.0).is_err());
    }

    #[test]
    fn samples_inside_interval() {
        let iv = RecoveryInterval::new(Bound::Finite(0.1), Bound::Finite(0.4), RecoveryFamily::PanahiUniform);
        let s = interval_samples(&iv, 5).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|&g| g > 0.1 && g < 0.4));
        let bad = RecoveryInterval::new(Bound::Finite(0.4), Bound::Finite(0.1), RecoveryFamily::PanahiUniform);
        assert!(interval_samples(&bad, 5).is_err());
    }

    #[test]
    fn recovery_on_separated_blocks() {
        let data = line(&[0.0, 0.2, 0.4, 10.0, 10.2, 10.4]);
        let p = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let g = complete_uniform(6);
        let iv = panahi_interval(&partition_geometry(&data, &p).unwrap(), 6).unwrap();
        assert!(iv.feasible);
        let r = verify_recovery(&data, &p, &g, &iv, 5, &HarnessOptions::default()).unwrap();
        assert_eq!(r.pass_rate, 1.0);
        let lo = r.empirical_lower.unwrap();
        assert!(lo <= iv.lower.value().unwrap() + 1e-12);
        assert!(r.empirical_upper.value().unwrap() >= iv.upper.value().unwrap());
    }

    #[test]
    fn lipschitz_endpoints() {
        let data = line(&[0.0, 1.0, 3.0, 3.5]);
        let dist = DistanceTable::new(data.values());
        let g = assign_weights(&build_full(4), &dist, &WeightKind::Uniform).unwrap();
        let opts = HarnessOptions::default();
        let zero = lipschitz_harness(&data, &g, 0.0, 5, 0.1, 1, &opts).unwrap();
        assert!(zero.ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
        let none = lipschitz_harness(&data, &g, 0.3, 3, 0.0, 1, &opts).unwrap();
        assert_eq!(none.max_ratio, 0.0);
        let big = lipschitz_harness(&data, &g, 50.0, 5, 0.1, 2, &opts).unwrap();
        assert!(big.passed && big.max_ratio < 1.0);
    }
}
