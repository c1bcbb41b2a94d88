use nalgebra::DMatrix;

use soncluster::data::Partition;
use soncluster::generate::{generate, GeneratorSpec};
use soncluster::graph::{level_weights, Edge, GraphMethod, GraphSpec, WeightKind};
use soncluster::path::{compute_path, compute_path_spec, gamma_max, geometric, GridSpec, PathOptions};
use soncluster::selection::{ebic_select, holdout_select, EbicOptions, HoldoutPlan, MissingOptions};
use soncluster::theory::{
    interval_samples, lipschitz_harness, panahi_interval, partition_geometry, sun_interval, verify_recovery,
    HarnessOptions, RecoveryFamily,
};
use soncluster::{ClusteringProblem, DataMatrix, GraphProvenance, WeightGraph};

fn two_point(d: f64, w: f64) -> ClusteringProblem {
    let data = DataMatrix::new(DMatrix::from_row_slice(1, 2, &[0.0, d])).unwrap();
    let g = WeightGraph::new(2, vec![Edge { i: 0, j: 1, w }], GraphProvenance::Custom).unwrap();
    ClusteringProblem::new(data, g, 0.0).unwrap()
}

#[test]
fn gamma_max_brackets_the_two_point_threshold() {
    for (d, w) in [(4.0, 1.0), (3.0, 0.5), (10.0, 2.0)] {
        let g = gamma_max(&two_point(d, w), &PathOptions::default()).unwrap();
        let threshold = d / (2.0 * w);
        assert!(
            g.value >= threshold * (1.0 - 1e-9) && g.value < 2.0 * threshold,
            "{g:?}"
        );
        assert!(g.connected);
    }
}

#[test]
fn gamma_max_of_a_single_point_is_zero() {
    let data = DataMatrix::new(DMatrix::from_row_slice(2, 1, &[1.0, 2.0])).unwrap();
    let pr = ClusteringProblem::new(data, WeightGraph::empty(1), 0.0).unwrap();
    assert_eq!(gamma_max(&pr, &PathOptions::default()).unwrap().value, 0.0);
}

#[test]
fn two_point_path_drops_to_one_cluster_at_the_threshold() {
    let pr = two_point(4.0, 1.0);
    let grid = geometric(0.25, 8.0, 11);
    let path = compute_path(&pr, &grid, &PathOptions::default()).unwrap();
    for s in &path.snapshots {
        let expect = if s.gamma >= 2.0 * (1.0 - 1e-12) { 1 } else { 2 };
        assert_eq!(s.num_clusters(), expect, "gamma={}", s.gamma);
    }
    let tree = path.dendrogram().unwrap();
    assert_eq!(tree.num_merges(), 1);
    assert!((tree.merges()[0].height - 2.0).abs() < 1e-12);
}

#[test]
fn hierarchy_path_ends_at_the_grand_mean() {
    let g = generate(&GeneratorSpec::Hierarchy5x5 { sigma: 0.05 }, 7).unwrap();
    let graph = GraphSpec::new(GraphMethod::MstPlusKnn { k: 3 }, WeightKind::gaussian())
        .build(&g.data)
        .unwrap()
        .graph;
    let pr = ClusteringProblem::new(g.data.clone(), graph, 0.0).unwrap();
    let path = compute_path_spec(&pr, &GridSpec::default(), &PathOptions::default()).unwrap();
    let last = path.snapshots.last().unwrap();
    assert_eq!(last.num_clusters(), 1);
    let mean = g.data.values().column_mean();
    for col in last.u.column_iter() {
        assert!((col - &mean).abs().max() <= 1e-8);
    }
}

#[test]
fn strong_within_cluster_weights_fuse_clusters_first() {
    let g = generate(&GeneratorSpec::Hierarchy5x5 { sigma: 0.05 }, 1).unwrap();
    let supers = g.meta_labels.clone().unwrap();
    let graph = level_weights(&g.labels, &supers, (10.0, 1.0, 1.0)).unwrap();
    let pr = ClusteringProblem::new(g.data.clone(), graph, 0.0).unwrap();
    let gm = gamma_max(&pr, &PathOptions::default()).unwrap().value;
    let path = compute_path(&pr, &geometric(gm * 1e-4, gm, 200), &PathOptions::default()).unwrap();
    let tree = path.dendrogram().unwrap();
    let within: Vec<f64> = tree
        .merges()
        .iter()
        .filter(|m| {
            let members = tree.members(m.id);
            members.iter().all(|&i| g.labels[i] == g.labels[members[0]])
        })
        .map(|m| m.height)
        .collect();
    let cross_start = tree
        .merges()
        .iter()
        .filter(|m| {
            let members = tree.members(m.id);
            members.iter().any(|&i| g.labels[i] != g.labels[members[0]])
        })
        .map(|m| m.height)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(within.len(), 20);
    assert!(within.iter().all(|&h| h < cross_start));
}

#[test]
fn ebic_picks_two_well_separated_blobs() {
    let mut hits = 0;
    for seed in 0..10 {
        let g = generate(
            &GeneratorSpec::GaussianMixture {
                components: 2,
                per_component: 12,
                dim: 2,
                spread: 8.0,
                sigma: 0.5,
            },
            seed,
        )
        .unwrap();
        let graph = GraphSpec::new(GraphMethod::MstPlusKnn { k: 3 }, WeightKind::gaussian())
            .build(&g.data)
            .unwrap()
            .graph;
        let pr = ClusteringProblem::new(g.data.clone(), graph, 0.0).unwrap();
        let path = compute_path_spec(&pr, &GridSpec::default(), &PathOptions::default()).unwrap();
        let r = ebic_select(&path, g.data.values(), &EbicOptions::default()).unwrap();
        hits += usize::from(r.chosen_clusters == 2);
    }
    assert!(hits >= 6, "K=2 chosen for {hits}/10 seeds");
}

#[test]
fn selection_on_noise_is_well_formed() {
    let g = generate(
        &GeneratorSpec::GaussianMixture {
            components: 1,
            per_component: 20,
            dim: 2,
            spread: 0.0,
            sigma: 1.0,
        },
        3,
    )
    .unwrap();
    let graph = GraphSpec::new(GraphMethod::MstPlusKnn { k: 3 }, WeightKind::gaussian())
        .build(&g.data)
        .unwrap()
        .graph;
    let pr = ClusteringProblem::new(g.data.clone(), graph.clone(), 0.0).unwrap();
    let path = compute_path_spec(
        &pr,
        &GridSpec::Geometric {
            count: 12,
            lower_ratio: 1e-3,
            upper: None,
        },
        &PathOptions::default(),
    )
    .unwrap();
    let r = ebic_select(&path, g.data.values(), &EbicOptions::default()).unwrap();
    assert_eq!(r.scores.len(), path.len());
    assert!(r.scores.iter().all(|s| s.is_finite()));
    assert!(r.eligible[r.chosen_index]);

    assert!(HoldoutPlan::new(&g.data, 0.0, 1).is_err());
    let plan = HoldoutPlan::new(&g.data, 0.1, 1).unwrap();
    let h = holdout_select(&g.data, &graph, &path.gammas(), &plan, &MissingOptions::default()).unwrap();
    assert_eq!(h.gammas, path.gammas());
    assert!(h.scores.iter().all(|s| s.is_finite() && *s >= 0.0));
}

#[test]
fn weighted_interval_reduces_to_uniform_on_the_complete_graph() {
    let g = generate(&GeneratorSpec::TwoBalls { n: 16, dim: 2, r: 4.0 }, 2).unwrap();
    let truth = Partition::from_labels(&g.labels);
    let geo = partition_geometry(&g.data, &truth).unwrap();
    let complete = GraphSpec::new(GraphMethod::Full, WeightKind::Uniform)
        .build(&g.data)
        .unwrap()
        .graph;
    let uniform = panahi_interval(&geo, 16).unwrap();
    let weighted = sun_interval(&geo, &complete, &truth).unwrap();
    let (a, b) = (uniform.lower.value().unwrap(), weighted.lower.value().unwrap());
    assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    assert_eq!(weighted.family, RecoveryFamily::SunWeighted);
}

#[test]
fn recovery_range_grows_with_the_gaussian_share() {
    // Uniform and Gaussian-weighted combinations on the complete graph over two nearby balls:
    // feasibility appears only as the Gaussian share reaches one.
    let g = generate(&GeneratorSpec::TwoBalls { n: 20, dim: 2, r: 1.5 }, 0).unwrap();
    let truth = Partition::from_labels(&g.labels);
    let geo = partition_geometry(&g.data, &truth).unwrap();
    let feasible: Vec<bool> = [0.0, 0.7, 0.95, 1.0]
        .iter()
        .map(|&alpha| {
            let graph = GraphSpec::new(
                GraphMethod::Full,
                WeightKind::ConvexCombo {
                    alpha,
                    neighbors: Some(9),
                },
            )
            .build(&g.data)
            .unwrap()
            .graph;
            sun_interval(&geo, &graph, &truth).unwrap().feasible
        })
        .collect();
    assert_eq!(feasible, vec![false, false, false, true]);
}

#[test]
fn recovery_harness_on_separated_blobs() {
    let g = generate(&GeneratorSpec::TwoBalls { n: 20, dim: 2, r: 6.0 }, 1).unwrap();
    let truth = Partition::from_labels(&g.labels);
    let geo = partition_geometry(&g.data, &truth).unwrap();
    let interval = panahi_interval(&geo, 20).unwrap();
    assert!(interval.feasible);
    let complete = GraphSpec::new(GraphMethod::Full, WeightKind::Uniform)
        .build(&g.data)
        .unwrap()
        .graph;
    let report = verify_recovery(&g.data, &truth, &complete, &interval, 3, &HarnessOptions::default()).unwrap();
    assert_eq!(report.pass_rate, 1.0);
    let lo = report.empirical_lower.unwrap();
    assert!(lo <= interval.lower.value().unwrap());

    let mut infeasible = interval;
    infeasible.feasible = false;
    assert!(interval_samples(&infeasible, 3).is_err());
    assert!(verify_recovery(&g.data, &truth, &complete, &infeasible, 3, &HarnessOptions::default()).is_err());
}

#[test]
fn lipschitz_harness_endpoints() {
    let g = generate(&GeneratorSpec::half_moons(6, 6, 0.1), 0).unwrap();
    let graph = GraphSpec::new(GraphMethod::MstPlusKnn { k: 2 }, WeightKind::gaussian())
        .build(&g.data)
        .unwrap()
        .graph;
    let options = HarnessOptions::default();
    let zero = lipschitz_harness(&g.data, &graph, 0.0, 4, 0.1, 9, &options).unwrap();
    assert!(zero.ratios.iter().all(|r| (r - 1.0).abs() <= 1e-9));
    let big = lipschitz_harness(&g.data, &graph, 1e4, 4, 0.1, 9, &options).unwrap();
    assert!(big.passed && big.max_ratio < 1.0);
}
