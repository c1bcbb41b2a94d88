//! Command-line driver: loads or generates data, runs one mode and writes its artifacts.
//!
//! Every file written is a deterministic function of the [`RunConfig`] and the
//! input bytes; the manifest holds no timestamps or timings.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Criterion, InputSource, Mode, RunConfig};
use crate::data::{DataMatrix, Deduplicated, Partition};
use crate::error::{Error, Result};
use crate::generate::generate;
use crate::graph::{GraphMethod, GraphSpec, WeightGraph, WeightKind};
use crate::io::{fmt_f64, load_csv, save_data_csv, write_json, Orientation};
use crate::path::{
    compute_path, gamma_max, write_labels_csv, write_path_csv, ClusterPath, FusionRule, PathMode, Snapshot,
};
use crate::problem::ClusteringProblem;
use crate::selection::{ebic_select, holdout_select, solve_missing, EbicOptions, HoldoutPlan, MissingOptions};
use crate::theory::{
    lipschitz_harness, panahi_interval, partition_geometry, sun_interval, verify_recovery, zhu_two_cubes,
    HarnessOptions, RecoveryInterval,
};

/// Files written by a run, relative to the output directory, in write order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

struct Input {
    data: DataMatrix,
    truth: Option<Vec<usize>>,
    generated: bool,
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.files.push(name.to_string());
        write_json(value, self.dir.join(name))
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.files.push(name.to_string());
        fs::write(self.dir.join(name), body)?;
        Ok(())
    }
}

/// Runs `config` and writes its artifacts into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let input = load_input(config)?;
    fs::create_dir_all(&config.out)?;
    let mut w = Writer {
        dir: config.out.clone(),
        files: Vec::new(),
    };
    if input.generated {
        w.files.push("data.csv".into());
        save_data_csv(&input.data, config.out.join("data.csv"))?;
    }
    if let Some(t) = &input.truth {
        let mut f = w.create("truth.csv")?;
        writeln!(f, "node,label")?;
        for (i, l) in t.iter().enumerate() {
            writeln!(f, "{i},{l}")?;
        }
        f.flush()?;
    }

    let mut warnings = Vec::new();
    let summary = match config.mode {
        Mode::Fit | Mode::Path => run_path(config, &input.data, &mut w, &mut warnings)?,
        Mode::Select => run_select(config, &input.data, &mut w, &mut warnings)?,
        Mode::Theory => run_theory(config, &input, &mut w, &mut warnings)?,
        Mode::Stability => run_stability(config, &input.data, &mut w, &mut warnings)?,
    };

    let mut files = w.files.clone();
    files.push("manifest.json".into());
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "mode": config.mode.to_string(),
        "config": config,
        "n": input.data.len(),
        "p": input.data.dim(),
        "missing_entries": input.data.mask().map_or(0, |m| m.iter().filter(|&&o| !o).count()),
        "summary": summary,
        "warnings": warnings,
        "files": files,
    });
    w.json("manifest.json", &manifest)?;
    Ok(RunOutcome {
        out_dir: config.out.clone(),
        files: w.files,
        warnings,
    })
}

fn load_input(config: &RunConfig) -> Result<Input> {
    let mut input = match config.input_source()? {
        InputSource::Csv(path) => {
            let orientation = if config.columns_are_observations {
                Orientation::ColumnsAreObservations
            } else {
                Orientation::RowsAreObservations
            };
            Input {
                data: load_csv(&path, orientation)?,
                truth: None,
                generated: false,
            }
        }
        InputSource::Generate(spec) => {
            let g = generate(&spec, config.seed)?;
            Input {
                data: g.data,
                truth: Some(g.labels),
                generated: true,
            }
        }
    };
    if let Some(path) = &config.truth {
        input.truth = Some(load_labels(path)?);
    }
    if let Some(t) = &input.truth {
        if t.len() != input.data.len() {
            return Err(Error::shape(format!(
                "{} truth labels for {} observations",
                t.len(),
                input.data.len()
            )));
        }
    }
    Ok(input)
}

/// One integer label per line (or per first field); a non-numeric first line is a header.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        match field.parse::<usize>() {
            Ok(l) => labels.push(l),
            Err(_) if labels.is_empty() && idx == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("label '{field}' is not a nonnegative integer"),
                })
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no labels".into(),
        });
    }
    Ok(labels)
}

/// Graph over `data` (mean-imputed where entries are missing).
fn build_graph(spec: &GraphSpec, data: &DataMatrix, warnings: &mut Vec<String>) -> Result<(WeightGraph, Value)> {
    let complete = match data.mask() {
        Some(_) => DataMatrix::new(data.mean_imputed())?,
        None => data.clone(),
    };
    let built = spec.build(&complete)?;
    warnings.extend(built.warnings.iter().cloned());
    let info = json!({
        "edges": built.graph.num_edges(),
        "connected": built.connected,
        "components": built.graph.connected_components().num_clusters(),
    });
    Ok((built.graph, info))
}

fn require_complete(data: &DataMatrix, mode: &str) -> Result<()> {
    if data.mask().is_some() {
        return Err(Error::InvalidData(format!(
            "{mode} needs fully observed data; use select with the holdout criterion or fit for missing entries"
        )));
    }
    Ok(())
}

fn require_distinct(data: &DataMatrix, mode: &str) -> Result<()> {
    if data.merge_duplicates()?.has_duplicates() {
        return Err(Error::InvalidData(format!(
            "{mode} needs distinct observations; remove repeated rows"
        )));
    }
    Ok(())
}

/// Problem on the distinct observations, each weighted by its multiplicity.
fn distinct_problem(
    config: &RunConfig,
    data: &DataMatrix,
    warnings: &mut Vec<String>,
) -> Result<(Deduplicated, ClusteringProblem, Value)> {
    let dedup = data.merge_duplicates()?;
    if dedup.has_duplicates() {
        warnings.push(format!(
            "{} repeated observations merged into weighted nodes",
            data.len() - dedup.data.len()
        ));
    }
    let (graph, info) = build_graph(&config.graph_spec()?, &dedup.data, warnings)?;
    let problem = ClusteringProblem::with_node_weights(dedup.data.clone(), graph, 0.0, dedup.multiplicity.clone())?;
    Ok((dedup, problem, info))
}

fn resolve_grid(config: &RunConfig, problem: &ClusteringProblem) -> Result<(Vec<f64>, Option<f64>)> {
    let spec = config.grid_spec()?;
    let gmax = if spec.needs_gamma_max() {
        Some(gamma_max(problem, &config.path_options())?.value)
    } else {
        None
    };
    Ok((spec.resolve(gmax)?, gmax))
}

fn expand_path(path: ClusterPath, dedup: &Deduplicated) -> ClusterPath {
    if !dedup.has_duplicates() {
        return path;
    }
    let snapshots = path
        .snapshots
        .into_iter()
        .map(|s| Snapshot {
            u: dedup.expand(&s.u),
            partition: dedup.expand_partition(&s.partition),
            ..s
        })
        .collect();
    ClusterPath { snapshots, ..path }
}

/// Fit solves each grid point on the full problem; path uses the configured path mode.
fn solve_path(config: &RunConfig, data: &DataMatrix, warnings: &mut Vec<String>) -> Result<(ClusterPath, Value)> {
    if data.mask().is_some() {
        if config.mode != Mode::Fit {
            require_complete(data, "the solution path")?;
        }
        return solve_missing_grid(config, data, warnings);
    }
    let (dedup, problem, graph_info) = distinct_problem(config, data, warnings)?;
    let (grid, gmax) = resolve_grid(config, &problem)?;
    let mut options = config.path_options();
    if config.mode == Mode::Fit {
        options.mode = PathMode::Strict;
    }
    let path = compute_path(&problem, &grid, &options)?;
    if let Some(t) = &path.truncated {
        warnings.push(format!("path truncated at gamma={}: {}", fmt_f64(t.gamma), t.message));
    }
    let summary = json!({
        "graph": graph_info,
        "gamma_max": gmax,
        "path_mode": options.mode,
        "grid": grid,
    });
    Ok((expand_path(path, &dedup), summary))
}

/// Independent majorization-minimization solves, one per grid point.
fn solve_missing_grid(
    config: &RunConfig,
    data: &DataMatrix,
    warnings: &mut Vec<String>,
) -> Result<(ClusterPath, Value)> {
    let (graph, graph_info) = build_graph(&config.graph_spec()?, data, warnings)?;
    let spec = config.grid_spec()?;
    let gmax = if spec.needs_gamma_max() {
        let imputed = ClusteringProblem::new(DataMatrix::new(data.mean_imputed())?, graph.clone(), 0.0)?;
        Some(gamma_max(&imputed, &config.path_options())?.value)
    } else {
        None
    };
    let grid = spec.resolve(gmax)?;
    let options = MissingOptions {
        solver: config.solver.clone(),
        ..MissingOptions::default()
    };
    let rule = FusionRule::for_data(&data.mean_imputed(), config.fusion_tolerance);
    let masked = ClusteringProblem::new(data.clone(), graph.clone(), 0.0)?;
    let mut snapshots = Vec::with_capacity(grid.len());
    for &gamma in &grid {
        let sol = solve_missing(data, &graph, gamma, &options)?;
        let partition = rule.detect(sol.u(), Some(&sol.state.v), &graph);
        let centroids = partition.block_means(sol.u());
        snapshots.push(Snapshot {
            gamma,
            objective: masked.with_gamma(gamma)?.objective_value(sol.u())?,
            iterations: sol.iterations,
            converged: sol.converged,
            duality_gap: sol.state.duality_gap,
            u: sol.state.u,
            partition,
            centroids,
        });
    }
    let summary = json!({
        "graph": graph_info,
        "gamma_max": gmax,
        "path_mode": "majorization_minimization",
        "grid": grid,
    });
    Ok((
        ClusterPath {
            mode: PathMode::Strict,
            snapshots,
            truncated: None,
        },
        summary,
    ))
}

fn write_path_outputs(config: &RunConfig, path: &ClusterPath, w: &mut Writer) -> Result<()> {
    let mut f = w.create("path.csv")?;
    write_path_csv(path, &mut f)?;
    f.flush()?;
    let mut f = w.create("labels.csv")?;
    write_labels_csv(path, &mut f)?;
    f.flush()?;
    if config.mode == Mode::Fit {
        let fits: Vec<Value> = path
            .snapshots
            .iter()
            .map(|s| {
                json!({
                    "gamma": s.gamma,
                    "clusters": s.num_clusters(),
                    "objective": s.objective,
                    "duality_gap": s.duality_gap,
                    "iterations": s.iterations,
                    "converged": s.converged,
                })
            })
            .collect();
        w.json("fit.json", &fits)?;
    } else {
        let d = path.dendrogram()?;
        w.json("dendrogram.json", &d.to_json())?;
        w.text("dendrogram.nwk", &format!("{}\n", d.to_newick(None)))?;
    }
    Ok(())
}

fn run_path(config: &RunConfig, data: &DataMatrix, w: &mut Writer, warnings: &mut Vec<String>) -> Result<Value> {
    let (path, summary) = solve_path(config, data, warnings)?;
    write_path_outputs(config, &path, w)?;
    Ok(summary)
}

fn run_select(config: &RunConfig, data: &DataMatrix, w: &mut Writer, warnings: &mut Vec<String>) -> Result<Value> {
    let s = &config.selection;
    let (report, mut summary) = match s.criterion {
        Criterion::Ebic => {
            let (path, summary) = solve_path(config, data, warnings)?;
            write_path_outputs(config, &path, w)?;
            let options = EbicOptions {
                zeta: s.zeta,
                max_clusters: s.max_clusters,
            };
            (ebic_select(&path, data.values(), &options)?, summary)
        }
        Criterion::Holdout => {
            require_distinct(data, "holdout selection")?;
            let (graph, graph_info) = build_graph(&config.graph_spec()?, data, warnings)?;
            let spec = config.grid_spec()?;
            let gmax = if spec.needs_gamma_max() {
                let imputed = ClusteringProblem::new(DataMatrix::new(data.mean_imputed())?, graph.clone(), 0.0)?;
                Some(gamma_max(&imputed, &config.path_options())?.value)
            } else {
                None
            };
            let grid = spec.resolve(gmax)?;
            let plan = HoldoutPlan::new(data, s.holdout_fraction, config.seed)?;
            let options = MissingOptions {
                solver: config.solver.clone(),
                ..MissingOptions::default()
            };
            let report = holdout_select(data, &graph, &grid, &plan, &options)?;
            let summary = json!({
                "graph": graph_info,
                "gamma_max": gmax,
                "grid": grid,
                "held_out_entries": plan.entries.len(),
            });
            (report, summary)
        }
    };
    let mut f = w.create("selection.csv")?;
    report.write_csv(&mut f)?;
    f.flush()?;
    w.json("selection.json", &report)?;
    summary["chosen_gamma"] = json!(report.chosen_gamma);
    summary["chosen_clusters"] = json!(report.chosen_clusters);
    Ok(summary)
}

fn harness_options(config: &RunConfig) -> HarnessOptions {
    HarnessOptions {
        solver: config.solver.clone(),
        fusion_tolerance: config.fusion_tolerance,
        ..HarnessOptions::default()
    }
}

/// Intervals for the true partition and, where feasible, an empirical check.
fn run_theory(config: &RunConfig, input: &Input, w: &mut Writer, warnings: &mut Vec<String>) -> Result<Value> {
    let data = &input.data;
    require_complete(data, "theory")?;
    require_distinct(data, "theory")?;
    let labels = input
        .truth
        .as_ref()
        .ok_or_else(|| Error::invalid("theory needs known labels: use a generator or give a truth file"))?;
    let truth = Partition::from_labels(labels);
    let n = data.len();
    let geo = partition_geometry(data, &truth)?;
    let options = harness_options(config);
    let trials = config.harness.recovery_trials;

    // Uniform weights on the complete graph, the setting of the uniform and two-cube bounds.
    let complete = GraphSpec::new(GraphMethod::Full, WeightKind::Uniform)
        .build(data)?
        .graph;
    let (graph, graph_info) = build_graph(&config.graph_spec()?, data, warnings)?;

    let mut intervals = Vec::new();
    let mut check = |name: &str, interval: Result<RecoveryInterval>, g: &WeightGraph| -> Result<()> {
        let entry = match interval {
            Ok(iv) => {
                let verification = if iv.feasible {
                    Some(verify_recovery(data, &truth, g, &iv, trials, &options)?)
                } else {
                    None
                };
                json!({ "family": name, "interval": iv, "verification": verification })
            }
            Err(e) => json!({ "family": name, "error": e.to_string() }),
        };
        intervals.push(entry);
        Ok(())
    };
    check("panahi_uniform", panahi_interval(&geo, n), &complete)?;
    check("sun_weighted", sun_interval(&geo, &graph, &truth), &graph)?;
    if geo.num_blocks() == 2 {
        let half_edges = |b: usize| -> Vec<f64> {
            let members = &truth.blocks()[b];
            (0..data.dim())
                .map(|k| {
                    let vals = members.iter().map(|&i| data.values()[(k, i)]);
                    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                    (hi - lo) / 2.0
                })
                .collect()
        };
        let zhu = zhu_two_cubes(
            &half_edges(0),
            &half_edges(1),
            geo.sizes[0],
            geo.sizes[1],
            geo.set_distances[(0, 1)],
        );
        check("zhu_two_cubes", zhu, &complete)?;
    }

    let report = json!({
        "clusters": geo.num_blocks(),
        "sizes": geo.sizes,
        "diameters": geo.diameters,
        "set_distances": geo.set_distances.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
        "intervals": intervals,
    });
    w.json("theory.json", &report)?;
    Ok(json!({ "graph": graph_info }))
}

fn run_stability(config: &RunConfig, data: &DataMatrix, w: &mut Writer, warnings: &mut Vec<String>) -> Result<Value> {
    require_complete(data, "stability")?;
    require_distinct(data, "stability")?;
    let (graph, graph_info) = build_graph(&config.graph_spec()?, data, warnings)?;
    let problem = ClusteringProblem::new(data.clone(), graph.clone(), 0.0)?;
    let (grid, gmax) = resolve_grid(config, &problem)?;
    let options = harness_options(config);
    let h = &config.harness;
    let reports = grid
        .iter()
        .map(|&g| {
            lipschitz_harness(
                data,
                &graph,
                g,
                h.lipschitz_trials,
                h.perturbation_scale,
                config.seed,
                &options,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let max_ratio = reports.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    w.json(
        "stability.json",
        &json!({ "passed": passed, "max_ratio": max_ratio, "reports": reports }),
    )?;
    Ok(json!({ "graph": graph_info, "gamma_max": gmax, "grid": grid, "passed": passed }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_file_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        fs::write(&p, "node,label\n0,1\n1,0\n2,1\n").unwrap();
        assert_eq!(load_labels(&p).unwrap(), vec![1, 0, 1]);
        fs::write(&p, "1\nx\n").unwrap();
        assert!(matches!(load_labels(&p), Err(Error::Parse { line: 2, .. })));
    }
}
