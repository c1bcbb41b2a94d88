use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use soncluster::config::{Criterion, Mode, RunConfig};
use soncluster::path::PathMode;
use soncluster::{Error, SolverMethod};

/// Sum-of-norms convex clustering.
///
/// Flags override values from --config; unset flags keep the file's values or the defaults.
#[derive(Debug, Parser)]
#[command(name = "soncluster", version)]
struct Cli {
    /// fit | path | select | theory | stability
    mode: Mode,
    /// CSV file, one observation per row unless --columns-are-observations.
    #[arg(long, conflicts_with = "generate")]
    input: Option<PathBuf>,
    /// Synthetic data, e.g. half_moons:n1=20,n2=20,noise=0.05
    #[arg(long)]
    generate: Option<String>,
    #[arg(long)]
    columns_are_observations: bool,
    /// Known labels for theory mode with CSV input.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// mst | knn:K | mst+knn:K | dmsts:M | full
    #[arg(long)]
    graph: Option<String>,
    /// uniform | inverse | gaussian[:M] | combo:ALPHA[:M]
    #[arg(long)]
    weights: Option<String>,
    /// A value, a comma-separated list, or geom:COUNT[:RATIO]
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ama | fama | admm
    #[arg(long)]
    solver: Option<SolverMethod>,
    /// Duality-gap and residual tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// exact | strict | carp
    #[arg(long)]
    path_mode: Option<PathMode>,
    /// ebic | holdout
    #[arg(long)]
    criterion: Option<Criterion>,
    #[arg(long)]
    zeta: Option<f64>,
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        c.mode = self.mode;
        if self.input.is_some() {
            c.input = self.input;
            c.generate = None;
        }
        if self.generate.is_some() {
            c.generate = self.generate;
            c.input = None;
        }
        if self.columns_are_observations {
            c.columns_are_observations = true;
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set!(
            graph => c.graph,
            weights => c.weights,
            gamma => c.gamma,
            out => c.out,
            seed => c.seed,
            solver => c.solver.method,
            max_iterations => c.solver.max_iterations,
            path_mode => c.path_mode,
            criterion => c.selection.criterion,
            zeta => c.selection.zeta,
        );
        if let Some(t) = self.truth {
            c.truth = Some(t);
        }
        if let Some(t) = self.tolerance {
            c.solver.gap_tolerance = t;
            c.solver.residual_tolerance = t;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.into_config().and_then(|c| soncluster::run::run(&c)) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            match e {
                Error::InvalidArgument(_) | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
