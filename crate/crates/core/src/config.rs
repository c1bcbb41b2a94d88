//! Run configuration: a TOML file mirroring the CLI flags, flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::GeneratorSpec;
use crate::graph::{GraphMethod, GraphSpec, WeightKind};
use crate::path::{GridSpec, PathMode, PathOptions, FUSION_TOLERANCE};
use crate::solver::SolverConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Solve at each `gamma` of the grid independently of fusion history.
    Fit,
    /// Solution path with dendrogram.
    #[default]
    Path,
    /// Path plus choice of `gamma`.
    Select,
    /// Recovery intervals and their empirical check against known labels.
    Theory,
    /// 1-Lipschitz stability harness.
    Stability,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fit" => Ok(Mode::Fit),
            "path" => Ok(Mode::Path),
            "select" => Ok(Mode::Select),
            "theory" => Ok(Mode::Theory),
            "stability" => Ok(Mode::Stability),
            other => Err(Error::invalid(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Fit => "fit",
            Mode::Path => "path",
            Mode::Select => "select",
            Mode::Theory => "theory",
            Mode::Stability => "stability",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Ebic,
    Holdout,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ebic" => Ok(Criterion::Ebic),
            "holdout" => Ok(Criterion::Holdout),
            other => Err(Error::invalid(format!("unknown selection criterion '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSettings {
    pub criterion: Criterion,
    pub zeta: f64,
    pub max_clusters: Option<usize>,
    pub holdout_fraction: f64,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        Self {
            criterion: Criterion::Ebic,
            zeta: crate::selection::DEFAULT_ZETA,
            max_clusters: None,
            holdout_fraction: crate::selection::DEFAULT_HOLDOUT_FRACTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSettings {
    /// Sampled `gamma` values per recovery interval.
    pub recovery_trials: usize,
    /// Perturbations per `gamma` in stability mode.
    pub lipschitz_trials: usize,
    pub perturbation_scale: f64,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        Self {
            recovery_trials: 5,
            lipschitz_trials: 20,
            perturbation_scale: 0.1,
        }
    }
}

/// Everything a run needs. Strings hold the same syntax as the CLI flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: Option<PathBuf>,
    pub generate: Option<String>,
    /// Ground-truth labels (one per observation) for theory mode with CSV input.
    pub truth: Option<PathBuf>,
    pub columns_are_observations: bool,
    pub graph: String,
    pub weights: String,
    pub gamma: String,
    pub out: PathBuf,
    pub seed: u64,
    pub path_mode: PathMode,
    pub fusion_tolerance: f64,
    pub solver: SolverConfig,
    pub selection: SelectionSettings,
    pub harness: HarnessSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Path,
            input: None,
            generate: None,
            truth: None,
            columns_are_observations: false,
            graph: "mst+knn:3".into(),
            weights: "gaussian".into(),
            gamma: GridSpec::default().to_string(),
            out: PathBuf::from("out"),
            seed: 0,
            path_mode: PathMode::Exact,
            fusion_tolerance: FUSION_TOLERANCE,
            solver: SolverConfig::default(),
            selection: SelectionSettings::default(),
            harness: HarnessSettings::default(),
        }
    }
}

/// Where the data comes from, after validation.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    Csv(PathBuf),
    Generate(GeneratorSpec),
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |sp| s[..sp.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot encode config: {e}")))
    }

    pub fn input_source(&self) -> Result<InputSource> {
        match (&self.input, &self.generate) {
            (Some(p), None) => Ok(InputSource::Csv(p.clone())),
            (None, Some(g)) => Ok(InputSource::Generate(g.parse()?)),
            (Some(_), Some(_)) => Err(Error::invalid("give either an input CSV or a generator, not both")),
            (None, None) => Err(Error::invalid("no input: give an input CSV or a generator")),
        }
    }

    pub fn graph_spec(&self) -> Result<GraphSpec> {
        Ok(GraphSpec::new(
            self.graph.parse::<GraphMethod>()?,
            self.weights.parse::<WeightKind>()?,
        ))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.gamma.parse()
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions {
            mode: self.path_mode,
            solver: self.solver.clone(),
            fusion_tolerance: self.fusion_tolerance,
        }
    }

    /// Checks every field that can be checked without reading the data.
    pub fn validate(&self) -> Result<()> {
        self.input_source()?;
        self.graph_spec()?;
        self.grid_spec()?;
        self.solver.validate()?;
        if !(self.fusion_tolerance > 0.0) {
            return Err(Error::invalid("fusion_tolerance must be positive"));
        }
        let s = &self.selection;
        if !(0.0..=1.0).contains(&s.zeta) {
            return Err(Error::invalid("zeta must lie in [0, 1]"));
        }
        if !(s.holdout_fraction > 0.0 && s.holdout_fraction < 1.0) {
            return Err(Error::invalid("holdout_fraction must lie in (0, 1)"));
        }
        let h = &self.harness;
        if h.recovery_trials == 0 || h.lipschitz_trials == 0 {
            return Err(Error::invalid("harness trial counts must be >= 1"));
        }
        if !(h.perturbation_scale > 0.0 && h.perturbation_scale.is_finite()) {
            return Err(Error::invalid("perturbation_scale must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig {
            generate: Some("half_moons".into()),
            ..RunConfig::default()
        };
        c.solver.gap_tolerance = 1e-9;
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = RunConfig::from_toml_str("mode = \"select\"\ngenerate = \"star_shaped\"\n[selection]\nzeta = 1.0\n")
            .unwrap();
        assert_eq!(c.mode, Mode::Select);
        assert_eq!(c.selection.zeta, 1.0);
        assert_eq!(c.graph, "mst+knn:3");
        c.validate().unwrap();
    }

    #[test]
    fn exactly_one_input() {
        let both = RunConfig {
            input: Some("x.csv".into()),
            generate: Some("half_moons".into()),
            ..RunConfig::default()
        };
        assert!(both.validate().is_err());
        assert!(RunConfig::default().validate().is_err());
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }
}
