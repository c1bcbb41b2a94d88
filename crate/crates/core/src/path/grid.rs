use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the `gamma` grid of a path is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridSpec {
    /// Nonnegative, strictly increasing values.
    Explicit { values: Vec<f64> },
    /// `count` log-spaced points from `gamma_max * lower_ratio` up to
    /// `upper` (defaults to `gamma_max`).
    Geometric {
        count: usize,
        lower_ratio: f64,
        upper: Option<f64>,
    },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Geometric {
            count: 50,
            lower_ratio: 1e-4,
            upper: None,
        }
    }
}

impl GridSpec {
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        check_increasing(&values)?;
        Ok(GridSpec::Explicit { values })
    }

    /// Whether resolving the grid needs `gamma_max`.
    pub fn needs_gamma_max(&self) -> bool {
        matches!(self, GridSpec::Geometric { upper: None, .. })
    }

    pub fn resolve(&self, gamma_max: Option<f64>) -> Result<Vec<f64>> {
        match self {
            GridSpec::Explicit { values } => {
                check_increasing(values)?;
                Ok(values.clone())
            }
            GridSpec::Geometric {
                count,
                lower_ratio,
                upper,
            } => {
                let hi = match upper.or(gamma_max) {
                    Some(h) => h,
                    None => {
                        return Err(Error::invalid(
                            "geometric grid needs gamma_max or an explicit upper end",
                        ))
                    }
                };
                if *count == 0 || !(*lower_ratio > 0.0 && *lower_ratio <= 1.0) {
                    return Err(Error::invalid(
                        "geometric grid needs count >= 1 and 0 < lower_ratio <= 1",
                    ));
                }
                if hi <= 0.0 {
                    // Nothing to fuse (single point, or an edgeless graph).
                    return Ok(vec![0.0]);
                }
                Ok(geometric(hi * lower_ratio, hi, *count))
            }
        }
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[count - 1] = hi;
    v
}

fn check_increasing(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("empty gamma grid"));
    }
    if values.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("gamma values must be finite and >= 0"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("gamma grid must be strictly increasing"));
    }
    Ok(())
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `0.5`, `0.1,0.2,0.4`, `geom:COUNT[:LOWER_RATIO[:UPPER]]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("bad grid spec '{s}'"));
        if let Some(rest) = s.strip_prefix("geom:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let count = parts[0].parse().map_err(|_| bad())?;
            let lower_ratio = match parts.get(1) {
                Some(r) => r.parse().map_err(|_| bad())?,
                None => 1e-4,
            };
            let upper = parts.get(2).map(|u| u.parse()).transpose().map_err(|_| bad())?;
            if parts.len() > 3 {
                return Err(bad());
            }
            return Ok(GridSpec::Geometric {
                count,
                lower_ratio,
                upper,
            });
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        GridSpec::explicit(values)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Explicit { values } => {
                let v: Vec<String> = values.iter().map(|g| g.to_string()).collect();
                write!(f, "{}", v.join(","))
            }
            GridSpec::Geometric {
                count,
                lower_ratio,
                upper: None,
            } => write!(f, "geom:{count}:{lower_ratio}"),
            GridSpec::Geometric {
                count,
                lower_ratio,
                upper: Some(u),
            } => write!(f, "geom:{count}:{lower_ratio}:{u}"),
        }
    }
}
