use nalgebra::DMatrix;

use super::SelectionReport;
use crate::error::{Error, Result};
use crate::path::ClusterPath;

/// Default eBIC exponent on the model-space term.
pub const DEFAULT_ZETA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct EbicOptions {
    pub zeta: f64,
    /// Snapshots with more clusters than this are scored but cannot be chosen.
    /// `None` means `n / 2`: closer to saturation the variance estimate
    /// `RSS / N` collapses and the score rewards interpolation.
    pub max_clusters: Option<usize>,
}

impl Default for EbicOptions {
    fn default() -> Self {
        Self {
            zeta: DEFAULT_ZETA,
            max_clusters: None,
        }
    }
}

/// `N log(RSS/N) + df log N + 2 zeta df log n` with `N = n p`, `df = K p`.
/// Returns the score and whether RSS was raised to the floor.
pub fn ebic_score(rss: f64, n: usize, p: usize, k: usize, zeta: f64, floor: f64) -> (f64, bool) {
    let big_n = (n * p) as f64;
    let df = (k * p) as f64;
    let floored = rss < floor;
    let rss = rss.max(floor);
    let score = big_n * (rss / big_n).ln() + df * big_n.ln() + 2.0 * zeta * df * (n as f64).ln();
    (score, floored)
}

/// Residual sum of squares of the data against the path centroids.
fn rss(x: &DMatrix<f64>, u: &DMatrix<f64>) -> f64 {
    (x - u).norm_squared()
}

/// Scores every snapshot of `path` by eBIC against the data `x` it was computed from.
///
/// An exact fit (RSS below `eps * ||X - mean||^2`) is scored at that floor and flagged.
pub fn ebic_select(path: &ClusterPath, x: &DMatrix<f64>, options: &EbicOptions) -> Result<SelectionReport> {
    if !(0.0..=1.0).contains(&options.zeta) {
        return Err(Error::invalid(format!("zeta={} outside [0, 1]", options.zeta)));
    }
    if path.is_empty() {
        return Err(Error::invalid("empty path"));
    }
    let (p, n) = x.shape();
    let mean = x.column_mean();
    let spread: f64 = x.column_iter().map(|c| (c - &mean).norm_squared()).sum();
    let floor = f64::EPSILON * spread.max(f64::MIN_POSITIVE);
    let mut report = SelectionReport::new("ebic");
    for s in &path.snapshots {
        if s.u.shape() != x.shape() {
            return Err(Error::shape("path centroids and data differ in shape"));
        }
        let k = s.num_clusters();
        let (score, floored) = ebic_score(rss(x, &s.u), n, p, k, options.zeta, floor);
        let eligible = k <= options.max_clusters.unwrap_or((n / 2).max(1));
        report.push(s.gamma, score, k, floored, eligible);
    }
    report.choose()?;
    Ok(report)
}
