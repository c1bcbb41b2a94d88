use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::missing::{solve_missing, MissingOptions};
use super::SelectionReport;
use crate::data::{median_pairwise_distance, DataMatrix};
use crate::error::{Error, Result};
use crate::graph::WeightGraph;
use crate::path::{FusionRule, FUSION_TOLERANCE};
use crate::rng;

pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.1;

/// Observed entries set aside for validation, as `(dim, observation)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoldoutPlan {
    pub fraction: f64,
    pub seed: u64,
    pub entries: Vec<(usize, usize)>,
}

impl HoldoutPlan {
    /// Draws `round(fraction * observed)` observed entries uniformly, skipping
    /// any whose removal would leave an observation with no observed entry.
    pub fn new(data: &DataMatrix, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(format!("holdout fraction {fraction} outside (0, 1)")));
        }
        let (p, n) = (data.dim(), data.len());
        let mut candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..p).map(move |k| (k, i)))
            .filter(|&(k, i)| data.is_observed(k, i))
            .collect();
        let target = (fraction * candidates.len() as f64).round() as usize;
        let mut remaining: Vec<usize> = (0..n)
            .map(|i| (0..p).filter(|&k| data.is_observed(k, i)).count())
            .collect();
        candidates.shuffle(&mut rng::stream(seed, "holdout"));
        let mut entries = Vec::with_capacity(target);
        for (k, i) in candidates {
            if entries.len() == target {
                break;
            }
            if remaining[i] > 1 {
                remaining[i] -= 1;
                entries.push((k, i));
            }
        }
        if entries.is_empty() {
            return Err(Error::invalid("holdout plan selects no entries"));
        }
        entries.sort_unstable_by_key(|&(k, i)| (i, k));
        Ok(Self {
            fraction,
            seed,
            entries,
        })
    }

    /// `data` with the held-out entries additionally marked missing.
    pub fn apply(&self, data: &DataMatrix) -> Result<DataMatrix> {
        let mut mask = data
            .mask()
            .cloned()
            .unwrap_or_else(|| DMatrix::from_element(data.dim(), data.len(), true));
        for &(k, i) in &self.entries {
            if !mask[(k, i)] {
                return Err(Error::invalid(format!("held-out entry ({k},{i}) is already missing")));
            }
            mask[(k, i)] = false;
        }
        DataMatrix::with_mask(data.values().clone(), Some(mask))
    }
}

/// Scores each `gamma` by the mean squared error of the held-out entries
/// predicted by the missing-data solution; `K` is read off the same solution.
pub fn holdout_select(
    data: &DataMatrix,
    graph: &WeightGraph,
    grid: &[f64],
    plan: &HoldoutPlan,
    options: &MissingOptions,
) -> Result<SelectionReport> {
    if plan.entries.is_empty() {
        return Err(Error::invalid("holdout plan is empty"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("empty gamma grid"));
    }
    let train = plan.apply(data)?;
    let rule = FusionRule {
        tolerance: FUSION_TOLERANCE,
        scale: median_pairwise_distance(&train.mean_imputed()),
    };
    let x = data.values();
    let rows = grid
        .par_iter()
        .map(|&gamma| {
            let sol = solve_missing(&train, graph, gamma, options)?;
            let err: f64 = plan
                .entries
                .iter()
                .map(|&(k, i)| (x[(k, i)] - sol.u()[(k, i)]).powi(2))
                .sum::<f64>()
                / plan.entries.len() as f64;
            let k = rule.detect(sol.u(), Some(&sol.state.v), graph).num_clusters();
            Ok((gamma, err, k))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = SelectionReport::new("holdout");
    for (gamma, err, k) in rows {
        report.push(gamma, err, k, false, true);
    }
    report.choose()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> DataMatrix {
        DataMatrix::new(DMatrix::from_fn(3, 8, |k, i| (k * 8 + i) as f64 * 0.1)).unwrap()
    }

    #[test]
    fn plan_is_seeded_and_keeps_coverage() {
        let d = data();
        let a = HoldoutPlan::new(&d, 0.5, 7).unwrap();
        let b = HoldoutPlan::new(&d, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries.len(), 12);
        let masked = a.apply(&d).unwrap();
        for i in 0..8 {
            assert!((0..3).any(|k| masked.is_observed(k, i)));
        }
        assert!(HoldoutPlan::new(&d, 0.0, 7).is_err());
        assert!(HoldoutPlan::new(&d, 1.0, 7).is_err());
    }

    #[test]
    fn plan_avoids_missing_entries() {
        let mut mask = DMatrix::from_element(3, 8, true);
        mask[(0, 0)] = false;
        let d = DataMatrix::with_mask(data().values().clone(), Some(mask)).unwrap();
        let plan = HoldoutPlan::new(&d, 0.9, 1).unwrap();
        assert!(!plan.entries.contains(&(0, 0)));
        assert!(plan.apply(&d).is_ok());
    }
}
