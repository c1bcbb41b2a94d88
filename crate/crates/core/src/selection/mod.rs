//! Missing data, choice of `gamma`, and clustering metrics.

mod ari;
mod ebic;
mod holdout;
mod lla;
mod missing;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt_f64;

pub use ari::adjusted_rand_index;
pub use ebic::{ebic_score, ebic_select, EbicOptions, DEFAULT_ZETA};
pub use holdout::{holdout_select, HoldoutPlan, DEFAULT_HOLDOUT_FRACTION};
pub use lla::{folded_concave_objective, lla_reweight, LlaPenalty};
pub use missing::{solve_missing, MissingOptions, MissingSolution};

/// Per-`gamma` scores and the chosen point (minimum score, ties to the larger `gamma`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    pub criterion: String,
    pub gammas: Vec<f64>,
    pub scores: Vec<f64>,
    pub clusters: Vec<usize>,
    /// Scores computed with a floored residual.
    pub floored: Vec<bool>,
    /// Whether each point may be chosen.
    pub eligible: Vec<bool>,
    pub chosen_index: usize,
    pub chosen_gamma: f64,
    pub chosen_clusters: usize,
}

impl SelectionReport {
    fn new(criterion: &str) -> Self {
        Self {
            criterion: criterion.to_string(),
            gammas: Vec::new(),
            scores: Vec::new(),
            clusters: Vec::new(),
            floored: Vec::new(),
            eligible: Vec::new(),
            chosen_index: 0,
            chosen_gamma: f64::NAN,
            chosen_clusters: 0,
        }
    }

    fn push(&mut self, gamma: f64, score: f64, k: usize, floored: bool, eligible: bool) {
        self.gammas.push(gamma);
        self.scores.push(score);
        self.clusters.push(k);
        self.floored.push(floored);
        self.eligible.push(eligible);
    }

    fn choose(&mut self) -> Result<()> {
        let mut best: Option<usize> = None;
        for i in 0..self.scores.len() {
            if !self.eligible[i] || self.scores[i].is_nan() {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    self.scores[i] < self.scores[b]
                        || (self.scores[i] == self.scores[b] && self.gammas[i] > self.gammas[b])
                }
            };
            if better {
                best = Some(i);
            }
        }
        let b = best.ok_or_else(|| Error::invalid("no eligible grid point to choose from"))?;
        self.chosen_index = b;
        self.chosen_gamma = self.gammas[b];
        self.chosen_clusters = self.clusters[b];
        Ok(())
    }

    /// `gamma,score,K`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "gamma,score,K")?;
        for ((g, s), k) in self.gammas.iter().zip(&self.scores).zip(&self.clusters) {
            writeln!(out, "{},{},{k}", fmt_f64(*g), fmt_f64(*s))?;
        }
        Ok(())
    }
}
