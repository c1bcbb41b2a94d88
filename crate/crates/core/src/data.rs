//! Observations and partitions.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `p x n` matrix whose column `i` is observation `x_i`, with an optional
/// observed-entry mask (`true` = observed).
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    mask: Option<DMatrix<bool>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        Self::with_mask(values, None)
    }

    pub fn with_mask(values: DMatrix<f64>, mask: Option<DMatrix<bool>>) -> Result<Self> {
        let (p, n) = values.shape();
        if p == 0 || n == 0 {
            return Err(Error::InvalidData(format!("empty data matrix ({p}x{n})")));
        }
        if let Some(m) = &mask {
            if m.shape() != (p, n) {
                return Err(Error::shape(format!(
                    "mask is {}x{}, data is {p}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            for i in 0..n {
                if !m.column(i).iter().any(|&o| o) {
                    return Err(Error::InvalidData(format!("observation {i} has no observed entry")));
                }
            }
        }
        for i in 0..n {
            for k in 0..p {
                let observed = mask.as_ref().is_none_or(|m| m[(k, i)]);
                if observed && !values[(k, i)].is_finite() {
                    return Err(Error::InvalidData(format!("non-finite entry at (dim {k}, obs {i})")));
                }
            }
        }
        // A mask with every entry observed carries no information.
        let mask = mask.filter(|m| m.iter().any(|&o| !o));
        Ok(Self { values, mask })
    }

    /// Builds from row-major observations, one inner `Vec` per observation.
    pub fn from_observations(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::shape("observations have differing dimensions"));
        }
        Self::new(DMatrix::from_fn(p, n, |k, i| rows[i][k]))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> Option<&DMatrix<bool>> {
        self.mask.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn is_observed(&self, dim: usize, obs: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[(dim, obs)])
    }

    /// 0/1 entry weights for the fit term; `None` when fully observed.
    pub fn entry_weights(&self) -> Option<DMatrix<f64>> {
        self.mask.as_ref().map(|m| m.map(|o| if o { 1.0 } else { 0.0 }))
    }

    pub fn observed_count(&self) -> usize {
        self.mask
            .as_ref()
            .map_or(self.values.len(), |m| m.iter().filter(|&&o| o).count())
    }

    /// Missing entries replaced by the mean of the observed entries of their
    /// row (feature). Rows with no observed entry are filled with zero.
    pub fn mean_imputed(&self) -> DMatrix<f64> {
        let Some(mask) = &self.mask else {
            return self.values.clone();
        };
        let mut out = self.values.clone();
        for k in 0..self.dim() {
            let (sum, cnt) = (0..self.len())
                .filter(|&i| mask[(k, i)])
                .fold((0.0, 0usize), |(s, c), i| (s + self.values[(k, i)], c + 1));
            let mean = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
            for i in 0..self.len() {
                if !mask[(k, i)] {
                    out[(k, i)] = mean;
                }
            }
        }
        out
    }

    pub fn column_mean(&self) -> DVector<f64> {
        self.values.column_mean()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.values.column(i) - self.values.column(j)).norm()
    }

    /// Copy with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_mask(&self.values * c, self.mask.clone())
    }

    /// Restricts to the given observations, in order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let values = self.values.select_columns(idx);
        let mask = self.mask.as_ref().map(|m| m.select_columns(idx));
        Self::with_mask(values, mask)
    }

    /// Collapses exactly repeated observations. Returns the distinct
    /// observations (first-occurrence order), their multiplicities and the
    /// map from original index to distinct index.
    pub fn merge_duplicates(&self) -> Result<Deduplicated> {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut keep = Vec::new();
        let mut multiplicity = Vec::new();
        let mut map = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            // Observed pattern is part of the key; -0.0 and 0.0 compare equal.
            let key: Vec<u64> = (0..self.dim())
                .map(|k| {
                    if self.is_observed(k, i) {
                        (self.values[(k, i)] + 0.0).to_bits()
                    } else {
                        u64::MAX
                    }
                })
                .collect();
            let next = keep.len();
            let slot = *seen.entry(key).or_insert(next);
            if slot == next {
                keep.push(i);
                multiplicity.push(0.0);
            }
            multiplicity[slot] += 1.0;
            map.push(slot);
        }
        Ok(Deduplicated {
            data: self.select(&keep)?,
            multiplicity,
            map,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Deduplicated {
    pub data: DataMatrix,
    pub multiplicity: Vec<f64>,
    /// `map[i]` is the distinct index of original observation `i`.
    pub map: Vec<usize>,
}

impl Deduplicated {
    pub fn has_duplicates(&self) -> bool {
        self.data.len() < self.map.len()
    }

    /// Copies columns of a distinct-observation matrix back to original order.
    pub fn expand(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.select_columns(&self.map)
    }

    pub fn expand_partition(&self, p: &Partition) -> Partition {
        Partition::from_labels(&self.map.iter().map(|&j| p.labels()[j]).collect::<Vec<_>>())
    }
}

/// Labels in `[0, K)` assigned in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Canonicalises arbitrary labels so block ids follow first appearance.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        Self { k: remap.len(), labels }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            k: n,
        }
    }

    pub fn single_block(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Member indices of each block, each list ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut b = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            b[l].push(i);
        }
        b
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            let c = coarser.labels[i];
            if image[l] == usize::MAX {
                image[l] = c;
            } else if image[l] != c {
                return false;
            }
        }
        true
    }

    /// Composes a partition of blocks (`outer`, over `0..K`) with `self`.
    pub fn coarsen(&self, outer: &Partition) -> Partition {
        Partition::from_labels(&self.labels.iter().map(|&l| outer.labels[l]).collect::<Vec<_>>())
    }

    /// Block means of the columns of `values`, as a `p x K` matrix.
    pub fn block_means(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        let mut means = DMatrix::zeros(values.nrows(), self.k);
        let sizes = self.sizes();
        for (i, &l) in self.labels.iter().enumerate() {
            let mut col = means.column_mut(l);
            col += values.column(i);
        }
        for (l, &s) in sizes.iter().enumerate() {
            means.column_mut(l).scale_mut(1.0 / s as f64);
        }
        means
    }

    /// Each column of `values` replaced by the mean of its block.
    pub fn broadcast_means(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        let means = self.block_means(values);
        means.select_columns(&self.labels)
    }
}

/// Median of all pairwise Euclidean distances between columns.
pub fn median_pairwise_distance(values: &DMatrix<f64>) -> f64 {
    let n = values.ncols();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push((values.column(i) - values.column(j)).norm());
        }
    }
    median(&mut d)
}

/// Median with the mean of the two middle values for even lengths; `0` when empty.
pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_column_without_observed_entry() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let mask = DMatrix::from_row_slice(2, 2, &[true, false, true, false]);
        assert!(DataMatrix::with_mask(v, Some(mask)).is_err());
    }

    #[test]
    fn masked_entries_may_be_nan() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 3.0, 4.0]);
        let mask = DMatrix::from_row_slice(2, 2, &[true, false, true, true]);
        let d = DataMatrix::with_mask(v, Some(mask)).unwrap();
        assert_eq!(d.mean_imputed()[(0, 1)], 1.0);
        assert_eq!(d.observed_count(), 3);
    }

    #[test]
    fn duplicates_collapse_with_multiplicity() {
        let d =
            DataMatrix::from_observations(&[vec![0.0, 1.0], vec![2.0, 2.0], vec![0.0, 1.0], vec![-0.0, 1.0]]).unwrap();
        let dd = d.merge_duplicates().unwrap();
        assert_eq!(dd.data.len(), 2);
        assert_eq!(dd.multiplicity, vec![3.0, 1.0]);
        assert_eq!(dd.map, vec![0, 1, 0, 0]);
    }

    #[test]
    fn partition_is_canonical() {
        let p = Partition::from_labels(&[7, 3, 7, 9]);
        assert_eq!(p.labels(), &[0, 1, 0, 2]);
        assert_eq!(p.num_clusters(), 3);
        assert_eq!(p.sizes(), vec![2, 1, 1]);
        assert!(p.refines(&Partition::from_labels(&[0, 1, 0, 0])));
        assert!(!p.refines(&Partition::from_labels(&[0, 1, 1, 2])));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
