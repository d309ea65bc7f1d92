//! Scene discovery: DBSCAN over a precomputed distance matrix, a
//! parameter-grid ensemble with co-association consensus, isotropy-based
//! post-filtering and outlier-rate targeting.

mod dbscan;
mod ensemble;
mod filter;
mod metrics;

use std::collections::HashMap;

pub use dbscan::{dbscan, estimate_eps};
pub use ensemble::{ensemble_cluster, CoassociationMatrix, EnsembleConfig};
pub use filter::{
    global_scale, sigreg_filter, target_outlier_rate, validate_cluster, ClusterValidation,
    FilterConfig,
};
pub use metrics::adjusted_rand_index;

use crate::error::{Error, Result};

/// Label used for images that belong to no scene.
pub const OUTLIER: i64 = -1;

/// Per-image scene labels: `0..K` for scenes, [`OUTLIER`] otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    ids: Vec<String>,
    labels: Vec<i64>,
}

impl ClusterAssignment {
    /// Wraps raw labels and canonicalizes them. Any negative label is read as
    /// an outlier.
    pub fn new(ids: Vec<String>, labels: Vec<i64>) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} ids but {} labels",
                ids.len(),
                labels.len()
            )));
        }
        Ok(Self::canonical(ids, labels))
    }

    pub(crate) fn canonical(ids: Vec<String>, mut labels: Vec<i64>) -> Self {
        canonicalize(&mut labels);
        Self { ids, labels }
    }

    pub fn all_outliers(ids: Vec<String>) -> Self {
        let labels = vec![OUTLIER; ids.len()];
        Self { ids, labels }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.labels
            .iter()
            .copied()
            .max()
            .map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OUTLIER).count()
    }

    pub fn outlier_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.outlier_count() as f64 / self.len() as f64
        }
    }

    /// Member indices of every cluster, indexed by label.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }

    /// Reorders to match `ids`, which must be a permutation of this
    /// assignment's ids.
    pub fn aligned_to(&self, ids: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        if index.len() != ids.len() {
            return Err(Error::IdMismatch(format!(
                "{} assigned images vs {} expected",
                index.len(),
                ids.len()
            )));
        }
        let mut labels = Vec::with_capacity(ids.len());
        for id in ids {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| Error::IdMismatch(format!("{id:?} has no label")))?;
            labels.push(self.labels[i]);
        }
        Ok(Self::canonical(ids.to_vec(), labels))
    }
}

/// Relabels non-negative labels to `0..K` in first-appearance order and
/// maps every negative label to [`OUTLIER`].
pub fn canonicalize(labels: &mut [i64]) {
    let mut map = HashMap::new();
    for l in labels.iter_mut() {
        if *l < 0 {
            *l = OUTLIER;
        } else {
            let next = map.len() as i64;
            *l = *map.entry(*l).or_insert(next);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_labels() {
        let mut l = vec![5, -3, 5, 2, 9, 2, -1];
        canonicalize(&mut l);
        assert_eq!(l, vec![0, -1, 0, 1, 2, 1, -1]);
    }

    #[test]
    fn assignment_summary() {
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let a = ClusterAssignment::new(ids.clone(), vec![7, -1, 7, 3]).unwrap();
        assert_eq!(a.labels(), &[0, -1, 0, 1]);
        assert_eq!(a.n_clusters(), 2);
        assert_eq!(a.outlier_count(), 1);
        assert_eq!(a.clusters(), vec![vec![0, 2], vec![3]]);
        let rev: Vec<String> = ids.iter().rev().cloned().collect();
        let b = a.aligned_to(&rev).unwrap();
        assert_eq!(b.labels(), &[0, 1, -1, 1]);
        assert!(a.aligned_to(&ids[..3]).is_err());
        assert!(ClusterAssignment::new(ids, vec![0]).is_err());
    }
}
