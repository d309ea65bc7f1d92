use rayon::prelude::*;

use super::dbscan::{check_params, dbscan};
use super::ClusterAssignment;
use crate::embedding::DistanceMatrix;
use crate::error::{Error, Result};
use crate::linalg::RowMatrix;

/// Parameter grid for the DBSCAN ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub eps_grid: Vec<f64>,
    pub min_pts_grid: Vec<usize>,
    pub consensus_threshold: f64,
}

impl EnsembleConfig {
    pub const DEFAULT_EPS_FACTORS: [f64; 3] = [0.75, 1.0, 1.25];
    pub const DEFAULT_MIN_PTS: [usize; 2] = [2, 3];
    pub const DEFAULT_CONSENSUS: f64 = 0.5;

    /// Default grid centred on a data-driven radius estimate.
    pub fn around(eps: f64) -> Self {
        Self {
            eps_grid: Self::DEFAULT_EPS_FACTORS
                .iter()
                .map(|f| (f * eps).clamp(f64::MIN_POSITIVE, 1.0))
                .collect(),
            min_pts_grid: Self::DEFAULT_MIN_PTS.to_vec(),
            consensus_threshold: Self::DEFAULT_CONSENSUS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_grid.is_empty() || self.min_pts_grid.is_empty() {
            return Err(Error::invalid("ensemble grids must be non-empty"));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::invalid(format!("eps {e} outside (0, 1]")));
        }
        if let Some(m) = self.min_pts_grid.iter().find(|m| **m < 2) {
            return Err(Error::invalid(format!("min_pts {m} below 2")));
        }
        let t = self.consensus_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::invalid(format!(
                "consensus threshold {t} outside (0, 1]"
            )));
        }
        Ok(())
    }
}

/// Fraction of ensemble runs in which each pair shared a cluster. Outliers
/// co-cluster with nothing; the diagonal is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CoassociationMatrix {
    ids: Vec<String>,
    entries: RowMatrix,
}

impl CoassociationMatrix {
    pub fn new(ids: Vec<String>, entries: RowMatrix) -> Result<Self> {
        let n = ids.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::invalid("co-association matrix must be n x n"));
        }
        Ok(Self { ids, entries })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn to_distance(&self) -> Result<DistanceMatrix> {
        let n = self.len();
        let mut d = RowMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    d.row_mut(i)[j] = 1.0 - self.get(i, j);
                }
            }
        }
        DistanceMatrix::new(self.ids.clone(), d)
    }
}

/// Runs DBSCAN on every `(eps, min_pts)` pair of the grid, accumulates the
/// co-association matrix and extracts the consensus partition with a final
/// DBSCAN on `1 − coassociation` at radius `1 − consensus_threshold`.
pub fn ensemble_cluster(
    dist: &DistanceMatrix,
    config: &EnsembleConfig,
) -> Result<(CoassociationMatrix, ClusterAssignment)> {
    config.validate()?;
    let grid: Vec<(f64, usize)> = config
        .eps_grid
        .iter()
        .flat_map(|&e| config.min_pts_grid.iter().map(move |&m| (e, m)))
        .collect();
    let runs: Vec<ClusterAssignment> = grid
        .par_iter()
        .map(|&(eps, min_pts)| {
            dbscan(dist, eps, min_pts).map_err(|e| Error::GridPoint {
                eps,
                min_pts,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let n = dist.len();
    let mut counts = vec![0u32; n * n];
    for run in &runs {
        let l = run.labels();
        for i in 0..n {
            if l[i] < 0 {
                continue;
            }
            for j in i + 1..n {
                if l[j] == l[i] {
                    counts[i * n + j] += 1;
                }
            }
        }
    }
    let total = runs.len() as f64;
    let mut entries = RowMatrix::zeros(n, n);
    for i in 0..n {
        entries.row_mut(i)[i] = 1.0;
        for j in i + 1..n {
            let v = counts[i * n + j] as f64 / total;
            entries.row_mut(i)[j] = v;
            entries.row_mut(j)[i] = v;
        }
    }
    let coassoc = CoassociationMatrix {
        ids: dist.ids().to_vec(),
        entries,
    };
    let consensus_eps = (1.0 - config.consensus_threshold).max(f64::EPSILON);
    let min_pts = *config
        .min_pts_grid
        .iter()
        .min()
        .expect("validated non-empty");
    check_params(consensus_eps, min_pts)?;
    let assignment = dbscan(&coassoc.to_distance()?, consensus_eps, min_pts)?;
    Ok((coassoc, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::adjusted_rand_index;

    fn cliques() -> DistanceMatrix {
        DistanceMatrix::from_fn(7, |i, j| {
            if i == 6 || j == 6 {
                0.95
            } else if (i < 3) == (j < 3) {
                0.1
            } else {
                0.7
            }
        })
        .unwrap()
    }

    #[test]
    fn singleton_grid_matches_single_run() {
        let d = cliques();
        let config = EnsembleConfig {
            eps_grid: vec![0.2],
            min_pts_grid: vec![2],
            consensus_threshold: 0.5,
        };
        let (co, a) = ensemble_cluster(&d, &config).unwrap();
        let single = dbscan(&d, 0.2, 2).unwrap();
        assert_eq!(adjusted_rand_index(a.labels(), single.labels()), 1.0);
        assert_eq!(a.labels(), single.labels());
        for i in 0..7 {
            for j in 0..7 {
                let v = co.get(i, j);
                assert!(v == 0.0 || v == 1.0);
            }
        }
    }

    #[test]
    fn agreeing_runs_reproduce_partition() {
        let d = cliques();
        let config = EnsembleConfig {
            eps_grid: vec![0.15, 0.2, 0.3],
            min_pts_grid: vec![2, 3],
            consensus_threshold: 0.5,
        };
        let (co, a) = ensemble_cluster(&d, &config).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0, 1, 1, 1, -1]);
        assert_eq!(co.get(0, 1), 1.0);
        assert_eq!(co.get(0, 4), 0.0);
        assert_eq!(co.get(6, 6), 1.0);
        assert_eq!(co.get(6, 0), 0.0);
    }

    #[test]
    fn partial_agreement_uses_threshold() {
        // Groups {0,1,2} and {3,4,5} at 0.1 internally, 0.25 apart: merged only
        // in runs with eps ≥ 0.25.
        let d =
            DistanceMatrix::from_fn(6, |i, j| if (i < 3) == (j < 3) { 0.1 } else { 0.25 }).unwrap();
        let mut config = EnsembleConfig {
            eps_grid: vec![0.15, 0.3],
            min_pts_grid: vec![2],
            consensus_threshold: 0.5,
        };
        let (co, a) = ensemble_cluster(&d, &config).unwrap();
        assert_eq!(co.get(0, 3), 0.5);
        assert_eq!(a.n_clusters(), 1);
        config.consensus_threshold = 0.75;
        let (_, a) = ensemble_cluster(&d, &config).unwrap();
        assert_eq!(a.n_clusters(), 2);
    }

    #[test]
    fn bad_config_rejected() {
        let d = cliques();
        let mut c = EnsembleConfig::around(0.2);
        c.eps_grid.push(1.5);
        assert!(ensemble_cluster(&d, &c).is_err());
        let mut c = EnsembleConfig::around(0.2);
        c.min_pts_grid = vec![1];
        assert!(ensemble_cluster(&d, &c).is_err());
        let mut c = EnsembleConfig::around(0.2);
        c.consensus_threshold = 0.0;
        assert!(ensemble_cluster(&d, &c).is_err());
    }

    #[test]
    fn default_grid_is_centred() {
        let c = EnsembleConfig::around(0.2);
        assert_eq!(c.eps_grid, vec![0.75 * 0.2, 0.2, 1.25 * 0.2]);
        assert_eq!(c.min_pts_grid, vec![2, 3]);
        assert_eq!(c.consensus_threshold, 0.5);
        assert_eq!(EnsembleConfig::around(0.9).eps_grid[2], 1.0);
    }
}
