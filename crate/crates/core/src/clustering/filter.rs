use nalgebra::DMatrix;
use serde::Serialize;

use super::{ClusterAssignment, CoassociationMatrix, OUTLIER};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{column_std, covariance, symmetric_eigen_desc, RowMatrix};
use crate::sigreg::{validate_cluster_gaussian, IsotropyThresholds, IsotropyVerdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub thresholds: IsotropyThresholds,
    /// Clusters smaller than this are demoted to outliers.
    pub min_cluster_size: usize,
    /// Members needed per tested covariance dimension. A cluster of `n`
    /// images is tested on its leading `(n − 1) / samples_per_dim` principal
    /// directions, capped at the embedding's intrinsic dimension.
    pub samples_per_dim: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            thresholds: IsotropyThresholds::default(),
            min_cluster_size: 3,
            samples_per_dim: 4,
        }
    }
}

/// Outcome of validating one cluster. `verdict` is `None` when the cluster
/// is too small for any covariance dimension to be tested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterValidation {
    pub size: usize,
    pub subspace_dim: usize,
    pub verdict: Option<IsotropyVerdict>,
}

impl ClusterValidation {
    pub fn passes(&self) -> bool {
        self.verdict.is_none_or(|v| v.passes)
    }

    pub fn fails_ratio(&self) -> bool {
        self.verdict.is_some_and(|v| !v.is_isotropic)
    }
}

/// Per-coordinate scale of the whole set; constant coordinates get scale 1.
pub fn global_scale(set: &EmbeddingSet) -> Vec<f64> {
    column_std(set.matrix())
        .into_iter()
        .map(|s| if s > 1e-12 { s } else { 1.0 })
        .collect()
}

struct Centered {
    rows: RowMatrix,
    eigenvectors: DMatrix<f64>,
}

fn centered_spectrum(set: &EmbeddingSet, members: &[usize], scale: &[f64]) -> Result<Centered> {
    let scaled = set.matrix().select_rows(members).map_rows(|src, dst| {
        for (k, out) in dst.iter_mut().enumerate() {
            *out = src[k] / scale[k];
        }
    });
    let (mean, cov) = covariance(&scaled)?;
    let rows = scaled.map_rows(|src, dst| {
        for (k, out) in dst.iter_mut().enumerate() {
            *out = src[k] - mean[k];
        }
    });
    let (_, eigenvectors) = symmetric_eigen_desc(&cov);
    Ok(Centered { rows, eigenvectors })
}

/// Isotropy check of one cluster: members are centred on the cluster mean,
/// divided by the global per-coordinate scale and projected on the leading
/// principal directions the cluster size can support, then passed through
/// [`validate_cluster_gaussian`]. Normalized embeddings lie on a sphere, so
/// at most `d − 1` directions are used for them.
pub fn validate_cluster(
    set: &EmbeddingSet,
    members: &[usize],
    scale: &[f64],
    config: &FilterConfig,
) -> Result<ClusterValidation> {
    let size = members.len();
    let intrinsic = if set.is_normalized() {
        set.dim() - 1
    } else {
        set.dim()
    };
    let subspace_dim = (size.saturating_sub(1) / config.samples_per_dim.max(1)).min(intrinsic);
    if subspace_dim < 2 {
        return Ok(ClusterValidation {
            size,
            subspace_dim,
            verdict: None,
        });
    }
    let c = centered_spectrum(set, members, scale)?;
    let projected = c.rows.map_rows_to(subspace_dim, |src, dst| {
        for (k, out) in dst.iter_mut().enumerate() {
            *out = c
                .eigenvectors
                .column(k)
                .iter()
                .zip(src)
                .map(|(a, b)| a * b)
                .sum();
        }
    });
    let verdict = validate_cluster_gaussian(&projected, &config.thresholds)?;
    Ok(ClusterValidation {
        size,
        subspace_dim,
        verdict: Some(verdict),
    })
}

/// Optimal two-way split of the members along the cluster's first
/// principal component (exact 1-D 2-means).
fn split_on_first_component(
    set: &EmbeddingSet,
    members: &[usize],
    scale: &[f64],
) -> Result<(Vec<usize>, Vec<usize>)> {
    let c = centered_spectrum(set, members, scale)?;
    let pc = c.eigenvectors.column(0);
    let mut proj: Vec<(f64, usize)> = c
        .rows
        .rows()
        .zip(members)
        .map(|(r, &m)| (pc.iter().zip(r).map(|(a, b)| a * b).sum(), m))
        .collect();
    proj.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = proj.len();
    let mut prefix = vec![(0.0, 0.0); n + 1];
    for (i, (x, _)) in proj.iter().enumerate() {
        prefix[i + 1] = (prefix[i].0 + x, prefix[i].1 + x * x);
    }
    let sse = |lo: usize, hi: usize| {
        let (s, sq) = (prefix[hi].0 - prefix[lo].0, prefix[hi].1 - prefix[lo].1);
        sq - s * s / (hi - lo) as f64
    };
    let cut = (1..n)
        .min_by(|&a, &b| {
            (sse(0, a) + sse(a, n))
                .total_cmp(&(sse(0, b) + sse(b, n)))
                .then(a.cmp(&b))
        })
        .unwrap_or(1);
    let mut left: Vec<usize> = proj[..cut].iter().map(|p| p.1).collect();
    let mut right: Vec<usize> = proj[cut..].iter().map(|p| p.1).collect();
    left.sort_unstable();
    right.sort_unstable();
    Ok((left, right))
}

/// Removes clusters that do not look like a single isotropic scene.
///
/// Clusters below `min_cluster_size` become outliers. A cluster failing the
/// eigenvalue-ratio test is split once along its first principal component;
/// each half is revalidated and demoted if it is too small or still fails.
pub fn sigreg_filter(
    assignment: &ClusterAssignment,
    set: &EmbeddingSet,
    config: &FilterConfig,
) -> Result<ClusterAssignment> {
    if assignment.ids() != set.ids() {
        return Err(Error::IdMismatch(
            "assignment and embedding ids differ".into(),
        ));
    }
    let scale = global_scale(set);
    let mut labels = vec![OUTLIER; assignment.len()];
    let mut next = 0i64;
    let mut keep = |members: &[usize], labels: &mut [i64]| {
        for &m in members {
            labels[m] = next;
        }
        next += 1;
    };
    for members in assignment.clusters() {
        if members.len() < config.min_cluster_size {
            continue;
        }
        let v = validate_cluster(set, &members, &scale, config)?;
        if !v.fails_ratio() {
            keep(&members, &mut labels);
            continue;
        }
        let (left, right) = split_on_first_component(set, &members, &scale)?;
        for half in [left, right] {
            if half.len() < config.min_cluster_size {
                continue;
            }
            if validate_cluster(set, &half, &scale, config)?.passes() {
                keep(&half, &mut labels);
            }
        }
    }
    Ok(ClusterAssignment::canonical(set.ids().to_vec(), labels))
}

/// Demotes the least-attached clustered images until at least
/// `target_fraction` of all images are outliers. Attachment is the mean
/// co-association with the other members of the image's own cluster; ties go
/// to the smaller id. Outliers are never promoted.
pub fn target_outlier_rate(
    assignment: &ClusterAssignment,
    coassoc: &CoassociationMatrix,
    target_fraction: f64,
) -> Result<ClusterAssignment> {
    if !(0.0..1.0).contains(&target_fraction) {
        return Err(Error::invalid(format!(
            "target fraction {target_fraction} outside [0, 1)"
        )));
    }
    if assignment.ids() != coassoc.ids() {
        return Err(Error::IdMismatch(
            "assignment and co-association ids differ".into(),
        ));
    }
    let n = assignment.len();
    let needed = (target_fraction * n as f64).ceil() as usize;
    let current = assignment.outlier_count();
    if current >= needed {
        return Ok(assignment.clone());
    }
    let clusters = assignment.clusters();
    let mut attachment: Vec<(f64, usize)> = Vec::new();
    for members in &clusters {
        for &i in members {
            let others = members.len() - 1;
            let mean = if others == 0 {
                0.0
            } else {
                members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| coassoc.get(i, j))
                    .sum::<f64>()
                    / others as f64
            };
            attachment.push((mean, i));
        }
    }
    let ids = assignment.ids();
    attachment.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| ids[a.1].cmp(&ids[b.1])));
    let mut labels = assignment.labels().to_vec();
    for &(_, i) in attachment.iter().take(needed - current) {
        labels[i] = OUTLIER;
    }
    Ok(ClusterAssignment::canonical(ids.to_vec(), labels))
}
