use std::collections::VecDeque;

use super::{ClusterAssignment, OUTLIER};
use crate::embedding::DistanceMatrix;
use crate::error::{Error, Result};

pub(crate) fn check_params(eps: f64, min_pts: usize) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if min_pts < 2 {
        return Err(Error::invalid(format!(
            "min_pts must be at least 2, got {min_pts}"
        )));
    }
    Ok(())
}

/// DBSCAN over a precomputed metric.
///
/// A point is core when at least `min_pts` points, itself included, lie
/// within distance `eps` (inclusive). Clusters are the connected components
/// of core points; a border point joins the cluster of its lowest-index core
/// neighbour. Clusters are numbered by their lowest core index, which makes
/// the labels canonical.
pub fn dbscan(dist: &DistanceMatrix, eps: f64, min_pts: usize) -> Result<ClusterAssignment> {
    check_params(eps, min_pts)?;
    let n = dist.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist.get(i, j) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![OUTLIER; n];
    let mut next = 0i64;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core[seed] || labels[seed] != OUTLIER {
            continue;
        }
        labels[seed] = next;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbours[p] {
                if core[q] && labels[q] == OUTLIER {
                    labels[q] = next;
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if !core[i] {
            if let Some(&c) = neighbours[i].iter().find(|&&j| core[j]) {
                labels[i] = labels[c];
            }
        }
    }
    // Border points can break first-appearance order.
    Ok(ClusterAssignment::canonical(dist.ids().to_vec(), labels))
}

/// Data-driven DBSCAN radius: each point's `k`-th nearest-neighbour
/// distance, sorted descending, cut at the knee of that curve (the point
/// lying furthest below the chord joining its ends). A flat curve falls back
/// to the median `k`-distance.
pub fn estimate_eps(dist: &DistanceMatrix, k: usize) -> Result<f64> {
    let n = dist.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n <= k {
        return Err(Error::TooFewSamples {
            needed: k + 1,
            got: n,
        });
    }
    let mut kdist: Vec<f64> = (0..n)
        .map(|i| {
            let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist.get(i, j)).collect();
            others.sort_by(f64::total_cmp);
            others[k - 1]
        })
        .collect();
    kdist.sort_by(|a, b| b.total_cmp(a));

    let (first, last) = (kdist[0], kdist[n - 1]);
    let span = (n - 1).max(1) as f64;
    let mut best = (0.0, 0usize);
    for (i, &y) in kdist.iter().enumerate() {
        let chord = first + (last - first) * i as f64 / span;
        let gap = chord - y;
        if gap > best.0 {
            best = (gap, i);
        }
    }
    if best.0 < 1e-9 {
        return Ok(median_sorted_desc(&kdist));
    }
    Ok(kdist[best.1])
}

fn median_sorted_desc(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
