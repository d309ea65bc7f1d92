#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sigscene::clustering::OUTLIER;
use sigscene::embedding::DistanceMatrix;
use sigscene::linalg::RowMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> RowMatrix {
    let data = (0..n * d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    RowMatrix::new(n, d, data).unwrap()
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// DBSCAN straight from the definition: core flags, transitive closure of
/// the core adjacency, then borders to the lowest-index core neighbour.
pub fn brute_dbscan(dist: &DistanceMatrix, eps: f64, min_pts: usize) -> Vec<i64> {
    let n = dist.len();
    let near = |i: usize, j: usize| dist.get(i, j) <= eps;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts)
        .collect();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && near(i, j);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    // component id = smallest core index reachable
    let comp = |i: usize| (0..n).find(|&j| reach[i][j]).unwrap();
    let mut labels = vec![OUTLIER; n];
    for i in 0..n {
        if core[i] {
            labels[i] = comp(i) as i64;
        } else if let Some(c) = (0..n).find(|&j| core[j] && near(i, j)) {
            labels[i] = comp(c) as i64;
        }
    }
    labels
}

/// True when two labellings induce the same partition and the same outliers.
pub fn same_partition(a: &[i64], b: &[i64]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| {
            (a[i] == OUTLIER) == (b[i] == OUTLIER)
                && (0..a.len()).all(|j| a[i] == OUTLIER || ((a[i] == a[j]) == (b[i] == b[j])))
        })
}

pub fn random_distance(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
    // uniform points in the unit square, scaled so distances stay in [0, 1]
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    DistanceMatrix::from_fn(n, |i, j| {
        let dx = pts[i][0] - pts[j][0];
        let dy = pts[i][1] - pts[j][1];
        ((dx * dx + dy * dy).sqrt() / 2f64.sqrt()).min(1.0)
    })
    .unwrap()
}
