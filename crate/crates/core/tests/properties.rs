//! Oracle and invariant checks across modules.

mod common;

use std::collections::{HashMap, HashSet};

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use proptest::prelude::*;
use rand::Rng;
use sigscene::clustering::{
    adjusted_rand_index, dbscan, ensemble_cluster, global_scale, sigreg_filter, validate_cluster,
    ClusterAssignment, EnsembleConfig, FilterConfig, OUTLIER,
};
use sigscene::embedding::{pairwise_similarity, DistanceMatrix, SimilarityMethod};
use sigscene::linalg::{covariance, RowMatrix};
use sigscene::pose::{look_at, CameraPose};
use sigscene::scoring::{
    match_clusters, relative_pose_error, score_dataset, GroundTruth, DEFAULT_THRESHOLDS_DEG,
};
use sigscene::sigreg::{
    cluster_stats, critical_value, epps_pulley_1d, random_slices, sliced_isotropy,
    validate_cluster_gaussian, IsotropyThresholds,
};
use sigscene::synth::{generate_dataset, SynthSpec};

use common::*;

/// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

#[test]
fn cluster_stats_matches_jacobi_oracle() {
    let m = normal_matrix(&mut rng(11), 200, 8);
    let stats = cluster_stats(&m).unwrap();
    let (_, cov) = covariance(&m).unwrap();
    let dense: Vec<Vec<f64>> = (0..8)
        .map(|i| (0..8).map(|j| cov[(i, j)]).collect())
        .collect();
    let oracle = jacobi_eigenvalues(dense);
    for (a, b) in stats.eigenvalues.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn epps_pulley_calibrated_examples() {
    let mut r = rng(12);
    let normal = normal_vec(&mut r, 1000);
    assert!(epps_pulley_1d(&normal).unwrap() < critical_value(1000, 0.05).unwrap());
    let uniform: Vec<f64> = (0..500).map(|_| r.random::<f64>()).collect();
    assert!(epps_pulley_1d(&uniform).unwrap() > critical_value(500, 0.05).unwrap());
}

#[test]
fn sliced_isotropy_examples() {
    let m = normal_matrix(&mut rng(13), 500, 16);
    let report = sliced_isotropy(&m, 32, 7, 0.05).unwrap();
    assert!(report.pass_fraction >= 0.85, "{}", report.pass_fraction);
    for d in &report.directions {
        assert!((d.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-9);
    }

    let mut r = rng(14);
    let skewed = normal_matrix(&mut r, 500, 16).map_rows(|src, dst| {
        dst.copy_from_slice(src);
        dst[0] *= 10.0;
    });
    let mut k = 0;
    let bimodal = skewed.map_rows(|src, dst| {
        dst.copy_from_slice(src);
        let shift = if k % 2 == 0 { 5.0 } else { -5.0 };
        k += 1;
        for x in dst.iter_mut() {
            *x += shift;
        }
    });
    let report = sliced_isotropy(&bimodal, 32, 7, 0.05).unwrap();
    assert!(report.pass_fraction <= 0.5, "{}", report.pass_fraction);

    let single = sliced_isotropy(&m, 1, 3, 0.05).unwrap();
    assert!(single.pass_fraction == 0.0 || single.pass_fraction == 1.0);
}

#[test]
fn random_slices_are_spread() {
    let s = random_slices(16, 64, 21);
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..64 {
        for j in i + 1..64 {
            total += s[i]
                .iter()
                .zip(&s[j])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs();
            pairs += 1;
        }
    }
    assert!(total / (pairs as f64) < 0.5);
}

fn random_rotation(r: &mut impl Rng, d: usize) -> Vec<Vec<f64>> {
    // Gram-Schmidt on a Gaussian matrix
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d)
            .map(|_| r.sample(rand_distr::StandardNormal))
            .collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdict_invariant_under_rotation_and_permutation(seed in any::<u64>(), n in 5usize..60, d in 2usize..7, shift in 0.0f64..2.0) {
        let mut r = rng(seed);
        let m = normal_matrix(&mut r, n, d).map_rows(|src, dst| {
            for (o, x) in dst.iter_mut().zip(src) {
                *o = x + shift;
            }
        });
        let t = IsotropyThresholds::default();
        let base = cluster_stats(&m).unwrap();
        let v = validate_cluster_gaussian(&m, &t).unwrap();
        prop_assert!(v.eigenvalue_ratio >= 1.0 - 1e-9);

        let q = random_rotation(&mut r, d);
        let rotated = m.map_rows(|src, dst| {
            for (o, row) in dst.iter_mut().zip(&q) {
                *o = row.iter().zip(src).map(|(a, b)| a * b).sum();
            }
        });
        let rs = cluster_stats(&rotated).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(&rs.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()));
        }
        let rv = validate_cluster_gaussian(&rotated, &t).unwrap();
        prop_assert!((rv.mean_norm - v.mean_norm).abs() < 1e-9);

        let perm: Vec<usize> = (0..d).rev().collect();
        let permuted = m.map_rows(|src, dst| {
            for (o, &p) in dst.iter_mut().zip(&perm) {
                *o = src[p];
            }
        });
        let pv = validate_cluster_gaussian(&permuted, &t).unwrap();
        prop_assert_eq!(pv.passes, v.passes);
        prop_assert!((pv.eigenvalue_ratio - v.eigenvalue_ratio).abs() <= 1e-6 * v.eigenvalue_ratio);
    }

    #[test]
    fn epps_pulley_affine_invariant(seed in any::<u64>(), a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let x = normal_vec(&mut rng(seed), 64);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((epps_pulley_1d(&x).unwrap() - epps_pulley_1d(&y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn dbscan_equals_definition(seed in any::<u64>(), n in 1usize..13, eps in 0.01f64..0.8, min_pts in 2usize..6) {
        let dist = random_distance(&mut rng(seed), n);
        let got = dbscan(&dist, eps, min_pts).unwrap();
        prop_assert!(same_partition(got.labels(), &brute_dbscan(&dist, eps, min_pts)));
        let k = got.n_clusters() as i64;
        prop_assert!(got.labels().iter().all(|&l| l == OUTLIER || (0..k).contains(&l)));
    }

    #[test]
    fn dbscan_permutation_invariant(seed in any::<u64>(), n in 2usize..30, eps in 0.05f64..0.5) {
        let mut r = rng(seed);
        let dist = random_distance(&mut r, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let a = dbscan(&dist, eps, 3).unwrap();
        let b = dbscan(&dist.permuted(&perm), eps, 3).unwrap();
        let back: Vec<i64> = (0..n).map(|i| b.labels()[perm.iter().position(|&p| p == i).unwrap()]).collect();
        prop_assert!(same_partition(a.labels(), &back));
    }

    #[test]
    fn singleton_ensemble_is_one_run(seed in any::<u64>(), n in 2usize..25, eps in 0.05f64..0.6, min_pts in 2usize..5) {
        let dist = random_distance(&mut rng(seed), n);
        let cfg = EnsembleConfig { eps_grid: vec![eps], min_pts_grid: vec![min_pts], consensus_threshold: 0.5 };
        let (coassoc, consensus) = ensemble_cluster(&dist, &cfg).unwrap();
        let single = dbscan(&dist, eps, min_pts).unwrap();
        prop_assert!(same_partition(consensus.labels(), single.labels()));
        for i in 0..n {
            prop_assert_eq!(coassoc.get(i, i), 1.0);
            for j in 0..n {
                prop_assert_eq!(coassoc.get(i, j), coassoc.get(j, i));
            }
        }
    }
}

fn synth_dim(
    seed: u64,
    scenes: usize,
    per_scene: usize,
    outliers: usize,
    dim: usize,
) -> sigscene::synth::SynthDataset {
    generate_dataset(&SynthSpec {
        n_outliers: outliers,
        ..SynthSpec::uniform(scenes, per_scene, dim, seed)
    })
    .unwrap()
}

fn synth(
    seed: u64,
    scenes: usize,
    per_scene: usize,
    outliers: usize,
) -> sigscene::synth::SynthDataset {
    synth_dim(seed, scenes, per_scene, outliers, 16)
}

// Same-scene pairs sit near distance 0.1 for σ = 0.5, d = 16; the grid
// starts there. A few seeds place two centers close enough after
// normalization that no radius separates them, so the check is a rate.
#[test]
fn ensemble_recovers_two_scenes() {
    let cfg = EnsembleConfig {
        eps_grid: vec![0.1, 0.15, 0.2],
        min_pts_grid: vec![2, 3],
        consensus_threshold: 0.5,
    };
    let mut good = 0;
    for seed in 0..50 {
        let data = synth(seed, 2, 20, 0);
        let normalized = data.embeddings.sigreg_normalized().unwrap();
        let dist = pairwise_similarity(&normalized, &SimilarityMethod::GaussianCosine)
            .unwrap()
            .to_distance();
        let (_, a) = ensemble_cluster(&dist, &cfg).unwrap();
        if adjusted_rand_index(a.labels(), data.ground_truth.assignment().labels()) >= 0.95 {
            good += 1;
        }
    }
    assert!(good >= 45, "{good}/50");
}

#[test]
fn filter_splits_merged_scenes() {
    for seed in 0..10 {
        let data = synth(100 + seed, 3, 20, 0);
        let normalized = data.embeddings.sigreg_normalized().unwrap();
        let truth = data.ground_truth.assignment().labels().to_vec();
        let merged: Vec<i64> = truth.iter().map(|&l| if l == 2 { 1 } else { l }).collect();
        let a = ClusterAssignment::new(normalized.ids().to_vec(), merged).unwrap();
        let out = sigreg_filter(&a, &normalized, &FilterConfig::default()).unwrap();
        let idx: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] >= 1).collect();
        let got: Vec<i64> = idx.iter().map(|&i| out.labels()[i]).collect();
        let want: Vec<i64> = idx.iter().map(|&i| truth[i]).collect();
        let ari = adjusted_rand_index(&got, &want);
        assert!(ari >= 0.9, "seed {seed}: ARI {ari}");
    }
}

#[test]
fn synthgen_scene_means_converge() {
    let mut within = 0;
    let mut total = 0;
    for seed in 0..100 {
        let data = synth_dim(seed, 3, 12, 2, 8);
        let labels = data.ground_truth.assignment().labels();
        for (s, center) in data.centers.iter().enumerate() {
            let rows: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == s as i64)
                .collect();
            let n = rows.len() as f64;
            let dist = (0..8)
                .map(|k| {
                    let m = rows
                        .iter()
                        .map(|&i| data.embeddings.embedding(i)[k])
                        .sum::<f64>()
                        / n;
                    (m - center[k]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            total += 1;
            if dist <= 5.0 * 0.5 / n.sqrt() {
                within += 1;
            }
        }
    }
    assert!(within as f64 >= 0.95 * total as f64, "{within}/{total}");
}

#[test]
fn synthgen_scenes_pass_pipeline_validation() {
    let mut pass = 0;
    let mut total = 0;
    for seed in 0..50 {
        let data = synth(seed, 5, 20, 0);
        let normalized = data.embeddings.sigreg_normalized().unwrap();
        let scale = global_scale(&normalized);
        for members in data.ground_truth.assignment().clusters() {
            total += 1;
            if validate_cluster(&normalized, &members, &scale, &FilterConfig::default())
                .unwrap()
                .passes()
            {
                pass += 1;
            }
        }
    }
    assert!(pass as f64 >= 0.9 * total as f64, "{pass}/{total}");
}

#[test]
fn synthgen_labels_and_poses_consistent() {
    let data = synth(9, 4, 7, 5);
    let gt = &data.ground_truth;
    for (id, &l) in gt.ids().iter().zip(gt.assignment().labels()) {
        assert_eq!(gt.poses().contains_key(id), l != OUTLIER);
    }
    let again = synth(9, 4, 7, 5);
    assert_eq!(again.embeddings, data.embeddings);
    assert_eq!(&again.ground_truth, gt);
}

fn arb_vec3(r: &mut impl Rng, scale: f64) -> [f64; 3] {
    [
        (r.random::<f64>() - 0.5) * scale,
        (r.random::<f64>() - 0.5) * scale,
        (r.random::<f64>() - 0.5) * scale,
    ]
}

#[test]
fn look_at_properties() {
    let mut r = rng(31);
    for _ in 0..2000 {
        let eye = arb_vec3(&mut r, 10.0);
        let target = arb_vec3(&mut r, 10.0);
        let up = arb_vec3(&mut r, 2.0);
        let Ok(p) = look_at(eye, target, up) else {
            continue;
        };
        let e = Vector3::from(eye);
        let dir = p.rotation * (Vector3::from(target) - e);
        let dir = dir / dir.norm();
        assert!((dir - Vector3::z()).norm() < 1e-9);
        assert!((p.rotation * e + p.translation).norm() < 1e-9);
    }
}

/// Unit quaternion (w, x, y, z) of a rotation matrix.
fn quaternion(m: &Matrix3<f64>) -> [f64; 4] {
    let tr = m.trace();
    let q = if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [
            0.25 * s,
            (m[(2, 1)] - m[(1, 2)]) / s,
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(1, 0)] - m[(0, 1)]) / s,
        ]
    } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
        let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
        [
            (m[(2, 1)] - m[(1, 2)]) / s,
            0.25 * s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
        ]
    } else if m[(1, 1)] > m[(2, 2)] {
        let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
        [
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            0.25 * s,
            (m[(1, 2)] + m[(2, 1)]) / s,
        ]
    } else {
        let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
        [
            (m[(1, 0)] - m[(0, 1)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
            (m[(1, 2)] + m[(2, 1)]) / s,
            0.25 * s,
        ]
    };
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / n)
}

fn qmul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn conj(q: [f64; 4]) -> [f64; 4] {
    [q[0], -q[1], -q[2], -q[3]]
}

fn random_pose(r: &mut impl Rng) -> CameraPose {
    let axis = Unit::new_normalize(Vector3::from(arb_vec3(r, 2.0)));
    CameraPose {
        rotation: *Rotation3::from_axis_angle(&axis, r.random::<f64>() * std::f64::consts::PI)
            .matrix(),
        translation: Vector3::from(arb_vec3(r, 6.0)),
    }
}

#[test]
fn relative_pose_error_matches_quaternion_oracle() {
    let mut r = rng(41);
    for _ in 0..2000 {
        let [pi, pj, gi, gj] = [(); 4].map(|_| random_pose(&mut r));
        let e = relative_pose_error(&pi, &pj, &gi, &gj);
        let qp = qmul(quaternion(&pi.rotation), conj(quaternion(&pj.rotation)));
        let qg = qmul(quaternion(&gi.rotation), conj(quaternion(&gj.rotation)));
        let d = qmul(qp, conj(qg));
        let angle = 2.0
            * (d[1] * d[1] + d[2] * d[2] + d[3] * d[3])
                .sqrt()
                .atan2(d[0].abs());
        assert!(
            (e.rot_deg - angle.to_degrees()).abs() < 1e-6,
            "{} vs {}",
            e.rot_deg,
            angle.to_degrees()
        );

        // translation direction via rotated vectors, then plain acos
        let rot = |q: [f64; 4], v: Vector3<f64>| {
            let p = qmul(qmul(q, [0.0, v.x, v.y, v.z]), conj(q));
            Vector3::new(p[1], p[2], p[3])
        };
        let tp = pi.translation - rot(qp, pj.translation);
        let tg = gi.translation - rot(qg, gj.translation);
        let cos = (tp.dot(&tg) / (tp.norm() * tg.norm())).clamp(-1.0, 1.0);
        let t = e.trans_deg.unwrap();
        assert!((t - cos.acos().to_degrees()).abs() < 1e-5, "{t}");
    }
}

/// Best total overlap over all one-to-one scene/cluster pairings.
fn exhaustive_best(overlap: &[Vec<usize>], scene: usize, used: &mut Vec<bool>) -> usize {
    if scene == overlap.len() {
        return 0;
    }
    let mut best = exhaustive_best(overlap, scene + 1, used);
    for c in 0..used.len() {
        if !used[c] && overlap[scene][c] > 0 {
            used[c] = true;
            best = best.max(overlap[scene][c] + exhaustive_best(overlap, scene + 1, used));
            used[c] = false;
        }
    }
    best
}

#[test]
fn greedy_matching_against_exhaustive_oracle() {
    let mut r = rng(51);
    let mut suboptimal = 0;
    for _ in 0..500 {
        let n = 12;
        let scenes = 1 + r.random_range(0..4);
        let clusters = 1 + r.random_range(0..4) as i64;
        let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        let gt_labels: Vec<i64> = (0..n).map(|i| (i % scenes) as i64).collect();
        let pred_labels: Vec<i64> = (0..n).map(|_| r.random_range(-1..clusters)).collect();
        let poses = ids
            .iter()
            .map(|id| (id.clone(), CameraPose::identity()))
            .collect();
        let gt = GroundTruth::new(
            ClusterAssignment::new(ids.clone(), gt_labels.clone()).unwrap(),
            poses,
        )
        .unwrap();
        let pred = ClusterAssignment::new(ids, pred_labels).unwrap();
        let k = pred.n_clusters();
        let mut overlap = vec![vec![0usize; k]; gt.n_scenes()];
        for (&s, &c) in gt.assignment().labels().iter().zip(pred.labels()) {
            if c >= 0 {
                overlap[s as usize][c as usize] += 1;
            }
        }
        let m = match_clusters(&pred, &gt).unwrap();
        let used: HashSet<usize> = m.iter().flatten().copied().collect();
        assert_eq!(used.len(), m.iter().flatten().count(), "one-to-one");
        let greedy: usize = m
            .iter()
            .enumerate()
            .filter_map(|(s, c)| c.map(|c| overlap[s][c]))
            .sum();
        let best = exhaustive_best(&overlap, 0, &mut vec![false; k]);
        assert!(greedy <= best);
        if greedy < best {
            suboptimal += 1;
            // greedy matching keeps at least half of the optimum
            assert!(2 * greedy >= best, "greedy {greedy} vs best {best}");
        }
    }
    assert!(suboptimal < 50, "{suboptimal} greedy-suboptimal instances");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scores_invariant_under_relabel_and_reorder(seed in any::<u64>(), shift in 1i64..5) {
        let data = synth(seed % 1000, 3, 6, 2);
        let gt = &data.ground_truth;
        let mut r = rng(seed);
        let ids = gt.ids().to_vec();
        let labels: Vec<i64> = gt.assignment().labels().iter().map(|&l| if r.random::<f64>() < 0.2 { -1 } else { l }).collect();
        let poses: HashMap<String, CameraPose> = gt.poses().iter().map(|(k, p)| (k.clone(), random_pose(&mut r).clone_with(p))).collect();
        let pred = ClusterAssignment::new(ids.clone(), labels.clone()).unwrap();
        let base = score_dataset(&pred, &poses, gt, &DEFAULT_THRESHOLDS_DEG).unwrap();

        let relabeled: Vec<i64> = labels.iter().map(|&l| if l < 0 { l } else { (l + shift) * 7 }).collect();
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.reverse();
        let pred2 = ClusterAssignment::new(
            order.iter().map(|&i| ids[i].clone()).collect(),
            order.iter().map(|&i| relabeled[i]).collect(),
        ).unwrap();
        let other = score_dataset(&pred2, &poses, gt, &DEFAULT_THRESHOLDS_DEG).unwrap();
        prop_assert!((base.dataset_score - other.dataset_score).abs() < 1e-12);
        prop_assert!((base.dataset_maa - other.dataset_maa).abs() < 1e-12);
        prop_assert!((base.dataset_precision - other.dataset_precision).abs() < 1e-12);
        for v in [base.dataset_score, base.dataset_maa, base.dataset_precision] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let (lo, hi) = (base.dataset_maa.min(base.dataset_precision), base.dataset_maa.max(base.dataset_precision));
        if lo > 0.0 {
            prop_assert!(lo - 1e-12 <= base.dataset_score && base.dataset_score <= hi + 1e-12);
        } else {
            prop_assert_eq!(base.dataset_score, 0.0);
        }
    }
}

trait CloseTo {
    fn clone_with(self, near: &CameraPose) -> CameraPose;
}

impl CloseTo for CameraPose {
    /// `near` nudged by a small fraction of this random pose.
    fn clone_with(self, near: &CameraPose) -> CameraPose {
        let axis = Unit::new_normalize(self.translation + Vector3::new(1e-3, 0.0, 0.0));
        let small = Rotation3::from_axis_angle(&axis, 0.05 * (self.rotation[(0, 0)]));
        CameraPose {
            rotation: small.matrix() * near.rotation,
            translation: near.translation + self.translation * 0.01,
        }
    }
}

#[test]
fn distance_matrix_rejects_bad_input() {
    let bad = RowMatrix::new(2, 2, vec![0.0, 0.5, 0.4, 0.0]).unwrap();
    assert!(DistanceMatrix::new(vec!["a".into(), "b".into()], bad).is_err());
}
