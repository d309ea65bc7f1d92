//! Competition-style scoring: greedy scene/cluster matching, per-scene
//! precision, a gauge-invariant relative-pose mAA and their harmonic mean.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use serde::Serialize;

use crate::clustering::{ClusterAssignment, OUTLIER};
use crate::error::{Error, Result};
use crate::pose::{relative_angle_deg, CameraPose};

/// Rotation thresholds in degrees; translation tolerance is twice each.
pub const DEFAULT_THRESHOLDS_DEG: [f64; 10] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];

/// Scene labels and poses of a dataset. Every non-outlier image has a pose.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    assignment: ClusterAssignment,
    poses: HashMap<String, CameraPose>,
}

impl GroundTruth {
    pub fn new(assignment: ClusterAssignment, poses: HashMap<String, CameraPose>) -> Result<Self> {
        for (id, &l) in assignment.ids().iter().zip(assignment.labels()) {
            if l != OUTLIER && !poses.contains_key(id) {
                return Err(Error::invalid(format!(
                    "ground-truth image {id:?} has no pose"
                )));
            }
        }
        Ok(Self { assignment, poses })
    }

    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn ids(&self) -> &[String] {
        self.assignment.ids()
    }

    pub fn poses(&self) -> &HashMap<String, CameraPose> {
        &self.poses
    }

    pub fn n_scenes(&self) -> usize {
        self.assignment.n_clusters()
    }
}

/// One-to-one greedy matching of ground-truth scenes to predicted clusters,
/// indexed by scene. Pairs are taken by largest overlap, then larger
/// overlap fraction of the cluster, then lower scene and cluster index.
pub fn match_clusters(pred: &ClusterAssignment, gt: &GroundTruth) -> Result<Vec<Option<usize>>> {
    let pred = pred.aligned_to(gt.ids())?;
    let scenes = gt.n_scenes();
    let clusters = pred.n_clusters();
    let mut overlap = vec![vec![0usize; clusters]; scenes];
    let mut size = vec![0usize; clusters];
    for (&s, &c) in gt.assignment().labels().iter().zip(pred.labels()) {
        if c >= 0 {
            size[c as usize] += 1;
            if s >= 0 {
                overlap[s as usize][c as usize] += 1;
            }
        }
    }
    let mut matched = vec![None; scenes];
    let mut used = vec![false; clusters];
    loop {
        let mut best: Option<(usize, usize)> = None;
        for s in (0..scenes).filter(|&s| matched[s].is_none()) {
            for c in (0..clusters).filter(|&c| !used[c]) {
                let o = overlap[s][c];
                if o == 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bs, bc)) => {
                        let bo = overlap[bs][bc];
                        // o/size[c] > bo/size[bc], compared exactly.
                        o > bo || (o == bo && o * size[bc] > bo * size[c])
                    }
                };
                if better {
                    best = Some((s, c));
                }
            }
        }
        let Some((s, c)) = best else { break };
        matched[s] = Some(c);
        used[c] = true;
    }
    Ok(matched)
}

/// `|S ∩ C| / |C|`.
pub fn precision_for_scene<T: Eq + Hash>(scene: &HashSet<T>, cluster: &HashSet<T>) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::invalid("precision of an empty cluster is undefined"));
    }
    let common = cluster.iter().filter(|x| scene.contains(x)).count();
    Ok(common as f64 / cluster.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    pub rot_deg: f64,
    /// `None` when either relative translation is shorter than 1e-9.
    pub trans_deg: Option<f64>,
}

fn relative(pi: &CameraPose, pj: &CameraPose) -> (nalgebra::Matrix3<f64>, nalgebra::Vector3<f64>) {
    let r = pi.rotation * pj.rotation.transpose();
    let t = pi.translation - r * pj.translation;
    (r, t)
}

/// Rotation and translation-direction errors between the predicted
/// relative pose of `(pi, pj)` and the ground-truth one of `(gi, gj)`.
pub fn relative_pose_error(
    pi: &CameraPose,
    pj: &CameraPose,
    gi: &CameraPose,
    gj: &CameraPose,
) -> PoseError {
    let (rp, tp) = relative(pi, pj);
    let (rg, tg) = relative(gi, gj);
    let rot_deg = relative_angle_deg(&rp, &rg);
    let (np, ng) = (tp.norm(), tg.norm());
    let trans_deg =
        (np >= 1e-9 && ng >= 1e-9).then(|| tp.cross(&tg).norm().atan2(tp.dot(&tg)).to_degrees());
    PoseError { rot_deg, trans_deg }
}

/// Mean over the threshold ladder of the fraction of ground-truth image
/// pairs of `scene` whose relative pose is within tolerance. A pair fails
/// outright unless both images are in `matched_cluster` with a predicted
/// pose.
pub fn maa_for_scene(
    pred_poses: &HashMap<String, CameraPose>,
    gt: &GroundTruth,
    scene: i64,
    matched_cluster: Option<&HashSet<&str>>,
    thresholds: &[f64],
) -> Result<f64> {
    if thresholds.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let members: Vec<&str> = gt
        .ids()
        .iter()
        .zip(gt.assignment().labels())
        .filter(|(_, &l)| l == scene && l != OUTLIER)
        .map(|(id, _)| id.as_str())
        .collect();
    if members.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: members.len(),
        });
    }
    let available = |id: &str| -> Option<&CameraPose> {
        matched_cluster
            .filter(|c| c.contains(id))
            .and(pred_poses.get(id))
    };
    let mut passes = vec![0usize; thresholds.len()];
    let mut pairs = 0usize;
    for (a, &ia) in members.iter().enumerate() {
        for &ib in &members[a + 1..] {
            pairs += 1;
            let (Some(pa), Some(pb)) = (available(ia), available(ib)) else {
                continue;
            };
            let e = relative_pose_error(pa, pb, &gt.poses[ia], &gt.poses[ib]);
            for (count, &th) in passes.iter_mut().zip(thresholds) {
                if e.rot_deg <= th && e.trans_deg.is_none_or(|t| t <= 2.0 * th) {
                    *count += 1;
                }
            }
        }
    }
    let mean =
        passes.iter().map(|&p| p as f64 / pairs as f64).sum::<f64>() / thresholds.len() as f64;
    Ok(mean)
}

/// `2·m·p / (m + p)`, or 0 when both are 0.
pub fn harmonic_score(maa: f64, precision: f64) -> f64 {
    let sum = maa + precision;
    if sum > 0.0 {
        2.0 * maa * precision / sum
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneScore {
    pub scene: i64,
    pub cluster: Option<i64>,
    pub precision: f64,
    pub maa: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub per_scene: Vec<SceneScore>,
    pub dataset_precision: f64,
    pub dataset_maa: f64,
    pub dataset_score: f64,
}

/// Scores one dataset. Unmatched scenes contribute 0 to both precision and
/// mAA; dataset values are unweighted means over scenes.
pub fn score_dataset(
    pred: &ClusterAssignment,
    pred_poses: &HashMap<String, CameraPose>,
    gt: &GroundTruth,
    thresholds: &[f64],
) -> Result<ScoreReport> {
    let matching = match_clusters(pred, gt)?;
    let pred = pred.aligned_to(gt.ids())?;
    let clusters: Vec<HashSet<&str>> = pred
        .clusters()
        .iter()
        .map(|m| m.iter().map(|&i| pred.ids()[i].as_str()).collect())
        .collect();
    let mut per_scene = Vec::with_capacity(matching.len());
    for (s, &c) in matching.iter().enumerate() {
        let scene_ids: HashSet<&str> = gt
            .ids()
            .iter()
            .zip(gt.assignment().labels())
            .filter(|(_, &l)| l == s as i64)
            .map(|(id, _)| id.as_str())
            .collect();
        let (precision, maa) = match c {
            Some(c) => (
                precision_for_scene(&scene_ids, &clusters[c])?,
                maa_for_scene(pred_poses, gt, s as i64, Some(&clusters[c]), thresholds)?,
            ),
            None => (0.0, 0.0),
        };
        per_scene.push(SceneScore {
            scene: s as i64,
            cluster: c.map(|c| c as i64),
            precision,
            maa,
            score: harmonic_score(maa, precision),
        });
    }
    let k = per_scene.len().max(1) as f64;
    let dataset_precision = per_scene.iter().map(|s| s.precision).sum::<f64>() / k;
    let dataset_maa = per_scene.iter().map(|s| s.maa).sum::<f64>() / k;
    Ok(ScoreReport {
        per_scene,
        dataset_precision,
        dataset_maa,
        dataset_score: harmonic_score(dataset_maa, dataset_precision),
    })
}

/// Dataset scores keyed by dataset name plus their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub datasets: BTreeMap<String, ScoreReport>,
    pub overall: f64,
}

impl ScoreSummary {
    pub fn new(datasets: BTreeMap<String, ScoreReport>) -> Self {
        let overall = if datasets.is_empty() {
            0.0
        } else {
            datasets.values().map(|r| r.dataset_score).sum::<f64>() / datasets.len() as f64
        };
        Self { datasets, overall }
    }
}
