//! Heuristic camera poses: look-at construction, scene-type inference from
//! the cluster covariance spectrum and circular, linear or planar
//! trajectories.
//!
//! Conventions: poses are world-to-camera (`x_cam = R·x_world + T`), the
//! camera looks along its `+z` axis, `+y` points down in the image and the
//! world up vector is `(0, −1, 0)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{covariance, symmetric_eigen_desc, RowMatrix};

pub const WORLD_UP: [f64; 3] = [0.0, -1.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from a row-major rotation and a translation, checking
    /// orthonormality and orientation to `tol`.
    pub fn from_parts(
        rotation_row_major: &[f64; 9],
        translation: &[f64; 3],
        tol: f64,
    ) -> Result<Self> {
        let pose = Self {
            rotation: Matrix3::from_row_slice(rotation_row_major),
            translation: Vector3::from_column_slice(translation),
        };
        pose.check(tol)?;
        Ok(pose)
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        if self
            .rotation
            .iter()
            .chain(self.translation.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::invalid("pose has non-finite entries"));
        }
        let err = (self.rotation * self.rotation.transpose() - Matrix3::identity())
            .abs()
            .max();
        if err > tol {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (error {err:e})"
            )));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > tol {
            return Err(Error::invalid(format!("rotation determinant is {det}")));
        }
        Ok(())
    }

    /// Camera centre in world coordinates, `−Rᵀ·T`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
        ]
    }

    pub fn translation_array(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }
}

/// Camera at `eye` looking at `target`. Rows of `R` are (right, down,
/// forward) with `forward = normalize(target − eye)`,
/// `right = normalize(forward × up)` and `down = forward × right`;
/// `T = −R·eye`.
pub fn look_at(eye: [f64; 3], target: [f64; 3], up: [f64; 3]) -> Result<CameraPose> {
    let eye = Vector3::from(eye);
    let to_target = Vector3::from(target) - eye;
    let dist = to_target.norm();
    if !(dist > 1e-9) {
        return Err(Error::DegenerateGeometry("eye and target coincide".into()));
    }
    let up = Vector3::from(up);
    let up_norm = up.norm();
    if !(up_norm > 1e-12) {
        return Err(Error::DegenerateGeometry("up vector is zero".into()));
    }
    let forward = to_target / dist;
    let side = forward.cross(&(up / up_norm));
    let side_norm = side.norm();
    if !(side_norm > 1e-9) {
        return Err(Error::DegenerateGeometry(
            "up vector is parallel to the view direction".into(),
        ));
    }
    let right = side / side_norm;
    let down = forward.cross(&right);
    let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    let translation = -(rotation * eye);
    Ok(CameraPose {
        rotation,
        translation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneType {
    Planar,
    Linear,
    ObjectCentric,
}

impl SceneType {
    pub fn as_str(&self) -> &'static str {
        match self {
            SceneType::Planar => "planar",
            SceneType::Linear => "linear",
            SceneType::ObjectCentric => "object_centric",
        }
    }
}

/// Effective-rank cut points for scene-type inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneTypeThresholds {
    pub linear_max: f64,
    pub planar_max: f64,
}

impl Default for SceneTypeThresholds {
    fn default() -> Self {
        Self {
            linear_max: 1.5,
            planar_max: 2.5,
        }
    }
}

/// `(Σλ)² / Σλ²` of the covariance spectrum; 0 for a zero-variance
/// cluster.
pub fn effective_rank(embeddings: &RowMatrix) -> Result<f64> {
    let (_, cov) = covariance(embeddings)?;
    let (values, _) = symmetric_eigen_desc(&cov);
    let (sum, sq) = values
        .iter()
        .map(|v| v.max(0.0))
        .fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
    Ok(if sq > 0.0 { sum * sum / sq } else { 0.0 })
}

pub fn infer_scene_type(
    embeddings: &RowMatrix,
    thresholds: &SceneTypeThresholds,
) -> Result<SceneType> {
    let r = effective_rank(embeddings)?;
    Ok(if r <= thresholds.linear_max {
        SceneType::Linear
    } else if r <= thresholds.planar_max {
        SceneType::Planar
    } else {
        SceneType::ObjectCentric
    })
}

/// Indices sorted by projection on the first principal component, ties by
/// index. `None` when the cluster has no variance.
pub(crate) fn principal_axis_order(embeddings: &RowMatrix, negate: bool) -> Option<Vec<usize>> {
    let n = embeddings.nrows();
    if n < 2 {
        return None;
    }
    let (mean, cov) = covariance(embeddings).ok()?;
    let (values, vectors) = symmetric_eigen_desc(&cov);
    if !(values[0] > 1e-12) {
        return None;
    }
    let axis = vectors.column(0);
    let sign = if negate { -1.0 } else { 1.0 };
    let proj: Vec<f64> = embeddings
        .rows()
        .map(|r| {
            sign * r
                .iter()
                .zip(&mean)
                .zip(axis.iter())
                .map(|((x, m), a)| (x - m) * a)
                .sum::<f64>()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
    Some(order)
}

/// Places images along a trajectory: sorted by their first principal
/// coordinate, with the axis sign chosen so the sequence starts at the
/// endpoint with the smaller id. Zero-variance clusters keep their order.
pub fn order_images<S: AsRef<str>>(embeddings: &RowMatrix, ids: &[S]) -> Result<Vec<usize>> {
    let n = embeddings.nrows();
    if ids.len() != n {
        return Err(Error::invalid(format!(
            "{} ids for {n} embeddings",
            ids.len()
        )));
    }
    let (Some(forward), Some(backward)) = (
        principal_axis_order(embeddings, false),
        principal_axis_order(embeddings, true),
    ) else {
        return Ok((0..n).collect());
    };
    if ids[backward[0]].as_ref() < ids[forward[0]].as_ref() {
        Ok(backward)
    } else {
        Ok(forward)
    }
}

fn check_trajectory(n: usize, length: f64, what: &str) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("trajectory needs at least one pose"));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::invalid(format!(
            "{what} must be positive, got {length}"
        )));
    }
    Ok(())
}

/// `n` cameras on a horizontal circle of `radius`, all facing the origin.
pub fn circular_trajectory_poses(n: usize, radius: f64) -> Result<Vec<CameraPose>> {
    check_trajectory(n, radius, "radius")?;
    (0..n)
        .map(|k| {
            let theta = TAU * k as f64 / n as f64;
            let (s, c) = theta.sin_cos();
            look_at([radius * c, 0.0, radius * s], [0.0; 3], WORLD_UP)
        })
        .collect()
}

/// Cameras along the x axis, all looking down `+z`.
pub fn linear_trajectory_poses(n: usize, spacing: f64) -> Result<Vec<CameraPose>> {
    check_trajectory(n, spacing, "spacing")?;
    (0..n)
        .map(|k| forward_looking([k as f64 * spacing, 0.0, -5.0 * spacing]))
        .collect()
}

/// Cameras on the smallest square grid in the x-y plane holding `n`
/// positions, row-major, all looking down `+z`.
pub fn planar_grid_poses(n: usize, spacing: f64) -> Result<Vec<CameraPose>> {
    check_trajectory(n, spacing, "spacing")?;
    let side = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|k| {
            let (row, col) = (k / side, k % side);
            forward_looking([col as f64 * spacing, row as f64 * spacing, -5.0 * spacing])
        })
        .collect()
}

fn forward_looking(eye: [f64; 3]) -> Result<CameraPose> {
    look_at(eye, [eye[0], eye[1], eye[2] + 1.0], WORLD_UP)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseConfig {
    pub radius: f64,
    pub spacing: f64,
    pub scene_types: SceneTypeThresholds,
}

impl Default for PoseConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            spacing: 1.0,
            scene_types: SceneTypeThresholds::default(),
        }
    }
}

/// Poses for one cluster: the scene type picks the trajectory and
/// [`order_images`] decides which image takes which position.
pub fn generate_cluster_poses<S: AsRef<str>>(
    embeddings: &RowMatrix,
    ids: &[S],
    config: &PoseConfig,
) -> Result<(SceneType, BTreeMap<String, CameraPose>)> {
    let n = embeddings.nrows();
    if n < 1 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let scene = if n == 1 {
        SceneType::Linear
    } else {
        infer_scene_type(embeddings, &config.scene_types)?
    };
    let poses = match scene {
        SceneType::ObjectCentric => circular_trajectory_poses(n, config.radius)?,
        SceneType::Linear => linear_trajectory_poses(n, config.spacing)?,
        SceneType::Planar => planar_grid_poses(n, config.spacing)?,
    };
    let order = order_images(embeddings, ids)?;
    let map = order
        .iter()
        .zip(poses)
        .map(|(&i, pose)| (ids[i].as_ref().to_string(), pose))
        .collect();
    Ok((scene, map))
}

/// Rotation angle of `a·bᵀ` in degrees.
pub fn relative_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let c = ((a * b.transpose()).trace() - 1.0) / 2.0;
    c.clamp(-1.0, 1.0).acos().to_degrees()
}
