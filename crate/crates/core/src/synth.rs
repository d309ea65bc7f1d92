//! Synthetic multi-scene datasets with known scene labels and poses.
//!
//! Each scene is an isotropic Gaussian blob `center + ε`, `ε ~ N(0, σ²I)`,
//! around a center on the radius-`√d` sphere. Outliers are uniform in the
//! cube of half-width `2√d`. Within a scene, images are numbered in capture
//! order along a circular trajectory, and capture order follows the scene's
//! dominant embedding direction.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::clustering::{ClusterAssignment, OUTLIER};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{norm, RowMatrix};
use crate::pose::{circular_trajectory_poses, principal_axis_order};
use crate::scoring::GroundTruth;

pub const MAX_CENTER_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_scenes: usize,
    pub images_per_scene: Vec<usize>,
    pub dim: usize,
    /// Per-coordinate noise standard deviation σ.
    pub noise_std: f64,
    /// Minimum distance between scene centers, in units of `noise_std`.
    pub center_separation: f64,
    pub n_outliers: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// `n_scenes` scenes of `per_scene` images each, σ = 0.5, separation 8,
    /// no outliers.
    pub fn uniform(n_scenes: usize, per_scene: usize, dim: usize, seed: u64) -> Self {
        Self {
            n_scenes,
            images_per_scene: vec![per_scene; n_scenes],
            dim,
            noise_std: 0.5,
            center_separation: 8.0,
            n_outliers: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scenes < 1 {
            return Err(Error::invalid("at least one scene is required"));
        }
        if self.images_per_scene.len() != self.n_scenes {
            return Err(Error::invalid(format!(
                "{} scene sizes given for {} scenes",
                self.images_per_scene.len(),
                self.n_scenes
            )));
        }
        if self.images_per_scene.contains(&0) {
            return Err(Error::invalid("every scene needs at least one image"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("dimension must be at least 2"));
        }
        if !(self.noise_std > 0.0) || !self.noise_std.is_finite() {
            return Err(Error::invalid("noise_std must be positive"));
        }
        if !(self.center_separation > 0.0) || !self.center_separation.is_finite() {
            return Err(Error::invalid("center_separation must be positive"));
        }
        Ok(())
    }

    pub fn n_images(&self) -> usize {
        self.images_per_scene.iter().sum::<usize>() + self.n_outliers
    }
}

fn sphere_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x * radius / n).collect();
        }
    }
}

fn place_centers(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> Result<Vec<Vec<f64>>> {
    let radius = (spec.dim as f64).sqrt();
    let min_dist = spec.center_separation * spec.noise_std;
    for _ in 0..MAX_CENTER_ATTEMPTS {
        let centers: Vec<Vec<f64>> = (0..spec.n_scenes)
            .map(|_| sphere_point(rng, spec.dim, radius))
            .collect();
        let ok = centers.iter().enumerate().all(|(i, a)| {
            centers[i + 1..].iter().all(|b| {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                d2.sqrt() >= min_dist
            })
        });
        if ok {
            return Ok(centers);
        }
    }
    Err(Error::SeparationInfeasible(MAX_CENTER_ATTEMPTS))
}

/// A generated dataset and the scene centers it was drawn around.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub embeddings: EmbeddingSet,
    pub ground_truth: GroundTruth,
    pub centers: Vec<Vec<f64>>,
}

pub fn generate_dataset(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = place_centers(&mut rng, spec)?;
    let d = spec.dim;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.n_images());
    let mut labels = Vec::with_capacity(spec.n_images());
    let mut scene_poses = Vec::with_capacity(spec.n_images());
    for (s, (center, &count)) in centers.iter().zip(&spec.images_per_scene).enumerate() {
        let blob: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + spec.noise_std * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let matrix = RowMatrix::from_rows(&blob)?;
        let order = principal_axis_order(&matrix, false).unwrap_or_else(|| (0..count).collect());
        let poses = circular_trajectory_poses(count, 1.0)?;
        for (&i, pose) in order.iter().zip(poses) {
            rows.push(blob[i].clone());
            labels.push(s as i64);
            scene_poses.push(Some(pose));
        }
    }
    let half_width = 2.0 * (d as f64).sqrt();
    for _ in 0..spec.n_outliers {
        rows.push(
            (0..d)
                .map(|_| rng.random_range(-half_width..half_width))
                .collect(),
        );
        labels.push(OUTLIER);
        scene_poses.push(None);
    }
    let width = spec.n_images().max(1).to_string().len().max(5);
    let ids: Vec<String> = (0..rows.len())
        .map(|i| format!("img_{i:0width$}"))
        .collect();
    let poses: HashMap<String, _> = ids
        .iter()
        .zip(scene_poses)
        .filter_map(|(id, p)| p.map(|p| (id.clone(), p)))
        .collect();
    let embeddings = EmbeddingSet::new(ids.clone(), RowMatrix::from_rows(&rows)?)?;
    let ground_truth = GroundTruth::new(ClusterAssignment::new(ids, labels)?, poses)?;
    Ok(SynthDataset {
        embeddings,
        ground_truth,
        centers,
    })
}
