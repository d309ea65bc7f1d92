//! End-to-end batch flows used by the command-line tool: clustering plus
//! pose synthesis (`run`) and per-cluster isotropy reports (`validate`).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

use crate::clustering::{
    ensemble_cluster, estimate_eps, global_scale, sigreg_filter, target_outlier_rate,
    validate_cluster, ClusterAssignment, ClusterValidation, EnsembleConfig, FilterConfig, OUTLIER,
};
use crate::embedding::{
    pairwise_similarity, EmbeddingSet, SimilarityKind, SimilarityMethod, DEFAULT_T_GRID,
};
use crate::error::{Error, Result};
use crate::io::round9;
use crate::pose::{generate_cluster_poses, CameraPose, PoseConfig, SceneType};
use crate::scoring::DEFAULT_THRESHOLDS_DEG;
use crate::sigreg::{
    sliced_isotropy, SliceReport, DEFAULT_ALPHA, DEFAULT_SLICES, EPPS_PULLEY_MIN_SAMPLES,
};

/// Neighbour rank used for the data-driven radius estimate.
pub const DEFAULT_KNN: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: SimilarityKind,
    /// Frequencies for the characteristic-function similarity.
    pub t_grid: Vec<f64>,
    /// Explicit ensemble radii; `None` centres the grid on [`estimate_eps`].
    pub eps_grid: Option<Vec<f64>>,
    pub min_pts_grid: Vec<usize>,
    pub consensus: f64,
    pub knn: usize,
    pub filter: FilterConfig,
    /// Validate on SIGReg-normalized embeddings rather than raw ones.
    pub normalize: bool,
    pub slices: usize,
    pub alpha: f64,
    pub seed: u64,
    pub target_outliers: Option<f64>,
    pub pose: PoseConfig,
    pub thresholds: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: SimilarityKind::GaussianCosine,
            t_grid: DEFAULT_T_GRID.to_vec(),
            eps_grid: None,
            min_pts_grid: EnsembleConfig::DEFAULT_MIN_PTS.to_vec(),
            consensus: EnsembleConfig::DEFAULT_CONSENSUS,
            knn: DEFAULT_KNN,
            filter: FilterConfig::default(),
            normalize: true,
            slices: DEFAULT_SLICES,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            target_outliers: None,
            pose: PoseConfig::default(),
            thresholds: DEFAULT_THRESHOLDS_DEG.to_vec(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::invalid(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

impl RunConfig {
    /// Keys accepted by [`RunConfig::set`].
    pub const KEYS: [&'static str; 17] = [
        "method",
        "t-grid",
        "eps-grid",
        "min-pts-grid",
        "consensus",
        "knn",
        "ratio-max",
        "mean-max",
        "min-cluster-size",
        "normalize",
        "slices",
        "alpha",
        "seed",
        "target-outliers",
        "thresholds",
        "radius",
        "spacing",
    ];

    /// Applies one `key=value` setting. Underscores and dashes are
    /// interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "method" => {
                self.method = match v {
                    "gaussian-cosine" | "gaussian_cosine" => SimilarityKind::GaussianCosine,
                    "char-fn" | "char_fn" => SimilarityKind::CharFn,
                    _ => return Err(Error::invalid(format!("method: unknown {v:?}"))),
                };
            }
            "t-grid" => self.t_grid = parse_list(&key, v)?,
            "eps-grid" => self.eps_grid = Some(parse_list(&key, v)?),
            "min-pts-grid" => self.min_pts_grid = parse_list(&key, v)?,
            "consensus" => self.consensus = parse_num(&key, v)?,
            "knn" => self.knn = parse_num(&key, v)?,
            "ratio-max" => self.filter.thresholds.ratio_max = parse_num(&key, v)?,
            "mean-max" => self.filter.thresholds.mean_max = parse_num(&key, v)?,
            "min-cluster-size" => self.filter.min_cluster_size = parse_num(&key, v)?,
            "normalize" => self.normalize = parse_bool(&key, v)?,
            "slices" => self.slices = parse_num(&key, v)?,
            "alpha" => self.alpha = parse_num(&key, v)?,
            "seed" => self.seed = parse_num(&key, v)?,
            "target-outliers" => {
                self.target_outliers = if v.is_empty() || v == "none" {
                    None
                } else {
                    Some(parse_num(&key, v)?)
                }
            }
            "thresholds" => self.thresholds = parse_list(&key, v)?,
            "radius" => self.pose.radius = parse_num(&key, v)?,
            "spacing" => self.pose.spacing = parse_num(&key, v)?,
            _ => return Err(Error::invalid(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Applies settings in order, then checks the result.
    pub fn from_settings<'a>(
        settings: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in settings {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn similarity(&self) -> SimilarityMethod {
        match self.method {
            SimilarityKind::GaussianCosine => SimilarityMethod::GaussianCosine,
            SimilarityKind::CharFn => SimilarityMethod::CharFn {
                t_grid: self.t_grid.clone(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.t_grid.iter().any(|t| !t.is_finite() || *t == 0.0) {
            return Err(Error::invalid("t-grid values must be finite and non-zero"));
        }
        let ensemble = EnsembleConfig {
            eps_grid: self.eps_grid.clone().unwrap_or_else(|| vec![0.5]),
            min_pts_grid: self.min_pts_grid.clone(),
            consensus_threshold: self.consensus,
        };
        ensemble.validate()?;
        if self.knn == 0 {
            return Err(Error::invalid("knn must be at least 1"));
        }
        let t = &self.filter.thresholds;
        if !(t.ratio_max > 1.0) || !(t.mean_max > 0.0) {
            return Err(Error::invalid(
                "ratio-max must exceed 1 and mean-max must be positive",
            ));
        }
        if self.filter.min_cluster_size < 1 {
            return Err(Error::invalid("min-cluster-size must be at least 1"));
        }
        if self.slices == 0 {
            return Err(Error::invalid("slices must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if let Some(f) = self.target_outliers {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::invalid(format!(
                    "target-outliers {f} outside [0, 1)"
                )));
            }
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::invalid(
                "thresholds must be a non-empty list of positive degrees",
            ));
        }
        if !(self.pose.radius > 0.0) || !(self.pose.spacing > 0.0) {
            return Err(Error::invalid("radius and spacing must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Normalize,
    Similarity,
    Radius,
    Ensemble,
    Filter,
    OutlierTarget,
    Poses,
    Validate,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Normalize => "normalize",
            Stage::Similarity => "similarity",
            Stage::Radius => "radius estimate",
            Stage::Ensemble => "ensemble clustering",
            Stage::Filter => "isotropy filter",
            Stage::OutlierTarget => "outlier targeting",
            Stage::Poses => "pose synthesis",
            Stage::Validate => "validation",
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage.as_str(), self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSummary {
    pub slices: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub pass_fraction: f64,
    pub mean_statistic: f64,
    pub max_statistic: f64,
}

impl From<&SliceReport> for SliceSummary {
    fn from(r: &SliceReport) -> Self {
        let m = r.statistics.len();
        Self {
            slices: m,
            alpha: r.alpha,
            critical_value: r.critical_value,
            pass_fraction: r.pass_fraction,
            mean_statistic: r.statistics.iter().sum::<f64>() / m.max(1) as f64,
            max_statistic: r.statistics.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub cluster: i64,
    pub size: usize,
    pub validation: ClusterValidation,
    pub slices: Option<SliceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene_type: Option<SceneType>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub assignment: ClusterAssignment,
    pub poses: HashMap<String, CameraPose>,
    pub eps_estimate: Option<f64>,
    pub clusters: Vec<ClusterReport>,
}

fn slice_summary(
    set: &EmbeddingSet,
    members: &[usize],
    cfg: &RunConfig,
    cluster: i64,
) -> Result<Option<SliceSummary>> {
    if members.len() < EPPS_PULLEY_MIN_SAMPLES {
        return Ok(None);
    }
    let rows = set.matrix().select_rows(members);
    let seed = cfg.seed.wrapping_add(cluster as u64);
    match sliced_isotropy(&rows, cfg.slices, seed, cfg.alpha) {
        Ok(r) => Ok(Some(SliceSummary::from(&r))),
        // a cluster collapsed onto a point has no defined projection spread
        Err(Error::Slice { source, .. }) if matches!(*source, Error::DegenerateSample) => Ok(None),
        Err(e) => Err(e),
    }
}

fn validation_set(set: &EmbeddingSet, normalize: bool) -> Result<EmbeddingSet> {
    if normalize && !set.is_normalized() {
        set.sigreg_normalized()
    } else {
        Ok(set.clone())
    }
}

/// normalize → similarity → ensemble → isotropy filter → optional outlier
/// targeting → poses.
pub fn run(set: &EmbeddingSet, cfg: &RunConfig) -> std::result::Result<RunOutput, StageError> {
    cfg.validate().at(Stage::Normalize)?;
    let n = set.len();
    let normalized = set.sigreg_normalized().at(Stage::Normalize)?;
    let checked = validation_set(set, cfg.normalize).at(Stage::Normalize)?;

    let (assignment, coassoc, eps_estimate) = if n < 2 {
        (
            ClusterAssignment::all_outliers(set.ids().to_vec()),
            None,
            None,
        )
    } else {
        let sim = pairwise_similarity(&normalized, &cfg.similarity()).at(Stage::Similarity)?;
        let dist = sim.to_distance();
        let (eps_grid, estimate) = match &cfg.eps_grid {
            Some(g) => (g.clone(), None),
            None => {
                let e = estimate_eps(&dist, cfg.knn.min(n - 1)).at(Stage::Radius)?;
                (EnsembleConfig::around(e).eps_grid, Some(e))
            }
        };
        let ensemble = EnsembleConfig {
            eps_grid,
            min_pts_grid: cfg.min_pts_grid.clone(),
            consensus_threshold: cfg.consensus,
        };
        let (coassoc, raw) = ensemble_cluster(&dist, &ensemble).at(Stage::Ensemble)?;
        let filtered = sigreg_filter(&raw, &checked, &cfg.filter).at(Stage::Filter)?;
        (filtered, Some(coassoc), estimate)
    };

    let assignment = match (cfg.target_outliers, coassoc) {
        (Some(f), Some(c)) => target_outlier_rate(&assignment, &c, f).at(Stage::OutlierTarget)?,
        _ => assignment,
    };

    let scale = global_scale(&checked);
    let mut poses = HashMap::new();
    let mut clusters = Vec::new();
    for (c, members) in assignment.clusters().into_iter().enumerate() {
        let c = c as i64;
        let rows = set.matrix().select_rows(&members);
        let ids: Vec<&str> = members.iter().map(|&i| set.ids()[i].as_str()).collect();
        let (scene, map) = generate_cluster_poses(&rows, &ids, &cfg.pose).at(Stage::Poses)?;
        poses.extend(map);
        let validation =
            validate_cluster(&checked, &members, &scale, &cfg.filter).at(Stage::Validate)?;
        let slices = slice_summary(&checked, &members, cfg, c).at(Stage::Validate)?;
        clusters.push(ClusterReport {
            cluster: c,
            size: members.len(),
            validation,
            slices,
            scene_type: Some(scene),
        });
    }
    Ok(RunOutput {
        assignment,
        poses,
        eps_estimate,
        clusters,
    })
}

/// Rounds every float in a JSON tree to 9 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            let x = round9(num.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Sorted-key, 9-digit JSON text with a trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_json(&mut v);
    serde_json::to_string_pretty(&v).expect("json value serializes") + "\n"
}

pub fn run_report(set: &EmbeddingSet, cfg: &RunConfig, out: &RunOutput) -> Value {
    let a = &out.assignment;
    let k = a.n_clusters();
    let clustered = a.len() - a.outlier_count();
    let avg = if k == 0 {
        0.0
    } else {
        clustered as f64 / k as f64
    };
    let config = json!({
        "method": cfg.method.as_str(),
        "t_grid": match cfg.method {
            SimilarityKind::CharFn => json!(cfg.t_grid),
            SimilarityKind::GaussianCosine => Value::Null,
        },
        "eps_grid": cfg.eps_grid,
        "min_pts_grid": cfg.min_pts_grid,
        "consensus": cfg.consensus,
        "knn": cfg.knn,
        "ratio_max": cfg.filter.thresholds.ratio_max,
        "mean_max": cfg.filter.thresholds.mean_max,
        "min_cluster_size": cfg.filter.min_cluster_size,
        "normalized_validation": cfg.normalize,
        "slices": cfg.slices,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "target_outliers": cfg.target_outliers,
        "thresholds_deg": cfg.thresholds,
    });
    json!({
        "images": set.len(),
        "dim": set.dim(),
        "scenes": k,
        "outliers": a.outlier_count(),
        "outlier_fraction": a.outlier_fraction(),
        "avg_scene_size": avg,
        "eps_estimate": out.eps_estimate,
        "clusters": out.clusters,
        "config": config,
    })
}

/// Per-cluster isotropy report for an existing labelling. Clusters keep
/// their labels from `labels` and are reported in ascending label order;
/// `-1` marks outliers.
pub fn validate_labels(
    set: &EmbeddingSet,
    ids: &[String],
    labels: &[i64],
    cfg: &RunConfig,
) -> std::result::Result<Value, StageError> {
    let index: HashMap<&str, usize> = set
        .ids()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mismatch = |msg: String| StageError {
        stage: Stage::Validate,
        source: Error::IdMismatch(msg),
    };
    if ids.len() != set.len() {
        return Err(mismatch(format!(
            "{} labelled images, {} embeddings",
            ids.len(),
            set.len()
        )));
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut outliers = 0;
    for (id, &l) in ids.iter().zip(labels) {
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| mismatch(format!("no embedding for {id:?}")))?;
        if l == OUTLIER {
            outliers += 1;
        } else {
            groups.entry(l).or_default().push(i);
        }
    }
    let checked = validation_set(set, cfg.normalize).at(Stage::Normalize)?;
    let scale = global_scale(&checked);
    let mut clusters = Vec::new();
    for (c, mut members) in groups {
        members.sort_unstable();
        let tag = |e: Error| StageError {
            stage: Stage::Validate,
            source: Error::invalid(format!("cluster {c}: {e}")),
        };
        let validation = validate_cluster(&checked, &members, &scale, &cfg.filter).map_err(tag)?;
        let slices = slice_summary(&checked, &members, cfg, c).map_err(tag)?;
        clusters.push(ClusterReport {
            cluster: c,
            size: members.len(),
            validation,
            slices,
            scene_type: None,
        });
    }
    let all_pass = clusters.iter().all(|c| c.validation.passes());
    Ok(json!({
        "clusters": clusters,
        "all_pass": all_pass,
        "outliers": outliers,
        "normalized_validation": cfg.normalize,
    }))
}
