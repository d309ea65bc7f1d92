//! `sigscene` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime or data failure, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sigscene::clustering::adjusted_rand_index;
use sigscene::error::Error;
use sigscene::io;
use sigscene::pipeline::{self, RunConfig};
use sigscene::scoring::{score_dataset, DEFAULT_THRESHOLDS_DEG};
use sigscene::sigreg::{load_calibration_cache, save_calibration_cache};
use sigscene::synth::{generate_dataset, SynthSpec};

#[derive(Parser)]
#[command(
    name = "sigscene",
    version,
    about = "Unsupervised scene discovery from image embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic embeddings file and its ground truth.
    Synth(SynthArgs),
    /// Cluster embeddings into scenes, synthesize poses and write a submission.
    Run(RunArgs),
    /// Score a submission against ground truth.
    Score(ScoreArgs),
    /// Report isotropy checks for every cluster of an assignment.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    scenes: usize,
    #[arg(long, default_value_t = 20)]
    per_scene: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    noise_std: f64,
    /// Minimum center distance in units of the noise level.
    #[arg(long, default_value_t = 8.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Settings shared by `run` and `validate`. Every flag overrides the key of
/// the same name in `--config`.
#[derive(Args, Default)]
struct Settings {
    /// key=value file; flags win over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON file of Monte-Carlo critical values, read before and updated after.
    #[arg(long)]
    calibration_cache: Option<PathBuf>,
    /// gaussian-cosine or char-fn
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated t values for char-fn
    #[arg(long)]
    t_grid: Option<String>,
    /// DBSCAN radii; estimated from the k-distance knee when absent
    #[arg(long)]
    eps_grid: Option<String>,
    /// DBSCAN min-points values
    #[arg(long)]
    min_pts_grid: Option<String>,
    /// Co-association fraction needed to link two images
    #[arg(long)]
    consensus: Option<String>,
    /// Neighbor rank for the radius estimate
    #[arg(long)]
    knn: Option<String>,
    /// Largest accepted eigenvalue ratio
    #[arg(long)]
    ratio_max: Option<String>,
    /// Largest accepted mean norm
    #[arg(long)]
    mean_max: Option<String>,
    /// Smaller clusters become outliers
    #[arg(long)]
    min_cluster_size: Option<String>,
    /// Validate normalized rather than raw embeddings
    #[arg(long)]
    normalize: Option<String>,
    /// Random directions for the sliced test
    #[arg(long)]
    slices: Option<String>,
    /// Significance level of the sliced test
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Outlier fraction to enforce, or none
    #[arg(long)]
    target_outliers: Option<String>,
    /// Comma-separated mAA thresholds in degrees
    #[arg(long)]
    thresholds: Option<String>,
    /// Camera orbit radius
    #[arg(long)]
    radius: Option<String>,
    /// Camera step for linear trajectories
    #[arg(long)]
    spacing: Option<String>,
}

impl Settings {
    fn flags(&self) -> Vec<(&'static str, &str)> {
        [
            ("method", &self.method),
            ("t-grid", &self.t_grid),
            ("eps-grid", &self.eps_grid),
            ("min-pts-grid", &self.min_pts_grid),
            ("consensus", &self.consensus),
            ("knn", &self.knn),
            ("ratio-max", &self.ratio_max),
            ("mean-max", &self.mean_max),
            ("min-cluster-size", &self.min_cluster_size),
            ("normalize", &self.normalize),
            ("slices", &self.slices),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("target-outliers", &self.target_outliers),
            ("thresholds", &self.thresholds),
            ("radius", &self.radius),
            ("spacing", &self.spacing),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    fn resolve(&self) -> Result<RunConfig, Failure> {
        let file = match &self.config {
            Some(p) => io::read_config(p).map_err(Failure::Usage)?,
            None => Default::default(),
        };
        let mut settings: Vec<(&str, &str)> =
            file.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        settings.extend(self.flags());
        RunConfig::from_settings(settings).map_err(Failure::Usage)
    }

    fn load_cache(&self) -> Result<(), Failure> {
        if let Some(p) = &self.calibration_cache {
            load_calibration_cache(p).map_err(|e| Failure::runtime("calibration cache", e))?;
        }
        Ok(())
    }

    fn save_cache(&self) -> Result<(), Failure> {
        if let Some(p) = &self.calibration_cache {
            save_calibration_cache(p).map_err(|e| Failure::runtime("calibration cache", e))?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct RunArgs {
    /// Embeddings JSON Lines file.
    embeddings: PathBuf,
    /// Submission CSV to write.
    #[arg(long, default_value = "submission.csv")]
    out: PathBuf,
    /// JSON report to write.
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct ScoreArgs {
    submission: PathBuf,
    ground_truth: PathBuf,
    /// Comma-separated angular thresholds in degrees.
    /// Comma-separated mAA thresholds in degrees
    #[arg(long)]
    thresholds: Option<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    embeddings: PathBuf,
    /// `image,label` CSV; label -1 marks outliers.
    assignment: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

enum Failure {
    Usage(Error),
    Runtime { stage: String, source: String },
}

impl Failure {
    fn runtime(stage: &str, e: impl std::fmt::Display) -> Self {
        Failure::Runtime {
            stage: stage.to_string(),
            source: e.to_string(),
        }
    }
}

impl From<pipeline::StageError> for Failure {
    fn from(e: pipeline::StageError) -> Self {
        Failure::runtime(e.stage.as_str(), e.source)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::runtime("write", Error::io(path, e)))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_text(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::runtime("write", e)),
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Failure> {
    let mut spec = SynthSpec::uniform(a.scenes, a.per_scene, a.dim, a.seed);
    spec.noise_std = a.noise_std;
    spec.center_separation = a.separation;
    spec.n_outliers = a.outliers;
    spec.validate().map_err(Failure::Usage)?;
    let data = generate_dataset(&spec).map_err(|e| Failure::runtime("generate", e))?;
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::runtime("write", Error::io(&a.out_dir, e)))?;
    let mut emb = Vec::new();
    io::write_embeddings(&data.embeddings, &mut emb).map_err(|e| Failure::runtime("write", e))?;
    let mut gt = Vec::new();
    io::write_ground_truth(&data.ground_truth, &mut gt)
        .map_err(|e| Failure::runtime("write", e))?;
    let emb_path = a.out_dir.join("embeddings.jsonl");
    let gt_path = a.out_dir.join("ground_truth.jsonl");
    let written = fs::write(&emb_path, emb).and_then(|_| fs::write(&gt_path, gt));
    if let Err(e) = written {
        let _ = fs::remove_file(&emb_path);
        let _ = fs::remove_file(&gt_path);
        return Err(Failure::runtime("write", e));
    }
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let cfg = a.settings.resolve()?;
    a.settings.load_cache()?;
    let set = io::read_embeddings(&a.embeddings).map_err(|e| Failure::runtime("load", e))?;
    let out = pipeline::run(&set, &cfg)?;

    let mut submission = Vec::new();
    io::write_submission(&out.assignment, &out.poses, &mut submission)
        .map_err(|e| Failure::runtime("write", e))?;
    let report = pipeline::canonical_json(&pipeline::run_report(&set, &cfg, &out));
    let written = fs::write(&a.out, &submission).and_then(|_| fs::write(&a.report, &report));
    if let Err(e) = written {
        let _ = fs::remove_file(&a.out);
        let _ = fs::remove_file(&a.report);
        return Err(Failure::runtime("write", e));
    }
    a.settings.save_cache()
}

fn cmd_score(a: &ScoreArgs) -> Result<(), Failure> {
    let thresholds = match &a.thresholds {
        Some(t) => {
            let mut cfg = RunConfig::default();
            cfg.set("thresholds", t).map_err(Failure::Usage)?;
            cfg.validate().map_err(Failure::Usage)?;
            cfg.thresholds
        }
        None => DEFAULT_THRESHOLDS_DEG.to_vec(),
    };
    let (pred, poses) =
        io::read_submission(&a.submission).map_err(|e| Failure::runtime("load", e))?;
    let gt = io::read_ground_truth(&a.ground_truth).map_err(|e| Failure::runtime("load", e))?;
    let report =
        score_dataset(&pred, &poses, &gt, &thresholds).map_err(|e| Failure::runtime("score", e))?;
    let aligned = pred
        .aligned_to(gt.ids())
        .map_err(|e| Failure::runtime("score", e))?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["adjusted_rand_index"] =
        adjusted_rand_index(aligned.labels(), gt.assignment().labels()).into();
    emit(a.out.as_deref(), &pipeline::canonical_json(&value))
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), Failure> {
    let cfg = a.settings.resolve()?;
    a.settings.load_cache()?;
    let set = io::read_embeddings(&a.embeddings).map_err(|e| Failure::runtime("load", e))?;
    let (ids, labels) = io::read_labels(&a.assignment).map_err(|e| Failure::runtime("load", e))?;
    let report = pipeline::validate_labels(&set, &ids, &labels, &cfg)?;
    emit(a.out.as_deref(), &pipeline::canonical_json(&report))?;
    a.settings.save_cache()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(Failure::Runtime { stage, source }) => {
            eprintln!("error: {stage} failed: {source}");
            ExitCode::from(1)
        }
    }
}
