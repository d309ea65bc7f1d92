//! File formats: embedding and ground-truth JSON Lines, assignment and
//! submission CSV, and flat `key=value` configuration files.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterAssignment, OUTLIER};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::RowMatrix;
use crate::pose::CameraPose;
use crate::scoring::GroundTruth;

/// Orthonormality tolerance for rotations read from text files.
pub const POSE_READ_TOL: f64 = 1e-6;

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest decimal text of `x` rounded to 9 significant digits.
pub fn fmt9(x: f64) -> String {
    format!("{}", round9(x))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn for_each_line(path: &Path, mut f: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    for (k, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        f(k + 1, &line)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingLine {
    image: String,
    embedding: Vec<f64>,
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    let mut seen = std::collections::HashSet::new();
    for_each_line(path, |line, text| {
        let rec: EmbeddingLine =
            serde_json::from_str(text).map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.image.is_empty() {
            return Err(Error::parse(path, line, "empty image name"));
        }
        if !seen.insert(rec.image.clone()) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate image {:?}", rec.image),
            ));
        }
        match dim {
            None => dim = Some(rec.embedding.len()),
            Some(d) if d != rec.embedding.len() => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("embedding has {} values, expected {d}", rec.embedding.len()),
                ))
            }
            _ => {}
        }
        if rec.embedding.len() < 2 {
            return Err(Error::parse(
                path,
                line,
                "embedding dimension must be at least 2",
            ));
        }
        ids.push(rec.image);
        data.extend(rec.embedding);
        Ok(())
    })?;
    let n = ids.len();
    let matrix = RowMatrix::new(n, dim.unwrap_or(0), data)?;
    EmbeddingSet::new(ids, matrix).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn write_embeddings(set: &EmbeddingSet, out: &mut impl Write) -> std::io::Result<()> {
    for (id, row) in set.ids().iter().zip(set.matrix().rows()) {
        let line = EmbeddingLine {
            image: id.clone(),
            embedding: row.to_vec(),
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct GroundTruthLine {
    image: String,
    scene: i64,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    rotation: Option<Vec<f64>>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    translation: Option<Vec<f64>>,
}

fn pose_from_vecs(r: &[f64], t: &[f64]) -> std::result::Result<CameraPose, String> {
    let r: [f64; 9] = r
        .try_into()
        .map_err(|_| format!("R has {} values, expected 9", r.len()))?;
    let t: [f64; 3] = t
        .try_into()
        .map_err(|_| format!("T has {} values, expected 3", t.len()))?;
    CameraPose::from_parts(&r, &t, POSE_READ_TOL).map_err(|e| e.to_string())
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut poses = HashMap::new();
    for_each_line(path, |line, text| {
        let rec: GroundTruthLine =
            serde_json::from_str(text).map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.scene < OUTLIER {
            return Err(Error::parse(
                path,
                line,
                format!("invalid scene {}", rec.scene),
            ));
        }
        if rec.scene != OUTLIER {
            let (Some(r), Some(t)) = (&rec.rotation, &rec.translation) else {
                return Err(Error::parse(path, line, "scene image without R/T"));
            };
            let pose = pose_from_vecs(r, t).map_err(|m| Error::parse(path, line, m))?;
            poses.insert(rec.image.clone(), pose);
        }
        if ids.contains(&rec.image) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate image {:?}", rec.image),
            ));
        }
        ids.push(rec.image);
        labels.push(rec.scene);
        Ok(())
    })?;
    GroundTruth::new(ClusterAssignment::new(ids, labels)?, poses)
}

pub fn write_ground_truth(gt: &GroundTruth, out: &mut impl Write) -> std::io::Result<()> {
    for (id, &scene) in gt.ids().iter().zip(gt.assignment().labels()) {
        let pose = gt.poses().get(id).filter(|_| scene != OUTLIER);
        let line = GroundTruthLine {
            image: id.clone(),
            scene,
            rotation: pose.map(|p| p.rotation_row_major().to_vec()),
            translation: pose.map(|p| p.translation_array().to_vec()),
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_line(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {}", expected.join(",")),
        ));
    }
    Ok(())
}

/// Raw `image,label` rows, labels as written.
pub fn read_labels(path: &Path) -> Result<(Vec<String>, Vec<i64>)> {
    let mut reader = csv_reader(path)?;
    check_header(path, &mut reader, &["image", "label"])?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::parse(path, csv_line(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let label: i64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid label {:?}", &rec[1])))?;
        if label < OUTLIER {
            return Err(Error::parse(path, line, format!("invalid label {label}")));
        }
        ids.push(rec[0].to_string());
        labels.push(label);
    }
    Ok((ids, labels))
}

pub fn read_assignment(path: &Path) -> Result<ClusterAssignment> {
    let (ids, labels) = read_labels(path)?;
    ClusterAssignment::new(ids, labels)
}

pub fn write_assignment(a: &ClusterAssignment, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "image,label")?;
    for (id, l) in a.ids().iter().zip(a.labels()) {
        writeln!(out, "{id},{l}")?;
    }
    Ok(())
}

fn join9(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| fmt9(v))
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes one row per image, in the assignment's order. Outliers and images
/// without a pose get empty rotation/translation fields.
pub fn write_submission(
    a: &ClusterAssignment,
    poses: &HashMap<String, CameraPose>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(out, "image,cluster,rotation,translation")?;
    for (id, &l) in a.ids().iter().zip(a.labels()) {
        match poses.get(id).filter(|_| l != OUTLIER) {
            Some(p) => writeln!(
                out,
                "{id},{l},{},{}",
                join9(&p.rotation_row_major()),
                join9(&p.translation_array())
            )?,
            None => writeln!(out, "{id},{l},,")?,
        }
    }
    Ok(())
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(';')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid number {v:?}"))
        })
        .collect()
}

pub type Submission = (ClusterAssignment, HashMap<String, CameraPose>);

pub fn read_submission(path: &Path) -> Result<Submission> {
    let mut reader = csv_reader(path)?;
    check_header(
        path,
        &mut reader,
        &["image", "cluster", "rotation", "translation"],
    )?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut raw_poses = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::parse(path, csv_line(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let label: i64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid cluster {:?}", &rec[1])))?;
        let (r, t) = (&rec[2], &rec[3]);
        if !r.is_empty() || !t.is_empty() {
            let r = parse_floats(r).map_err(|m| Error::parse(path, line, m))?;
            let t = parse_floats(t).map_err(|m| Error::parse(path, line, m))?;
            let pose = pose_from_vecs(&r, &t).map_err(|m| Error::parse(path, line, m))?;
            raw_poses.push((rec[0].to_string(), pose));
        }
        ids.push(rec[0].to_string());
        labels.push(label);
    }
    let assignment = ClusterAssignment::new(ids, labels)?;
    Ok((assignment, raw_poses.into_iter().collect()))
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for_each_line(path, |line, text| {
        let text = text.trim();
        if text.starts_with('#') {
            return Ok(());
        }
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| Error::parse(path, line, "expected key=value"))?;
        out.insert(
            k.trim().trim_start_matches("--").to_string(),
            v.trim().to_string(),
        );
        Ok(())
    })?;
    Ok(out)
}
