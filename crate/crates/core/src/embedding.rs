//! Embedding vectors, SIGReg normalization and the two Gaussian-motivated
//! pairwise similarities.

use std::collections::HashSet;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, RowMatrix};

/// Norms below this are treated as zero vectors.
pub const ZERO_NORM_TOL: f64 = 1e-12;

/// Frequency grid used by the characteristic-function similarity unless the
/// caller supplies one. `t = 0` carries no signal and is never included.
pub const DEFAULT_T_GRID: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// A single embedding: at least two finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "embedding dimension must be at least 2, got {}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("coordinate {k} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sigreg_normalize(&self) -> Result<Self> {
        sigreg_normalize(&self.0).map(Self)
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Rescales `v` to Euclidean norm `√d`, keeping its direction.
pub fn sigreg_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if n < ZERO_NORM_TOL {
        return Err(Error::ZeroVector);
    }
    let scale = (v.len() as f64).sqrt() / n;
    Ok(v.iter().map(|x| x * scale).collect())
}

/// `½ (1 + cos(zi, zj))`, clamped to `[0, 1]`.
pub fn gaussian_cosine_similarity(zi: &[f64], zj: &[f64]) -> Result<f64> {
    if zi.len() != zj.len() {
        return Err(Error::DimMismatch(zi.len(), zj.len()));
    }
    let (ni, nj) = (norm(zi), norm(zj));
    if ni < ZERO_NORM_TOL || nj < ZERO_NORM_TOL {
        return Err(Error::ZeroVector);
    }
    let cos = dot(zi, zj) / (ni * nj);
    Ok((0.5 * (1.0 + cos)).clamp(0.0, 1.0))
}

/// Empirical characteristic function of the coordinates of `v`, treated as
/// `d` samples of a scalar distribution, evaluated on `t_grid`.
pub fn empirical_char_fn(v: &[f64], t_grid: &[f64]) -> Result<Vec<Complex64>> {
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if v.len() < 2 {
        return Err(Error::invalid("characteristic function needs dim >= 2"));
    }
    let d = v.len() as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (re, im) = v.iter().fold((0.0, 0.0), |(re, im), &x| {
                let (s, c) = (t * x).sin_cos();
                (re + c, im + s)
            });
            Complex64::new(re / d, im / d)
        })
        .collect())
}

fn check_char_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if t_grid.iter().any(|t| *t == 0.0 || !t.is_finite()) {
        return Err(Error::invalid("t grid must be finite and exclude t = 0"));
    }
    Ok(())
}

fn char_fn_distance(phi_i: &[Complex64], phi_j: &[Complex64]) -> f64 {
    let total: f64 = phi_i
        .iter()
        .zip(phi_j)
        .map(|(a, b)| (a - b).norm() / 2.0)
        .sum();
    (1.0 - total / phi_i.len() as f64).clamp(0.0, 1.0)
}

/// `1 − mean_t |φi(t) − φj(t)| / 2` over `t_grid`, clamped to `[0, 1]`.
pub fn char_fn_similarity(zi: &[f64], zj: &[f64], t_grid: &[f64]) -> Result<f64> {
    if zi.len() != zj.len() {
        return Err(Error::DimMismatch(zi.len(), zj.len()));
    }
    check_char_grid(t_grid)?;
    let phi_i = empirical_char_fn(zi, t_grid)?;
    let phi_j = empirical_char_fn(zj, t_grid)?;
    Ok(char_fn_distance(&phi_i, &phi_j))
}

/// Named embeddings sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    matrix: RowMatrix,
    normalized: bool,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, matrix: RowMatrix) -> Result<Self> {
        if ids.len() != matrix.nrows() {
            return Err(Error::invalid(format!(
                "{} ids for {} embedding rows",
                ids.len(),
                matrix.nrows()
            )));
        }
        if !ids.is_empty() && matrix.ncols() < 2 {
            return Err(Error::invalid("embedding dimension must be at least 2"));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if id.is_empty() {
                return Err(Error::invalid("empty image id"));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate image id {id:?}")));
            }
        }
        if let Some(k) = matrix.as_slice().iter().position(|x| !x.is_finite()) {
            let d = matrix.ncols().max(1);
            return Err(Error::invalid(format!(
                "non-finite coordinate in embedding of {:?}",
                ids[k / d]
            )));
        }
        Ok(Self {
            ids,
            matrix,
            normalized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn matrix(&self) -> &RowMatrix {
        &self.matrix
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn embedding(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    /// Returns a copy with every row rescaled to norm `√d`.
    pub fn sigreg_normalized(&self) -> Result<Self> {
        let mut out = self.matrix.clone();
        for i in 0..self.len() {
            let v = sigreg_normalize(self.matrix.row(i))
                .map_err(|e| Error::invalid(format!("cannot normalize {:?}: {e}", self.ids[i])))?;
            out.row_mut(i).copy_from_slice(&v);
        }
        Ok(Self {
            ids: self.ids.clone(),
            matrix: out,
            normalized: true,
        })
    }

    /// Rows for `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            matrix: self.matrix.select_rows(indices),
            normalized: self.normalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimilarityKind {
    GaussianCosine,
    CharFn,
}

impl SimilarityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimilarityKind::GaussianCosine => "gaussian_cosine",
            SimilarityKind::CharFn => "char_fn",
        }
    }
}

/// Similarity measure and, for the characteristic-function variant, its
/// frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SimilarityMethod {
    GaussianCosine,
    CharFn { t_grid: Vec<f64> },
}

impl SimilarityMethod {
    pub fn kind(&self) -> SimilarityKind {
        match self {
            SimilarityMethod::GaussianCosine => SimilarityKind::GaussianCosine,
            SimilarityMethod::CharFn { .. } => SimilarityKind::CharFn,
        }
    }
}

/// Symmetric `n × n` similarity scores in `[0, 1]` with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    entries: RowMatrix,
    kind: SimilarityKind,
}

impl SimilarityMatrix {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn entries(&self) -> &RowMatrix {
        &self.entries
    }

    /// Elementwise complement `1 − s`.
    pub fn to_distance(&self) -> DistanceMatrix {
        let n = self.len();
        let mut entries = RowMatrix::zeros(n, n);
        for i in 0..n {
            let row = entries.row_mut(i);
            for (j, out) in row.iter_mut().enumerate() {
                *out = if i == j { 0.0 } else { 1.0 - self.get(i, j) };
            }
        }
        DistanceMatrix {
            ids: self.ids.clone(),
            entries,
        }
    }
}

/// Symmetric `n × n` dissimilarities in `[0, 1]` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    entries: RowMatrix,
}

impl DistanceMatrix {
    /// Validates and wraps a precomputed distance matrix.
    pub fn new(ids: Vec<String>, entries: RowMatrix) -> Result<Self> {
        let n = ids.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::invalid(format!(
                "distance matrix is {}x{}, expected {n}x{n}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..n {
            if entries.get(i, i) != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = entries.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!(
                        "entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
                if v != entries.get(j, i) {
                    return Err(Error::invalid(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { ids, entries })
    }

    /// Builds a matrix from a distance function evaluated once per unordered
    /// pair; ids default to the decimal index.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = RowMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                entries.row_mut(i)[j] = v;
                entries.row_mut(j)[i] = v;
            }
        }
        Self::new((0..n).map(|i| i.to_string()).collect(), entries)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.entries.row(i)
    }

    pub fn entries(&self) -> &RowMatrix {
        &self.entries
    }

    /// Same matrix with rows/columns reordered so that new index `k` is old
    /// index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let mut entries = RowMatrix::zeros(n, n);
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                entries.row_mut(a)[b] = self.get(pa, pb);
            }
        }
        Self {
            ids: perm.iter().map(|&p| self.ids[p].clone()).collect(),
            entries,
        }
    }
}

/// Full similarity matrix, one evaluation per unordered pair.
pub fn pairwise_similarity(
    set: &EmbeddingSet,
    method: &SimilarityMethod,
) -> Result<SimilarityMatrix> {
    let n = set.len();
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    // Row i holds the entries (i, j) for j > i.
    let upper: Vec<Vec<f64>> = match method {
        SimilarityMethod::GaussianCosine => (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| {
                        gaussian_cosine_similarity(set.embedding(i), set.embedding(j)).map_err(
                            |e| Error::Pair {
                                i,
                                j,
                                source: Box::new(e),
                            },
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?,
        SimilarityMethod::CharFn { t_grid } => {
            check_char_grid(t_grid)?;
            let phis: Vec<Vec<Complex64>> = (0..n)
                .into_par_iter()
                .map(|i| empirical_char_fn(set.embedding(i), t_grid))
                .collect::<Result<_>>()?;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    Ok((i + 1..n)
                        .map(|j| char_fn_distance(&phis[i], &phis[j]))
                        .collect())
                })
                .collect::<Result<_>>()?
        }
    };
    let mut entries = RowMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        entries.row_mut(i)[i] = 1.0;
        for (k, &v) in row.iter().enumerate() {
            let j = i + 1 + k;
            entries.row_mut(i)[j] = v;
            entries.row_mut(j)[i] = v;
        }
    }
    Ok(SimilarityMatrix {
        ids: set.ids().to_vec(),
        entries,
        kind: method.kind(),
    })
}
