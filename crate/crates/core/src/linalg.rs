//! Dense row-major matrices and the handful of statistics the pipeline needs.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// An `n × d` real matrix stored row-major. Rows are samples, columns are
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equal-length rows. An empty iterator yields a
    /// `0 × 0` matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimMismatch(cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Copies the given rows, in the given order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn map_rows(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (src, dst) = (
                self.row(i),
                &mut out.data[i * self.cols..(i + 1) * self.cols],
            );
            f(src, dst);
        }
        out
    }

    /// Row-wise map into a matrix with `cols` columns.
    pub fn map_rows_to(&self, cols: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut out = Self::zeros(self.rows, cols);
        for i in 0..self.rows {
            f(self.row(i), out.row_mut(i));
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Column means.
pub fn column_mean(m: &RowMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.ncols()];
    for r in m.rows() {
        for (acc, x) in mean.iter_mut().zip(r) {
            *acc += x;
        }
    }
    let n = m.nrows() as f64;
    mean.iter_mut().for_each(|x| *x /= n);
    mean
}

/// Per-column standard deviation with divisor `n`.
pub fn column_std(m: &RowMatrix) -> Vec<f64> {
    let mean = column_mean(m);
    let mut var = vec![0.0; m.ncols()];
    for r in m.rows() {
        for ((acc, x), mu) in var.iter_mut().zip(r).zip(&mean) {
            *acc += (x - mu) * (x - mu);
        }
    }
    let n = m.nrows() as f64;
    var.into_iter().map(|v| (v / n).sqrt()).collect()
}

/// Unbiased sample covariance (divisor `n − 1`) of the rows, together with
/// the column mean. Requires `n ≥ 2`.
pub fn covariance(m: &RowMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d = m.ncols();
    let mean = column_mean(m);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for r in m.rows() {
        for ((c, x), mu) in centered.iter_mut().zip(r).zip(&mean) {
            *c = x - mu;
        }
        for a in 0..d {
            let ca = centered[a];
            for b in a..d {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok((mean, cov))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Column `k` of the returned matrix is the unit
/// eigenvector for eigenvalue `k`.
pub fn symmetric_eigen_desc(sym: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym.clone());
    let d = sym.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}
