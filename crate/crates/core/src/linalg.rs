//! Dense row-major linear algebra used by the Kaczmarz solvers.
//!
//! Only what the row-action methods need: contiguous row access, inner
//! products, norms, a plain triple-loop product and a small least-squares
//! solve that serves as a reference for the iterative solvers.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inner product of two equal-length slices. Callers check lengths.
#[inline]
pub(crate) fn dot_slices(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::NonFinite(pos)),
        None => Ok(()),
    }
}

/// A finite real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(Vector(data))
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    /// Standard basis vector `e_index` of length `len`.
    pub fn basis(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[index] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        dot_slices(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Checked inner product `Σ u_k v_k`.
pub fn dot(u: &Vector, v: &Vector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!(
            "dot of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(dot_slices(u.as_slice(), v.as_slice()))
}

/// Row-major dense matrix with at least one row and one column and finite
/// entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[&Vector]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns of differing length".into()));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.as_slice().iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Self::new(rows, cols, data)
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Sets one entry.
    ///
    /// # Panics
    /// If `value` is not finite.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite(), "matrix entries must be finite");
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Whole backing buffer, row-major.
    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vector(&self, i: usize) -> Vector {
        Vector(self.row(i).to_vec())
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    /// Copy of the contiguous column range `cols` as a new matrix.
    pub fn column_block(&self, cols: std::ops::Range<usize>) -> Result<Self> {
        if cols.start >= cols.end || cols.end > self.cols {
            return Err(Error::Dimension(format!(
                "column range {cols:?} outside 0..{}",
                self.cols
            )));
        }
        let width = cols.end - cols.start;
        let mut data = Vec::with_capacity(self.rows * width);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[cols.clone()]);
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: width,
            data,
        })
    }

    /// Copy of the contiguous row range `rows` as a new matrix.
    pub fn row_block(&self, rows: std::ops::Range<usize>) -> Result<Self> {
        if rows.start >= rows.end || rows.end > self.rows {
            return Err(Error::Dimension(format!(
                "row range {rows:?} outside 0..{}",
                self.rows
            )));
        }
        Ok(DenseMatrix {
            rows: rows.end - rows.start,
            cols: self.cols,
            data: self.data[rows.start * self.cols..rows.end * self.cols].to_vec(),
        })
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "subtracting {:?} from {:?}",
                other.shape(),
                self.shape()
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Product `A x` for a vector `x`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "applying {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(Vector(
            (0..self.rows)
                .map(|i| dot_slices(self.row(i), x.as_slice()))
                .collect(),
        ))
    }
}

/// Squared Euclidean norm of every row.
pub fn row_norms_sq(a: &DenseMatrix) -> Vector {
    Vector((0..a.rows()).map(|i| dot_slices(a.row(i), a.row(i))).collect())
}

pub fn frobenius_norm_sq(a: &DenseMatrix) -> f64 {
    a.as_slice().iter().map(|v| v * v).sum()
}

/// Standard product `A X`.
pub fn matmul(a: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != x.rows() {
        return Err(Error::Dimension(format!(
            "multiplying {:?} by {:?}",
            a.shape(),
            x.shape()
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows(), x.cols());
    for i in 0..a.rows() {
        let out_row = out.row_mut(i);
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &xkj) in out_row.iter_mut().zip(x.row(k)) {
                *o += aik * xkj;
            }
        }
    }
    Ok(out)
}

/// Minimizer of `||b - A x||²` through the normal equations `AᵀA x = Aᵀb`,
/// solved by Gaussian elimination with partial pivoting.
///
/// Intended as a reference at small scale. A pivot below `1e-12` times the
/// largest diagonal entry of `AᵀA` is reported as singular.
pub fn least_squares_oracle(a: &DenseMatrix, b: &Vector) -> Result<Vector> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Dimension(format!(
            "right-hand side of length {} for {m} rows",
            b.len()
        )));
    }
    if m < n {
        return Err(Error::Dimension(format!(
            "least squares needs rows >= cols, got {m}x{n}"
        )));
    }

    // Augmented system [AᵀA | Aᵀb], n x (n + 1).
    let w = n + 1;
    let mut aug = vec![0.0; n * w];
    for r in 0..m {
        let row = a.row(r);
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in 0..n {
                aug[i * w + j] += ri * row[j];
            }
            aug[i * w + n] += ri * b[r];
        }
    }

    let scale = (0..n).map(|i| aug[i * w + i].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| aug[p * w + col].abs().total_cmp(&aug[q * w + col].abs()))
            .unwrap_or(col);
        let pivot = aug[pivot_row * w + col];
        if pivot.abs() <= tol || scale == 0.0 {
            return Err(Error::SingularMatrix { column: col, pivot });
        }
        if pivot_row != col {
            for j in 0..w {
                aug.swap(col * w + j, pivot_row * w + j);
            }
        }
        for r in col + 1..n {
            let factor = aug[r * w + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..w {
                aug[r * w + j] -= factor * aug[col * w + j];
            }
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| aug[i * w + j] * x[j]).sum();
        x[i] = (aug[i * w + n] - tail) / aug[i * w + i];
    }
    Vector::new(x)
}
