//! Dense column-major matrix used as the numeric carrier for every stage.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{CssnmfError, Result};

/// Real matrix stored column by column.
///
/// Column slices `M(:, j)` are contiguous, which is the dominant access
/// pattern of the self-dictionary solver and of the column-selection
/// baselines.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps column-major data; fails if the length does not match or a
    /// value is not finite.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CssnmfError::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(CssnmfError::Parse(format!(
                "non-finite value at row {}, column {}",
                pos % rows.max(1),
                pos / rows.max(1)
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from row vectors. Ragged input is rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(CssnmfError::Parse(format!(
                "row {bad} has {} entries, expected {ncols}",
                rows[bad].len()
            )));
        }
        let mut data = vec![0.0; nrows * ncols];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * nrows + i] = v;
            }
        }
        Self::from_col_major(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Stacks equal-length columns side by side.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(CssnmfError::Dimension("columns of unequal length".into()));
        }
        Self::from_col_major(rows, columns.len(), columns.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * rhs`. Panics when the inner dimensions differ.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        self.matmul_into(rhs, &mut out);
        out
    }

    /// `out = self * rhs`, reusing the allocation of `out`.
    pub fn matmul_into(&self, rhs: &DenseMatrix, out: &mut DenseMatrix) {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension mismatch");
        assert_eq!(out.shape(), (self.rows, rhs.cols), "matmul output shape");
        out.data.fill(0.0);
        let m = self.rows;
        for j in 0..rhs.cols {
            let out_col = &mut out.data[j * m..(j + 1) * m];
            for (k, &b) in rhs.col(j).iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                for (o, &a) in out_col.iter_mut().zip(self.col(k)) {
                    *o += a * b;
                }
            }
        }
    }

    /// `selfᵀ * rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, rhs.cols);
        self.tr_matmul_into(rhs, &mut out);
        out
    }

    pub fn tr_matmul_into(&self, rhs: &DenseMatrix, out: &mut DenseMatrix) {
        assert_eq!(self.rows, rhs.rows, "tr_matmul row mismatch");
        assert_eq!(out.shape(), (self.cols, rhs.cols), "tr_matmul output shape");
        for j in 0..rhs.cols {
            let b = rhs.col(j);
            for i in 0..self.cols {
                out.data[j * self.cols + i] = dot(self.col(i), b);
            }
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (yi, &a) in y.iter_mut().zip(self.col(j)) {
                    *yi += a * xj;
                }
            }
        }
        y
    }

    /// Transposed matrix-vector product `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "tr_mul_vec dimension mismatch");
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_map(&self, rhs: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> DenseMatrix {
        assert_eq!(self.shape(), rhs.shape(), "elementwise shape mismatch");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `sqrt(Σ M(i,j)²)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Column ℓ1 norms `Σ_i |M(i,j)|`.
    pub fn col_l1_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| self.col(j).iter().map(|v| v.abs()).sum())
            .collect()
    }

    pub fn col_l2_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| dot(self.col(j), self.col(j)).sqrt())
            .collect()
    }

    /// Row ℓ1 norms `Σ_j |M(i,j)|`.
    pub fn row_l1_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (o, v) in out.iter_mut().zip(self.col(j)) {
                *o += v.abs();
            }
        }
        out
    }

    /// Induced ℓ1 operator norm, the largest column ℓ1 norm.
    pub fn l1_operator_norm(&self) -> f64 {
        self.col_l1_norms().into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// `M(row_idx, col_idx)`.
    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(row_idx.len(), col_idx.len(), |i, j| {
            self[(row_idx[i], col_idx[j])]
        })
    }

    /// `[self, rhs]`.
    pub fn hstack(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows {
            return Err(CssnmfError::Dimension(format!(
                "cannot stack {} rows next to {} rows",
                self.rows, rhs.rows
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols + rhs.cols,
            data,
        })
    }

    /// Column permutation: column `k` of the result is column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> DenseMatrix {
        self.select_columns(perm)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.is_square()
            && self.asymmetry() <= rel_tol * self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    /// Largest `|S(i,j) - S(j,i)|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.cols {
            for i in (j + 1)..self.rows.min(self.cols) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:10.4e}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
