//! Real matrices in dense row-major or coordinate form.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// A stored nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major, `rows * cols` values.
    Dense(Vec<f64>),
    /// Sorted by (row, col), no repeats, no explicit zeros.
    Coo(Vec<Entry>),
}

/// Immutable real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::dim(format!("matrix must be nonempty, got {rows}x{cols}")));
    }
    Ok(())
}

impl Matrix {
    /// Dense matrix from row-major values.
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, storage: Storage::Dense(data) })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::dim("ragged rows"));
        }
        Self::dense(m, n, rows.concat())
    }

    /// Coordinate-form matrix. Repeated coordinates are rejected; explicit
    /// zeros are dropped.
    pub fn sparse(rows: usize, cols: usize, triples: Vec<(usize, usize, f64)>) -> Result<Self> {
        check_shape(rows, cols)?;
        let mut seen = HashSet::with_capacity(triples.len());
        let mut entries = Vec::with_capacity(triples.len());
        for (row, col, value) in triples {
            if row >= rows || col >= cols {
                return Err(Error::dim(format!(
                    "coordinate ({row}, {col}) outside {rows}x{cols}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if !seen.insert((row, col)) {
                return Err(Error::DuplicateCoordinate { row, col });
            }
            if value != 0.0 {
                entries.push(Entry { row, col, value });
            }
        }
        entries.sort_unstable_by_key(|e| (e.row, e.col));
        Ok(Self { rows, cols, storage: Storage::Coo(entries) })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::sparse(rows, cols, Vec::new())
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::sparse(n, n, values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diag(&vec![1.0; n])
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

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Coo(_))
    }

    /// Number of entries with value != 0.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.iter().filter(|v| **v != 0.0).count(),
            Storage::Coo(e) => e.len(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of range");
        match &self.storage {
            Storage::Dense(d) => d[row * self.cols + col],
            Storage::Coo(e) => e
                .binary_search_by_key(&(row, col), |x| (x.row, x.col))
                .map_or(0.0, |k| e[k].value),
        }
    }

    /// Nonzero entries in row-major order.
    pub fn nonzeros(&self) -> Box<dyn Iterator<Item = Entry> + '_> {
        match &self.storage {
            Storage::Dense(d) => {
                let cols = self.cols;
                Box::new(d.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(k, &value)| {
                    Entry { row: k / cols, col: k % cols, value }
                }))
            }
            Storage::Coo(e) => Box::new(e.iter().copied()),
        }
    }

    /// Row-major dense copy of the values.
    pub fn to_dense_vec(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Coo(e) => {
                let mut d = vec![0.0; self.rows * self.cols];
                for x in e {
                    d[x.row * self.cols + x.col] = x.value;
                }
                d
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, storage: Storage::Dense(self.to_dense_vec()) }
    }

    pub fn to_sparse(&self) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, storage: Storage::Coo(self.nonzeros().collect()) }
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim(format!("vector length {} != cols {}", x.len(), self.cols)));
        }
        let mut y = vec![0.0; self.rows];
        match &self.storage {
            Storage::Dense(d) => {
                for (yi, row) in y.iter_mut().zip(d.chunks_exact(self.cols)) {
                    *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            Storage::Coo(e) => {
                for en in e {
                    y[en.row] += en.value * x[en.col];
                }
            }
        }
        Ok(y)
    }

    /// `Aᵀ y`.
    pub fn tmul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::dim(format!("vector length {} != rows {}", y.len(), self.rows)));
        }
        let mut z = vec![0.0; self.cols];
        match &self.storage {
            Storage::Dense(d) => {
                for (yi, row) in y.iter().zip(d.chunks_exact(self.cols)) {
                    if *yi != 0.0 {
                        z.iter_mut().zip(row).for_each(|(zj, a)| *zj += yi * a);
                    }
                }
            }
            Storage::Coo(e) => {
                for en in e {
                    z[en.col] += en.value * y[en.row];
                }
            }
        }
        Ok(z)
    }

    /// `AᵀA x` without forming `AᵀA`.
    pub fn gram_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = self.mul_vec(x)?;
        self.tmul_vec(&y)
    }

    /// `A Aᵀ y` without forming `A Aᵀ`.
    pub fn outer_gram_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let z = self.tmul_vec(y)?;
        self.mul_vec(&z)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.nonzeros().map(|e| e.value * e.value).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Entrywise ℓ1 norm, Σ|A_ij|.
    pub fn l1_norm(&self) -> f64 {
        self.nonzeros().map(|e| e.value.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.nonzeros().map(|e| e.value.abs()).fold(0.0, f64::max)
    }

    /// Subtracts each column's mean. The result is dense.
    pub fn center_columns(&self) -> Matrix {
        let mut d = self.to_dense_vec();
        let m = self.rows as f64;
        for j in 0..self.cols {
            let mean = (0..self.rows).map(|i| d[i * self.cols + j]).sum::<f64>() / m;
            for i in 0..self.rows {
                d[i * self.cols + j] -= mean;
            }
        }
        Matrix { rows: self.rows, cols: self.cols, storage: Storage::Dense(d) }
    }

    /// `self - other`. Sparse when both operands are sparse.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        match (&self.storage, &other.storage) {
            (Storage::Coo(a), Storage::Coo(b)) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut p, mut q) = (0, 0);
                while p < a.len() || q < b.len() {
                    let ka = a.get(p).map(|e| (e.row, e.col));
                    let kb = b.get(q).map(|e| (e.row, e.col));
                    match (ka, kb) {
                        (Some(x), Some(y)) if x == y => {
                            out.push((x.0, x.1, a[p].value - b[q].value));
                            p += 1;
                            q += 1;
                        }
                        (Some(x), Some(y)) if x < y => {
                            out.push((x.0, x.1, a[p].value));
                            p += 1;
                        }
                        (Some(x), None) => {
                            out.push((x.0, x.1, a[p].value));
                            p += 1;
                        }
                        (_, Some(y)) => {
                            out.push((y.0, y.1, -b[q].value));
                            q += 1;
                        }
                        (None, None) => unreachable!(),
                    }
                }
                Matrix::sparse(self.rows, self.cols, out)
            }
            _ => {
                let mut d = self.to_dense_vec();
                for e in other.nonzeros() {
                    d[e.row * self.cols + e.col] -= e.value;
                }
                Matrix::dense(self.rows, self.cols, d)
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Matrix> {
        match &self.storage {
            Storage::Dense(d) => Matrix::dense(self.rows, self.cols, d.iter().map(|v| v * c).collect()),
            Storage::Coo(e) => Matrix::sparse(
                self.rows,
                self.cols,
                e.iter().map(|x| (x.row, x.col, x.value * c)).collect(),
            ),
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t: Vec<Entry> = self
            .nonzeros()
            .map(|e| Entry { row: e.col, col: e.row, value: e.value })
            .collect();
        t.sort_unstable_by_key(|e| (e.row, e.col));
        let out = Matrix { rows: self.cols, cols: self.rows, storage: Storage::Coo(t) };
        if self.is_sparse() {
            out
        } else {
            out.to_dense()
        }
    }

    /// Dense `AᵀA` (n×n, row-major). Intended for small `n`.
    pub fn gram_dense(&self) -> Vec<f64> {
        let n = self.cols;
        let mut g = vec![0.0; n * n];
        let d = self.to_dense_vec();
        for row in d.chunks_exact(n) {
            for (a, &ra) in row.iter().enumerate() {
                if ra == 0.0 {
                    continue;
                }
                for (b, &rb) in row.iter().enumerate() {
                    g[a * n + b] += ra * rb;
                }
            }
        }
        g
    }
}
