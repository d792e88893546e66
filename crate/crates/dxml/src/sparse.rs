//! Sparse row storage and the vector kernels everything else builds on.

use crate::error::{Error, Result};

/// A sparse vector: sorted `(column, value)` entries plus a logical dimension.
///
/// Invariants: column indices are strictly increasing and below `dim`, and no
/// explicit zero is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    entries: Vec<(u32, f64)>,
    dim: usize,
}

impl SparseVec {
    /// Empty vector of the given dimension.
    pub fn empty(dim: usize) -> Self {
        SparseVec {
            entries: Vec::new(),
            dim,
        }
    }

    /// Build from entries, validating order, bounds, and absence of zeros.
    pub fn new(dim: usize, entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut prev: Option<u32> = None;
        for &(col, val) in &entries {
            if (col as usize) >= dim {
                return Err(Error::InvalidVector(format!(
                    "column {} out of range for dimension {}",
                    col, dim
                )));
            }
            if let Some(p) = prev {
                if col <= p {
                    return Err(Error::InvalidVector(format!(
                        "column {} after {} is not strictly increasing",
                        col, p
                    )));
                }
            }
            if val == 0.0 {
                return Err(Error::InvalidVector(format!(
                    "explicit zero at column {}",
                    col
                )));
            }
            prev = Some(col);
        }
        Ok(SparseVec { entries, dim })
    }

    /// Build from possibly unsorted entries; sorts, sums duplicate columns,
    /// and drops entries that cancel to exactly zero. The sort is stable so
    /// duplicates are summed in input order.
    pub fn collect(dim: usize, mut raw: Vec<(u32, f64)>) -> Result<Self> {
        raw.sort_by_key(|&(col, _)| col);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
        for (col, val) in raw {
            if (col as usize) >= dim {
                return Err(Error::InvalidVector(format!(
                    "column {} out of range for dimension {}",
                    col, dim
                )));
            }
            match entries.last_mut() {
                Some(last) if last.0 == col => last.1 += val,
                _ => entries.push((col, val)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(SparseVec { entries, dim })
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let entries = dense
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        SparseVec {
            entries,
            dim: dense.len(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(col, val) in &self.entries {
            out[col as usize] = val;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    /// Dot product via merge join over the sorted entry lists.
    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0f64;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Scaled copy `alpha * self`; `alpha == 0` yields the empty vector.
    pub fn scaled(&self, alpha: f64) -> SparseVec {
        if alpha == 0.0 {
            return SparseVec::empty(self.dim);
        }
        SparseVec {
            entries: self.entries.iter().map(|&(c, v)| (c, v * alpha)).collect(),
            dim: self.dim,
        }
    }
}

/// Cosine similarity; zero-norm operands yield 0 so downstream argmax routing
/// never sees a NaN.
pub fn cosine_similarity(a: &SparseVec, b: &SparseVec) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
            context: "cosine_similarity",
        });
    }
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(a.dot(b) / (na * nb))
}

/// Cosine similarity between two vectors already known to share a dimension.
/// Zero-norm operands yield 0, as in [`cosine_similarity`].
pub(crate) fn cosine_unchecked(a: &SparseVec, b: &SparseVec) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(b) / (na * nb)
}

/// `a / ‖a‖₂`, or `a` unchanged when the norm is zero.
pub fn l2_normalize(a: &SparseVec) -> SparseVec {
    let n = a.norm();
    if n == 0.0 {
        return a.clone();
    }
    SparseVec {
        entries: a.entries.iter().map(|&(c, v)| (c, v / n)).collect(),
        dim: a.dim,
    }
}

/// Row-major sparse matrix; every row shares `n_cols` as its dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<SparseVec>,
    n_cols: usize,
}

impl SparseMatrix {
    pub fn new(n_cols: usize, rows: Vec<SparseVec>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.dim != n_cols {
                return Err(Error::InvalidVector(format!(
                    "row {} has dimension {} but matrix has {} columns",
                    i, row.dim, n_cols
                )));
            }
        }
        Ok(SparseMatrix { rows, n_cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &SparseVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    /// Total stored entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.nnz()).sum()
    }

    /// Average non-zeros per row (the s_x / s_y statistics).
    pub fn avg_nnz(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.nnz() as f64 / self.rows.len() as f64
    }
}

/// Component-wise mean of the selected rows, accumulated in a dense scratch
/// buffer of length `n_cols` and re-sparsified.
pub fn mean_rows(m: &SparseMatrix, row_indices: &[usize]) -> Result<SparseVec> {
    if row_indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    for &i in row_indices {
        if i >= m.n_rows() {
            return Err(Error::InvalidVector(format!(
                "row index {} out of range ({} rows)",
                i,
                m.n_rows()
            )));
        }
    }
    Ok(mean_of_rows(
        row_indices.iter().map(|&i| m.row(i)),
        m.n_cols,
    ))
}

/// Mean over an iterator of rows that all share dimension `dim`.
pub(crate) fn mean_of_rows<'a, I>(rows: I, dim: usize) -> SparseVec
where
    I: IntoIterator<Item = &'a SparseVec>,
{
    let mut scratch = vec![0.0f64; dim];
    let mut touched: Vec<u32> = Vec::new();
    let mut count = 0usize;
    for row in rows {
        count += 1;
        for (col, val) in row.iter() {
            if scratch[col as usize] == 0.0 {
                touched.push(col);
            }
            scratch[col as usize] += val;
        }
    }
    debug_assert!(count > 0);
    touched.sort_unstable();
    touched.dedup();
    let inv = 1.0 / count as f64;
    let entries: Vec<(u32, f64)> = touched
        .into_iter()
        .filter(|&c| scratch[c as usize] != 0.0)
        .map(|c| (c, scratch[c as usize] * inv))
        .collect();
    SparseVec { entries, dim }
}

/// A feature matrix paired with a binary label matrix over the same instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: SparseMatrix,
    pub labels: SparseMatrix,
}

impl Dataset {
    /// Pair features with labels; label values must be exactly 1.0.
    pub fn new(features: SparseMatrix, labels: SparseMatrix) -> Result<Self> {
        if features.n_rows() != labels.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                found: labels.n_rows(),
                context: "feature/label row counts",
            });
        }
        for (i, row) in labels.rows().iter().enumerate() {
            if let Some((col, val)) = row.iter().find(|&(_, v)| v != 1.0) {
                return Err(Error::InvalidVector(format!(
                    "label row {} has value {} at column {}; labels must be 1.0",
                    i, val, col
                )));
            }
        }
        Ok(Dataset { features, labels })
    }

    pub fn n(&self) -> usize {
        self.features.n_rows()
    }

    pub fn d_x(&self) -> usize {
        self.features.n_cols()
    }

    pub fn d_y(&self) -> usize {
        self.labels.n_cols()
    }

    /// Average feature non-zeros per instance.
    pub fn s_x(&self) -> f64 {
        self.features.avg_nnz()
    }

    /// Average label non-zeros per instance.
    pub fn s_y(&self) -> f64 {
        self.labels.avg_nnz()
    }
}
