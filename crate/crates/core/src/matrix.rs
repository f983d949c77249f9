//! Dense real matrices and tolerance-driven rank decisions.
//!
//! Storage is row-major: `data[i * cols + j]` holds entry `(i, j)`. Every
//! matrix has at least one row and one column and only finite entries; the
//! constructors reject anything else, so downstream code never re-checks.
//!
//! Rank decisions use Gaussian elimination with partial pivoting. A pivot
//! counts when its magnitude exceeds `max(abs_eps, rel_eps * max|entry|)`.
//! The accepted and rejected pivot extremes are kept in [`RankInfo`] so a
//! caller can tell when a decision sat close to the threshold.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative/absolute thresholds for treating a pivot or residual as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel_eps: f64,
    pub abs_eps: f64,
}

impl Tolerance {
    pub const DEFAULT_REL: f64 = 1e-9;
    pub const DEFAULT_ABS: f64 = 1e-12;

    pub fn new(rel_eps: f64, abs_eps: f64) -> Result<Self> {
        if !rel_eps.is_finite() || !abs_eps.is_finite() || rel_eps <= 0.0 || abs_eps < 0.0 {
            return Err(Error::InvalidTolerance { rel_eps, abs_eps });
        }
        Ok(Self { rel_eps, abs_eps })
    }

    /// Zero threshold for quantities whose natural magnitude is `scale`.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.abs_eps.max(self.rel_eps * scale.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel_eps: Self::DEFAULT_REL,
            abs_eps: Self::DEFAULT_ABS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: m,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, m, data)
    }

    pub fn row_vector(values: &[f64]) -> Result<Self> {
        Self::new(1, values.len(), values.to_vec())
    }

    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "zero-sized matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Panics if `n == 0`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Panics if `diag` is empty.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Sets an entry. Non-finite values are a programming error.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(v.is_finite());
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "vector-matrix product",
                left: (1, v.len()),
                right: self.shape(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        Ok(out)
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "matrix-vector product",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok(self
            .row_iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "sub",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Largest absolute entrywise difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> Option<f64> {
        (self.shape() == other.shape()).then(|| {
            self.data
                .iter()
                .zip(&other.data)
                .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
        })
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Matrix> {
        check_indices(indices, self.rows)?;
        if indices.is_empty() {
            return Err(Error::EmptyMatrix {
                rows: 0,
                cols: self.cols,
            });
        }
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Ok(Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        })
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Result<Matrix> {
        if start >= end || end > self.cols {
            return Err(Error::IndexOutOfRange {
                index: end,
                len: self.cols,
            });
        }
        let width = end - start;
        let mut data = Vec::with_capacity(self.rows * width);
        for r in self.row_iter() {
            data.extend_from_slice(&r[start..end]);
        }
        Ok(Matrix {
            rows: self.rows,
            cols: width,
            data,
        })
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[Matrix]) -> Result<Matrix> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidInput("hstack of no blocks".into()))?;
        let rows = first.rows;
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch {
                op: "hstack",
                left: first.shape(),
                right: b.shape(),
            });
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Vertical concatenation.
    pub fn vstack(blocks: &[Matrix]) -> Result<Matrix> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidInput("vstack of no blocks".into()))?;
        let cols = first.cols;
        if let Some(b) = blocks.iter().find(|b| b.cols != cols) {
            return Err(Error::DimensionMismatch {
                op: "vstack",
                left: first.shape(),
                right: b.shape(),
            });
        }
        let data: Vec<f64> = blocks.iter().flat_map(|b| b.data.iter().copied()).collect();
        Ok(Matrix {
            rows: data.len() / cols,
            cols,
            data,
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.row_iter().map(|r| r.iter().sum()).collect()
    }

    pub fn is_zero_row(&self, i: usize, tol: &Tolerance) -> bool {
        let thr = tol.threshold(self.max_abs());
        self.row(i).iter().all(|v| v.abs() <= thr)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self, tol: &Tolerance) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                op: "inverse",
                left: self.shape(),
                right: self.shape(),
            });
        }
        let n = self.rows;
        let thr = tol.threshold(self.max_abs());
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a.get(x, c).abs().total_cmp(&a.get(y, c).abs()))
                .unwrap_or(c);
            if a.get(p, c).abs() <= thr {
                return Err(Error::Singular);
            }
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            let piv = a.get(c, c);
            for j in 0..n {
                a.data[c * n + j] /= piv;
                inv.data[c * n + j] /= piv;
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let f = a.get(r, c);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[r * n + j] -= f * a.data[c * n + j];
                    inv.data[r * n + j] -= f * inv.data[c * n + j];
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.row_iter() {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:>10.6}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Serialized as an array of rows.
impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for r in self.row_iter() {
            seq.serialize_element(r)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_indices(indices: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &i in indices {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Outcome of a rank decision with the pivots that bracket the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankInfo {
    pub rank: usize,
    pub threshold: f64,
    /// Smallest pivot magnitude counted as nonzero.
    pub min_accepted_pivot: Option<f64>,
    /// Largest pivot magnitude treated as zero.
    pub max_rejected_pivot: Option<f64>,
}

pub fn rank_info(m: &Matrix, tol: &Tolerance) -> RankInfo {
    let threshold = tol.threshold(m.max_abs());
    let mut a = m.clone();
    let (rows, cols) = m.shape();
    let mut r = 0;
    let mut min_acc: Option<f64> = None;
    let mut max_rej: Option<f64> = None;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let p = (r..rows)
            .max_by(|&x, &y| a.get(x, c).abs().total_cmp(&a.get(y, c).abs()))
            .unwrap_or(r);
        let piv = a.get(p, c);
        if piv.abs() <= threshold {
            max_rej = Some(max_rej.map_or(piv.abs(), |v| v.max(piv.abs())));
            continue;
        }
        min_acc = Some(min_acc.map_or(piv.abs(), |v| v.min(piv.abs())));
        a.swap_rows(p, r);
        for i in r + 1..rows {
            let f = a.get(i, c) / piv;
            if f == 0.0 {
                continue;
            }
            for j in c..cols {
                a.data[i * cols + j] -= f * a.data[r * cols + j];
            }
        }
        r += 1;
    }
    RankInfo {
        rank: r,
        threshold,
        min_accepted_pivot: min_acc,
        max_rejected_pivot: max_rej,
    }
}

/// Numerical row rank under `tol`.
pub fn rank(m: &Matrix, tol: &Tolerance) -> usize {
    rank_info(m, tol).rank
}

/// Whether the rows named by `subset` are linearly dependent.
///
/// The empty subset is independent.
pub fn rows_dependent(m: &Matrix, subset: &[usize], tol: &Tolerance) -> Result<bool> {
    check_indices(subset, m.rows())?;
    if subset.is_empty() {
        return Ok(false);
    }
    let sub = m.select_rows(subset)?;
    Ok(rank(&sub, tol) < subset.len())
}

/// Solves `X * factor = product` for `X`.
///
/// `factor` must have full row rank. Returns `Ok(None)` when the system is
/// inconsistent, i.e. the least-squares residual is not zero under `tol`.
pub fn solve_left_factor(
    product: &Matrix,
    factor: &Matrix,
    tol: &Tolerance,
) -> Result<Option<Matrix>> {
    if product.cols() != factor.cols() {
        return Err(Error::DimensionMismatch {
            op: "solve_left_factor",
            left: product.shape(),
            right: factor.shape(),
        });
    }
    let r = rank(factor, tol);
    if r < factor.rows() {
        return Err(Error::RankDeficient {
            rank: r,
            required: factor.rows(),
        });
    }
    let ft = factor.transpose();
    let gram = factor.matmul(&ft)?;
    let x = product.matmul(&ft)?.matmul(&gram.inverse(tol)?)?;
    let recon = x.matmul(factor)?;
    let residual = recon.max_abs_diff(product).unwrap_or(f64::INFINITY);
    let scale = product.max_abs().max(x.max_abs() * factor.max_abs());
    Ok((residual <= tol.threshold(scale)).then_some(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            Matrix::new(0, 3, vec![]),
            Err(Error::EmptyMatrix { .. })
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0; 3]),
            Err(Error::DataLength { .. })
        ));
        assert_eq!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        );
        assert!(matches!(
            Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]),
            Err(Error::RaggedRows { row: 1, .. })
        ));
        assert!(Tolerance::new(0.0, 1e-12).is_err());
        assert!(Tolerance::new(1e-9, -1.0).is_err());
    }

    #[test]
    fn rank_examples() {
        let tol = Tolerance::default();
        assert_eq!(rank(&Matrix::identity(5), &tol), 5);
        assert_eq!(rank(&m(&[&[1.0, 2.0], &[2.0, 4.0]]), &tol), 1);
        assert_eq!(rank(&m(&[&[0.0, 0.0], &[0.0, 0.0]]), &tol), 0);
        let wide = m(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]);
        assert_eq!(rank(&wide, &tol), 2);
    }

    #[test]
    fn rank_info_tracks_rejected_pivots() {
        let tol = Tolerance::default();
        let info = rank_info(&m(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-13]]), &tol);
        assert_eq!(info.rank, 1);
        assert!(info.max_rejected_pivot.unwrap() < info.threshold);
        assert_eq!(info.min_accepted_pivot, Some(1.0));
    }

    #[test]
    fn rows_dependent_examples() {
        let tol = Tolerance::default();
        let id = Matrix::identity(3);
        assert!(!rows_dependent(&id, &[0, 1, 2], &tol).unwrap());
        assert!(rows_dependent(&m(&[&[1.0, 0.0], &[2.0, 0.0]]), &[0, 1], &tol).unwrap());
        assert_eq!(
            rows_dependent(&id, &[0, 0], &tol),
            Err(Error::DuplicateIndex(0))
        );
        assert!(matches!(
            rows_dependent(&id, &[3], &tol),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert!(!rows_dependent(&id, &[], &tol).unwrap());
    }

    #[test]
    fn solve_left_factor_examples() {
        let tol = Tolerance::default();
        let id = Matrix::identity(3);
        let x = solve_left_factor(&id.scale(2.0), &id, &tol)
            .unwrap()
            .unwrap();
        assert!(x.max_abs_diff(&id.scale(2.0)).unwrap() < 1e-14);

        let b = m(&[&[0.2, 0.8], &[0.6, 0.4], &[0.5, 0.5]]);
        let f = m(&[&[0.2, 0.8, 0.0], &[0.6, 0.0, 0.4], &[0.0, 0.5, 0.5]]);
        let perm = m(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let x = solve_left_factor(&perm.matmul(&f).unwrap(), &f, &tol)
            .unwrap()
            .unwrap();
        assert!(x.max_abs_diff(&perm).unwrap() < 1e-12);

        // b has 3 rows in 2 columns: rank deficient as a factor.
        assert!(matches!(
            solve_left_factor(&b, &b, &tol),
            Err(Error::RankDeficient {
                rank: 2,
                required: 3
            })
        ));

        // A product row outside the factor's row space is inconsistent.
        let f2 = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let p2 = m(&[&[0.0, 0.0, 1.0]]);
        assert_eq!(solve_left_factor(&p2, &f2, &tol).unwrap(), None);
    }

    #[test]
    fn inverse_and_products() {
        let tol = Tolerance::default();
        let a = m(&[&[4.0, 7.0], &[2.0, 6.0]]);
        let inv = a.inverse(&tol).unwrap();
        let prod = a.matmul(&inv).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(2)).unwrap() < 1e-14);
        assert_eq!(
            m(&[&[1.0, 2.0], &[2.0, 4.0]]).inverse(&tol),
            Err(Error::Singular)
        );
        assert_eq!(a.left_mul_vec(&[1.0, 1.0]).unwrap(), vec![6.0, 13.0]);
        assert_eq!(a.mul_vec(&[1.0, 1.0]).unwrap(), vec![11.0, 8.0]);
        let h = Matrix::hstack(&[a.clone(), Matrix::identity(2)]).unwrap();
        assert_eq!(h.shape(), (2, 4));
        assert_eq!(h.column_block(2, 4).unwrap(), Matrix::identity(2));
        assert_eq!(Matrix::vstack(&[a.clone(), a]).unwrap().shape(), (4, 2));
    }
}
