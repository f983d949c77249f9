//! Kronecker and row-wise tensor products, letter selectors, and
//! permutation/scaling detection between matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Tolerance};

/// Standard Kronecker product, `(m*p) x (n*q)`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = Matrix::zeros(m * p, n * q);
    for i in 0..m {
        for j in 0..n {
            let aij = a.get(i, j);
            if aij == 0.0 {
                continue;
            }
            for k in 0..p {
                for l in 0..q {
                    out.set(i * p + k, j * q + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Row-wise tensor product: row `i` of the result is `a_i ⊗ b_i`.
pub fn row_tensor(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "row_tensor",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n1, n2) = (a.cols(), b.cols());
    let mut data = Vec::with_capacity(a.rows() * n1 * n2);
    for (ra, rb) in a.row_iter().zip(b.row_iter()) {
        for &x in ra {
            data.extend(rb.iter().map(|&y| x * y));
        }
    }
    Matrix::new(a.rows(), n1 * n2, data)
}

/// Left fold of [`row_tensor`] over `ms`.
pub fn row_tensor_multi(ms: &[Matrix]) -> Result<Matrix> {
    let (first, rest) = ms
        .split_first()
        .ok_or_else(|| Error::InvalidInput("row_tensor_multi of an empty list".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, m| row_tensor(&acc, m))
}

/// `K`-fold row tensor power of `b`.
pub fn row_tensor_power(b: &Matrix, k: usize) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::InvalidInput("row tensor power must be >= 1".into()));
    }
    row_tensor_multi(&vec![b.clone(); k])
}

/// The `(total_letters*q) x q` selector with `I_q` in row partition `k` (0-based).
pub fn selector_e(k: usize, q: usize, total_letters: usize) -> Result<Matrix> {
    if q == 0 || total_letters == 0 {
        return Err(Error::InvalidInput(
            "selector needs q >= 1 and at least one letter".into(),
        ));
    }
    if k >= total_letters {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: total_letters,
        });
    }
    let mut e = Matrix::zeros(total_letters * q, q);
    for i in 0..q {
        e.set(k * q + i, i, 1.0);
    }
    Ok(e)
}

/// Diagonal matrix carrying column `k` (0-based) of `b`.
pub fn diag_column(b: &Matrix, k: usize) -> Result<Matrix> {
    if k >= b.cols() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: b.cols(),
        });
    }
    Ok(Matrix::diagonal(&b.column(k)))
}

/// Mixed-radix encoding of per-observer letters into one flat letter.
///
/// Observer 0 is the most significant digit, matching the factor order of
/// `B1 ⊗row B2 ⊗row ... ⊗row A`. Letters are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LetterCodec {
    alphabet_sizes: Vec<usize>,
    total: usize,
}

impl LetterCodec {
    pub fn new(alphabet_sizes: Vec<usize>) -> Result<Self> {
        if alphabet_sizes.is_empty() {
            return Err(Error::InvalidInput(
                "codec needs at least one observer".into(),
            ));
        }
        if let Some(&k) = alphabet_sizes.iter().find(|&&k| k < 2) {
            return Err(Error::InvalidInput(format!("alphabet size {k} < 2")));
        }
        let total = alphabet_sizes
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .ok_or_else(|| Error::Overflow("product of alphabet sizes".into()))?;
        Ok(Self {
            alphabet_sizes,
            total,
        })
    }

    pub fn single(kappa: usize) -> Result<Self> {
        Self::new(vec![kappa])
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn observers(&self) -> usize {
        self.alphabet_sizes.len()
    }

    /// Total number of joint letters (the product of the alphabet sizes).
    pub fn total_letters(&self) -> usize {
        self.total
    }

    pub fn encode(&self, letters: &[usize]) -> Result<usize> {
        if letters.len() != self.alphabet_sizes.len() {
            return Err(Error::InvalidInput(format!(
                "letter tuple has {} entries, codec has {} observers",
                letters.len(),
                self.alphabet_sizes.len()
            )));
        }
        letters
            .iter()
            .zip(&self.alphabet_sizes)
            .try_fold(0usize, |acc, (&y, &k)| {
                if y >= k {
                    Err(Error::IndexOutOfRange { index: y, len: k })
                } else {
                    Ok(acc * k + y)
                }
            })
    }

    pub fn decode(&self, idx: usize) -> Result<Vec<usize>> {
        if idx >= self.total {
            return Err(Error::IndexOutOfRange {
                index: idx,
                len: self.total,
            });
        }
        let mut rest = idx;
        let mut out = vec![0; self.alphabet_sizes.len()];
        for (slot, &k) in out.iter_mut().zip(&self.alphabet_sizes).rev() {
            *slot = rest % k;
            rest /= k;
        }
        Ok(out)
    }
}

/// A row pairing `h_bar[r] = scale[r] * h[perm[r]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermScale {
    pub perm: Vec<usize>,
    pub scale: Vec<f64>,
}

impl PermScale {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            scale: vec![1.0; n],
        }
    }

    /// `Π` with `Π[r][perm[r]] = 1`.
    pub fn permutation_matrix(&self) -> Matrix {
        let n = self.perm.len();
        let mut p = Matrix::zeros(n, n);
        for (r, &i) in self.perm.iter().enumerate() {
            p.set(r, i, 1.0);
        }
        p
    }

    /// `Λ`, indexed by rows of `h`, so that `h_bar = Π Λ h`.
    pub fn scaling_matrix(&self) -> Matrix {
        let mut diag = vec![0.0; self.perm.len()];
        for (&i, &s) in self.perm.iter().zip(&self.scale) {
            diag[i] = s;
        }
        Matrix::diagonal(&diag)
    }

    /// `Π Λ` as one matrix.
    pub fn matrix(&self) -> Matrix {
        let n = self.perm.len();
        let mut p = Matrix::zeros(n, n);
        for (r, (&i, &s)) in self.perm.iter().zip(&self.scale).enumerate() {
            p.set(r, i, s);
        }
        p
    }

    pub fn apply(&self, h: &Matrix) -> Result<Matrix> {
        self.matrix().matmul(h)
    }
}

/// Scale `s` with `v ≈ s * u`, if the rows are proportional under `thr`.
fn proportional_scale(u: &[f64], v: &[f64], thr: f64) -> Option<f64> {
    let uu: f64 = u.iter().map(|x| x * x).sum();
    if uu == 0.0 {
        return None;
    }
    let s = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / uu;
    let max_v = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max_v <= thr {
        return None;
    }
    let residual = u
        .iter()
        .zip(v)
        .fold(0.0_f64, |m, (a, b)| m.max((b - s * a).abs()));
    (residual <= thr).then_some(s)
}

/// Finds `(Π, Λ)` with `h_bar ≈ Π Λ h`.
///
/// Rows are paired through their proportionality candidates; ambiguous
/// candidates are resolved by augmenting-path search, and the final pairing
/// is verified on the whole matrix.
pub fn find_perm_scale(h: &Matrix, h_bar: &Matrix, tol: &Tolerance) -> Result<Option<PermScale>> {
    if h.shape() != h_bar.shape() {
        return Err(Error::DimensionMismatch {
            op: "find_perm_scale",
            left: h.shape(),
            right: h_bar.shape(),
        });
    }
    if let Some(i) = (0..h.rows()).find(|&i| h.is_zero_row(i, tol)) {
        return Err(Error::ZeroRow(i));
    }
    let n = h.rows();
    let thr = tol.threshold(h.max_abs().max(h_bar.max_abs()));

    let candidates: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|r| {
            (0..n)
                .filter_map(|i| proportional_scale(h.row(i), h_bar.row(r), thr).map(|s| (i, s)))
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Ok(None);
    }

    // match_of[i] = h_bar row currently paired with h row i
    let mut match_of: Vec<Option<usize>> = vec![None; n];
    for r in 0..n {
        let mut visited = vec![false; n];
        if !augment(r, &candidates, &mut match_of, &mut visited) {
            return Ok(None);
        }
    }
    let mut perm = vec![0; n];
    let mut scale = vec![0.0; n];
    for (i, m) in match_of.iter().enumerate() {
        let r = m.expect("perfect matching");
        perm[r] = i;
        scale[r] = candidates[r]
            .iter()
            .find(|(c, _)| *c == i)
            .map(|&(_, s)| s)
            .expect("matched candidate");
    }
    let ps = PermScale { perm, scale };
    let residual = ps.apply(h)?.max_abs_diff(h_bar).unwrap_or(f64::INFINITY);
    Ok((residual <= thr).then_some(ps))
}

fn augment(
    r: usize,
    candidates: &[Vec<(usize, f64)>],
    match_of: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &(i, _) in &candidates[r] {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let free = match match_of[i] {
            None => true,
            Some(other) => augment(other, candidates, match_of, visited),
        };
        if free {
            match_of[i] = Some(r);
            return true;
        }
    }
    false
}
