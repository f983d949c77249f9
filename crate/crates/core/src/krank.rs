//! Kruskal rank with certificates, plus the cheap bounds around it.
//!
//! `krank(M)` is the largest `K` such that every `K` rows of `M` are
//! linearly independent. The exact engine enumerates row subsets by
//! ascending size and stops at the first dependent one, so the certificate
//! is the lexicographically smallest dependent subset of minimal size.
//! Before enumerating it scans for zero rows (krank 0) and proportional
//! pairs (krank 1), and skips subset sizes already certified independent by
//! the coherence of the rows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::{rank_info, Matrix, Tolerance};
use crate::tensor::{kron, row_tensor, row_tensor_power};

/// Subsets no larger than this are skipped only when the Gershgorin margin of
/// the row Gram matrix exceeds it.
const COHERENCE_MARGIN: f64 = 1e-3;

/// Kronecker products with more rows than this get the closed form krank.
const MAX_EXACT_KRON_ROWS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "rows")]
pub enum Certificate {
    /// No dependent row subset exists.
    Full,
    /// A minimal dependent row subset (0-based, ascending).
    Dependent(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrankResult {
    pub value: usize,
    pub certificate: Certificate,
    /// Smallest pivot accepted as nonzero among subsets judged independent.
    pub near_threshold: Option<f64>,
    /// Largest pivot treated as zero in the certificate's dependence test.
    pub certificate_rejected_pivot: Option<f64>,
}

impl KrankResult {
    pub fn dependent_rows(&self) -> Option<&[usize]> {
        match &self.certificate {
            Certificate::Full => None,
            Certificate::Dependent(rows) => Some(rows),
        }
    }
}

impl fmt::Display for KrankResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.certificate {
            Certificate::Full => write!(f, "krank {} (all rows independent)", self.value),
            Certificate::Dependent(rows) => {
                let one_based: Vec<String> = rows.iter().map(|r| (r + 1).to_string()).collect();
                write!(
                    f,
                    "krank {} (dependent rows {{{}}})",
                    self.value,
                    one_based.join(",")
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Exact,
    Coherence,
    SylvesterSum,
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrankBound {
    pub lower: usize,
    pub upper: usize,
    pub method: BoundMethod,
    /// Set when a zero row forced `lower = 0`.
    pub zero_row: bool,
}

fn is_zero_row(row: &[f64], thr: f64) -> bool {
    row.iter().all(|v| v.abs() <= thr)
}

/// Visits all `s`-subsets of `0..n` in lexicographic order until `f` returns true.
pub(crate) fn first_combination(
    n: usize,
    s: usize,
    mut f: impl FnMut(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    if s == 0 || s > n {
        return None;
    }
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        if f(&idx) {
            return Some(idx);
        }
        // advance
        let mut i = s;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if idx[i] < n - s + i {
                break;
            }
            if i == 0 {
                return None;
            }
        }
        idx[i] += 1;
        for j in i + 1..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Maximal absolute cosine between distinct rows; `None` if a row is zero
/// or there is only one row.
pub fn coherence(m: &Matrix) -> Option<f64> {
    let norms: Vec<f64> = m
        .row_iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if norms.contains(&0.0) || m.rows() < 2 {
        return None;
    }
    let mut mu = 0.0_f64;
    for i in 0..m.rows() {
        for j in i + 1..m.rows() {
            let dot: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| a * b).sum();
            mu = mu.max((dot / (norms[i] * norms[j])).abs().min(1.0));
        }
    }
    Some(mu)
}

/// Exact Kruskal rank with a minimal dependent-subset certificate.
pub fn krank(m: &Matrix, tol: &Tolerance) -> KrankResult {
    let n = m.rows();
    let zero_thr = tol.threshold(m.max_abs());
    if let Some(i) = (0..n).find(|&i| is_zero_row(m.row(i), zero_thr)) {
        return KrankResult {
            value: 0,
            certificate: Certificate::Dependent(vec![i]),
            near_threshold: None,
            certificate_rejected_pivot: None,
        };
    }

    let mut weakest: Option<f64> = None;
    let mut test = |subset: &[usize]| -> (bool, Option<f64>) {
        let sub = m.select_rows(subset).expect("valid subset");
        let info = rank_info(&sub, tol);
        let dependent = info.rank < subset.len();
        if !dependent {
            if let Some(p) = info.min_accepted_pivot {
                weakest = Some(weakest.map_or(p, |w: f64| w.min(p)));
            }
        }
        (dependent, info.max_rejected_pivot)
    };

    // Any cols+1 rows are dependent, so enumeration never goes beyond that.
    let max_size = n.min(m.cols() + 1);
    let skip_upto = coherence(m)
        .map(|mu| {
            if mu == 0.0 {
                n
            } else {
                // largest s with 1 - (s-1) mu > margin
                let s = ((1.0 - COHERENCE_MARGIN) / mu).ceil() as usize;
                s.min(n)
            }
        })
        .unwrap_or(1);

    for s in 2..=max_size {
        // Pairs are always scanned; larger sizes may be skipped by coherence.
        if s > 2 && s <= skip_upto {
            continue;
        }
        let mut rejected = None;
        let found = first_combination(n, s, |sub| {
            let (dep, rej) = test(sub);
            if dep {
                rejected = rej;
            }
            dep
        });
        if let Some(rows) = found {
            return KrankResult {
                value: s - 1,
                certificate: Certificate::Dependent(rows),
                near_threshold: weakest,
                certificate_rejected_pivot: rejected,
            };
        }
    }
    KrankResult {
        value: n,
        certificate: Certificate::Full,
        near_threshold: weakest,
        certificate_rejected_pivot: None,
    }
}

/// `ceil(1/μ)` lower bound on the Kruskal rank.
pub fn krank_lower_coherence(m: &Matrix) -> KrankBound {
    let upper = m.rows().min(m.cols());
    if m.row_iter().any(|r| r.iter().all(|&v| v == 0.0)) {
        return KrankBound {
            lower: 0,
            upper,
            method: BoundMethod::Coherence,
            zero_row: true,
        };
    }
    let lower = match coherence(m) {
        None => 1,
        Some(0.0) => m.rows(),
        // slack absorbs rounding when 1/mu is an integer
        Some(mu) => ((1.0 / mu) - 1e-9).ceil().max(1.0) as usize,
    };
    KrankBound {
        lower: lower.min(upper),
        upper,
        method: BoundMethod::Coherence,
        zero_row: false,
    }
}

/// `min(krank_a + krank_b - 1, q)`, or 0 when either factor has a zero row.
pub fn krank_bound_row_tensor(krank_a: usize, krank_b: usize, q: usize) -> usize {
    if krank_a == 0 || krank_b == 0 {
        0
    } else {
        (krank_a + krank_b - 1).min(q)
    }
}

/// `min(Σ kranks - (count - 1), q)`, or 0 if any factor has krank 0.
pub fn krank_bound_multi(kranks: &[usize], q: usize) -> usize {
    if kranks.is_empty() || kranks.contains(&0) {
        return 0;
    }
    let sum: usize = kranks.iter().sum();
    (sum - (kranks.len() - 1)).min(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Column permutation `σ` with `(A ⊗row B)[:, c] = (B ⊗row A)[:, σ[c]]`.
pub fn row_tensor_swap_permutation(p: usize, r: usize) -> Vec<usize> {
    let mut sigma = vec![0; p * r];
    for i in 0..p {
        for j in 0..r {
            sigma[i * r + j] = j * p + i;
        }
    }
    sigma
}

/// Checks the four row-tensor Kruskal-rank properties on `(a, b)`.
pub fn verify_krank_properties(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<PropertyReport> {
    let q = a.rows();
    let ab = row_tensor(a, b)?;
    let ba = row_tensor(b, a)?;
    let mut checks = Vec::new();

    // (i) explicit column permutation
    let sigma = row_tensor_swap_permutation(a.cols(), b.cols());
    let permuted_equal = (0..q).all(|i| {
        sigma
            .iter()
            .enumerate()
            .all(|(c, &s)| ab.get(i, c) == ba.get(i, s))
    });
    checks.push(PropertyCheck {
        name: "(i) column permutation".into(),
        passed: permuted_equal,
        detail: format!(
            "column i*{r}+j of A⊗row B equals column j*{p}+i of B⊗row A",
            r = b.cols(),
            p = a.cols()
        ),
    });

    // (ii) krank symmetry
    let k_ab = krank(&ab, tol).value;
    let k_ba = krank(&ba, tol).value;
    checks.push(PropertyCheck {
        name: "(ii) krank symmetry".into(),
        passed: k_ab == k_ba,
        detail: format!("krank(A⊗row B) = {k_ab}, krank(B⊗row A) = {k_ba}"),
    });

    // (iii) row tensor vs full Kronecker, capped at the row count
    let (k_kron, how) = if q * q <= MAX_EXACT_KRON_ROWS {
        (krank(&kron(a, b), tol).value, "exact")
    } else {
        let ka = krank(a, tol).value;
        let kb = krank(b, tol).value;
        (ka.min(kb), "min(krank A, krank B)")
    };
    checks.push(PropertyCheck {
        name: "(iii) row tensor dominates Kronecker".into(),
        passed: k_ab >= k_kron.min(q),
        detail: format!("krank(A⊗row B) = {k_ab} >= min(krank(A⊗B) = {k_kron} [{how}], q = {q})"),
    });

    // (iv) row tensor powers never lower the krank
    let k_b = krank(b, tol).value;
    let mut powers = Vec::new();
    let mut ok = true;
    for k in 2..=3 {
        let kp = krank(&row_tensor_power(b, k)?, tol).value;
        ok &= kp >= k_b;
        powers.push(format!("K={k}: {kp}"));
    }
    checks.push(PropertyCheck {
        name: "(iv) row tensor power".into(),
        passed: ok,
        detail: format!("krank(B) = {k_b}; {}", powers.join(", ")),
    });

    Ok(PropertyReport { checks })
}
