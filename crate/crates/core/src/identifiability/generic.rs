//! Generic identifiability: minimal observation lengths from monomial
//! counts, and Vandermonde witnesses built from prime generators.

use std::str::FromStr;

use serde::Serialize;

use num_bigint::{BigInt, Sign};

use crate::error::{Error, Result};
use crate::krank::{first_combination, Certificate, KrankResult};
use crate::matrix::Matrix;
use crate::tensor::row_tensor_multi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NStarVariant {
    SingleStrong,
    SingleWeak,
    Homogeneous,
    Heterogeneous,
}

impl FromStr for NStarVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-strong" => Ok(Self::SingleStrong),
            "single-weak" => Ok(Self::SingleWeak),
            "homogeneous" | "homo" => Ok(Self::Homogeneous),
            "heterogeneous" | "hetero" => Ok(Self::Heterogeneous),
            other => Err(Error::InvalidInput(format!(
                "unknown variant {other:?} (single-strong, single-weak, homogeneous, heterogeneous)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NStarBound {
    pub variant: NStarVariant,
    pub q: usize,
    pub kappas: Vec<usize>,
    pub m: Option<usize>,
    pub n_star: usize,
    /// `(N, binomial)` for `N = 1..=n_star`.
    pub binomial_trace: Vec<(usize, u128)>,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Smallest `N >= 1` whose monomial count reaches `q`.
pub fn n_star(
    variant: NStarVariant,
    q: usize,
    kappas: &[usize],
    m: Option<usize>,
) -> Result<NStarBound> {
    if q < 2 {
        return Err(Error::InvalidInput(format!(
            "q must be at least 2, got {q}"
        )));
    }
    if kappas.is_empty() || kappas.iter().any(|&k| k < 2) {
        return Err(Error::InvalidInput(format!(
            "alphabet sizes must be at least 2, got {kappas:?}"
        )));
    }
    let single_kappa = || -> Result<usize> {
        match kappas {
            [k] => Ok(*k),
            _ => Err(Error::InvalidInput(format!(
                "{variant:?} takes one alphabet size, got {kappas:?}"
            ))),
        }
    };
    let needs_m = |m: Option<usize>| -> Result<usize> {
        match m {
            Some(m) if m >= 2 => Ok(m),
            Some(m) => Err(Error::InvalidInput(format!(
                "m must be at least 2, got {m}"
            ))),
            None => Err(Error::InvalidInput(format!("{variant:?} needs m"))),
        }
    };
    // value(N) as a function of N
    let value: Box<dyn Fn(usize) -> u128> = match variant {
        NStarVariant::SingleStrong => {
            let k = single_kappa()?;
            Box::new(move |n| binomial(n + k - 1, k - 1))
        }
        NStarVariant::SingleWeak => {
            let k = single_kappa()?;
            Box::new(move |n| binomial(n + k - 2, k - 1))
        }
        NStarVariant::Homogeneous => {
            let k = single_kappa()?;
            let m = needs_m(m)?;
            Box::new(move |n| binomial(n * m + k - 1, k - 1))
        }
        NStarVariant::Heterogeneous => {
            if kappas.len() < 2 {
                return Err(Error::InvalidInput(
                    "heterogeneous variant takes one alphabet size per observer".into(),
                ));
            }
            let mm = m.unwrap_or(kappas.len());
            if mm != kappas.len() {
                return Err(Error::InvalidInput(format!(
                    "m = {mm} but {} alphabet sizes given",
                    kappas.len()
                )));
            }
            let kp = kappas
                .iter()
                .try_fold(1usize, |acc, &k| acc.checked_mul(k))
                .ok_or_else(|| Error::Overflow("product of alphabet sizes".into()))?;
            Box::new(move |n| binomial(n * mm + kp - 1, kp - 1))
        }
    };
    let target = q as u128;
    let mut trace = Vec::new();
    let mut n = 1;
    loop {
        let v = value(n);
        trace.push((n, v));
        if v >= target {
            break;
        }
        n += 1;
    }
    let m_out = match variant {
        NStarVariant::Heterogeneous => Some(kappas.len()),
        NStarVariant::Homogeneous => m,
        _ => None,
    };
    Ok(NStarBound {
        variant,
        q,
        kappas: kappas.to_vec(),
        m: m_out,
        n_star: n,
        binomial_trace: trace,
    })
}

/// First `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 2u64;
    while out.len() < count {
        if is_prime(c) {
            out.push(c);
        }
        c += 1;
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub q: usize,
    pub kappas: Vec<usize>,
    pub n: usize,
    pub m: Option<usize>,
    /// Generators per observer.
    pub generators: Vec<Vec<u64>>,
    /// Number of row-tensor factors in the stack.
    pub degree: usize,
    pub stack_shape: (usize, usize),
    /// Exact rank over the rationals.
    pub rank: usize,
    pub krank: KrankResult,
    /// Distinct generator products, i.e. distinct monomials.
    pub distinct_monomials: usize,
    pub full_rank: bool,
    /// `distinct_monomials >= q`.
    pub predicted_full_rank: bool,
}

/// `B(α)` with entry `(i, j) = α_j^i` for `i = 0..q`.
pub fn vandermonde(q: usize, generators: &[u64]) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = (0..q)
        .map(|i| {
            generators
                .iter()
                .map(|&g| (g as f64).powi(i as i32))
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

/// Exact rank by fraction-free (Bareiss) elimination.
fn integer_rank(rows: &[&[BigInt]]) -> usize {
    let mut a: Vec<Vec<BigInt>> = rows.iter().map(|r| r.to_vec()).collect();
    let n = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    let mut prev = BigInt::from(1);
    for c in 0..cols {
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| a[i][c].sign() != Sign::NoSign) else {
            continue;
        };
        a.swap(p, r);
        for i in r + 1..n {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::from(0);
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Kruskal rank over the rationals, same certificate order as [`krank`](crate::krank::krank).
fn integer_krank(m: &[Vec<BigInt>]) -> KrankResult {
    let n = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if let Some(i) = m
        .iter()
        .position(|r| r.iter().all(|v| v.sign() == Sign::NoSign))
    {
        return KrankResult {
            value: 0,
            certificate: Certificate::Dependent(vec![i]),
            near_threshold: None,
            certificate_rejected_pivot: None,
        };
    }
    for s in 2..=n.min(cols + 1) {
        let found = first_combination(n, s, |sub| {
            let rows: Vec<&[BigInt]> = sub.iter().map(|&i| m[i].as_slice()).collect();
            integer_rank(&rows) < s
        });
        if let Some(rows) = found {
            return KrankResult {
                value: s - 1,
                certificate: Certificate::Dependent(rows),
                near_threshold: None,
                certificate_rejected_pivot: None,
            };
        }
    }
    KrankResult {
        value: n,
        certificate: Certificate::Full,
        near_threshold: None,
        certificate_rejected_pivot: None,
    }
}

/// Builds the Vandermonde stack for the given layout and reports its rank.
///
/// One alphabet size and no `m`: `⊗row^N B`. One alphabet size with `m`:
/// `⊗row^(N·m) B`. Several alphabet sizes: `⊗row^N (B1 ⊗row ⋯ ⊗row Bm)` with
/// `Σ κ_j` generators split across observers in order.
pub fn vandermonde_witness(
    q: usize,
    kappas: &[usize],
    n: usize,
    m: Option<usize>,
    generators: Option<&[u64]>,
) -> Result<WitnessReport> {
    if q < 2 || n < 1 || kappas.is_empty() || kappas.iter().any(|&k| k < 2) {
        return Err(Error::InvalidInput(format!(
            "need q >= 2, N >= 1 and alphabet sizes >= 2 (q = {q}, N = {n}, kappas = {kappas:?})"
        )));
    }
    let per_round = match (kappas.len(), m) {
        (1, None) => 1,
        (1, Some(m)) if m >= 1 => m,
        (len, None) => len,
        (len, Some(m)) if m == len => len,
        (len, Some(m)) => {
            return Err(Error::InvalidInput(format!(
                "m = {m} but {len} alphabet sizes given"
            )))
        }
    };
    let total: usize = kappas.iter().sum();
    let gens: Vec<u64> = match generators {
        Some(g) => g.to_vec(),
        None => first_primes(total),
    };
    if gens.len() != total {
        return Err(Error::InvalidInput(format!(
            "{} generators given, {total} needed",
            gens.len()
        )));
    }
    if let Some(g) = gens.iter().find(|&&g| !is_prime(g)) {
        return Err(Error::InvalidInput(format!("generator {g} is not prime")));
    }
    let mut sorted = gens.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != gens.len() {
        return Err(Error::InvalidInput("generators must be distinct".into()));
    }

    let degree = n
        .checked_mul(per_round)
        .ok_or_else(|| Error::Overflow("observation length".into()))?;
    let max_g = *sorted.last().expect("non-empty");
    let exponent = degree
        .checked_mul(q - 1)
        .and_then(|e| u32::try_from(e).ok())
        .ok_or_else(|| Error::Overflow("exponent".into()))?;
    let safe = (max_g as u128)
        .checked_pow(exponent)
        .is_some_and(|v| v < 1u128 << 53);
    if !safe {
        return Err(Error::Overflow(format!(
            "{max_g}^{exponent} exceeds 2^53; use smaller primes, a smaller N or fewer states"
        )));
    }

    let mut split = Vec::new();
    let mut offset = 0;
    for &k in kappas {
        split.push(gens[offset..offset + k].to_vec());
        offset += k;
    }
    let blocks = split
        .iter()
        .map(|g| vandermonde(q, g))
        .collect::<Result<Vec<_>>>()?;
    let mut factors = Vec::with_capacity(degree);
    let mut products: Vec<u128> = vec![1];
    if kappas.len() == 1 {
        for _ in 0..degree {
            factors.push(blocks[0].clone());
        }
    } else {
        for _ in 0..n {
            factors.extend(blocks.iter().cloned());
        }
    }
    let factor_gens: Vec<&Vec<u64>> = if kappas.len() == 1 {
        (0..degree).map(|_| &split[0]).collect()
    } else {
        (0..n).flat_map(|_| split.iter()).collect()
    };
    for g in factor_gens {
        products = products
            .iter()
            .flat_map(|&p| g.iter().map(move |&x| p * x as u128))
            .collect();
    }
    products.sort_unstable();
    products.dedup();
    let distinct = products.len();

    let stack = row_tensor_multi(&factors)?;
    // entries are integers below 2^53, so the conversion is exact
    let exact: Vec<Vec<BigInt>> = stack
        .row_iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v as u64)).collect())
        .collect();
    let row_refs: Vec<&[BigInt]> = exact.iter().map(Vec::as_slice).collect();
    let rank = integer_rank(&row_refs);
    let kr = integer_krank(&exact);
    Ok(WitnessReport {
        q,
        kappas: kappas.to_vec(),
        n,
        m,
        generators: split,
        degree,
        stack_shape: stack.shape(),
        rank,
        krank: kr,
        distinct_monomials: distinct,
        full_rank: rank == q,
        predicted_full_rank: distinct >= q,
    })
}
