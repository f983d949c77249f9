#![allow(dead_code)]

use hmm_ident::hmm::{HmmParams, MultiHmmParams};
use hmm_ident::Matrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            let r: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    Matrix::from_rows(&data).unwrap()
}

/// Stochastic matrix where each row is, with probability `p_dup`, a copy of an earlier row.
pub fn stochastic_with_copies(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    p_dup: f64,
) -> Matrix {
    let base = stochastic(rng, rows, cols);
    let mut out = base.to_rows();
    for i in 1..rows {
        if rng.gen_bool(p_dup) {
            let src = rng.gen_range(0..i);
            out[i] = out[src].clone();
        }
    }
    Matrix::from_rows(&out).unwrap()
}

pub fn distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    stochastic(rng, 1, n).row(0).to_vec()
}

pub fn random_hmm(rng: &mut ChaCha8Rng, q: usize, kappa: usize) -> HmmParams {
    let pi = distribution(rng, q);
    let a = stochastic(rng, q, q);
    let b = stochastic(rng, q, kappa);
    HmmParams::new(pi, a, b).unwrap()
}

pub fn random_multi(
    rng: &mut ChaCha8Rng,
    q: usize,
    kappas: &[usize],
    homogeneous: bool,
) -> MultiHmmParams {
    let pi = distribution(rng, q);
    let a = stochastic(rng, q, q);
    let bs = if homogeneous {
        let b = stochastic(rng, q, kappas[0]);
        vec![b; kappas.len()]
    } else {
        kappas.iter().map(|&k| stochastic(rng, q, k)).collect()
    };
    MultiHmmParams::new(pi, a, bs, homogeneous).unwrap()
}

/// All sequences of exactly `len` letters over `0..letters`, lexicographic.
pub fn sequences(letters: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..letters).map(move |y| {
                    let mut t = s.clone();
                    t.push(y);
                    t
                })
            })
            .collect();
    }
    out
}

/// Path-sum oracle: Σ over x_1..x_{N+1} of π_{x1} Π_t b_{x_t, y_t} a_{x_t, x_{t+1}}.
pub fn path_sum(pi: &[f64], a: &Matrix, b: &Matrix, ys: &[usize]) -> f64 {
    let q = pi.len();
    let paths = sequences(q, ys.len() + 1);
    paths
        .iter()
        .map(|x| {
            let mut p = pi[x[0]];
            for (t, &y) in ys.iter().enumerate() {
                p *= b.get(x[t], y) * a.get(x[t], x[t + 1]);
            }
            p
        })
        .sum()
}

/// Random permutation of 0..n.
pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        p.swap(i, j);
    }
    p
}
