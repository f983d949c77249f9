//! Explicit equivalent models: rank-1 recombination of a proportional row
//! pair, and state inflation through `Φ Ψ = I_q`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmm::{HmmParams, MultiHmmParams, QuasiHmm};
use crate::matrix::{Matrix, Tolerance};
use crate::tensor::{row_tensor, row_tensor_power, LetterCodec, PermScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecombinationSide {
    /// `b_j = c b_i`; the transition rows are merged.
    Observation,
    /// `a_j = c a_i`; the observation rows are merged.
    Transition,
}

/// Alternative factorisation `W = C̃ᵀ (B̃ ⊗row Ã)` and the quasi model it induces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recombination {
    /// 0-based rows `(i, j)`, `i < j`.
    pub pair: (usize, usize),
    pub side: RecombinationSide,
    /// `c` with `row_j = c row_i` on the proportional side.
    pub ratio: f64,
    pub c_tilde: Matrix,
    pub alt_a: Matrix,
    pub alt_b: Matrix,
    pub alt_w: Matrix,
    pub quasi: QuasiHmm,
}

/// `c` with `v ≈ c u`, if any.
fn proportional(u: &[f64], v: &[f64], tol: &Tolerance) -> Option<f64> {
    let uu: f64 = u.iter().map(|x| x * x).sum();
    if uu == 0.0 {
        return None;
    }
    let c = u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() / uu;
    let scale = u.iter().chain(v).fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let residual = u
        .iter()
        .zip(v)
        .fold(0.0_f64, |acc, (x, y)| acc.max((y - c * x).abs()));
    (residual <= tol.threshold(scale)).then_some(c)
}

/// Rank-1 recombination for an arbitrary joint observation matrix.
///
/// Scans row pairs `(i, j)` lexicographically and uses the first pair that
/// is proportional on exactly one side. A pair proportional on both sides
/// has `w_i ∥ w_j`; merging it gives a row-scaled copy of `W`, which is no
/// counterexample, so such pairs are skipped.
pub fn recombine_joint(
    pi: &[f64],
    a: &Matrix,
    b_joint: &Matrix,
    codec: &LetterCodec,
    tol: &Tolerance,
) -> Result<Option<Recombination>> {
    let q = a.rows();
    let mut found = None;
    'scan: for i in 0..q {
        for j in i + 1..q {
            let pb = proportional(b_joint.row(i), b_joint.row(j), tol);
            let pa = proportional(a.row(i), a.row(j), tol);
            found = match (pb, pa) {
                // duplicated state: merging only rescales a row of W
                (Some(_), Some(_)) | (None, None) => continue,
                (Some(c), None) => Some((i, j, RecombinationSide::Observation, c)),
                (None, Some(c)) => Some((i, j, RecombinationSide::Transition, c)),
            };
            break 'scan;
        }
    }
    let Some((i, j, side, c)) = found else {
        return Ok(None);
    };

    let mut alt_a = a.clone();
    let mut alt_b = b_joint.clone();
    match side {
        RecombinationSide::Observation => {
            for col in 0..q {
                alt_a.set(i, col, a.get(i, col) + c * a.get(j, col));
            }
        }
        RecombinationSide::Transition => {
            for col in 0..b_joint.cols() {
                alt_b.set(i, col, b_joint.get(i, col) + c * b_joint.get(j, col));
            }
        }
    }
    let alt_w = row_tensor(&alt_b, &alt_a)?;

    let mut c_tilde = Matrix::identity(q);
    c_tilde.set(j, i, -1.0);
    let s = c_tilde.transpose();
    let mut s_inv = Matrix::identity(q);
    s_inv.set(i, j, 1.0);

    let w = row_tensor(b_joint, a)?;
    let recomposed = s.matmul(&alt_w)?;
    let err = recomposed.max_abs_diff(&w).unwrap_or(f64::INFINITY);
    if err > tol.threshold(w.max_abs().max(alt_w.max_abs())) {
        return Err(Error::NoConvergence(format!(
            "recombined factorisation misses W by {err:e}"
        )));
    }

    let pi_t = s.left_mul_vec(pi)?;
    let one_t = s_inv.mul_vec(&vec![1.0; q])?;
    let letters = (0..codec.total_letters())
        .map(|k| alt_w.column_block(k * q, (k + 1) * q)?.matmul(&s))
        .collect::<Result<Vec<_>>>()?;
    let side_name = match side {
        RecombinationSide::Observation => "observation",
        RecombinationSide::Transition => "transition",
    };
    let quasi = QuasiHmm::new(
        pi_t,
        letters,
        one_t,
        codec.clone(),
        format!(
            "rank-1 recombination of rows {} and {} ({side_name} rows proportional, ratio {c})",
            i + 1,
            j + 1
        ),
    )?;
    Ok(Some(Recombination {
        pair: (i, j),
        side,
        ratio: c,
        c_tilde,
        alt_a,
        alt_b,
        alt_w,
        quasi,
    }))
}

/// Equivalent quasi model from a proportional row pair of `A` or `B`, or
/// `None` when no such pair exists.
pub fn construct_rank1_recombination(
    h: &HmmParams,
    tol: &Tolerance,
) -> Result<Option<Recombination>> {
    recombine_joint(h.pi(), h.a(), h.b(), h.codec(), tol)
}

/// Same as [`construct_rank1_recombination`] on the joint observation
/// matrix of a multi-observer model.
pub fn construct_rank1_recombination_multi(
    h: &MultiHmmParams,
    tol: &Tolerance,
) -> Result<Option<Recombination>> {
    let joint = if h.homogeneous() {
        row_tensor_power(&h.bs()[0], h.m())?
    } else {
        h.joint_observation()?
    };
    recombine_joint(h.pi(), h.a(), &joint, h.codec(), tol)
}

/// Padding blocks: `Φ = [I_q  V]`, `Ψ = [I_q; W]` with `V W = 0`.
fn phi_psi(q: usize, q_tilde: usize) -> (Matrix, Matrix) {
    let extra = q_tilde - q;
    let mut phi = Matrix::zeros(q, q_tilde);
    let mut psi = Matrix::zeros(q_tilde, q);
    for i in 0..q {
        phi.set(i, i, 1.0);
        psi.set(i, i, 1.0);
        // V is nonzero only in its first column
        phi.set(i, q, (i + 1) as f64 / q as f64);
    }
    // W has a zero first row; the rest is arbitrary
    for r in 1..extra {
        for c in 0..q {
            psi.set(q + r, c, ((r + 2 * c) % 5) as f64 * 0.25 - 0.5);
        }
    }
    (phi, psi)
}

/// Inflates any quasi model to `q_tilde` states, optionally relabelling
/// with `ΠΛ` first.
pub fn inflate_quasi(
    h: &QuasiHmm,
    q_tilde: usize,
    relabel: Option<&PermScale>,
    tol: &Tolerance,
) -> Result<QuasiHmm> {
    let q = h.q();
    if q_tilde < q {
        return Err(Error::InvalidInput(format!(
            "cannot inflate {q} states to {q_tilde}"
        )));
    }
    if q_tilde == q && relabel.is_none() {
        return Ok(h.clone());
    }
    let p = match relabel {
        Some(ps) => {
            if ps.perm.len() != q {
                return Err(Error::DimensionMismatch {
                    op: "relabelling",
                    left: (ps.perm.len(), ps.perm.len()),
                    right: (q, q),
                });
            }
            ps.matrix()
        }
        None => Matrix::identity(q),
    };
    let p_inv = p.inverse(tol)?;
    let (phi, psi) = if q_tilde == q {
        (Matrix::identity(q), Matrix::identity(q))
    } else {
        phi_psi(q, q_tilde)
    };
    let check = phi.matmul(&psi)?;
    let err = check
        .max_abs_diff(&Matrix::identity(q))
        .unwrap_or(f64::INFINITY);
    if err > tol.threshold(1.0) {
        return Err(Error::NoConvergence(format!(
            "padding blocks miss Φ Ψ = I by {err:e}"
        )));
    }
    let left = psi.matmul(&p)?;
    let right = p_inv.matmul(&phi)?;
    let letters = h
        .letters()
        .iter()
        .map(|m| left.matmul(m)?.matmul(&right))
        .collect::<Result<Vec<_>>>()?;
    let pi = right.left_mul_vec(h.pi())?;
    let one = left.mul_vec(h.one())?;
    let label = if relabel.is_some() {
        " after relabelling"
    } else {
        ""
    };
    QuasiHmm::new(
        pi,
        letters,
        one,
        h.codec().clone(),
        format!("state inflation {q} -> {q_tilde}{label}"),
    )
}

/// Equivalent quasi model on `q_tilde >= q` states.
pub fn construct_state_inflation(
    h: &HmmParams,
    q_tilde: usize,
    relabel: Option<&PermScale>,
    tol: &Tolerance,
) -> Result<QuasiHmm> {
    inflate_quasi(&QuasiHmm::from_hmm(h)?, q_tilde, relabel, tol)
}
