//! Hidden Markov model parameter sets and exact sequence probabilities.
//!
//! The joint probability of `y_1 .. y_N` is evaluated as the matrix product
//! `π · M(y_1) ⋯ M(y_N) · 1` where `M(k) = W E(k) = D_k(B) A` is the `k`-th
//! `q x q` block of `W = B ⊗row A`: emission from the current state, then a
//! transition. Multi-observer models use the joint observation matrix
//! `B1 ⊗row ⋯ ⊗row Bm` with the lexicographic [`LetterCodec`].
//!
//! [`QuasiHmm`] drops every stochasticity requirement and stores the letter
//! matrices, initial row vector and terminal column vector directly; it is
//! the carrier for the equivalent-model constructions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Tolerance};
use crate::tensor::{row_tensor, row_tensor_multi, LetterCodec};

/// Slack added to the tolerance threshold when checking that rows sum to one.
const STOCHASTIC_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn sum_slack(tol: &Tolerance) -> f64 {
    tol.threshold(1.0) + STOCHASTIC_SLACK
}

fn check_distribution(field: &str, v: &[f64], tol: &Tolerance, out: &mut Vec<Violation>) {
    let slack = sum_slack(tol);
    if let Some((i, x)) = v.iter().enumerate().find(|(_, &x)| x < -tol.abs_eps) {
        out.push(Violation::new(
            field,
            format!("entry {i} is negative ({x})"),
        ));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > slack {
        out.push(Violation::new(field, format!("entries sum to {s}, not 1")));
    }
}

fn check_stochastic(field: &str, m: &Matrix, tol: &Tolerance, out: &mut Vec<Violation>) {
    for (i, row) in m.row_iter().enumerate() {
        check_distribution(&format!("{field} row {i}"), row, tol, out);
    }
}

fn check_pi(pi: &[f64], q: usize) -> Result<()> {
    if pi.len() != q {
        return Err(Error::DimensionMismatch {
            op: "initial distribution",
            left: (1, pi.len()),
            right: (q, q),
        });
    }
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "initial distribution has non-finite entries".into(),
        ));
    }
    Ok(())
}

fn check_transition(a: &Matrix) -> Result<usize> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            op: "transition matrix must be square",
            left: a.shape(),
            right: a.shape(),
        });
    }
    if a.rows() < 2 {
        return Err(Error::InvalidInput("need at least 2 hidden states".into()));
    }
    Ok(a.rows())
}

fn check_observation(b: &Matrix, q: usize) -> Result<()> {
    if b.rows() != q {
        return Err(Error::DimensionMismatch {
            op: "observation matrix rows must equal q",
            left: b.shape(),
            right: (q, q),
        });
    }
    if b.cols() < 2 {
        return Err(Error::InvalidInput(
            "need at least 2 observation letters".into(),
        ));
    }
    Ok(())
}

/// Single-observer HMM `{π; q, κ, A, B}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmParams {
    pi: Vec<f64>,
    a: Matrix,
    b: Matrix,
    codec: LetterCodec,
}

impl HmmParams {
    /// Checks shapes only; see [`HmmParams::validate`] for the probabilistic invariants.
    pub fn new(pi: Vec<f64>, a: Matrix, b: Matrix) -> Result<Self> {
        let q = check_transition(&a)?;
        check_observation(&b, q)?;
        check_pi(&pi, q)?;
        let codec = LetterCodec::single(b.cols())?;
        Ok(Self { pi, a, b, codec })
    }

    /// Builds the model with `π` set to the stationary distribution of `A`.
    pub fn with_stationary(a: Matrix, b: Matrix, tol: &Tolerance) -> Result<Self> {
        let pi = stationary_distribution(&a, tol)?;
        Self::new(pi, a, b)
    }

    pub fn q(&self) -> usize {
        self.a.rows()
    }

    pub fn kappa(&self) -> usize {
        self.b.cols()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn codec(&self) -> &LetterCodec {
        &self.codec
    }

    pub fn validate(&self, tol: &Tolerance) -> Vec<Violation> {
        let mut out = Vec::new();
        check_distribution("pi", &self.pi, tol, &mut out);
        check_stochastic("A", &self.a, tol, &mut out);
        check_stochastic("B", &self.b, tol, &mut out);
        out
    }

    /// Returns `self` if [`validate`](Self::validate) is clean.
    pub fn validated(self, tol: &Tolerance) -> Result<Self> {
        let v = self.validate(tol);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidInput(join_violations(&v)))
        }
    }

    /// Relabels states: `Ã = Π A Πᵀ`, `B̃ = Π B`, `π̃ = π Πᵀ` where row `r`
    /// of the new model is state `perm[r]` of the old one.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let q = self.q();
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..q).collect::<Vec<_>>() {
            return Err(Error::InvalidInput(format!(
                "{perm:?} is not a permutation of 0..{q}"
            )));
        }
        let mut a = Matrix::zeros(q, q);
        for r in 0..q {
            for c in 0..q {
                a.set(r, c, self.a.get(perm[r], perm[c]));
            }
        }
        let b = self.b.select_rows(perm)?;
        let pi = perm.iter().map(|&i| self.pi[i]).collect();
        Self::new(pi, a, b)
    }
}

pub(crate) fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Multi-observer HMM `{π; m, q, {κ_j}, A, {B^(j)}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHmmParams {
    pi: Vec<f64>,
    a: Matrix,
    bs: Vec<Matrix>,
    homogeneous: bool,
    codec: LetterCodec,
}

impl MultiHmmParams {
    pub fn new(pi: Vec<f64>, a: Matrix, bs: Vec<Matrix>, homogeneous: bool) -> Result<Self> {
        let q = check_transition(&a)?;
        check_pi(&pi, q)?;
        if bs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "multi-observer model needs m >= 2 observers, got {}",
                bs.len()
            )));
        }
        for b in &bs {
            check_observation(b, q)?;
        }
        let codec = LetterCodec::new(bs.iter().map(Matrix::cols).collect())?;
        Ok(Self {
            pi,
            a,
            bs,
            homogeneous,
            codec,
        })
    }

    pub fn with_stationary(
        a: Matrix,
        bs: Vec<Matrix>,
        homogeneous: bool,
        tol: &Tolerance,
    ) -> Result<Self> {
        let pi = stationary_distribution(&a, tol)?;
        Self::new(pi, a, bs, homogeneous)
    }

    pub fn q(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.bs.len()
    }

    pub fn kappas(&self) -> &[usize] {
        self.codec.alphabet_sizes()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn bs(&self) -> &[Matrix] {
        &self.bs
    }

    pub fn homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn codec(&self) -> &LetterCodec {
        &self.codec
    }

    /// Whether every observation matrix equals the first one under `tol`.
    pub fn observers_identical(&self, tol: &Tolerance) -> bool {
        let first = &self.bs[0];
        let thr = tol.threshold(1.0);
        self.bs[1..]
            .iter()
            .all(|b| b.max_abs_diff(first).is_some_and(|d| d <= thr))
    }

    /// Joint observation matrix `B1 ⊗row ⋯ ⊗row Bm`.
    pub fn joint_observation(&self) -> Result<Matrix> {
        row_tensor_multi(&self.bs)
    }

    /// The single-observer model seen by observer `j`.
    pub fn observer(&self, j: usize) -> Result<HmmParams> {
        let b = self.bs.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.bs.len(),
        })?;
        HmmParams::new(self.pi.clone(), self.a.clone(), b.clone())
    }

    pub fn validate(&self, tol: &Tolerance) -> Vec<Violation> {
        let mut out = Vec::new();
        check_distribution("pi", &self.pi, tol, &mut out);
        check_stochastic("A", &self.a, tol, &mut out);
        for (j, b) in self.bs.iter().enumerate() {
            check_stochastic(&format!("Bs[{j}]"), b, tol, &mut out);
        }
        let identical = self.observers_identical(tol);
        if self.homogeneous && !identical {
            out.push(Violation::new(
                "homogeneous",
                "flag is set but the observation matrices differ",
            ));
        }
        if !self.homogeneous && identical {
            out.push(Violation::new(
                "homogeneous",
                "heterogeneous model needs at least two distinct observation matrices",
            ));
        }
        out
    }

    pub fn validated(self, tol: &Tolerance) -> Result<Self> {
        let v = self.validate(tol);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidInput(join_violations(&v)))
        }
    }
}

/// Time-varying single-observer parameters `(A(t), B(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    steps: Vec<(Matrix, Matrix)>,
}

impl Schedule {
    pub fn new(steps: Vec<(Matrix, Matrix)>) -> Result<Self> {
        let (a0, b0) = steps
            .first()
            .ok_or_else(|| Error::InvalidInput("schedule has no steps".into()))?;
        let q = check_transition(a0)?;
        let kappa = b0.cols();
        for (t, (a, b)) in steps.iter().enumerate() {
            if a.shape() != (q, q) || b.rows() != q || b.cols() != kappa {
                return Err(Error::InvalidInput(format!(
                    "step {t} has A {}x{} and B {}x{}, expected A {q}x{q} and B {q}x{kappa}",
                    a.rows(),
                    a.cols(),
                    b.rows(),
                    b.cols()
                )));
            }
            check_observation(b, q)?;
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[(Matrix, Matrix)] {
        &self.steps
    }

    pub fn q(&self) -> usize {
        self.steps[0].0.rows()
    }

    pub fn validate(&self, tol: &Tolerance) -> Vec<Violation> {
        let mut out = Vec::new();
        for (t, (a, b)) in self.steps.iter().enumerate() {
            check_stochastic(&format!("steps[{t}].A"), a, tol, &mut out);
            check_stochastic(&format!("steps[{t}].B"), b, tol, &mut out);
        }
        out
    }
}

/// Stationary distribution of a row-stochastic `A`.
///
/// Computes the limit of `A^(2^k)` by repeated squaring. The limit must have
/// identical rows; a chain with several closed classes, or a periodic one,
/// never gets there and is rejected.
pub fn stationary_distribution(a: &Matrix, tol: &Tolerance) -> Result<Vec<f64>> {
    let q = check_transition(a)?;
    const MAX_SQUARINGS: usize = 64;
    let agree = 1e-13;
    let mut p = a.clone();
    for _ in 0..MAX_SQUARINGS {
        let spread = (0..q)
            .flat_map(|i| (0..q).map(move |j| (i, j)))
            .fold(0.0_f64, |acc, (i, j)| {
                acc.max((p.get(i, j) - p.get(0, j)).abs())
            });
        if spread <= agree {
            let mut pi: Vec<f64> = (0..q)
                .map(|j| (0..q).map(|i| p.get(i, j)).sum::<f64>() / q as f64)
                .collect();
            let s: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= s);
            let next = a.left_mul_vec(&pi)?;
            let residual = next
                .iter()
                .zip(&pi)
                .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
            if residual > tol.threshold(1.0).max(1e-10) {
                return Err(Error::NoConvergence(format!(
                    "fixed-point residual {residual:e} too large"
                )));
            }
            return Ok(pi);
        }
        let mut next = p.matmul(&p)?;
        // keep rows stochastic against rounding drift
        for i in 0..q {
            let s: f64 = next.row(i).iter().sum();
            if s > 0.0 {
                for j in 0..q {
                    next.set(i, j, next.get(i, j) / s);
                }
            }
        }
        let stalled = next.max_abs_diff(&p).is_some_and(|d| d <= agree);
        p = next;
        if stalled {
            break;
        }
    }
    Err(Error::NoConvergence(
        "powers of A do not converge to a rank-one limit; the chain looks reducible \
         (several closed classes) or periodic"
            .into(),
    ))
}

/// `W = B ⊗row A`, the second-mode matricisation of the per-letter tensor.
pub fn build_w(h: &HmmParams) -> Result<Matrix> {
    let w = row_tensor(h.b(), h.a())?;
    debug_assert!({
        let blocks: Vec<Matrix> = (0..h.kappa())
            .map(|k| {
                crate::tensor::diag_column(h.b(), k)
                    .and_then(|d| d.matmul(h.a()))
                    .expect("block")
            })
            .collect();
        let block_form = Matrix::hstack(&blocks).expect("hstack");
        block_form.max_abs_diff(&w).is_some_and(|d| d <= 1e-15)
    });
    Ok(w)
}

/// `W_* = B1 ⊗row ⋯ ⊗row Bm ⊗row A`.
pub fn build_w_multi(h: &MultiHmmParams) -> Result<Matrix> {
    let mut factors = h.bs().to_vec();
    factors.push(h.a().clone());
    row_tensor_multi(&factors)
}

/// Anything that assigns `π M(y_1) ⋯ M(y_N) 1`-style weights to sequences of
/// flat letters.
pub trait SequenceModel {
    fn codec(&self) -> &LetterCodec;

    fn state_count(&self) -> usize;

    fn initial(&self) -> Vec<f64>;

    /// Row vector times the letter matrix of `letter`.
    fn step(&self, v: &[f64], letter: usize) -> Vec<f64>;

    fn terminal(&self) -> Vec<f64>;

    /// Joint probability (or quasi-probability) of a flat-letter sequence.
    fn prob(&self, letters: &[usize]) -> Result<f64> {
        if letters.is_empty() {
            return Err(Error::InvalidInput("empty observation sequence".into()));
        }
        let total = self.codec().total_letters();
        if let Some(&y) = letters.iter().find(|&&y| y >= total) {
            return Err(Error::IndexOutOfRange {
                index: y,
                len: total,
            });
        }
        let v = letters
            .iter()
            .fold(self.initial(), |v, &y| self.step(&v, y));
        Ok(dot(&v, &self.terminal()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `v · D_k(B) A` without forming the block.
fn emit_then_move(v: &[f64], b: &Matrix, a: &Matrix, letter: usize) -> Vec<f64> {
    let q = a.rows();
    let mut out = vec![0.0; q];
    for (i, &vi) in v.iter().enumerate() {
        let w = vi * b.get(i, letter);
        if w == 0.0 {
            continue;
        }
        for (o, &aij) in out.iter_mut().zip(a.row(i)) {
            *o += w * aij;
        }
    }
    out
}

impl SequenceModel for HmmParams {
    fn codec(&self) -> &LetterCodec {
        &self.codec
    }

    fn state_count(&self) -> usize {
        self.q()
    }

    fn initial(&self) -> Vec<f64> {
        self.pi.clone()
    }

    fn step(&self, v: &[f64], letter: usize) -> Vec<f64> {
        emit_then_move(v, &self.b, &self.a, letter)
    }

    fn terminal(&self) -> Vec<f64> {
        vec![1.0; self.q()]
    }
}

/// Joint probability of `ys` (0-based letters), optionally from a
/// non-default initial vector.
pub fn sequence_prob(h: &HmmParams, ys: &[usize], pi_override: Option<&[f64]>) -> Result<f64> {
    match pi_override {
        None => h.prob(ys),
        Some(pi) => {
            check_pi(pi, h.q())?;
            let alt = HmmParams::new(pi.to_vec(), h.a.clone(), h.b.clone())?;
            alt.prob(ys)
        }
    }
}

/// Multi-observer models carry their joint observation matrix for stepping.
#[derive(Debug, Clone)]
pub struct JointView<'a> {
    model: &'a MultiHmmParams,
    joint: Matrix,
}

impl<'a> JointView<'a> {
    pub fn new(model: &'a MultiHmmParams) -> Result<Self> {
        Ok(Self {
            model,
            joint: model.joint_observation()?,
        })
    }
}

impl SequenceModel for JointView<'_> {
    fn codec(&self) -> &LetterCodec {
        self.model.codec()
    }

    fn state_count(&self) -> usize {
        self.model.q()
    }

    fn initial(&self) -> Vec<f64> {
        self.model.pi.clone()
    }

    fn step(&self, v: &[f64], letter: usize) -> Vec<f64> {
        emit_then_move(v, &self.joint, &self.model.a, letter)
    }

    fn terminal(&self) -> Vec<f64> {
        vec![1.0; self.model.q()]
    }
}

/// Joint probability of a sequence of per-observer letter tuples.
pub fn sequence_prob_multi(h: &MultiHmmParams, ys: &[Vec<usize>]) -> Result<f64> {
    let flat = ys
        .iter()
        .map(|t| h.codec().encode(t))
        .collect::<Result<Vec<_>>>()?;
    JointView::new(h)?.prob(&flat)
}

/// Algebraic model `π̃ M̃(y_1) ⋯ M̃(y_N) 1̃` with no sign constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiHmm {
    pi: Vec<f64>,
    letters: Vec<Matrix>,
    one: Vec<f64>,
    codec: LetterCodec,
    provenance: String,
}

impl QuasiHmm {
    pub fn new(
        pi: Vec<f64>,
        letters: Vec<Matrix>,
        one: Vec<f64>,
        codec: LetterCodec,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let q = pi.len();
        if q == 0 {
            return Err(Error::InvalidInput(
                "quasi model needs at least one state".into(),
            ));
        }
        if one.len() != q {
            return Err(Error::DimensionMismatch {
                op: "quasi model terminal vector",
                left: (one.len(), 1),
                right: (q, q),
            });
        }
        if letters.len() != codec.total_letters() {
            return Err(Error::InvalidInput(format!(
                "{} letter matrices for {} letters",
                letters.len(),
                codec.total_letters()
            )));
        }
        if let Some(m) = letters.iter().find(|m| m.shape() != (q, q)) {
            return Err(Error::DimensionMismatch {
                op: "quasi model letter matrix",
                left: m.shape(),
                right: (q, q),
            });
        }
        if pi.iter().chain(&one).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "quasi model has non-finite entries".into(),
            ));
        }
        Ok(Self {
            pi,
            letters,
            one,
            codec,
            provenance: provenance.into(),
        })
    }

    pub fn from_hmm(h: &HmmParams) -> Result<Self> {
        let w = build_w(h)?;
        Self::from_w(h.pi().to_vec(), &w, h.codec().clone(), "plain hmm")
    }

    pub fn from_multi(h: &MultiHmmParams) -> Result<Self> {
        let w = build_w_multi(h)?;
        Self::from_w(
            h.pi().to_vec(),
            &w,
            h.codec().clone(),
            "plain multi-observer hmm",
        )
    }

    /// Splits a `q x (letters*q)` matrix into its letter blocks.
    pub fn from_w(pi: Vec<f64>, w: &Matrix, codec: LetterCodec, provenance: &str) -> Result<Self> {
        let q = w.rows();
        if w.cols() != codec.total_letters() * q {
            return Err(Error::DimensionMismatch {
                op: "letter blocks",
                left: w.shape(),
                right: (q, codec.total_letters() * q),
            });
        }
        let letters = (0..codec.total_letters())
            .map(|k| w.column_block(k * q, (k + 1) * q))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pi, letters, vec![1.0; q], codec, provenance)
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn one(&self) -> &[f64] {
        &self.one
    }

    pub fn letters(&self) -> &[Matrix] {
        &self.letters
    }

    pub fn codec(&self) -> &LetterCodec {
        &self.codec
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn q(&self) -> usize {
        self.pi.len()
    }
}

impl SequenceModel for QuasiHmm {
    fn codec(&self) -> &LetterCodec {
        &self.codec
    }

    fn state_count(&self) -> usize {
        self.q()
    }

    fn initial(&self) -> Vec<f64> {
        self.pi.clone()
    }

    fn step(&self, v: &[f64], letter: usize) -> Vec<f64> {
        self.letters[letter]
            .left_mul_vec(v)
            .expect("letter matrices match the state count")
    }

    fn terminal(&self) -> Vec<f64> {
        self.one.clone()
    }
}

/// Value of a quasi model on a flat-letter sequence.
pub fn quasi_sequence_prob(h: &QuasiHmm, ys: &[usize]) -> Result<f64> {
    h.prob(ys)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthAgreement {
    pub length: usize,
    pub sequences: usize,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    /// Flat letters (0-based).
    pub sequence: Vec<usize>,
    /// Per-observer tuples for each flat letter.
    pub decoded: Vec<Vec<usize>>,
    pub p_first: f64,
    pub p_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// Agreement holds for every sequence up to `max_len`.
    pub equivalent: bool,
    pub max_len: usize,
    pub tolerance: f64,
    pub per_length: Vec<LengthAgreement>,
    pub counterexample: Option<Counterexample>,
}

/// Compares two models on every sequence of length `1..=max_len`.
///
/// Sequences are visited shortest first and lexicographically within a
/// length, so the reported counterexample is the first one in that order.
/// Enumeration stops after the first length that contains a disagreement.
pub fn equivalent(
    h1: &dyn SequenceModel,
    h2: &dyn SequenceModel,
    max_len: usize,
    tol: f64,
) -> Result<EquivalenceReport> {
    if h1.codec().alphabet_sizes() != h2.codec().alphabet_sizes() {
        return Err(Error::InvalidInput(format!(
            "alphabet mismatch: {:?} vs {:?}",
            h1.codec().alphabet_sizes(),
            h2.codec().alphabet_sizes()
        )));
    }
    if max_len == 0 {
        return Err(Error::InvalidInput("max_len must be at least 1".into()));
    }
    let letters = h1.codec().total_letters();
    let (t1, t2) = (h1.terminal(), h2.terminal());
    // frontier of (sequence, forward vector of h1, forward vector of h2)
    let mut frontier: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> =
        vec![(Vec::new(), h1.initial(), h2.initial())];
    let mut per_length = Vec::new();
    let mut counterexample = None;
    for length in 1..=max_len {
        let mut next = Vec::with_capacity(frontier.len() * letters);
        let mut max_diff = 0.0_f64;
        for (seq, v1, v2) in &frontier {
            for y in 0..letters {
                let n1 = h1.step(v1, y);
                let n2 = h2.step(v2, y);
                let (p1, p2) = (dot(&n1, &t1), dot(&n2, &t2));
                let d = (p1 - p2).abs();
                max_diff = max_diff.max(d);
                let mut s = seq.clone();
                s.push(y);
                if d > tol && counterexample.is_none() {
                    let decoded = s
                        .iter()
                        .map(|&l| h1.codec().decode(l))
                        .collect::<Result<Vec<_>>>()?;
                    counterexample = Some(Counterexample {
                        sequence: s.clone(),
                        decoded,
                        p_first: p1,
                        p_second: p2,
                    });
                }
                next.push((s, n1, n2));
            }
        }
        per_length.push(LengthAgreement {
            length,
            sequences: next.len(),
            max_abs_diff: max_diff,
        });
        if counterexample.is_some() {
            break;
        }
        frontier = next;
    }
    Ok(EquivalenceReport {
        equivalent: counterexample.is_none(),
        max_len,
        tolerance: tol,
        per_length,
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn small() -> HmmParams {
        HmmParams::new(
            vec![0.6, 0.4],
            m(&[&[0.7, 0.3], &[0.2, 0.8]]),
            m(&[&[0.9, 0.1], &[0.3, 0.7]]),
        )
        .unwrap()
    }

    #[test]
    fn shape_errors() {
        let a = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(HmmParams::new(vec![1.0], a.clone(), a.clone()).is_err());
        assert!(HmmParams::new(vec![0.5, 0.5], a.clone(), m(&[&[1.0], &[1.0]])).is_err());
        assert!(HmmParams::new(vec![0.5, 0.5], m(&[&[1.0, 0.0]]), a.clone()).is_err());
        assert!(MultiHmmParams::new(vec![0.5, 0.5], a.clone(), vec![a.clone()], false).is_err());
    }

    #[test]
    fn validate_reports_each_violation() {
        assert!(small().validate(&Tolerance::default()).is_empty());
        let bad = HmmParams::new(
            vec![0.5, 0.5],
            m(&[&[0.6, 0.3], &[0.2, 0.8]]),
            m(&[&[0.9, 0.1], &[0.3, 0.7]]),
        )
        .unwrap();
        let v = bad.validate(&Tolerance::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "A row 0");

        let b1 = m(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let b2 = m(&[&[0.5, 0.5], &[0.3, 0.7]]);
        let a = m(&[&[0.7, 0.3], &[0.2, 0.8]]);
        let homo_bad =
            MultiHmmParams::new(vec![0.5, 0.5], a.clone(), vec![b1.clone(), b2], true).unwrap();
        let v = homo_bad.validate(&Tolerance::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "homogeneous");
        let hetero_bad =
            MultiHmmParams::new(vec![0.5, 0.5], a, vec![b1.clone(), b1], false).unwrap();
        assert_eq!(hetero_bad.validate(&Tolerance::default()).len(), 1);
    }

    #[test]
    fn stationary_examples() {
        let tol = Tolerance::default();
        let half = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let pi = stationary_distribution(&half, &tol).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
        assert!(matches!(
            stationary_distribution(&Matrix::identity(2), &tol),
            Err(Error::NoConvergence(_))
        ));
        let swap = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(stationary_distribution(&swap, &tol).is_err());
        let a = m(&[&[0.7, 0.3], &[0.2, 0.8]]);
        let pi = stationary_distribution(&a, &tol).unwrap();
        assert!((pi[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn w_block_structure() {
        let h = HmmParams::new(vec![0.5, 0.5], Matrix::identity(2), Matrix::identity(2)).unwrap();
        let w = build_w(&h).unwrap();
        assert_eq!(w, m(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0]]));
    }

    #[test]
    fn single_letter_probability_reduces_to_emission() {
        let h = small();
        for y in 0..2 {
            let expect: f64 = (0..2).map(|i| h.pi()[i] * h.b().get(i, y)).sum();
            assert!((sequence_prob(&h, &[y], None).unwrap() - expect).abs() < 1e-15);
        }
        assert!(sequence_prob(&h, &[], None).is_err());
        assert!(sequence_prob(&h, &[2], None).is_err());
    }

    #[test]
    fn deterministic_chain_by_hand() {
        let h = HmmParams::new(
            vec![1.0, 0.0],
            m(&[&[0.0, 1.0], &[1.0, 0.0]]),
            Matrix::identity(2),
        )
        .unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let p = sequence_prob(&h, &[a, b, c], None).unwrap();
                    let expect = if [a, b, c] == [0, 1, 0] { 1.0 } else { 0.0 };
                    assert_eq!(p, expect);
                }
            }
        }
        // pi override starting in state 1
        assert_eq!(
            sequence_prob(&h, &[1, 0, 1], Some(&[0.0, 1.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn quasi_from_hmm_matches() {
        let h = small();
        let qh = QuasiHmm::from_hmm(&h).unwrap();
        for seq in [&[0][..], &[1, 0], &[0, 1, 1, 0]] {
            let a = sequence_prob(&h, seq, None).unwrap();
            let b = quasi_sequence_prob(&qh, seq).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn equivalence_self_and_mismatch() {
        let h = small();
        let r = equivalent(&h, &h, 4, 1e-12).unwrap();
        assert!(r.equivalent);
        assert_eq!(r.per_length.len(), 4);
        assert_eq!(r.per_length[3].sequences, 16);

        let other = HmmParams::new(
            vec![0.6, 0.4],
            m(&[&[0.7, 0.3], &[0.2, 0.8]]),
            m(&[&[0.85, 0.15], &[0.3, 0.7]]),
        )
        .unwrap();
        let r = equivalent(&h, &other, 4, 1e-12).unwrap();
        assert!(!r.equivalent);
        assert_eq!(r.counterexample.unwrap().sequence, vec![0]);

        let wide = HmmParams::new(
            vec![0.5, 0.5],
            Matrix::identity(2),
            m(&[&[0.2, 0.3, 0.5], &[0.1, 0.1, 0.8]]),
        )
        .unwrap();
        assert!(equivalent(&h, &wide, 2, 1e-12).is_err());
    }

    #[test]
    fn multi_single_letter_expansion() {
        let a = m(&[&[0.7, 0.3], &[0.2, 0.8]]);
        let b1 = m(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let b2 = m(&[&[0.6, 0.4], &[0.1, 0.9]]);
        let h =
            MultiHmmParams::new(vec![0.3, 0.7], a, vec![b1.clone(), b2.clone()], false).unwrap();
        for y in 0..2 {
            for z in 0..2 {
                let p = sequence_prob_multi(&h, &[vec![y, z]]).unwrap();
                let expect: f64 = (0..2)
                    .map(|i| h.pi()[i] * b1.get(i, y) * b2.get(i, z))
                    .sum();
                assert!((p - expect).abs() < 1e-15);
            }
        }
        assert!(sequence_prob_multi(&h, &[vec![0]]).is_err());
        assert_eq!(build_w_multi(&h).unwrap().shape(), (2, 8));
    }
}
