//! Identifiability verdicts from Kruskal-rank conditions.
//!
//! Single-observer, homogeneous and time-varying models are identifiable
//! when `krank(B ⊗row A) = q` and neither factor has a proportional row pair
//! (`krank(A) >= 2`, `krank(B) >= 2`). A proportional pair always admits the
//! rank-1 recombination, so the factor condition is checked explicitly
//! rather than inferred from the row-tensor krank, which can reach `q` even
//! when `B` has two equal rows. Heterogeneous observers are judged on
//! `krank(B1 ⊗row ⋯ ⊗row Bm ⊗row A) = q` alone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmm::{build_w_multi, HmmParams, MultiHmmParams, Schedule};
use crate::identifiability::construct::{
    construct_rank1_recombination, construct_rank1_recombination_multi, Recombination,
};
use crate::krank::{
    krank, krank_bound_multi, krank_bound_row_tensor, BoundMethod, KrankBound, KrankResult,
};
use crate::matrix::{Matrix, Tolerance};
use crate::tensor::{row_tensor, row_tensor_power};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    Single,
    MultiHomogeneous,
    MultiHeterogeneous,
    NonStationary,
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::Single => "single observer",
            Setting::MultiHomogeneous => "homogeneous observers",
            Setting::MultiHeterogeneous => "heterogeneous observers",
            Setting::NonStationary => "time-varying parameters",
        })
    }
}

/// Sylvester-sum lower bound on the governing krank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumCheck {
    pub bound: KrankBound,
    /// The bound alone certifies a positive verdict.
    pub fired: bool,
    pub expression: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub setting: Setting,
    /// Krank of the governing row-tensor matrix.
    pub condition_value: KrankResult,
    pub required: usize,
    pub krank_a: KrankResult,
    /// One entry per observation matrix.
    pub krank_bs: Vec<KrankResult>,
    /// `krank(A) >= 2 && krank(B) >= 2`; absent for heterogeneous observers.
    pub factor_condition: Option<bool>,
    pub identifiable: bool,
    pub sufficient_sum_check: SumCheck,
    /// Krank of `⊗row^m B ⊗row A` for homogeneous observers.
    pub multi_letter_krank: Option<KrankResult>,
    pub counterexample: Option<Recombination>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn krank_condition(&self) -> bool {
        self.condition_value.value == self.required
    }
}

/// Krank data for one `(A, B)` pair under the single-observer rule.
fn single_rule(a: &Matrix, b: &Matrix, tol: &Tolerance, setting: Setting) -> Result<Verdict> {
    let q = a.rows();
    let w = row_tensor(b, a)?;
    let kw = krank(&w, tol);
    let ka = krank(a, tol);
    let kb = krank(b, tol);
    let factor_ok = ka.value >= 2 && kb.value >= 2;
    let lower = krank_bound_row_tensor(ka.value, kb.value, q);
    let sum = SumCheck {
        bound: KrankBound {
            lower,
            upper: q,
            method: BoundMethod::SylvesterSum,
            zero_row: ka.value == 0 || kb.value == 0,
        },
        fired: lower >= q && factor_ok,
        expression: format!(
            "min({} + {} - 1, {q}) = {lower} {} {q}",
            ka.value,
            kb.value,
            if lower >= q { ">=" } else { "<" }
        ),
    };
    let identifiable = kw.value == q && factor_ok;
    let mut notes = Vec::new();
    if kw.value == q && !factor_ok {
        notes.push(format!(
            "krank(B ⊗row A) = q but a factor has krank {}; a proportional row pair admits a rank-1 recombination",
            ka.value.min(kb.value)
        ));
    }
    Ok(Verdict {
        setting,
        condition_value: kw,
        required: q,
        krank_a: ka,
        krank_bs: vec![kb],
        factor_condition: Some(factor_ok),
        identifiable,
        sufficient_sum_check: sum,
        multi_letter_krank: None,
        counterexample: None,
        notes,
    })
}

fn no_counterexample_note(v: &mut Verdict) {
    if !v.identifiable && v.counterexample.is_none() {
        v.notes.push(
            "no proportional row pair; the dependent-row certificate is the only evidence".into(),
        );
    }
}

pub fn verdict_single(h: &HmmParams, tol: &Tolerance) -> Result<Verdict> {
    let mut v = single_rule(h.a(), h.b(), tol, Setting::Single)?;
    if !v.identifiable {
        v.counterexample = construct_rank1_recombination(h, tol)?;
    }
    no_counterexample_note(&mut v);
    Ok(v)
}

pub fn verdict_homogeneous(h: &MultiHmmParams, tol: &Tolerance) -> Result<Verdict> {
    if !h.homogeneous() {
        return Err(Error::InvalidInput(
            "verdict_homogeneous needs a homogeneous model".into(),
        ));
    }
    let b = &h.bs()[0];
    let mut v = single_rule(h.a(), b, tol, Setting::MultiHomogeneous)?;
    let stack = row_tensor(&row_tensor_power(b, h.m())?, h.a())?;
    v.multi_letter_krank = Some(krank(&stack, tol));
    v.notes.push(format!(
        "{} identical observers reduce to the single-observer condition on (A, B)",
        h.m()
    ));
    if !v.identifiable {
        v.counterexample = construct_rank1_recombination_multi(h, tol)?;
    }
    no_counterexample_note(&mut v);
    Ok(v)
}

pub fn verdict_heterogeneous(h: &MultiHmmParams, tol: &Tolerance) -> Result<Verdict> {
    if h.homogeneous() {
        return Err(Error::InvalidInput(
            "verdict_heterogeneous needs a heterogeneous model".into(),
        ));
    }
    if h.observers_identical(tol) {
        return Err(Error::InvalidInput(
            "observation matrices are identical; the model is homogeneous".into(),
        ));
    }
    let q = h.q();
    let stack = build_w_multi(h)?;
    let ks = krank(&stack, tol);
    let ka = krank(h.a(), tol);
    let kbs: Vec<KrankResult> = h.bs().iter().map(|b| krank(b, tol)).collect();
    let mut all = vec![ka.value];
    all.extend(kbs.iter().map(|k| k.value));
    let lower = krank_bound_multi(&all, q);
    let total: usize = all.iter().sum();
    let terms: Vec<String> = all.iter().map(ToString::to_string).collect();
    let reaches = lower >= q;
    let sum = SumCheck {
        bound: KrankBound {
            lower,
            upper: q,
            method: BoundMethod::SylvesterSum,
            zero_row: all.contains(&0),
        },
        fired: reaches,
        expression: format!(
            "{} = {total} {} q + m = {}",
            terms.join(" + "),
            if reaches { ">=" } else { "<" },
            q + h.m()
        ),
    };
    let identifiable = ks.value == q;
    let mut v = Verdict {
        setting: Setting::MultiHeterogeneous,
        condition_value: ks,
        required: q,
        krank_a: ka,
        krank_bs: kbs,
        factor_condition: None,
        identifiable,
        sufficient_sum_check: sum,
        multi_letter_krank: None,
        counterexample: None,
        notes: Vec::new(),
    };
    if !identifiable {
        v.counterexample = construct_rank1_recombination_multi(h, tol)?;
    }
    no_counterexample_note(&mut v);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleVerdict {
    pub steps: Vec<Verdict>,
    pub identifiable: bool,
    /// 0-based steps that fail.
    pub failing_steps: Vec<usize>,
}

/// Per-step single-observer verdicts for a time-varying schedule.
pub fn verdict_nonstationary(schedule: &Schedule, tol: &Tolerance) -> Result<ScheduleVerdict> {
    let steps = schedule
        .steps()
        .iter()
        .map(|(a, b)| single_rule(a, b, tol, Setting::NonStationary))
        .collect::<Result<Vec<_>>>()?;
    let failing_steps: Vec<usize> = steps
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.identifiable)
        .map(|(t, _)| t)
        .collect();
    Ok(ScheduleVerdict {
        identifiable: failing_steps.is_empty(),
        steps,
        failing_steps,
    })
}

/// Necessary condition for `q` being the minimal state count: `krank(A) = q`.
pub fn check_minimality_necessary(h: &HmmParams, tol: &Tolerance) -> bool {
    krank(h.a(), tol).value == h.q()
}
