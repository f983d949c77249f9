//! Subcommand implementations. Each returns an [`Outcome`]: exit code,
//! human-readable text and the JSON `result` object of the report.
//!
//! Human text numbers states and letters from 1; JSON is 0-based.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use hmm_ident::hmm::{equivalent, EquivalenceReport, QuasiHmm};
use hmm_ident::identifiability::{
    construct_rank1_recombination, construct_rank1_recombination_multi, inflate_quasi, n_star,
    vandermonde_witness, verdict_heterogeneous, verdict_homogeneous, verdict_nonstationary,
    verdict_single, NStarBound, NStarVariant, Setting, Verdict, WitnessReport,
};
use hmm_ident::krank::{Certificate, KrankResult};
use hmm_ident::tensor::PermScale;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::model::{load, save, Loaded, Model, ModelFile, ToleranceSpec};

pub const EXIT_AFFIRMATIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNAVAILABLE: i32 = 3;

/// Length used when a command checks its own constructions.
const SELF_CHECK_LEN: usize = 3;
const SELF_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub result: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SettingArg {
    Auto,
    Single,
    Homogeneous,
    Heterogeneous,
    NonStationary,
}

/// `{1,5}` style, 1-based.
pub fn one_based_set(rows: &[usize]) -> String {
    let v: Vec<String> = rows.iter().map(|r| (r + 1).to_string()).collect();
    format!("{{{}}}", v.join(","))
}

pub fn describe_krank(k: &KrankResult) -> String {
    match &k.certificate {
        Certificate::Full => format!("{}, all rows independent", k.value),
        Certificate::Dependent(rows) => {
            format!("{}, dependent rows {}", k.value, one_based_set(rows))
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

pub fn render_verdict(v: &Verdict, out: &mut String) {
    let _ = writeln!(out, "setting: {} (q = {})", v.setting, v.required);
    let _ = writeln!(out, "krank(A) = {}", describe_krank(&v.krank_a));
    let governing = match v.setting {
        Setting::MultiHeterogeneous => {
            for (j, k) in v.krank_bs.iter().enumerate() {
                let _ = writeln!(out, "krank(B^({})) = {}", j + 1, describe_krank(k));
            }
            let factors: Vec<String> = (1..=v.krank_bs.len()).map(|j| format!("B^({j})")).collect();
            format!("krank({} ⊗row A)", factors.join(" ⊗row "))
        }
        _ => {
            let _ = writeln!(out, "krank(B) = {}", describe_krank(&v.krank_bs[0]));
            "krank(B ⊗row A)".to_string()
        }
    };
    let _ = writeln!(
        out,
        "{governing} = {} (required {})",
        describe_krank(&v.condition_value),
        v.required
    );
    if let Some(ml) = &v.multi_letter_krank {
        let _ = writeln!(
            out,
            "multi-letter krank(⊗row^m B ⊗row A) = {}",
            describe_krank(ml)
        );
    }
    if let Some(f) = v.factor_condition {
        let _ = writeln!(
            out,
            "factor condition krank(A) >= 2 and krank(B) >= 2: {}",
            yes_no(f)
        );
    }
    let s = &v.sufficient_sum_check;
    let status = if s.fired {
        "sufficient, fires"
    } else if s.bound.lower >= v.required {
        "bound reaches q but the factor condition fails"
    } else {
        "does not fire"
    };
    let _ = writeln!(out, "sum route: {} ({status})", s.expression);
    let _ = writeln!(
        out,
        "verdict: {}",
        if v.identifiable {
            "identifiable"
        } else {
            "NOT identifiable"
        }
    );
    match &v.counterexample {
        Some(c) => {
            let _ = writeln!(out, "counterexample available: {}", c.quasi.provenance());
        }
        None if !v.identifiable => {
            let _ = writeln!(out, "counterexample: unavailable");
        }
        None => {}
    }
    for n in &v.notes {
        let _ = writeln!(out, "note: {n}");
    }
}

fn load_with(path: &Path, tol: Option<ToleranceSpec>) -> Result<Loaded> {
    load(path, tol)
}

pub fn analyze(path: &Path, setting: SettingArg, tol: Option<ToleranceSpec>) -> Result<Outcome> {
    let loaded = load_with(path, tol)?;
    let t = loaded.tolerance;
    let mut text = String::new();
    for n in &loaded.notes {
        let _ = writeln!(text, "note: {n}");
    }
    let expected = match &loaded.model {
        Model::Hmm(_) => SettingArg::Single,
        Model::Multi(h) if h.homogeneous() => SettingArg::Homogeneous,
        Model::Multi(_) => SettingArg::Heterogeneous,
        Model::Schedule(_) => SettingArg::NonStationary,
        Model::Quasi(_) => bail!("quasi models carry no stochastic parameters to analyze"),
    };
    if setting != SettingArg::Auto && setting != expected {
        bail!(
            "--setting {:?} does not match a {} model (expected {:?})",
            setting,
            loaded.model.kind(),
            expected
        );
    }
    let (identifiable, body) = match &loaded.model {
        Model::Hmm(h) => {
            let v = verdict_single(h, &t)?;
            render_verdict(&v, &mut text);
            (v.identifiable, serde_json::to_value(&v)?)
        }
        Model::Multi(h) => {
            let v = if h.homogeneous() {
                verdict_homogeneous(h, &t)?
            } else {
                verdict_heterogeneous(h, &t)?
            };
            render_verdict(&v, &mut text);
            (v.identifiable, serde_json::to_value(&v)?)
        }
        Model::Schedule(s) => {
            let sv = verdict_nonstationary(s, &t)?;
            for (step, v) in sv.steps.iter().enumerate() {
                let _ = writeln!(text, "-- step {} --", step + 1);
                render_verdict(v, &mut text);
            }
            let _ = writeln!(
                text,
                "schedule verdict: {}",
                if sv.identifiable {
                    "identifiable at every step".to_string()
                } else {
                    format!(
                        "NOT identifiable (failing steps {})",
                        one_based_set(&sv.failing_steps)
                    )
                }
            );
            (sv.identifiable, serde_json::to_value(&sv)?)
        }
        Model::Quasi(_) => unreachable!("rejected above"),
    };
    Ok(Outcome {
        code: if identifiable {
            EXIT_AFFIRMATIVE
        } else {
            EXIT_NEGATIVE
        },
        text,
        result: json!({
            "model_kind": loaded.model.kind(),
            "identifiable": identifiable,
            "tolerance": t,
            "notes": loaded.notes,
            "verdict": body,
        }),
    })
}

fn letters_text(q: &QuasiHmm, seq: &[Vec<usize>]) -> String {
    let parts: Vec<String> = seq
        .iter()
        .map(|t| {
            if q.codec().observers() == 1 {
                (t[0] + 1).to_string()
            } else {
                let v: Vec<String> = t.iter().map(|x| (x + 1).to_string()).collect();
                format!("({})", v.join(","))
            }
        })
        .collect();
    format!("[{}]", parts.join(" "))
}

pub fn render_equivalence(r: &EquivalenceReport, model: &QuasiHmm, out: &mut String) {
    for l in &r.per_length {
        let _ = writeln!(
            out,
            "length {}: {} sequences, max |P1 - P2| = {:.3e}",
            l.length, l.sequences, l.max_abs_diff
        );
    }
    match &r.counterexample {
        None => {
            let _ = writeln!(out, "equivalent up to length {}", r.max_len);
        }
        Some(c) => {
            let _ = writeln!(
                out,
                "NOT equivalent: first disagreement at y = {}: P1 = {:e}, P2 = {:e}",
                letters_text(model, &c.decoded),
                c.p_first,
                c.p_second
            );
        }
    }
}

pub fn equivalence(
    first: &Path,
    second: &Path,
    max_len: usize,
    prob_tol: f64,
    tol: Option<ToleranceSpec>,
) -> Result<Outcome> {
    let a = load_with(first, tol)?;
    let b = load_with(second, tol)?;
    let qa = a.model.as_quasi()?;
    let qb = b.model.as_quasi()?;
    let r = equivalent(&qa, &qb, max_len, prob_tol)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "comparing {} ({}, {} states) with {} ({}, {} states), tolerance {prob_tol:e}",
        first.display(),
        a.model.kind(),
        qa.q(),
        second.display(),
        b.model.kind(),
        qb.q()
    );
    render_equivalence(&r, &qa, &mut text);
    Ok(Outcome {
        code: if r.equivalent {
            EXIT_AFFIRMATIVE
        } else {
            EXIT_NEGATIVE
        },
        text,
        result: json!({
            "equivalent": r.equivalent,
            "report": r,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleMode {
    Recombination,
    Inflate(usize),
}

impl FromStr for CounterexampleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "recombination" {
            return Ok(Self::Recombination);
        }
        if let Some(n) = s.strip_prefix("inflate:") {
            return n
                .parse()
                .map(Self::Inflate)
                .map_err(|_| format!("bad state count in {s:?}"));
        }
        Err(format!(
            "expected \"recombination\" or \"inflate:<states>\", got {s:?}"
        ))
    }
}

fn random_relabel(seed: u64, q: usize) -> PermScale {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..q).collect();
    perm.shuffle(&mut rng);
    let scale = (0..q).map(|_| rng.gen_range(0.5..2.0)).collect();
    PermScale { perm, scale }
}

pub fn counterexample(
    path: &Path,
    mode: CounterexampleMode,
    relabel_seed: Option<u64>,
    model_out: &Path,
    tol: Option<ToleranceSpec>,
) -> Result<Outcome> {
    let loaded = load_with(path, tol)?;
    let t = loaded.tolerance;
    let mut text = String::new();
    let original = loaded.model.as_quasi()?;
    let (quasi, detail) = match mode {
        CounterexampleMode::Recombination => {
            let (verdict, rec) = match &loaded.model {
                Model::Hmm(h) => (
                    verdict_single(h, &t)?,
                    construct_rank1_recombination(h, &t)?,
                ),
                Model::Multi(h) => {
                    let v = if h.homogeneous() {
                        verdict_homogeneous(h, &t)?
                    } else {
                        verdict_heterogeneous(h, &t)?
                    };
                    (v, construct_rank1_recombination_multi(h, &t)?)
                }
                other => bail!(
                    "recombination needs an hmm or multi-hmm model, got {}",
                    other.kind()
                ),
            };
            if verdict.identifiable {
                let _ = writeln!(text, "model is identifiable; no recombination exists");
                return Ok(Outcome {
                    code: EXIT_UNAVAILABLE,
                    text,
                    result: json!({ "written": false, "reason": "identifiable", "verdict": verdict }),
                });
            }
            let Some(rec) = rec else {
                let _ = writeln!(
                    text,
                    "no row pair is proportional on exactly one side; evidence is the certificate only"
                );
                let _ = writeln!(
                    text,
                    "governing krank = {}",
                    describe_krank(&verdict.condition_value)
                );
                return Ok(Outcome {
                    code: EXIT_UNAVAILABLE,
                    text,
                    result: json!({
                        "written": false,
                        "reason": "no proportional row pair",
                        "certificate": verdict.condition_value,
                    }),
                });
            };
            let detail = json!({
                "pair": [rec.pair.0, rec.pair.1],
                "side": rec.side,
                "ratio": rec.ratio,
                "c_tilde": rec.c_tilde,
                "alt_w": rec.alt_w,
            });
            (rec.quasi, detail)
        }
        CounterexampleMode::Inflate(q_tilde) => {
            let relabel = relabel_seed.map(|s| random_relabel(s, original.q()));
            let quasi = inflate_quasi(&original, q_tilde, relabel.as_ref(), &t)?;
            let detail = json!({ "q_tilde": q_tilde, "relabel": relabel });
            (quasi, detail)
        }
    };
    let check = equivalent(&original, &quasi, SELF_CHECK_LEN, SELF_CHECK_TOL)?;
    if !check.equivalent {
        bail!("internal error: constructed model disagrees with the original");
    }
    save(model_out, &ModelFile::from_quasi(&quasi))?;
    let _ = writeln!(text, "construction: {}", quasi.provenance());
    let _ = writeln!(
        text,
        "self-check: equivalent up to length {SELF_CHECK_LEN} (tolerance {SELF_CHECK_TOL:e})"
    );
    let _ = writeln!(
        text,
        "wrote {}-state quasi model to {}",
        quasi.q(),
        model_out.display()
    );
    Ok(Outcome {
        code: EXIT_AFFIRMATIVE,
        text,
        result: json!({
            "written": true,
            "path": model_out.display().to_string(),
            "provenance": quasi.provenance(),
            "q": quasi.q(),
            "construction": detail,
            "self_check": check,
        }),
    })
}

fn binomial_label(b: &NStarBound) -> String {
    let (mult, k) = match b.variant {
        NStarVariant::SingleStrong => (1, b.kappas[0]),
        NStarVariant::SingleWeak => (1, b.kappas[0]),
        NStarVariant::Homogeneous => (b.m.unwrap_or(1), b.kappas[0]),
        NStarVariant::Heterogeneous => (b.kappas.len(), b.kappas.iter().product()),
    };
    let n = if mult == 1 {
        "N".to_string()
    } else {
        format!("{mult}N")
    };
    let offset = if b.variant == NStarVariant::SingleWeak {
        k as i64 - 2
    } else {
        k as i64 - 1
    };
    let n = if offset == 0 {
        n
    } else {
        format!("{n}+{offset}")
    };
    format!("C({n}, {})", k - 1)
}

pub fn render_witness(w: &WitnessReport, out: &mut String) {
    let gens: Vec<String> = w.generators.iter().map(|g| format!("{g:?}")).collect();
    let _ = writeln!(
        out,
        "witness: generators {}, {} row-tensor factors, stack {}x{}",
        gens.join(" "),
        w.degree,
        w.stack_shape.0,
        w.stack_shape.1
    );
    let _ = writeln!(
        out,
        "witness: rank {} (q = {}), krank {}, {} distinct monomials; {}",
        w.rank,
        w.q,
        w.krank.value,
        w.distinct_monomials,
        if w.full_rank {
            "full rank"
        } else {
            "rank deficient"
        }
    );
}

pub fn nstar(
    variant: NStarVariant,
    q: usize,
    kappas: &[usize],
    m: Option<usize>,
    witness: bool,
) -> Result<Outcome> {
    let b = n_star(variant, q, kappas, m)?;
    let label = binomial_label(&b);
    let mut text = String::new();
    let ks: Vec<String> = kappas.iter().map(ToString::to_string).collect();
    let _ = write!(
        text,
        "variant {}, q = {q}, kappa = {}",
        serde_json::to_value(variant)?.as_str().unwrap_or_default(),
        ks.join(",")
    );
    if let Some(m) = b.m {
        let _ = write!(text, ", m = {m}");
    }
    let _ = writeln!(text);
    let _ = writeln!(text, "{:>4}  {label}", "N");
    for (n, v) in &b.binomial_trace {
        let _ = writeln!(text, "{n:>4}  {v}");
    }
    let _ = writeln!(text, "N* = {}", b.n_star);
    let mut code = EXIT_AFFIRMATIVE;
    let mut w_json = Value::Null;
    if witness {
        let layout_m = match variant {
            NStarVariant::Homogeneous => b.m,
            _ => None,
        };
        let w = vandermonde_witness(q, kappas, b.n_star, layout_m, None)
            .context("witness construction refused")?;
        render_witness(&w, &mut text);
        if !w.full_rank {
            code = EXIT_NEGATIVE;
        }
        w_json = serde_json::to_value(&w)?;
    }
    Ok(Outcome {
        code,
        text,
        result: json!({
            "bound": b,
            "binomial": label,
            "witness": w_json,
        }),
    })
}
