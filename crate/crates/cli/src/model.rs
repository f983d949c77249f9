//! JSON model files.
//!
//! Matrices are arrays of rows. `pi` may be omitted for `hmm` and
//! `multi-hmm` files, in which case the stationary distribution of `A` is
//! used. Letters and states are 0-based throughout the file format.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hmm_ident::hmm::{HmmParams, MultiHmmParams, QuasiHmm, Schedule};
use hmm_ident::tensor::LetterCodec;
use hmm_ident::{Matrix, Tolerance};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rel_eps: Option<f64>,
    pub abs_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "B")]
    pub b: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelFile {
    Hmm {
        q: usize,
        kappa: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi: Option<Vec<f64>>,
        #[serde(rename = "A")]
        a: Matrix,
        #[serde(rename = "B")]
        b: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<ToleranceSpec>,
    },
    MultiHmm {
        q: usize,
        kappas: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi: Option<Vec<f64>>,
        #[serde(rename = "A")]
        a: Matrix,
        #[serde(rename = "Bs")]
        bs: Vec<Matrix>,
        homogeneous: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<ToleranceSpec>,
    },
    Schedule {
        q: usize,
        kappa: usize,
        steps: Vec<StepSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<ToleranceSpec>,
    },
    QuasiHmm {
        q: usize,
        kappas: Vec<usize>,
        pi: Vec<f64>,
        letters: Vec<Matrix>,
        one_vector: Vec<f64>,
        provenance: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hmm(HmmParams),
    Multi(MultiHmmParams),
    Schedule(Schedule),
    Quasi(QuasiHmm),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Hmm(_) => "hmm",
            Model::Multi(_) => "multi-hmm",
            Model::Schedule(_) => "schedule",
            Model::Quasi(_) => "quasi-hmm",
        }
    }

    /// Sequence model view for the equivalence oracle.
    pub fn as_quasi(&self) -> Result<QuasiHmm> {
        Ok(match self {
            Model::Hmm(h) => QuasiHmm::from_hmm(h)?,
            Model::Multi(h) => QuasiHmm::from_multi(h)?,
            Model::Quasi(h) => h.clone(),
            Model::Schedule(_) => {
                bail!("time-varying schedules have no sequence distribution to compare")
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub model: Model,
    pub tolerance: Tolerance,
    pub notes: Vec<String>,
}

fn check_dim(what: &str, got: usize, declared: usize) -> Result<()> {
    if got != declared {
        bail!("{what}: declared {declared}, matrices give {got}");
    }
    Ok(())
}

fn resolve_tolerance(spec: Option<ToleranceSpec>, base: Tolerance) -> Result<Tolerance> {
    let Some(spec) = spec else { return Ok(base) };
    Ok(Tolerance::new(
        spec.rel_eps.unwrap_or(base.rel_eps),
        spec.abs_eps.unwrap_or(base.abs_eps),
    )?)
}

fn stationarity_note(pi: &[f64], a: &Matrix, notes: &mut Vec<String>) -> Result<()> {
    let next = a.left_mul_vec(pi)?;
    let gap = next
        .iter()
        .zip(pi)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if gap > 1e-8 {
        notes.push(format!(
            "pi is not stationary for A (max |piA - pi| = {gap:.3e})"
        ));
    }
    Ok(())
}

/// `"A row 0"` becomes `"A row 1"`: messages are read by people.
fn one_based_field(field: &str) -> String {
    match field.rsplit_once(" row ") {
        Some((name, idx)) => match idx.parse::<usize>() {
            Ok(i) => format!("{name} row {}", i + 1),
            Err(_) => field.to_string(),
        },
        None => field.to_string(),
    }
}

fn violations_error(v: &[hmm_ident::hmm::Violation]) -> anyhow::Error {
    let lines: Vec<String> = v
        .iter()
        .map(|x| format!("  {}: {}", one_based_field(&x.field), x.message))
        .collect();
    anyhow::anyhow!("model failed validation:\n{}", lines.join("\n"))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("cannot parse model file")
    }

    /// Builds and validates the model. `cli_tol` fields override the file's.
    pub fn into_model(self, cli_tol: Option<ToleranceSpec>) -> Result<Loaded> {
        let mut notes = Vec::new();
        let (model, file_tol) = match self {
            ModelFile::Hmm {
                q,
                kappa,
                pi,
                a,
                b,
                tolerance,
            } => {
                let tol = resolve_tolerance(tolerance, Tolerance::default())?;
                check_dim("q", a.rows(), q)?;
                check_dim("kappa", b.cols(), kappa)?;
                let h = match pi {
                    Some(pi) => {
                        let h = HmmParams::new(pi, a, b)?;
                        stationarity_note(h.pi(), h.a(), &mut notes)?;
                        h
                    }
                    None => {
                        let uniform = vec![1.0 / q as f64; q];
                        let probe = HmmParams::new(uniform, a.clone(), b.clone())?;
                        let v = probe.validate(&tol);
                        if !v.is_empty() {
                            return Err(violations_error(&v));
                        }
                        notes.push("pi omitted; using the stationary distribution of A".into());
                        HmmParams::with_stationary(a, b, &tol)?
                    }
                };
                let v = h.validate(&tol);
                if !v.is_empty() {
                    return Err(violations_error(&v));
                }
                (Model::Hmm(h), tolerance)
            }
            ModelFile::MultiHmm {
                q,
                kappas,
                pi,
                a,
                bs,
                homogeneous,
                tolerance,
            } => {
                let tol = resolve_tolerance(tolerance, Tolerance::default())?;
                check_dim("q", a.rows(), q)?;
                check_dim("number of observers", bs.len(), kappas.len())?;
                for (j, (b, &k)) in bs.iter().zip(&kappas).enumerate() {
                    check_dim(&format!("kappas[{j}]"), b.cols(), k)?;
                }
                let h = match pi {
                    Some(pi) => {
                        let h = MultiHmmParams::new(pi, a, bs, homogeneous)?;
                        stationarity_note(h.pi(), h.a(), &mut notes)?;
                        h
                    }
                    None => {
                        let uniform = vec![1.0 / q as f64; q];
                        let probe =
                            MultiHmmParams::new(uniform, a.clone(), bs.clone(), homogeneous)?;
                        let v = probe.validate(&tol);
                        if !v.is_empty() {
                            return Err(violations_error(&v));
                        }
                        notes.push("pi omitted; using the stationary distribution of A".into());
                        MultiHmmParams::with_stationary(a, bs, homogeneous, &tol)?
                    }
                };
                let v = h.validate(&tol);
                if !v.is_empty() {
                    return Err(violations_error(&v));
                }
                (Model::Multi(h), tolerance)
            }
            ModelFile::Schedule {
                q,
                kappa,
                steps,
                tolerance,
            } => {
                let tol = resolve_tolerance(tolerance, Tolerance::default())?;
                for (t, s) in steps.iter().enumerate() {
                    check_dim(&format!("steps[{t}] q"), s.a.rows(), q)?;
                    check_dim(&format!("steps[{t}] kappa"), s.b.cols(), kappa)?;
                }
                let s = Schedule::new(steps.into_iter().map(|s| (s.a, s.b)).collect())?;
                let v = s.validate(&tol);
                if !v.is_empty() {
                    return Err(violations_error(&v));
                }
                (Model::Schedule(s), tolerance)
            }
            ModelFile::QuasiHmm {
                q,
                kappas,
                pi,
                letters,
                one_vector,
                provenance,
            } => {
                check_dim("q", pi.len(), q)?;
                let codec = LetterCodec::new(kappas)?;
                let h = QuasiHmm::new(pi, letters, one_vector, codec, provenance)?;
                (Model::Quasi(h), None)
            }
        };
        let mut tolerance = resolve_tolerance(file_tol, Tolerance::default())?;
        if let Some(cli) = cli_tol {
            tolerance = resolve_tolerance(Some(cli), tolerance)?;
        }
        Ok(Loaded {
            model,
            tolerance,
            notes,
        })
    }

    pub fn from_hmm(h: &HmmParams) -> Self {
        ModelFile::Hmm {
            q: h.q(),
            kappa: h.kappa(),
            pi: Some(h.pi().to_vec()),
            a: h.a().clone(),
            b: h.b().clone(),
            tolerance: None,
        }
    }

    pub fn from_multi(h: &MultiHmmParams) -> Self {
        ModelFile::MultiHmm {
            q: h.q(),
            kappas: h.kappas().to_vec(),
            pi: Some(h.pi().to_vec()),
            a: h.a().clone(),
            bs: h.bs().to_vec(),
            homogeneous: h.homogeneous(),
            tolerance: None,
        }
    }

    pub fn from_schedule(s: &Schedule) -> Self {
        ModelFile::Schedule {
            q: s.q(),
            kappa: s.steps()[0].1.cols(),
            steps: s
                .steps()
                .iter()
                .map(|(a, b)| StepSpec {
                    a: a.clone(),
                    b: b.clone(),
                })
                .collect(),
            tolerance: None,
        }
    }

    pub fn from_quasi(h: &QuasiHmm) -> Self {
        ModelFile::QuasiHmm {
            q: h.q(),
            kappas: h.codec().alphabet_sizes().to_vec(),
            pi: h.pi().to_vec(),
            letters: h.letters().to_vec(),
            one_vector: h.one().to_vec(),
            provenance: h.provenance().to_string(),
        }
    }

    pub fn from_model(m: &Model) -> Self {
        match m {
            Model::Hmm(h) => Self::from_hmm(h),
            Model::Multi(h) => Self::from_multi(h),
            Model::Schedule(s) => Self::from_schedule(s),
            Model::Quasi(h) => Self::from_quasi(h),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }
}

pub fn load(path: &Path, cli_tol: Option<ToleranceSpec>) -> Result<Loaded> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ModelFile::parse(&text)
        .and_then(|f| f.into_model(cli_tol))
        .with_context(|| format!("in {}", path.display()))
}

pub fn save(path: &Path, file: &ModelFile) -> Result<()> {
    std::fs::write(path, file.to_json() + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
}
