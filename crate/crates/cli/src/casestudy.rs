//! Built-in SSH attack-monitoring case study. Output is deterministic.

use std::fmt::Write as _;

use anyhow::Result;
use hmm_ident::hmm::{build_w_multi, equivalent, MultiHmmParams, QuasiHmm};
use hmm_ident::identifiability::{
    construct_rank1_recombination, verdict_heterogeneous, verdict_homogeneous, verdict_single,
};
use hmm_ident::krank::krank;
use hmm_ident::{ssh, Tolerance};
use serde::Serialize;
use serde_json::json;

use crate::commands::{describe_krank, Outcome, EXIT_AFFIRMATIVE, EXIT_NEGATIVE};
use crate::model::ModelFile;

pub const EPS_GRID: [f64; 4] = [0.05, 0.1, 0.15, 0.2];
pub const EPS: f64 = 0.1;
pub const EPS_HETERO: [f64; 2] = [0.05, 0.1];
pub const RECOMBINATION_LEN: usize = 3;
pub const RECOMBINATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(out: &mut Vec<Check>, name: &str, passed: bool, detail: String) {
    out.push(Check {
        name: name.into(),
        passed,
        detail,
    });
}

pub fn run_checks() -> Result<(Vec<Check>, Option<ModelFile>)> {
    let tol = Tolerance::default();
    let mut out = Vec::new();

    let a = ssh::transition_matrix();
    let printed = ssh::transition_matrix_printed();
    let ka = krank(&a, &tol);
    let sums = printed.row_sums();
    check(
        &mut out,
        "transition-krank",
        ka.value == 7 && krank(&printed, &tol).value == 7,
        format!(
            "krank(A) = {}; printed rows 3 and 5 sum to {:.3} and {:.3}, normalised before use",
            describe_krank(&ka),
            sums[2],
            sums[4]
        ),
    );

    let mut grid_ok = true;
    let mut grid = Vec::new();
    for &e in &EPS_GRID {
        let k = krank(&ssh::observation_matrix(e)?, &tol);
        grid_ok &= k.value == 1;
        grid.push(format!("{e}:{}", k.value));
    }
    check(
        &mut out,
        "observation-krank",
        grid_ok,
        format!("krank(B(eps)) over eps grid = {}", grid.join(" ")),
    );

    let single = ssh::single(EPS)?;
    let v = verdict_single(&single, &tol)?;
    check(
        &mut out,
        "single-negative",
        !v.identifiable && v.counterexample.is_some(),
        format!(
            "eps = {EPS}: krank(B ⊗row A) = {}, factor condition {}, verdict {}",
            describe_krank(&v.condition_value),
            if v.factor_condition == Some(true) {
                "holds"
            } else {
                "fails"
            },
            if v.identifiable {
                "identifiable"
            } else {
                "not identifiable"
            }
        ),
    );

    for m in [2usize, 3] {
        let h = ssh::multi(&vec![EPS; m])?;
        let v = verdict_homogeneous(&h, &tol)?;
        check(
            &mut out,
            &format!("homogeneous-m{m}-negative"),
            !v.identifiable,
            format!(
                "m = {m}: krank(B ⊗row A) = {}, multi-letter krank = {}",
                describe_krank(&v.condition_value),
                v.multi_letter_krank
                    .as_ref()
                    .map(describe_krank)
                    .unwrap_or_else(|| "n/a".into())
            ),
        );
    }

    let hetero = ssh::multi(&EPS_HETERO)?;
    let v = verdict_heterogeneous(&hetero, &tol)?;
    let w = build_w_multi(&hetero)?;
    let expr = "7 + 1 + 1 = 9 >= q + m = 9";
    check(
        &mut out,
        "heterogeneous-positive",
        v.identifiable
            && v.condition_value.value == 7
            && (w.rows(), w.cols()) == (7, 63)
            && v.sufficient_sum_check.expression == expr,
        format!(
            "eps = {:?}: sum route {}; exact krank of the {}x{} stack = {}",
            EPS_HETERO,
            v.sufficient_sum_check.expression,
            w.rows(),
            w.cols(),
            describe_krank(&v.condition_value)
        ),
    );

    let rec = construct_rank1_recombination(&single, &tol)?;
    let exported = rec.as_ref().map(|r| ModelFile::from_quasi(&r.quasi));
    let (rec_ok, rec_detail) = match rec {
        Some(r) => {
            let report = equivalent(
                &QuasiHmm::from_hmm(&single)?,
                &r.quasi,
                RECOMBINATION_LEN,
                RECOMBINATION_TOL,
            )?;
            let worst = report
                .per_length
                .iter()
                .fold(0.0_f64, |m, l| m.max(l.max_abs_diff));
            (
                report.equivalent,
                format!(
                    "{}; max |P - P~| up to length {RECOMBINATION_LEN} = {worst:.3e}",
                    r.quasi.provenance()
                ),
            )
        }
        None => (false, "no recombination found".into()),
    };
    check(&mut out, "recombination-equivalent", rec_ok, rec_detail);

    let third = 1.0 / 3.0;
    let bd = ssh::observation_matrix(third)?;
    let kd = krank(&bd, &tol);
    let uniform = (0..bd.rows()).all(|i| bd.row(i).iter().all(|x| (x - third).abs() < 1e-15));
    let vd = verdict_single(&ssh::single(third)?, &tol)?;
    check(
        &mut out,
        "eps-one-third-degenerate",
        uniform && kd.dependent_rows() == Some(&[0, 1][..]) && !vd.identifiable,
        format!(
            "eps = 1/3: every row of B is uniform, krank(B) = {}, observations carry no state information",
            describe_krank(&kd)
        ),
    );

    let b = ssh::observation_matrix(EPS)?;
    let mislabelled = MultiHmmParams::with_stationary(a.clone(), vec![b.clone(), b], false, &tol)?;
    let violations = mislabelled.validate(&tol);
    let rejected = violations.iter().any(|x| x.field == "homogeneous")
        && verdict_heterogeneous(&mislabelled, &tol).is_err();
    check(
        &mut out,
        "equal-errors-not-heterogeneous",
        rejected,
        "eps1 = eps2 with homogeneous = false is reported as a validation error".into(),
    );

    let pi = single.pi();
    let next = a.left_mul_vec(pi)?;
    let residual = next
        .iter()
        .zip(pi)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    check(
        &mut out,
        "stationary-residual",
        residual <= 1e-12 && (pi[6] - 1.0).abs() < 1e-12,
        format!("pi = e_7 (absorbing state 7), max |piA - pi| = {residual:.1e}"),
    );

    Ok((out, exported))
}

pub fn casestudy() -> Result<Outcome> {
    let (checks, exported) = run_checks()?;
    let mut text = String::from("SSH attack model: 7 states, 3 letters per monitor\n");
    for c in &checks {
        let _ = writeln!(
            text,
            "[{}] {}: {}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let all = checks.iter().all(|c| c.passed);
    let _ = writeln!(
        text,
        "{} of {} checks passed",
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    );
    Ok(Outcome {
        code: if all { EXIT_AFFIRMATIVE } else { EXIT_NEGATIVE },
        text,
        result: json!({ "all_passed": all, "checks": checks, "counterexample": exported }),
    })
}
