//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::*;
use hmm_ident::hmm::{
    build_w, equivalent, sequence_prob, sequence_prob_multi, HmmParams, QuasiHmm,
};
use hmm_ident::identifiability::{
    construct_rank1_recombination, construct_state_inflation, n_star, vandermonde_witness,
    verdict_heterogeneous, verdict_homogeneous, verdict_single, NStarVariant,
};
use hmm_ident::krank::{
    krank, krank_bound_row_tensor, krank_lower_coherence, verify_krank_properties,
};
use hmm_ident::tensor::{find_perm_scale, row_tensor, LetterCodec};
use hmm_ident::{ssh, Matrix, Tolerance};
use hmm_ident_cli::casestudy::run_checks;
use hmm_ident_cli::model::{load, Model};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|x| x.to_string())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let tol = Tolerance::default();
    ensure(krank(&ssh::transition_matrix(), &tol).value == 7, || {
        "krank(A) != 7".into()
    })?;
    for eps in [0.05, 0.1, 0.15, 0.2] {
        let k = krank(&e(ssh::observation_matrix(eps))?, &tol).value;
        ensure(k == 1, || format!("krank(B({eps})) = {k}"))?;
    }
    let v = e(verdict_single(&e(ssh::single(0.1))?, &tol))?;
    ensure(!v.identifiable, || {
        "single observer judged identifiable".into()
    })?;
    for m in [2, 3] {
        let v = e(verdict_homogeneous(&e(ssh::multi(&vec![0.1; m]))?, &tol))?;
        ensure(!v.identifiable, || {
            format!("homogeneous m = {m} judged identifiable")
        })?;
    }
    let v = e(verdict_heterogeneous(&e(ssh::multi(&[0.05, 0.1]))?, &tol))?;
    ensure(v.identifiable, || {
        "heterogeneous judged not identifiable".into()
    })?;
    ensure(
        v.sufficient_sum_check.expression == "7 + 1 + 1 = 9 >= q + m = 9",
        || format!("sum check {}", v.sufficient_sum_check.expression),
    )?;
    ensure(v.condition_value.value == 7, || {
        format!("exact krank {}", v.condition_value.value)
    })?;
    let (checks, _) = e(run_checks())?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    ensure(failed.is_empty(), || {
        format!("case-study checks failed: {failed:?}")
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok("krank(A) = 7, krank(B) = 1 on the grid, verdicts -,-,-,+ with 9 >= 9 and exact krank 7, under 60 s".into())
}

fn criterion_2() -> Outcome {
    let mut r = rng(2024);
    let mut longest = 0;
    for i in 0..20 {
        let q = r.gen_range(2..=4);
        let kappa = r.gen_range(2..=3);
        let h = random_hmm(&mut r, q, kappa);
        let perm = permutation(&mut r, q);
        let a = e(QuasiHmm::from_hmm(&h))?;
        let b = e(QuasiHmm::from_hmm(&e(h.permuted(&perm))?))?;
        let rep = e(equivalent(&a, &b, 4, 1e-10))?;
        ensure(rep.equivalent, || {
            format!("model {i}: permuted copy not equivalent")
        })?;
        let c = e(QuasiHmm::from_hmm(&perturbed(&h)))?;
        let rep = e(equivalent(&a, &c, 4, 1e-10))?;
        let Some(w) = rep.counterexample else {
            return Err(format!("model {i}: perturbation not detected"));
        };
        ensure(w.sequence.len() <= 2, || {
            format!("model {i}: witness length {}", w.sequence.len())
        })?;
        longest = longest.max(w.sequence.len());
    }
    Ok(format!("20 permuted copies equivalent to length 4 at 1e-10; perturbations caught, longest witness {longest}"))
}

/// Random model with one row of `A` or of `B` copied onto another.
fn one_sided(r: &mut rand_chacha::ChaCha8Rng, on_b: bool) -> HmmParams {
    let q = r.gen_range(3..=4);
    let kappa = r.gen_range(2..=3);
    let pi = distribution(r, q);
    let mut a = stochastic(r, q, q).to_rows();
    let mut b = stochastic(r, q, kappa).to_rows();
    let i = r.gen_range(0..q);
    let j = (i + r.gen_range(1..q)) % q;
    if on_b {
        b[j] = b[i].clone();
    } else {
        a[j] = a[i].clone();
    }
    HmmParams::new(
        pi,
        Matrix::from_rows(&a).unwrap(),
        Matrix::from_rows(&b).unwrap(),
    )
    .unwrap()
}

fn criterion_3() -> Outcome {
    let tol = Tolerance::default();
    let mut r = rng(3);
    let mut models: Vec<HmmParams> = vec![e(ssh::single(0.1))?];
    for k in 0..20 {
        models.push(one_sided(&mut r, k % 2 == 0));
    }
    for (i, h) in models.iter().enumerate() {
        let Some(rec) = e(construct_rank1_recombination(h, &tol))? else {
            return Err(format!("model {i}: no recombination"));
        };
        let rep = e(equivalent(&e(QuasiHmm::from_hmm(h))?, &rec.quasi, 3, 1e-9))?;
        ensure(rep.equivalent, || {
            format!("model {i}: recombination not equivalent")
        })?;
        let w = e(build_w(h))?;
        let related = e(find_perm_scale(&w, &rec.alt_w, &tol))?;
        ensure(related.is_none(), || {
            format!("model {i}: recombined W is a relabelling")
        })?;
    }
    Ok(format!(
        "{} models with a pair proportional on one side: equivalent to length 3 at 1e-9, W not perm-scale related",
        models.len()
    ))
}

fn criterion_4() -> Outcome {
    let tol = Tolerance::default();
    let mut r = rng(4);
    for i in 0..10 {
        let q = r.gen_range(2..=4);
        let kappa = r.gen_range(2..=3);
        let h = random_hmm(&mut r, q, kappa);
        let inflated = e(construct_state_inflation(&h, q + 1, None, &tol))?;
        ensure(inflated.q() == q + 1, || {
            format!("model {i}: {} states", inflated.q())
        })?;
        let rep = e(equivalent(&e(QuasiHmm::from_hmm(&h))?, &inflated, 4, 1e-10))?;
        ensure(rep.equivalent, || {
            format!("model {i}: inflation not equivalent")
        })?;
    }
    Ok("10 inflations to q+1 equivalent to length 4 at 1e-10".into())
}

fn criterion_5() -> Outcome {
    let tol = Tolerance::default();
    let mut r = rng(5);
    let (mut bound, mut sym, mut coh) = (0, 0, 0);
    for _ in 0..200 {
        let q = r.gen_range(2..=6);
        let n = r.gen_range(2..=4);
        let a = stochastic_with_copies(&mut r, q, q, 0.3);
        let b = stochastic_with_copies(&mut r, q, n, 0.3);
        let ka = krank(&a, &tol).value;
        let kb = krank(&b, &tol).value;
        let kab = krank(&e(row_tensor(&b, &a))?, &tol).value;
        if kab < krank_bound_row_tensor(ka, kb, q) {
            bound += 1;
        }
        let report = e(verify_krank_properties(&a, &b, &tol))?;
        if report
            .checks
            .iter()
            .any(|c| c.name.starts_with("(ii)") && !c.passed)
        {
            sym += 1;
        }
        for m in [&a, &b] {
            if krank_lower_coherence(m).lower > krank(m, &tol).value {
                coh += 1;
            }
        }
    }
    ensure(bound == 0 && sym == 0 && coh == 0, || {
        format!("violations: bound {bound}, symmetry {sym}, coherence {coh}")
    })?;
    Ok("200 pairs: 0 bound, 0 symmetry, 0 coherence violations".into())
}

/// Independent binomial; each partial product is itself a binomial, so the division is exact.
fn choose(n: usize, k: usize) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn criterion_6() -> Outcome {
    for q in 2..=10 {
        let s = e(n_star(NStarVariant::SingleStrong, q, &[2], None))?.n_star;
        let w = e(n_star(NStarVariant::SingleWeak, q, &[2], None))?.n_star;
        ensure(s == q - 1 && w == q, || {
            format!("q = {q}: strong {s}, weak {w}")
        })?;
    }
    let mut checked = 0;
    for q in 2..=10 {
        for kappa in 2..=4 {
            let cases = [
                (NStarVariant::SingleStrong, vec![kappa], None),
                (NStarVariant::SingleWeak, vec![kappa], None),
                (NStarVariant::Homogeneous, vec![kappa], Some(2)),
                (NStarVariant::Homogeneous, vec![kappa], Some(3)),
                (NStarVariant::Heterogeneous, vec![2, kappa], Some(2)),
                (NStarVariant::Heterogeneous, vec![2, 2, kappa], Some(3)),
            ];
            for (variant, kappas, m) in cases {
                let b = e(n_star(variant, q, &kappas, m))?;
                let f = |n: usize| -> u128 {
                    match variant {
                        NStarVariant::SingleStrong => choose(n + kappa - 1, kappa - 1),
                        NStarVariant::SingleWeak => choose(n + kappa - 2, kappa - 1),
                        NStarVariant::Homogeneous => choose(n * m.unwrap() + kappa - 1, kappa - 1),
                        NStarVariant::Heterogeneous => {
                            let kp: usize = kappas.iter().product();
                            choose(n * kappas.len() + kp - 1, kp - 1)
                        }
                    }
                };
                let n = b.n_star;
                let below = if n == 1 { 0 } else { f(n - 1) };
                ensure(below < q as u128 && q as u128 <= f(n), || {
                    format!("{variant:?} q = {q} kappas = {kappas:?}: N* = {n} not on the boundary")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!(
        "strong = q-1, weak = q for q in 2..10; boundary holds in {checked} cases"
    ))
}

fn criterion_7() -> Outcome {
    let a = e(vandermonde_witness(4, &[2], 3, None, Some(&[2, 3])))?;
    let b = e(vandermonde_witness(4, &[2], 2, None, Some(&[2, 3])))?;
    // degree-N monomials in two generators: N + 1
    ensure(a.rank == 4 && a.distinct_monomials == 4, || {
        format!("N = 3: rank {}", a.rank)
    })?;
    ensure(b.rank == 3 && b.distinct_monomials == 3, || {
        format!("N = 2: rank {}", b.rank)
    })?;
    ensure(
        a.predicted_full_rank == a.full_rank && b.predicted_full_rank == b.full_rank,
        || "prediction mismatch".into(),
    )?;
    Ok("q = 4, primes 2,3: rank 4 at N = 3, rank 3 at N = 2, as monomial counts predict".into())
}

fn check_single(h: &HmmParams, max_len: usize, name: &str) -> Result<(), String> {
    for n in 1..=max_len {
        let total: f64 = sequences(h.kappa(), n)
            .iter()
            .map(|ys| sequence_prob(h, ys, None).unwrap())
            .sum();
        ensure((total - 1.0).abs() <= 1e-12, || {
            format!("{name} length {n}: sum {total}")
        })?;
    }
    Ok(())
}

fn check_multi(
    h: &hmm_ident::hmm::MultiHmmParams,
    max_len: usize,
    name: &str,
) -> Result<(), String> {
    let codec = e(LetterCodec::new(h.kappas().to_vec()))?;
    for n in 1..=max_len {
        let total: f64 = sequences(codec.total_letters(), n)
            .iter()
            .map(|ys| {
                let tuples: Vec<Vec<usize>> =
                    ys.iter().map(|&y| codec.decode(y).unwrap()).collect();
                sequence_prob_multi(h, &tuples).unwrap()
            })
            .sum();
        ensure((total - 1.0).abs() <= 1e-12, || {
            format!("{name} length {n}: sum {total}")
        })?;
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let mut count = 0;
    let mut files: Vec<_> = e(std::fs::read_dir(models_dir()))?
        .map(|x| x.unwrap().path())
        .collect();
    files.sort();
    for p in &files {
        let loaded = e(load(p, None))?;
        let name = p.display().to_string();
        match &loaded.model {
            Model::Hmm(h) => check_single(h, 5, &name)?,
            Model::Multi(h) => check_multi(h, 3, &name)?,
            _ => continue,
        }
        count += 1;
    }
    let mut r = rng(8);
    for i in 0..10 {
        let q = r.gen_range(2..=4);
        let kappa = r.gen_range(2..=3);
        let h = random_hmm(&mut r, q, kappa);
        check_single(&h, 5, &format!("random single {i}"))?;
        let kappas: Vec<usize> = if i % 2 == 0 {
            vec![3, 3]
        } else {
            vec![2, 2, 2]
        };
        let m = random_multi(&mut r, q, &kappas, i % 4 == 0);
        check_multi(&m, 3, &format!("random multi {i}"))?;
        count += 2;
    }
    check_single(&e(ssh::single(1.0 / 3.0))?, 5, "ssh eps = 1/3")?;
    count += 1;
    Ok(format!(
        "{count} models sum to 1 within 1e-12 (single to length 5, multi to length 3)"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("SSH case study", criterion_1),
        ("equivalence oracle", criterion_2),
        ("counterexample soundness", criterion_3),
        ("state inflation", criterion_4),
        ("krank bound properties", criterion_5),
        ("N* tables", criterion_6),
        ("Vandermonde witness", criterion_7),
        ("normalization", criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
