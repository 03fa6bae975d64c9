//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p serieslab --test acceptance`. FAIL lines never
//! abort the workspace run; set `ACCEPTANCE_STRICT=1` to exit with status 1
//! when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use dashu_int::IBig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serieslab::error::Error;
use serieslab::injection::Injection;
use serieslab::io::{write_json, RunConfig};
use serieslab::rational::{int, rat, Rational};
use serieslab::rs_seq::{almost_splits, oscillation_from_witness, totally_splits, SplitOutcome};
use serieslab::series::{certify_stream, partial_sums, Criteria, DivergenceVerdict, Series};
use serieslab::sets::IndexSet;
use serieslab::stochastic::{
    divergence_frequency, flip, inf_experiment, k_block_of, kspace_series, variance_experiment, variance_experiment_f64,
    KPoint,
};
use serieslab::transforms::{apply_injection, claim_one_value, p_from_set, shuffle, zero_pad};
use serieslab::witnesses::{
    blocks_base_pow, check_rank_gaps, find_milestones, oscillation_setup, GapKind, MilestoneMode,
    MilestoneRule,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

const SEED: u64 = 20_240_601;

/// The K-point samples shared by the first two criteria.
fn kpoints() -> Vec<KPoint> {
    (0..1000).map(|i| KPoint::sample(SEED + i, 60)).collect()
}

/// Terms of a K-point series scaled by `L = lcm(k² : k ≤ depth)`, so exact
/// rational prefix sums become integer sums.
fn scaled_terms(x: &KPoint, l: &IBig) -> Vec<IBig> {
    let a = kspace_series(x);
    (1..=x.horizon())
        .map(|n| {
            let t = a.term(n).unwrap();
            let (num, den) = t.into_parts();
            num * l / IBig::from(den)
        })
        .collect()
}

fn lcm_of_squares(depth: u64) -> IBig {
    let mut l = IBig::from(1u8);
    for k in 1..=depth {
        let k2 = IBig::from(k * k);
        let g = dashu_base::Gcd::gcd(&l, &k2);
        l = &l * &k2 / IBig::from(g);
    }
    l
}

fn criterion_1(samples: &[KPoint]) -> Outcome {
    let start = Instant::now();
    let l = lcm_of_squares(60);
    let mut violations = 0u64;
    let mut checked = 0u64;
    for x in samples {
        let terms = scaled_terms(x, &l);
        let mut s = IBig::from(0u8);
        for (i, t) in terms.iter().enumerate() {
            s += t;
            let k = k_block_of(i as u64 + 1).unwrap();
            // |S_m| ≤ 1/k  ⇔  |S_m · L| ≤ L / k
            let bound = &l / IBig::from(k);
            if dashu_base::Abs::abs(s.clone()) > bound {
                violations += 1;
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && secs < 60.0,
        format!("{checked} prefix sums over 1000 K-points (depth 60), {violations} violations, {secs:.1}s"),
    )
}

fn criterion_2(samples: &[KPoint]) -> Outcome {
    let l = lcm_of_squares(60);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let h = samples[0].horizon();
    let masks: Vec<Vec<bool>> = (0..20).map(|_| common::random_set(&mut rng, 400).bitmap_upto(h)).collect();
    let mut violations = 0u64;
    for x in samples {
        let (tx, tf) = (scaled_terms(x, &l), scaled_terms(&flip(x), &l));
        for mask in &masks {
            let (mut sx, mut sf) = (IBig::from(0u8), IBig::from(0u8));
            for n in 1..=h as usize {
                if mask[n] {
                    sx += &tx[n - 1];
                    sf += &tf[n - 1];
                }
                if sf != -sx.clone() {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("1000 K-points × 20 sets × {h} indices, {violations} violations"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let mut mismatches = 0u64;
    for _ in 0..200 {
        let a = common::random_set(&mut rng, 200);
        let b = common::random_set(&mut rng, 200);
        let p = p_from_set(&a, &b, 200).unwrap();
        // brute force: p_{A,B} is the inverse of the shuffle s_{A, ℕ∖B}
        let s = shuffle(&a, &b.complement(), 4000).unwrap();
        let mut inv = vec![0u64; 4001];
        for v in 1..=4000u64 {
            let w = s.eval(v).unwrap();
            if w <= 4000 {
                inv[w as usize] = v;
            }
        }
        for n in 1..=200u64 {
            let brute = inv[n as usize];
            if p.apply(n).unwrap() != brute {
                mismatches += 1;
            }
            if let Some(v) = claim_one_value(&a, &b, n).unwrap() {
                if v != brute {
                    mismatches += 1;
                }
            }
        }
    }
    let a_series = Series::alternating_harmonic();
    let (mut clean, mut single, mut gap_failures) = (0, 0, 0);
    for i in 0..50 {
        let mask: Vec<bool> = (0..=200u64)
            .map(|n| if n % 2 == 1 { !rng.gen_bool(0.1) } else { n > 0 && rng.gen_bool(0.05) })
            .collect();
        let a = common::masked(format!("A{i}"), mask, |n| n % 2 == 1);
        let mut b0: Vec<u64> = vec![rng.gen_range(1..=6)];
        while b0.len() < 40 {
            let last = *b0.last().unwrap();
            b0.push(last + rng.gen_range(1..=(last / 2 + 3)) + rng.gen_range(0..=last));
        }
        let b0v = std::sync::Arc::new(b0);
        let b0_set = IndexSet::enumerated(format!("B0_{i}"), move |k| {
            let k = k as usize;
            Ok(if k <= b0v.len() { b0v[k - 1] } else { b0v[b0v.len() - 1] * (1 << (k - b0v.len()).min(20)) })
        });
        let ms = find_milestones(&a_series, &a, MilestoneMode::ToPlusInfinity, 5, 20_000, false).unwrap();
        for c in check_rank_gaps(&a, &b0_set, &ms).unwrap() {
            match c.kind {
                GapKind::Clean => clean += 1,
                GapKind::OneInsertion { .. } => single += 1,
                GapKind::Crowded { .. } => {}
            }
            if !c.holds {
                gap_failures += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && gap_failures == 0 && clean > 0 && single > 0,
        format!(
            "200 pairs × 200 points: {mismatches} mismatches; 50 instances: {clean} clean gaps, {single} single-insertion gaps, {gap_failures} failures"
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let a = Series::alternating_harmonic();
    let horizon = 1_000_000;
    let setup = match oscillation_setup(&a, &IndexSet::odds(), 12, horizon, MilestoneRule::Dominating) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("construction failed: {e}")),
    };
    let crit = Criteria::levels(int(1), int(0), 5).unwrap();
    let report = certify_stream(&a, Some(&setup.c), horizon, crit).unwrap();
    let exact = report.verdict.verify(&a, Some(&setup.c)).unwrap();
    let (ups, downs) = count_crossings(&report.verdict);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        report.verdict.is_oscillation() && exact && secs < 120.0,
        format!(
            "milestones {:?} ({} of 12 below 10^6), |X| = {}, verdict {}, {ups} ups / {downs} downs, certificates exact: {exact}, {secs:.1}s",
            setup.milestones.indices,
            setup.milestones.indices.len(),
            setup.x.len(),
            verdict_name(&report.verdict)
        ),
    )
}

fn count_crossings(v: &DivergenceVerdict) -> (usize, usize) {
    match v {
        DivergenceVerdict::CertifiedExceeds { .. } => (1, 0),
        DivergenceVerdict::CertifiedBelow { .. } => (0, 1),
        _ => (v.upcross_count(), v.downcross_count()),
    }
}

fn verdict_name(v: &DivergenceVerdict) -> &'static str {
    match v {
        DivergenceVerdict::CertifiedExceeds { .. } => "exceeds",
        DivergenceVerdict::CertifiedBelow { .. } => "below",
        DivergenceVerdict::CertifiedOscillation { .. } => "oscillation",
        DivergenceVerdict::Inconclusive { .. } => "inconclusive",
    }
}

fn criterion_5() -> Outcome {
    let a = Series::alternating_harmonic();
    match blocks_base_pow(&a, &int(5), 8, 10_000_000) {
        Err(e @ Error::ScanExhausted { .. }) => outcome(false, format!("block construction: {e}")),
        Err(e) => outcome(false, format!("block construction: {e}")),
        Ok(part) => {
            // reached only if the scan bound were large enough
            let seq = serieslab::witnesses::one_one_sequence(&a, 4, 10_000_000).unwrap();
            let audit = serieslab::rs_seq::audit_rs(&seq, &rat(1, 10), 2).unwrap();
            let d = seq.union_of_b();
            let split = almost_splits(&d, &seq, &rat(1, 8), 6).unwrap();
            let pass = match split.witness() {
                Some(w) => {
                    let out = oscillation_from_witness(&a, &seq, &d, w).unwrap();
                    out.verdict.is_oscillation() && out.checks.iter().all(|c| c.holds())
                }
                None => false,
            };
            outcome(pass && audit.passes(), format!("{} blocks built", part.len()))
        }
    }
}

fn criterion_6() -> Outcome {
    let seeds = 2000;
    let var = variance_experiment(&Series::harmonic(), &IndexSet::naturals(), 10_000, seeds, SEED).unwrap();
    let var_ok = var.within(5.0);
    let mut std_ok = true;
    let mut notes = Vec::new();
    for m in [1_000u64, 10_000] {
        let coeffs: Vec<f64> = (1..=m).map(|n| 1.0 / (n as f64).sqrt()).collect();
        let r = variance_experiment_f64(&coeffs, seeds, SEED + m).unwrap();
        let (emp, exp) = (r.sample_variance.sqrt(), r.expected_variance.sqrt());
        let rel = (emp - exp).abs() / exp;
        std_ok &= rel <= 0.10;
        notes.push(format!("m={m}: std {emp:.3} vs {exp:.3} ({:.1}%)", rel * 100.0));
    }
    let freq = divergence_frequency(&Series::harmonic(), &IndexSet::naturals(), seeds, 10_000, &int(10), SEED).unwrap();
    let cheb_ok = freq.respects_chebyshev();
    outcome(
        var_ok && std_ok && cheb_ok,
        format!(
            "var {:.5} vs {:.5} (±{:.5}); {}; endpoint fraction {} ≤ Chebyshev {:.4}",
            var.sample_variance,
            var.expected_variance,
            var.stderr,
            notes.join(", "),
            freq.endpoint_fraction,
            freq.chebyshev_bound
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let horizon = 100_000u64;
    let mut bad_pad = 0u64;
    let mut bad_tail = 0u64;
    for i in 0..100 {
        let b = common::random_series(SEED + i);
        let set = if rng.gen_bool(0.5) {
            common::random_residue(&mut rng)
        } else {
            IndexSet::arithmetic(rng.gen_range(1..=9), rng.gen_range(2..=9)).unwrap()
        };
        let padded = zero_pad(&b, &set);
        let mut k = 0u64;
        let terms = padded.terms(horizon).unwrap();
        for t in &terms {
            if !t.is_zero() {
                k += 1;
                if *t != b.term(k).unwrap() {
                    bad_pad += 1;
                }
            }
        }
        if k != set.rank(horizon) {
            bad_pad += 1;
        }
        // a set not splitting B: either almost containing B, or almost disjoint from it
        let cut = rng.gen_range(10..=500u64);
        let junk: Vec<bool> = (0..=cut).map(|_| rng.gen_bool(0.5)).collect();
        let contains = rng.gen_bool(0.5);
        let (s2, extra) = (set.clone(), common::random_residue(&mut rng));
        let a = common::masked(format!("A{i}"), junk, move |n| if contains { s2.contains(n) || extra.contains(n) } else { !s2.contains(n) });
        let sub = partial_sums(&padded, 20_000, Some(&a)).unwrap();
        for m in cut + 1..=20_000 {
            let want = if contains { terms[m as usize - 1].clone() } else { Rational::ZERO };
            if sub.increment(m) != want {
                bad_tail += 1;
            }
        }
    }
    outcome(
        bad_pad == 0 && bad_tail == 0,
        format!("100 pairs to 10^5: {bad_pad} zero-pad mismatches; non-splitting tails to 2·10^4: {bad_tail} mismatches"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let h = 10_000u64;
    let mut bad = 0u64;
    for i in 0..100 {
        let a = common::random_set(&mut rng, 300);
        let b = common::random_set(&mut rng, 300);
        let ab = shuffle(&a, &b, h).unwrap();
        let ba = shuffle(&b, &a, h).unwrap();
        for n in 1..=h {
            if ab.eval(ba.eval(n).unwrap()).unwrap() != n {
                bad += 1;
            }
        }
        let s = common::random_series(SEED + 1000 + i);
        let padded = zero_pad(&s, &IndexSet::naturals());
        let moved = apply_injection(&s, &Injection::identity());
        for n in 1..=h {
            let t = s.term(n).unwrap();
            if padded.term(n).unwrap() != t || moved.term(n).unwrap() != t {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("100 pairs on [1, 10^4]: {bad} mismatches"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let tols = [int(0), rat(1, 100), rat(1, 8)];
    let (mut not_contained, mut bad_witness, mut total_blocks) = (0u64, 0u64, 0usize);
    for _ in 0..500 {
        let blocks = rng.gen_range(1..=8);
        let seq = common::random_exact_rs(&mut rng, blocks);
        let d = common::random_d(&mut rng, &seq);
        let total = totally_splits(&d, &seq, 1).unwrap();
        total_blocks += total.qualifying().len();
        if let SplitOutcome::Witness(w) = &total {
            bad_witness += u64::from(!w.verify(&d, &seq));
        }
        for tol in &tols {
            let almost = almost_splits(&d, &seq, tol, 1).unwrap();
            if !total.qualifying().iter().all(|k| almost.qualifying().contains(k)) {
                not_contained += 1;
            }
            if let SplitOutcome::Witness(w) = &almost {
                bad_witness += u64::from(!w.verify(&d, &seq));
            }
        }
    }
    outcome(
        not_contained == 0 && bad_witness == 0 && total_blocks > 0,
        format!("500 instances, {total_blocks} totally split blocks, {not_contained} containment failures, {bad_witness} witness re-check failures"),
    )
}

fn randomized_reports(dir: &std::path::Path) -> Vec<Vec<u8>> {
    let cfg = RunConfig { seed: SEED, ..RunConfig::default() };
    let mut files = Vec::new();
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>)| {
        let mut buf = Vec::new();
        f(&mut buf);
        let path = dir.join(name);
        std::fs::write(&path, &buf).unwrap();
        std::fs::read(&path).unwrap()
    };
    files.push(write("inf.json", &|b| {
        let r = inf_experiment(&IndexSet::odds(), 50, 20, &rat(1, 4), SEED).unwrap();
        write_json(b, "inf_experiment", &cfg, &r).unwrap();
    }));
    files.push(write("freq.json", &|b| {
        let r = divergence_frequency(&Series::harmonic(), &IndexSet::naturals(), 200, 2_000, &int(2), SEED).unwrap();
        write_json(b, "divergence_frequency", &cfg, &r).unwrap();
    }));
    files.push(write("var.json", &|b| {
        let r = variance_experiment(&Series::harmonic(), &IndexSet::evens(), 1_000, 200, SEED).unwrap();
        write_json(b, "variance", &cfg, &r).unwrap();
    }));
    files.push(write("kpoints.json", &|b| {
        let xs: Vec<KPoint> = (0..20).map(|i| KPoint::sample(SEED + i, 15)).collect();
        write_json(b, "kpoints", &cfg, &xs).unwrap();
    }));
    files.push(write("instances.json", &|b| {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let seqs: Vec<_> = (0..10).map(|_| common::random_exact_rs(&mut rng, 3)).collect();
        write_json(b, "rs_instances", &cfg, &seqs).unwrap();
    }));
    files
}

fn criterion_10() -> Outcome {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (first, second) = (randomized_reports(d1.path()), randomized_reports(d2.path()));
    let same = first == second;
    outcome(same, format!("{} report files compared byte for byte", first.len()))
}

fn main() {
    let samples = kpoints();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 K-space block bound", Box::new(|| criterion_1(&samples))),
        ("2 K-space flip symmetry", Box::new(|| criterion_2(&samples))),
        ("3 permutation closed form and block images", Box::new(criterion_3)),
        ("4 oscillation-set pipeline", Box::new(criterion_4)),
        ("5 geometric-block pipeline on the alternating harmonic", Box::new(criterion_5)),
        ("6 random-sign statistics", Box::new(criterion_6)),
        ("7 zero-pad and non-splitting tails", Box::new(criterion_7)),
        ("8 shuffle algebra", Box::new(criterion_8)),
        ("9 total splitting within almost splitting", Box::new(criterion_9)),
        ("10 determinism", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    let total_start = Instant::now();
    for (name, run) in &criteria {
        let start = Instant::now();
        let o = run();
        let took: Duration = start.elapsed();
        println!("{} criterion {name}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, took.as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1}s)",
        criteria.len() - failed,
        total_start.elapsed().as_secs_f64()
    );
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
