//! Acceptance suite: one PASS/FAIL line per criterion, with measured values,
//! tolerances and runtime against its budget. Exits non-zero if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use symlab_core::breaking::{
    break_search, breaking_starts, check_hypotheses, find_crossing, morse_pair, multi_start_search,
    BreakingConfig, CheckStatus, SearchOptions,
};
use symlab_core::group_action::symmetry_defect;
use symlab_core::linear_operator::{eigenvalue, resolvent_apply, SpectralGap};
use symlab_core::lyapunov_schmidt::{preservation_check, PreservationOptions};
use symlab_core::morse::{find_delta, morse_index, QuadraticForm, DEFAULT_DEGENERACY_TOL};
use symlab_core::runner::{execute, parse_config, record_json, registry, Command};
use symlab_core::solver::{canonical_residual, certify_gap, contraction_solve, newton_solve};
use symlab_core::trig_spectral::{
    from_samples, h1_norm, l2_norm, project_vs, project_vs_perp, Nonlinearity,
};
use symlab_core::TrigPoly;

/// Collects failures while a criterion runs; the last note is the headline.
#[derive(Default)]
struct Tally {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(f64::MIN_POSITIVE)
}

// 1. Parseval identity, projection orthogonality, round-trip interpolation.
fn spectral_exactness(t: &mut Tally) {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_norm, mut worst_orth, mut worst_trip) = (0.0_f64, 0.0_f64, 0.0_f64);
    for case in 0..200 {
        let order = rng.gen_range(1..=64);
        let u = random_poly(&mut rng, order, 1.0);
        let s = rng.gen_range(2..=5);

        let (h1q, l2q) = (h1_norm_quad(&u), l2_norm_quad(&u));
        let e = rel((h1_norm(&u).powi(2) - h1q * h1q).abs(), h1q * h1q)
            .max(rel((l2_norm(&u).powi(2) - l2q * l2q).abs(), l2q * l2q));
        worst_norm = worst_norm.max(e);
        t.check(e <= TOL, || {
            format!("case {case}: Parseval relative error {e:e}")
        });

        let (p, q) = (project_vs(&u, s), project_vs_perp(&u, s));
        let e = (h1_inner_quad(&p, &q).abs() / (h1q * h1q))
            .max(rel((&(&p + &q) - &u).max_abs_coeff(), u.max_abs_coeff()));
        worst_orth = worst_orth.max(e);
        t.check(e <= TOL, || {
            format!("case {case}: projection orthogonality {e:e}")
        });

        let n = 2 * order + 2 + 2 * rng.gen_range(0..=16);
        let samples = u.to_samples(n).unwrap();
        let scale: f64 = u.a0().abs()
            + u.cos_coeffs()
                .iter()
                .chain(u.sin_coeffs())
                .map(|c| c.abs())
                .sum::<f64>();
        let pointwise = nodes(n)
            .iter()
            .zip(samples.samples())
            .map(|(&tk, &x)| (eval(&u, tk) - x).abs())
            .fold(0.0, f64::max);
        let back = from_samples(&samples, order).unwrap();
        let e = rel(pointwise, scale).max(rel(back.max_abs_diff(&u), u.max_abs_coeff()));
        worst_trip = worst_trip.max(e);
        t.check(e <= TOL, || format!("case {case}: round trip {e:e}"));
    }
    t.note(format!(
        "200 cases, J <= 64: Parseval {worst_norm:.1e}, orthogonality {worst_orth:.1e}, round trip {worst_trip:.1e} (tol {TOL:.0e} rel)"
    ));
}

// 2. Resolvent against a dense differentiation-matrix solve.
fn resolvent_oracle(t: &mut Tally) {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0_f64;
    for case in 0..50 {
        let order = rng.gen_range(8..=32);
        let n = 2 * order + 2;
        let c = loop {
            let c: f64 = rng.gen_range(-3.0..30.0);
            if (0..=6).all(|j| (c - eigenvalue(j)).abs() > 0.1) {
                break c;
            }
        };
        let rhs = random_poly(&mut rng, order, 1.0);
        let mut a = -second_derivative_matrix(n);
        for i in 0..n {
            a[(i, i)] -= c;
        }
        let b = DVector::from_column_slice(rhs.to_samples(n).unwrap().samples());
        let x = a.lu().solve(&b).expect("shifted matrix is invertible");
        let ours = resolvent_apply(c, &rhs).unwrap().to_samples(n).unwrap();
        let err = (std::f64::consts::TAU / n as f64
            * ours
                .samples()
                .iter()
                .zip(x.iter())
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>())
        .sqrt();
        worst = worst.max(err);
        t.check(err <= TOL, || {
            format!("case {case}: c = {c}, L2 error {err:e}")
        });
    }
    t.note(format!(
        "50 right-hand sides: max L2 error {worst:.2e} (tol {TOL:.0e})"
    ));
}

// 3. Certified contraction for g = 2.5x + 0.5 sin x.
fn contraction_certificate(t: &mut Tally) {
    let nl = affine_sine();
    let cert = certify_gap(2.0, 3.0).unwrap();
    t.check((cert.kappa - 1.0 / 3.0).abs() <= 1e-15, || {
        format!("kappa = {}", cert.kappa)
    });

    let order = 32;
    let mut f = TrigPoly::zeros(order);
    f.set_mode(0, 0.3, 0.0);
    f.set_mode(2, 0.4, 0.0);
    f.set_mode(3, 0.0, -0.2);
    f.set_mode(7, 0.1, 0.0);
    let zero = TrigPoly::zeros(order);
    let c = contraction_solve(&nl, &f, &cert, &zero, 1e-12, 500).unwrap();
    let n = newton_solve(&nl, &f, &zero, 1e-12, 50).unwrap();
    let agree = h1_norm(&(&c.solution - &n.solution));
    t.check(c.observed_rate <= 0.39, || {
        format!("observed rate {}", c.observed_rate)
    });
    t.check(agree <= 1e-9, || format!("contraction vs Newton {agree:e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst_l2, mut worst_h1) = (0.0_f64, 0.0_f64);
    for pair in 0..20 {
        let f1 = random_poly(&mut rng, order, 1.0);
        let f2 = random_poly(&mut rng, order, 1.0);
        let u1 = contraction_solve(&nl, &f1, &cert, &zero, 1e-12, 500)
            .unwrap()
            .solution;
        let u2 = contraction_solve(&nl, &f2, &cert, &zero, 1e-12, 500)
            .unwrap()
            .solution;
        let du = &u1 - &u2;
        let df = &f1 - &f2;
        let r2 = l2_norm(&du) / (cert.lipschitz_l2() * l2_norm(&df));
        let r1 = h1_norm(&du) / (cert.lipschitz_h1() * h1_norm(&df));
        worst_l2 = worst_l2.max(r2);
        worst_h1 = worst_h1.max(r1);
        t.check(r2 <= 1.0 && r1 <= 1.0, || {
            format!("pair {pair}: ratios to bound {r2}, {r1}")
        });
    }
    t.note(format!(
        "kappa {:.6}, observed rate {:.4} (<= 0.39), contraction vs Newton {agree:.1e} (<= 1e-9); \
         Lipschitz: max |du|/(K|df|) = {worst_l2:.3} (L2, K = {:.3}), {worst_h1:.3} (H1, K = {:.3})",
        cert.kappa,
        c.observed_rate,
        cert.lipschitz_l2(),
        cert.lipschitz_h1()
    ));
}

// 4. Symmetric forcing gives symmetric, probed-unique solutions.
fn preservation(t: &mut Tally) {
    let nl = affine_sine();
    let cert = certify_gap(2.0, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut worst_defect, mut worst_pair) = (0.0_f64, 0.0_f64);
    for case in 0..50 {
        let s = if case % 2 == 0 { 2 } else { 3 };
        let f = random_symmetric(&mut rng, 32, s, 2.0);
        let opts = PreservationOptions {
            n_starts: 10,
            seed: case as u64,
            tol: 1e-8,
            ..Default::default()
        };
        let rep = preservation_check(&nl, &f, s, &cert, &opts).unwrap();
        let defect = rep
            .starts
            .iter()
            .map(|o| o.defect)
            .fold(rep.defect.defect, f64::max);
        worst_defect = worst_defect.max(defect);
        worst_pair = worst_pair.max(rep.max_pairwise_distance);
        t.check(defect <= 1e-7, || format!("case {case}: defect {defect:e}"));
        t.check(rep.starts.iter().all(|o| o.converged), || {
            format!("case {case}: a start failed")
        });
        t.check(rep.max_pairwise_distance <= 1e-6, || {
            format!("case {case}: pairwise {:e}", rep.max_pairwise_distance)
        });
        t.check(rep.periodicity.respects(s), || {
            format!("case {case}: periodicity {}", rep.periodicity)
        });
    }
    t.note(format!(
        "50 forcings (s = 2, 3), 10 starts each: max defect {worst_defect:.1e} (<= 1e-7), \
         max pairwise {worst_pair:.1e} (<= 1e-6), periodicity respects s in every case"
    ));
}

fn bump_log() -> Nonlinearity {
    registry::lookup("bump_log", &BTreeMap::new())
        .unwrap()
        .nonlinearity
}

// 5. Morse indices: constant potentials and the (2, 3) window pair.
fn morse_machinery(t: &mut Tally) {
    const MARGIN: f64 = 1e-8;
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for s in [2, 3, 5] {
        for k in 1..200 {
            let c = 0.1 * k as f64;
            if (1..=4).any(|j| (c - eigenvalue(j)).abs() < 0.05) {
                continue;
            }
            let rep = morse_index(
                &QuadraticForm::constant(c, s, 16).unwrap(),
                DEFAULT_DEGENERACY_TOL,
            );
            let expect = analytic_index(c, s);
            min_margin = min_margin.min(rep.relative_margin);
            checked += 1;
            t.check(rep.index == expect, || {
                format!("c = {c}, s = {s}: index {} vs {expect}", rep.index)
            });
            t.check(rep.relative_margin > MARGIN, || {
                format!("c = {c}, s = {s}: margin {:e}", rep.relative_margin)
            });
        }
    }

    let nl = bump_log();
    let witness = find_crossing(&nl, 2, -10.0, 10.0, 4001).unwrap();
    let w0 = find_delta(&nl, witness.t0, SpectralGap::new(1), 1e-3).unwrap();
    let w1 = find_delta(&nl, witness.t1, SpectralGap::new(2), 1e-3).unwrap();
    let mut pairs = Vec::new();
    for order in [16, 32, 64] {
        let m = morse_pair(&nl, &witness, &w0, &w1, 3, order).unwrap();
        for (name, r) in [
            ("Q~0", &m.tilde_q0),
            ("Q~1", &m.tilde_q1),
            ("Q0", &m.q0),
            ("Q1", &m.q1),
        ] {
            min_margin = min_margin.min(r.relative_margin);
            t.check(r.relative_margin > MARGIN && !r.degenerate, || {
                format!("J = {order}: {name} margin {:e}", r.relative_margin)
            });
        }
        t.check(m.m0() == 2 && m.m1() == 4, || {
            format!("J = {order}: m0 = {}, m1 = {}", m.m0(), m.m1())
        });
        pairs.push(format!("J={order}: ({}, {})", m.m0(), m.m1()));
    }
    t.note(format!(
        "{checked} constant potentials exact; (m0, m1) {}; min relative margin {min_margin:.1e} (> {MARGIN:.0e})",
        pairs.join(", ")
    ));
}

// 6. Breaking harness integrity.
fn breaking_harness(t: &mut Tally) {
    let nl = bump_log();
    let cfg = BreakingConfig::default();
    let rec = break_search(&nl, &cfg).unwrap();
    t.check(rec.fhat_perp_mass <= 1e-12, || {
        format!("fhat perp mass {:e}", rec.fhat_perp_mass)
    });
    let planted = newton_solve(&nl, &rec.fhat, &rec.u_star, 1e-10, 20).unwrap();
    let residual = h1_norm(&canonical_residual(&planted.solution, &nl, &rec.fhat));
    let defect = symmetry_defect(&planted.solution, cfg.s).defect;
    t.check(residual <= 1e-10, || {
        format!("planted residual {residual:e}")
    });
    t.check(defect <= 1e-12, || format!("planted defect {defect:e}"));

    // negative control: certified nonlinearity, symmetric forcing
    let certified = affine_sine();
    let cert = certify_gap(2.0, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let f = random_symmetric(&mut rng, cfg.order, cfg.s, 2.0);
    let u_ref = contraction_solve(
        &certified,
        &f,
        &cert,
        &TrigPoly::zeros(cfg.order),
        1e-12,
        500,
    )
    .unwrap()
    .solution;
    let opts = SearchOptions {
        s: cfg.s,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        defect_threshold: cfg.defect_threshold,
        dedup_tol: cfg.dedup_tol,
    };
    let control = multi_start_search(&certified, &f, &breaking_starts(&u_ref, &cfg), &opts);
    t.check(!control.broke_symmetry, || {
        "negative control broke symmetry".into()
    });
    t.check(control.classes.len() == 1, || {
        format!("negative control: {} classes", control.classes.len())
    });

    // planted classifier: one asymmetric and one symmetric exact solution
    let mut labels = Vec::new();
    for (u, expect) in [
        (TrigPoly::cos_mode(2, 0.8, cfg.order), true),
        (TrigPoly::cos_mode(3, 0.8, cfg.order), false),
    ] {
        let f = canonical_residual(&u, &nl, &TrigPoly::zeros(cfg.order));
        let out = multi_start_search(&nl, &f, &[("planted".into(), u)], &opts);
        let got = out.classes.first().map(|c| c.asymmetric);
        t.check(got == Some(expect), || {
            format!("planted asymmetric = {expect}, classified {got:?}")
        });
        labels.push(got == Some(expect));
    }

    let config = parse_config(
        "seed = 11\n[problem]\nJ = 32\nN = 128\n[nonlinearity]\nname = \"bump_log\"\n",
    )
    .unwrap();
    let a = execute(Command::BreakSearch, &config).unwrap();
    let b = execute(Command::BreakSearch, &config).unwrap();
    let identical = record_json(&a.manifest, &a.record) == record_json(&b.manifest, &b.record)
        && a.grids
            .iter()
            .zip(&b.grids)
            .all(|(x, y)| x.1.to_csv_string() == y.1.to_csv_string());
    t.check(identical, || {
        "break-search output differs between identical runs".into()
    });

    t.note(format!(
        "fhat perp mass {:.1e}, planted residual {residual:.1e}, planted defect {defect:.1e}; \
         negative control broke_symmetry = {}; classifier {}/2; deterministic = {identical}; \
         search found {} orbit classes, broke_symmetry = {} (reported, not asserted)",
        rec.fhat_perp_mass,
        control.broke_symmetry,
        labels.iter().filter(|&&x| x).count(),
        rec.search.classes.len(),
        rec.broke_symmetry
    ));
}

// 7. Hypothesis checks and the coprimality gate.
fn hypothesis_checkers(t: &mut Tally) {
    let rational = registry::lookup("rational_decay", &BTreeMap::new())
        .unwrap()
        .nonlinearity;
    let rep = check_hypotheses(&rational, 10.0, 2001);
    t.check(rep.passes(), || format!("-x/(1+x^2): {rep:?}"));
    let sine = registry::lookup("sine", &BTreeMap::new())
        .unwrap()
        .nonlinearity;
    let rep_sine = check_hypotheses(&sine, 10.0, 2001);
    t.check(rep_sine.coercivity.status == CheckStatus::Fail, || {
        format!("sin x coercivity: {:?}", rep_sine.coercivity.status)
    });
    let err = BreakingConfig {
        r: 2,
        s: 4,
        ..Default::default()
    }
    .validate()
    .unwrap_err()
    .to_string();
    t.check(
        err.contains("coprime") && err.contains("gcd(r, s) = 2"),
        || format!("gate message: {err}"),
    );
    let schema = parse_config("[breaking]\nr = 2\ns = 4\n")
        .unwrap()
        .validate_breaking();
    t.check(schema.is_err(), || "config accepted (2, 4)".into());
    t.note(format!(
        "-x/(1+x^2) passes; sin x coercivity {:?}; (2, 4) rejected: \"{err}\"",
        rep_sine.coercivity.status
    ));
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Tally), Duration); 7] = [
        (
            "spectral core exactness",
            spectral_exactness,
            Duration::from_secs(5),
        ),
        (
            "resolvent oracle",
            resolvent_oracle,
            Duration::from_secs(10),
        ),
        (
            "certified contraction",
            contraction_certificate,
            Duration::from_secs(30),
        ),
        (
            "symmetry preservation",
            preservation,
            Duration::from_secs(120),
        ),
        ("Morse machinery", morse_machinery, Duration::from_secs(30)),
        (
            "breaking harness integrity",
            breaking_harness,
            Duration::from_secs(120),
        ),
        (
            "hypothesis checkers",
            hypothesis_checkers,
            Duration::from_secs(5),
        ),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let mut tally = Tally::default();
        let start = Instant::now();
        run(&mut tally);
        let elapsed = start.elapsed();
        if elapsed > *budget {
            tally.failures.push(format!(
                "runtime {:.2} s over budget {} s",
                elapsed.as_secs_f64(),
                budget.as_secs()
            ));
        }
        let ok = tally.failures.is_empty();
        failed += usize::from(!ok);
        println!(
            "[{}] {}. {name}: {} ({:.2} s, budget {} s)",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            tally.notes.last().map(String::as_str).unwrap_or(""),
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        for f in tally.failures.iter().take(5) {
            println!("       {f}");
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
