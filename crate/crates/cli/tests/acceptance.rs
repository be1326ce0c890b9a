//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the console.
//! The process fails when a criterion outside `EXPECTED_RED` fails, or when
//! one inside it unexpectedly passes (so the list cannot go stale).

use std::f64::consts::FRAC_PI_2;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use realpos_cli::suites::ws_fixture;
use realpos_core::algebra::{supp_order, support_idem, ws_suite, SubalgebraBasis};
use realpos_core::calculus::{bal_constant, drury_constant, f_inverse, f_transform, power_cross};
use realpos_core::cones::{chaccr_conditions, decompose_half_f, in_f, AmbientContext};
use realpos_core::linalg::random::*;
use realpos_core::linalg::{c, eye, operator_norm, Mat};
use realpos_core::maps::{
    build_symmetric_projection, classify_projection, fixtures, is_cp, kraus_factor, rcp_test, LinearMapOnAlgebra,
    DEFAULT_RCP_BUDGET, DEFAULT_RCP_SAMPLES,
};
use realpos_core::numrange::{dist_to_point, sectorial_angle};
use realpos_core::{Tolerances, C64};

/// Bit-level reconstruction `x - y == b` is impossible for generic `b`: both
/// diagonals sit near 1/2, where doubles are spaced 2^-54, so a diagonal
/// entry of `b` below 1/4 with lower-order bits cannot be an exact
/// difference of two such doubles.
const EXPECTED_RED: &[u32] = &[10];

fn tol() -> Tolerances {
    Tolerances::default()
}

fn log_grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (k - 1) as f64)).collect()
}

const R_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn seeded(criterion: u64, i: usize) -> Rng64 {
    substream(0xACCE_5500 + criterion, i as u64)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn max(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, f64::max)
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn c1() -> Outcome {
    let t0 = Instant::now();
    let grid = log_grid(20);
    let ctx = AmbientContext::full(4);
    let disagreements: usize = (0..1000)
        .into_par_iter()
        .map(|i| {
            let mut r = seeded(1, i);
            let x = if i < 500 { accretive_with(4, 1.5, &mut r).unwrap() } else { gaussian(4, 4, &mut r) };
            usize::from(!chaccr_conditions(&x, &ctx, &grid, &tol()).unwrap().unanimous())
        })
        .sum();
    let el = t0.elapsed();
    outcome(
        disagreements == 0 && within(el, 60),
        format!("{disagreements} disagreements in 1000, {:.1} s", el.as_secs_f64()),
    )
}

/// One criterion-2 instance with everything criteria 2, 3 and 5 need.
struct PowerInstance {
    nx: f64,
    max_dev_ratio: f64,
    min_methods: usize,
    root_ratio: f64,
    semigroup_ratio: f64,
    sharp_slack: f64,
    banach_slack: f64,
    dyadic_root_slack: f64,
}

fn power_instance(i: usize) -> PowerInstance {
    let n = 2 + i % 7;
    let mut r = seeded(2, i);
    let cap = r.gen_range(0.05..=FRAC_PI_2);
    let x = accretive_with(n, cap, &mut r).unwrap();
    let ctx = AmbientContext::full(n);
    let nx = operator_norm(&x);
    let pw = |t: f64| power_cross(&x, t, &ctx, &tol()).unwrap();
    let theta = sectorial_angle(&x).angle.unwrap_or(FRAC_PI_2);
    let angle = |m: &Mat| sectorial_angle(m).angle.unwrap_or(f64::INFINITY);

    let mut max_dev_ratio: f64 = 0.0;
    let mut min_methods = usize::MAX;
    let mut sharp_slack = f64::NEG_INFINITY;
    let mut banach_slack = f64::NEG_INFINITY;
    for &t in &R_GRID {
        let o = pw(t);
        max_dev_ratio = max_dev_ratio.max(o.max_deviation() / (1.0 + nx));
        min_methods = min_methods.min(o.candidates.len());
        let a = angle(o.value.as_mat());
        sharp_slack = sharp_slack.max(a - t * theta);
        banach_slack = banach_slack.max(a - (t * theta + (1.0 - t) * FRAC_PI_2));
    }

    let mut root_ratio: f64 = 0.0;
    for k in 2..=4u32 {
        let y = pw(1.0 / k as f64).value.into_inner();
        let mut back = y.clone();
        for _ in 1..k {
            back = &back * &y;
        }
        root_ratio = root_ratio.max(operator_norm(&(back - &x)) / (1.0 + nx));
    }

    let quarter = pw(0.25).value.into_inner();
    let half = pw(0.5).value.into_inner();
    let three = pw(0.75).value.into_inner();
    let pairs = [
        (&quarter, &quarter, &half),
        (&quarter, &half, &three),
        (&half, &quarter, &three),
        (&half, &half, &x),
    ];
    let semigroup_ratio = max(
        pairs
            .iter()
            .map(|(a, b, s)| operator_norm(&(*a * *b - *s)) / (1.0 + nx).powi(2)),
    );

    let mut dyadic_root_slack = f64::NEG_INFINITY;
    for m in [2u32, 4, 8, 16] {
        let y = pw(1.0 / m as f64).value.into_inner();
        dyadic_root_slack = dyadic_root_slack.max(angle(&y) - FRAC_PI_2 / m as f64);
    }

    PowerInstance {
        nx,
        max_dev_ratio,
        min_methods,
        root_ratio,
        semigroup_ratio,
        sharp_slack,
        banach_slack,
        dyadic_root_slack,
    }
}

fn c2_3_5() -> [Outcome; 3] {
    let t0 = Instant::now();
    let inst: Vec<PowerInstance> = (0..200).into_par_iter().map(power_instance).collect();
    let el = t0.elapsed();
    let dev = max(inst.iter().map(|p| p.max_dev_ratio));
    let methods = inst.iter().map(|p| p.min_methods).min().unwrap();
    let root = max(inst.iter().map(|p| p.root_ratio));
    let semi = max(inst.iter().map(|p| p.semigroup_ratio));
    let sharp = max(inst.iter().map(|p| p.sharp_slack));
    let banach = max(inst.iter().map(|p| p.banach_slack));
    let dyadic = max(inst.iter().map(|p| p.dyadic_root_slack));
    let biggest = max(inst.iter().map(|p| p.nx));
    [
        outcome(
            dev < 1e-6 && methods >= 2 && within(el, 300),
            format!(
                "max deviation / (1+||x||) = {dev:.3e} (< 1e-6), at least {methods} methods per power, max ||x|| = {biggest:.2}, {:.1} s",
                el.as_secs_f64()
            ),
        ),
        outcome(
            root <= 1e-6 && semi <= 1e-7,
            format!("root inversion {root:.3e} (<= 1e-6), semigroup {semi:.3e} (<= 1e-7), both relative"),
        ),
        outcome(
            sharp <= 1e-6 && banach <= 1e-6 && dyadic <= 1e-6,
            format!("worst excess: sharp {sharp:.3e}, banach {banach:.3e}, roots 1/2..1/16 {dyadic:.3e} (each <= 1e-6)"),
        ),
    ]
}

fn c4() -> Outcome {
    let ts: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let slacks: Vec<(f64, f64)> = (0..1000)
        .into_par_iter()
        .map(|i| {
            let n = 2 + i % 5;
            let mut r = seeded(4, i);
            let x = accretive_with(n, r.gen_range(0.05..=FRAC_PI_2), &mut r).unwrap();
            let s = if i % 10 == 0 { 1.0 } else { r.gen_range(0.05..=1.0) };
            let x = &x * c(s / operator_norm(&x));
            let ctx = AmbientContext::full(n);
            let mut bal = f64::INFINITY;
            let mut dru = f64::INFINITY;
            for &t in &ts {
                let nt = operator_norm(power_cross(&x, t, &ctx, &tol()).unwrap().value.as_mat());
                bal = bal.min(bal_constant(t) - nt);
                dru = dru.min(drury_constant(t) - nt);
            }
            (bal, dru)
        })
        .collect();
    let bal = slacks.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let dru = slacks.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    outcome(
        bal >= -1e-8 && dru >= -1e-8,
        format!("min slack: sin-constant {bal:.3e}, gamma-constant {dru:.3e} (each >= -1e-8)"),
    )
}

fn c6() -> Outcome {
    let res: Vec<(f64, f64)> = (0..500)
        .into_par_iter()
        .map(|i| {
            let n = 2 + i % 5;
            let mut r = seeded(6, i);
            let x = accretive_with(n, r.gen_range(0.05..=FRAC_PI_2), &mut r).unwrap();
            let x = &x * c(10f64.powf(r.gen_range(-2.0..2.0)));
            let ctx = AmbientContext::full(n);
            let fx = f_transform(&x, &ctx, &tol()).unwrap().into_inner();
            let bound = (1.0 / dist_to_point(&x, C64::new(-1.0, 0.0))).min(1.0);
            let contraction = operator_norm(&(eye(n) - &fx)) - bound;
            let (back, cond) = f_inverse(&fx, &ctx, &tol()).unwrap();
            let round = operator_norm(&(back.as_mat() - &x)) / (1.0 + cond);
            (contraction, round)
        })
        .collect();
    let worst_c = max(res.iter().map(|r| r.0));
    let worst_r = max(res.iter().map(|r| r.1));
    outcome(
        worst_c <= 1e-8 && worst_r <= 1e-8,
        format!("||e - F(x)|| - bound <= {worst_c:.3e} (<= 1e-8), round trip / (1+cond) <= {worst_r:.3e} (<= 1e-8)"),
    )
}

fn singular(n: usize, kernel: usize, r: &mut Rng64) -> Mat {
    let mut x = Mat::zeros(n, n);
    if kernel < n {
        let core = accretive_with(n - kernel, r.gen_range(0.05..=FRAC_PI_2), r).unwrap();
        x.view_mut((0, 0), (n - kernel, n - kernel)).copy_from(&core);
    }
    let u = unitary(n, r);
    &u * x * u.adjoint()
}

fn c7() -> Outcome {
    let res: Vec<(f64, f64, bool)> = (0..500)
        .into_par_iter()
        .map(|i| {
            let n = 2 + i % 5;
            let mut r = seeded(7, i);
            let kernel = if i % 2 == 0 { 0 } else { r.gen_range(1..n) };
            let x = singular(n, kernel, &mut r);
            let ctx = AmbientContext::full(n);
            let s = support_idem(&x, &ctx, &tol()).unwrap();
            let sm = &s.s;
            let alg = max(
                [operator_norm(&(sm * &x - &x)), operator_norm(&(&x * sm - &x)), operator_norm(&(sm * sm - sm))]
                    .into_iter(),
            );
            (s.agreement_residual, alg, in_f(sm, &ctx, &tol()).unwrap().in_f)
        })
        .collect();
    let agree = max(res.iter().map(|r| r.0));
    let alg = max(res.iter().map(|r| r.1));
    let all_f = res.iter().all(|r| r.2);

    let pairs: Vec<bool> = (0..200)
        .into_par_iter()
        .map(|i| {
            let n = 2 + i % 4;
            let mut r = seeded(70, i);
            let kx = r.gen_range(0..n);
            let ky = r.gen_range(0..n);
            let u = unitary(n, &mut r);
            let v = if i % 2 == 0 { u.clone() } else { unitary(n, &mut r) };
            let frame = |k: usize, w: &Mat, r: &mut Rng64| {
                let mut z = Mat::zeros(n, n);
                let core = accretive_with(n - k, 1.4, r).unwrap();
                z.view_mut((0, 0), (n - k, n - k)).copy_from(&core);
                w * z * w.adjoint()
            };
            let x = frame(kx, &u, &mut r);
            let y = frame(ky, &v, &mut r);
            supp_order(&x, &y, &SubalgebraBasis::full(n), &tol()).unwrap().passed
        })
        .collect();
    let pairs_ok = pairs.iter().filter(|p| **p).count();
    outcome(
        agree < 1e-6 && alg <= 1e-9 && all_f && pairs_ok == 200,
        format!(
            "method agreement {agree:.3e} (< 1e-6), algebraic residual {alg:.3e} (<= 1e-9), s(x) in F always: {all_f}, supp3 pairs agreeing {pairs_ok}/200"
        ),
    )
}

fn c8() -> Outcome {
    let res: Vec<(bool, bool, bool)> = (0..500)
        .into_par_iter()
        .map(|i| {
            let n = 2 + i % 4;
            let mut r = seeded(8, i);
            let (x, a) = ws_fixture(i, n, &mut r, &tol()).unwrap();
            let rep = ws_suite(&x, &a, &tol()).unwrap();
            let eqv = rep.check("(i) <=> (iv)").unwrap().passed && rep.check("(iv) <=> (v)").unwrap().passed;
            let gap = rep.check("(i) => (vi)").unwrap().passed;
            let v = realpos_core::algebra::ws_verdicts(&x, &a, &tol()).unwrap();
            (eqv, gap, v.support_in_a)
        })
        .collect();
    let eqv = res.iter().filter(|r| r.0).count();
    let gap = res.iter().filter(|r| r.1).count();
    let true_cases = res.iter().filter(|r| r.2).count();
    outcome(
        eqv == 500 && gap == 500,
        format!(
            "equivalences hold {eqv}/500, gap > 1e-8 when true {gap}/500 ({true_cases} true cases; fixtures: invertible, reducing kernel, own ba(x))"
        ),
    )
}

fn c9() -> Outcome {
    let fails: usize = (0..10_000)
        .into_par_iter()
        .map(|i| {
            let n = 1 + i % 5;
            let p = idempotent_with(n, 1e3, &mut seeded(9, i));
            let ctx = AmbientContext::full(n);
            usize::from(!realpos_core::algebra::lump_check(&p, &ctx, &tol()).unwrap().passed)
        })
        .sum();
    outcome(fails == 0, format!("{fails} equivalence failures in 10000"))
}

fn c10() -> Outcome {
    let res: Vec<(bool, bool)> = (0..1000)
        .into_par_iter()
        .map(|i| {
            let n = 1 + i % 6;
            let mut r = seeded(10, i);
            let s = if i % 10 == 0 { 0.99 } else { r.gen_range(0.0..=0.99) };
            let b = contraction_with(n, s, &mut r);
            let d = decompose_half_f(&b, &AmbientContext::full(n), &tol()).unwrap();
            (d.x_residual <= tol().eq_tol && d.y_residual <= tol().eq_tol, d.bitwise_exact)
        })
        .collect();
    let members = res.iter().filter(|r| r.0).count();
    let exact = res.iter().filter(|r| r.1).count();
    outcome(
        members == 1000 && exact == 1000,
        format!("both in F/2: {members}/1000; bit-exact x - y == b: {exact}/1000"),
    )
}

fn c11() -> Outcome {
    let res: Vec<(bool, String)> = (0..50)
        .into_par_iter()
        .map(|i| {
            let n = 2 + (i / 3) % 3;
            let mut r = seeded(11, i);
            let f = fixtures::symmetric_fixture(i, n, &mut r);
            let sp = build_symmetric_projection(&f.theta, &f.q, &f.algebra, &tol(), i as u64).unwrap();
            let needed = [
                "P^2 = P",
                "||I - 2P|| level 1",
                "||I - 2P|| level 2",
                "||I - 2P|| level 3",
                "rcp_test PASS",
                "range(P) = Fix(theta) in qAq",
            ];
            let ok = needed.iter().all(|c| sp.report.check(c).is_some_and(|c| c.passed));
            (ok, f.name.to_string())
        })
        .collect();
    let good = res.iter().filter(|r| r.0).count();
    let avg = fixtures::scalar_averaging();
    let cl = classify_projection(&avg, &[1, 2, 3], &tol(), 11).unwrap();
    let avg_ok = cl.symmetric && cl.conditional_expectation_residual <= 1e-10;
    outcome(
        good == 50 && avg_ok,
        format!(
            "{good}/50 symmetric projections certified; averaging: symmetric {}, conditional expectation residual {:.3e}",
            cl.symmetric, cl.conditional_expectation_residual
        ),
    )
}

fn c12() -> Outcome {
    let mut maps: Vec<LinearMapOnAlgebra> = vec![LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2))];
    for i in 0..20 {
        let mut r = seeded(12, i);
        maps.push(fixtures::random_cp(2 + i % 2, 1 + i % 4, &mut r));
    }
    let res: Vec<(bool, usize, f64)> = maps
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let v = rcp_test(t, &[1, 2, 3], DEFAULT_RCP_SAMPLES, DEFAULT_RCP_BUDGET, i as u64, &tol()).unwrap();
            let k = kraus_factor(t, &tol()).unwrap();
            (v.passed, v.violations, k.residual)
        })
        .collect();
    let cp_ok = res.iter().filter(|r| r.0 && r.1 == 0).count();
    let kraus = max(res.iter().map(|r| r.2));

    let tr = fixtures::transpose(2);
    let (_, ch) = is_cp(&tr, &tol()).unwrap();
    let v = rcp_test(&tr, &[2], DEFAULT_RCP_SAMPLES, DEFAULT_RCP_BUDGET, 12, &tol()).unwrap();
    let (wit_ok, wit) = match &v.witness {
        Some(w) => (
            w.level == 2 && w.x_abscissa >= -tol().psd_tol && w.image_abscissa <= -1e-4,
            format!("witness image abscissa {:.3e}", w.image_abscissa),
        ),
        None => (false, "no witness".to_string()),
    };
    let within_budget = v.evaluations <= DEFAULT_RCP_SAMPLES + DEFAULT_RCP_BUDGET;
    outcome(
        cp_ok == 21 && kraus <= 1e-8 && ch.min_eig <= -1.0 + 1e-9 && wit_ok && within_budget,
        format!(
            "CP maps passing {cp_ok}/21, Kraus residual {kraus:.3e}; transpose: Choi min {:.12}, {wit}, {} evaluations",
            ch.min_eig, v.evaluations
        ),
    )
}

fn strip_wall_time(s: &str) -> String {
    s.lines().filter(|l| !l.contains("\"wall_time_ms\"")).collect::<Vec<_>>().join("\n")
}

fn c13() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let t0 = Instant::now();
    let mut codes = Vec::new();
    let mut texts = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("run{k}.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_realpos"))
            .args(["verify", "all", "--seed", "42", "--n", "4", "--count", "50", "--report"])
            .arg(&p)
            .env_remove("REALPOS_DEFAULT_TOL")
            .output()
            .unwrap();
        codes.push(out.status.code());
        texts.push(std::fs::read_to_string(&p).unwrap_or_default());
    }
    let el = t0.elapsed();
    let same = !texts[0].is_empty() && strip_wall_time(&texts[0]) == strip_wall_time(&texts[1]);
    outcome(
        codes.iter().all(|c| *c == Some(0)) && same && within(el, 600),
        format!("exit codes {codes:?}, identical modulo wall time: {same}, {:.1} s", el.as_secs_f64()),
    )
}

fn main() {
    // `cargo test -- --list` and filters come from the test runner; this
    // target has no individual tests to list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let t0 = Instant::now();
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    results.push((1, c1()));
    let [o2, o3, o5] = c2_3_5();
    results.push((2, o2));
    results.push((3, o3));
    results.push((4, c4()));
    results.push((5, o5));
    results.push((6, c6()));
    results.push((7, c7()));
    results.push((8, c8()));
    results.push((9, c9()));
    results.push((10, c10()));
    results.push((11, c11()));
    results.push((12, c12()));
    results.push((13, c13()));

    let mut unexpected = Vec::new();
    for (k, o) in &results {
        let red = EXPECTED_RED.contains(k);
        let tag = match (o.pass, red) {
            (true, false) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
            (true, true) => "PASS (expected FAIL)",
        };
        println!("criterion {k:>2}: {tag}: {}", o.detail);
        if o.pass == red {
            unexpected.push(*k);
        }
    }
    println!("acceptance finished in {:.1} s", t0.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
