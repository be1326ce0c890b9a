//! Seeded verification suites.
//!
//! Instance `i` of suite `s` draws its randomness from
//! `substream(seed, (index(s) << 32) | i)`, so instances are independent of
//! each other, of the thread schedule and of which other suites run.

use rand::Rng;
use rayon::prelude::*;
use realpos_core::algebra::{
    aarnes_kadison_check, ba, hsa_from_z, lump_check, supp_order, ws_suite, SubalgebraBasis,
};
use realpos_core::calculus::{f_transform, power_property_report, sector_power_report};
use realpos_core::cones::{chaccr_verify, decompose_report, AmbientContext};
use realpos_core::linalg::random::*;
use realpos_core::linalg::{c, operator_norm, Mat};
use realpos_core::maps::{
    build_symmetric_projection, fixtures, is_cp, rcp_test, LinearMapOnAlgebra, DEFAULT_RCP_BUDGET,
    DEFAULT_RCP_SAMPLES,
};
use realpos_core::report::VerificationReport;
use realpos_core::{Error, Result, Tolerances};

/// The order used by `verify all`.
pub const ALL: [&str; 11] = [
    "chaccr", "bal", "sectt", "lump", "supp3", "ws", "decompose", "hsa", "aarnes", "proj", "rcp",
];

pub const FIXTURES: [&str; 1] = ["transpose2"];

#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub count: usize,
    pub n: usize,
    pub tol: Tolerances,
}

pub fn log_grid(k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..k).map(|i| 10f64.powf(a + (b - a) * i as f64 / (k - 1) as f64)).collect()
}

pub const T_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn index_of(suite: &str) -> Option<usize> {
    ALL.iter().position(|s| *s == suite)
}

/// `u (core + 0) u*`.
fn in_frame(core: &Mat, n: usize, u: &Mat) -> Mat {
    let mut x = Mat::zeros(n, n);
    let k = core.nrows();
    x.view_mut((0, 0), (k, k)).copy_from(core);
    u * x * u.adjoint()
}

/// Accretive `n x n` matrix with a reducing kernel of dimension `kernel`.
pub fn singular_accretive(n: usize, kernel: usize, rng: &mut Rng64) -> Result<Mat> {
    let k = kernel.min(n);
    let core = if k < n { accretive_with(n - k, 1.4, rng)? } else { Mat::zeros(0, 0) };
    let u = unitary(n, rng);
    Ok(in_frame(&core, n, &u))
}

/// Runs `count` instances of `suite`. An instance whose computation errors
/// becomes a failing report naming the error.
pub fn run_suite(suite: &str, cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let idx = index_of(suite).ok_or_else(|| Error::Input(format!("unknown suite '{suite}'")))?;
    if cfg.n == 0 {
        return Err(Error::Input("--n must be positive".into()));
    }
    Ok((0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let key = ((idx as u64) << 32) | i as u64;
            let mut rng = substream(cfg.seed, key);
            let inst_seed = cfg.seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let rep = instance(suite, i, cfg, &mut rng, inst_seed)
                .unwrap_or_else(|e| failed(suite, &e, &cfg.tol));
            let mut rep = rep.with_seed(cfg.seed);
            rep.suite = suite.to_string();
            rep.notes.insert(0, format!("instance {i}"));
            rep
        })
        .collect())
}

fn failed(suite: &str, e: &Error, tol: &Tolerances) -> VerificationReport {
    let mut rep = VerificationReport::new(suite, &[], *tol);
    rep.flag("completed without error", false, e.to_string());
    rep
}

fn instance(suite: &str, i: usize, cfg: &SuiteConfig, rng: &mut Rng64, seed: u64) -> Result<VerificationReport> {
    let n = cfg.n;
    let tol = &cfg.tol;
    let full = AmbientContext::full(n);
    match suite {
        "chaccr" => {
            let x = if i.is_multiple_of(2) { accretive_with(n, 1.5, rng)? } else { gaussian(n, n, rng) };
            chaccr_verify(&x, &full, &log_grid(20, 1e-2, 1e2), tol)
        }
        "bal" => {
            let x = accretive_with(n, std::f64::consts::FRAC_PI_2, rng)?;
            let s: f64 = rng.gen_range(0.2..=1.0);
            let x = &x * c(s / operator_norm(&x).max(f64::MIN_POSITIVE));
            power_property_report(&x, &full, &T_GRID, tol)
        }
        "sectt" => {
            let cap = rng.gen_range(0.05..=std::f64::consts::FRAC_PI_2);
            let x = accretive_with(n, cap, rng)?;
            sector_power_report(&x, &full, &T_GRID, &[2, 4, 8, 16], tol)
        }
        "lump" => lump_check(&idempotent_with(n, 1e3, rng), &full, tol),
        "supp3" => {
            let kx = rng.gen_range(0..n);
            let ky = rng.gen_range(0..n);
            let u = unitary(n, rng);
            // shared frame: containment is decided by the ranks; fresh frame:
            // the ranges are in generic position
            let v = if rng.gen_bool(0.5) { u.clone() } else { unitary(n, rng) };
            let x = in_frame(&accretive_with(n - kx, 1.4, rng)?, n, &u);
            let y = in_frame(&accretive_with(n - ky, 1.4, rng)?, n, &v);
            supp_order(&x, &y, &SubalgebraBasis::full(n), tol)
        }
        "ws" => {
            let (x, a) = ws_fixture(i, n, rng, tol)?;
            ws_suite(&x, &a, tol)
        }
        "decompose" => {
            let s: f64 = rng.gen_range(0.0..=0.99);
            decompose_report(&contraction_with(n, s, rng), &full, tol)
        }
        "hsa" => {
            let kernel = rng.gen_range(0..n);
            let x = singular_accretive(n, kernel, rng)?;
            let z = f_transform(&x, &full, tol)?.into_inner();
            Ok(hsa_from_z(&z, &SubalgebraBasis::full(n), tol)?.report)
        }
        "aarnes" => {
            let kernel = rng.gen_range(0..n);
            if i.is_multiple_of(2) {
                let x = singular_accretive(n, kernel, rng)?;
                aarnes_kadison_check(&x, &SubalgebraBasis::full(n), tol)
            } else {
                let mut d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
                for v in d.iter_mut().take(kernel) {
                    *v = 0.0;
                }
                let x = Mat::from_fn(n, n, |r, s| if r == s { c(d[r]) } else { c(0.0) });
                aarnes_kadison_check(&x, &SubalgebraBasis::diagonal(n), tol)
            }
        }
        "proj" => {
            let f = fixtures::symmetric_fixture(i, n, rng);
            let mut rep = build_symmetric_projection(&f.theta, &f.q, &f.algebra, tol, seed)?.report;
            rep.note(format!("fixture: {}", f.name));
            Ok(rep)
        }
        "rcp" => {
            let t = if i.is_multiple_of(2) {
                fixtures::random_cp(n, 1 + (i / 2) % 3, rng)
            } else {
                fixtures::random_non_cp(n, rng)
            };
            let levels: Vec<usize> = if i.is_multiple_of(2) { vec![1, 2, 3] } else { vec![n] };
            rcp_expectation(&t, &levels, seed, tol)
        }
        _ => unreachable!("suite names are validated"),
    }
}

/// `ws` fixtures cycle through an invertible element, an element with a
/// reducing kernel in `M_n`, and a singular element in its own `ba(x)`.
pub fn ws_fixture(i: usize, n: usize, rng: &mut Rng64, tol: &Tolerances) -> Result<(Mat, SubalgebraBasis)> {
    match i % 3 {
        0 => Ok((accretive_with(n, 1.5, rng)?, SubalgebraBasis::full(n))),
        1 => {
            let kernel = rng.gen_range(1..n.max(2)).min(n);
            Ok((singular_accretive(n, kernel, rng)?, SubalgebraBasis::full(n)))
        }
        _ => {
            let kernel = rng.gen_range(1..n.max(2)).min(n);
            let x = singular_accretive(n, kernel, rng)?;
            let a = ba(&x, &AmbientContext::full(n), tol)?;
            Ok((x, a))
        }
    }
}

/// Runs `rcp_test` and checks its verdict against the Choi criterion: a CP
/// map must pass with no sampled violation, a non-CP map must produce a
/// certified witness.
pub fn rcp_expectation(t: &LinearMapOnAlgebra, levels: &[usize], seed: u64, tol: &Tolerances) -> Result<VerificationReport> {
    let (cp, ch) = is_cp(t, tol)?;
    let v = rcp_test(t, levels, DEFAULT_RCP_SAMPLES, DEFAULT_RCP_BUDGET, seed, tol)?;
    let mut rep = VerificationReport::new("rcp", &[&t.action], *tol).with_seed(seed);
    rep.notes = v.report.notes.clone();
    rep.note(format!("Choi criterion: {}", if cp { "CP" } else { "not CP" }));
    if cp {
        rep.bound("sampled violations", v.violations as f64, 0.0);
        rep.flag("certified PASS", v.certified, "");
    } else {
        match &v.witness {
            Some(w) => {
                rep.bound("witness input accretive", -w.x_abscissa, tol.psd_tol);
                rep.bound("witness image abscissa < 0", w.image_abscissa, 0.0);
                rep.note(format!(
                    "witness at level {}: image abscissa {:.6e}",
                    w.level, w.image_abscissa
                ));
            }
            None => {
                rep.flag("witness found", false, format!("Choi min eigenvalue {:.3e}", ch.min_eig));
            }
        }
    }
    Ok(rep)
}

pub fn run_fixture(name: &str, seed: u64, tol: &Tolerances) -> Result<Vec<VerificationReport>> {
    match name {
        "transpose2" => {
            let t = fixtures::transpose(2);
            let mut rep = rcp_expectation(&t, &[1, 2, 3], seed, tol)?;
            let (_, ch) = is_cp(&t, tol)?;
            rep.bound("Choi min eigenvalue <= -1", ch.min_eig + 1.0, 1e-9);
            rep.suite = "rcp".into();
            rep.notes.insert(0, "fixture transpose2".into());
            Ok(vec![rep])
        }
        _ => Err(Error::Input(format!(
            "unknown fixture '{name}' (known: {})",
            FIXTURES.join(", ")
        ))),
    }
}
