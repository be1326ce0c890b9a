use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use realpos_core::algebra::ba;
use realpos_core::calculus::{power_by, power_cross, Method};
use realpos_core::cones::AmbientContext;
use realpos_core::linalg::random::{accretive_with, contraction_with, idempotent_with, rng};
use realpos_core::linalg::{operator_norm, Mat};
use realpos_core::numrange::boundary;
use realpos_core::report::VerificationReport;
use realpos_core::Tolerances;

use crate::io::{algebra_to_json, matrix_to_json, read_matrix, write_text};
use crate::plot::{boundary_csv, boundary_svg};
use crate::suites::{run_fixture, run_suite, singular_accretive, SuiteConfig, ALL};
use crate::{resolve_tolerances, CliError, ReportFile, EXIT_OK, EXIT_SUITE_FAILURE, TOL_ENV};

#[derive(Parser, Debug)]
#[command(name = "realpos", version, about = "Real positivity and accretive matrices: checks, powers and plots")]
struct Cli {
    /// Tolerance override `name=value` (eq_tol, psd_tol, conv_tol); repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Numerical-range boundary as CSV and/or SVG.
    Nrange {
        input: PathBuf,
        #[arg(long, default_value_t = 360)]
        angles: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Principal fractional power `x^r` of an accretive matrix.
    Power {
        input: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Cross)]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a seeded verification suite (or `all`).
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Named fixture instead of random instances (`transpose2`).
        #[arg(long)]
        fixture: Option<String>,
    },
    /// Write a seeded random instance.
    Random {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Operator norm of a random contraction.
        #[arg(long, default_value_t = 0.9)]
        norm: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Series,
    Shifted,
    Balakrishnan,
    Cross,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Series => Method::Series,
            MethodArg::Shifted => Method::ShiftedSpectral,
            MethodArg::Balakrishnan => Method::Balakrishnan,
            MethodArg::Cross => Method::CrossValidated,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Accretive,
    Contraction,
    Idempotent,
    Algebra,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { crate::EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let env = std::env::var(TOL_ENV).ok();
    let tol = resolve_tolerances(env.as_deref(), &cli.tol)?;
    match cli.command {
        Command::Nrange { input, angles, csv, svg } => nrange(&input, angles, csv.as_deref(), svg.as_deref()),
        Command::Power {
            input,
            r,
            method,
            out,
            report,
        } => power(&input, r, method.into(), out.as_deref(), report.as_deref(), &tol),
        Command::Verify {
            suite,
            seed,
            count,
            n,
            report,
            fixture,
        } => verify(&suite, seed, count, n, report.as_deref(), fixture.as_deref(), &tol),
        Command::Random {
            kind,
            n,
            seed,
            norm,
            out,
        } => random(kind, n, seed, norm, out.as_deref(), &tol),
    }
}

fn emit(path: Option<&Path>, s: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_text(p, s),
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

fn nrange(input: &Path, angles: usize, csv: Option<&Path>, svg: Option<&Path>) -> Result<i32, CliError> {
    if angles == 0 {
        return Err(CliError::Input("--angles must be positive".into()));
    }
    let x = read_matrix(input)?;
    let b = boundary(x.as_mat(), angles)?;
    if let Some(p) = svg {
        write_text(p, &boundary_svg(&b))?;
    }
    if csv.is_some() || svg.is_none() {
        emit(csv, &boundary_csv(&b))?;
    }
    Ok(EXIT_OK)
}

/// `k` when `r = 1/k` for an integer `2 <= k <= 64`.
fn reciprocal_integer(r: f64) -> Option<u32> {
    let k = (1.0 / r).round();
    ((2.0..=64.0).contains(&k) && (1.0 / r - k).abs() <= 1e-12 * k).then_some(k as u32)
}

fn power(
    input: &Path,
    r: f64,
    method: Method,
    out: Option<&Path>,
    report: Option<&Path>,
    tol: &Tolerances,
) -> Result<i32, CliError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(CliError::Input(format!("--r {r} must lie in (0, 1]")));
    }
    let x = read_matrix(input)?;
    let x = x.as_mat();
    let ctx = AmbientContext::full(x.nrows());
    let mut rep = VerificationReport::new("power", &[x], *tol);
    rep.note(format!("method {}, r = {r}", method.name()));
    let t0 = std::time::Instant::now();
    let y = if method == Method::CrossValidated {
        let o = power_cross(x, r, &ctx, tol)?;
        for (a, b, d) in &o.deviations {
            rep.bound(&format!("deviation {} vs {}", a.name(), b.name()), *d, o.tolerance);
        }
        rep.note(format!(
            "methods: {}",
            o.candidates.iter().map(|(m, _)| m.name()).collect::<Vec<_>>().join(", ")
        ));
        for n in &o.notes {
            rep.note(n.clone());
        }
        o.value.into_inner()
    } else {
        power_by(x, r, method, &ctx, tol)?.into_inner()
    };
    if let Some(k) = reciprocal_integer(r) {
        let mut back = y.clone();
        for _ in 1..k {
            back = &back * &y;
        }
        rep.bound(
            &format!("y^{k} = x"),
            operator_norm(&(back - x)),
            1e-6 * (1.0 + operator_norm(x)),
        );
    }
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    emit(out, &matrix_to_json(&y))?;
    if let Some(p) = report {
        let mut f = ReportFile::new(format!("power --r {r} --method {}", method.name()), None, *tol);
        f.instances.push(rep);
        write_text(p, &f.to_json())?;
    }
    Ok(EXIT_OK)
}

fn verify(
    suite: &str,
    seed: u64,
    count: usize,
    n: usize,
    report: Option<&Path>,
    fixture: Option<&str>,
    tol: &Tolerances,
) -> Result<i32, CliError> {
    let (command, instances) = if let Some(name) = fixture {
        if suite != "rcp" {
            return Err(CliError::Input("--fixture applies to the rcp suite".into()));
        }
        (format!("verify rcp --fixture {name}"), run_fixture(name, seed, tol)?)
    } else {
        let cfg = SuiteConfig { seed, count, n, tol: *tol };
        let names: Vec<&str> = if suite == "all" { ALL.to_vec() } else { vec![suite] };
        let mut all = Vec::new();
        for s in names {
            let reps = run_suite(s, &cfg)?;
            let ok = reps.iter().filter(|r| r.passed).count();
            eprintln!("{s}: {ok}/{} passed", reps.len());
            all.extend(reps);
        }
        (format!("verify {suite} --count {count} --n {n}"), all)
    };
    let mut f = ReportFile::new(command, Some(seed), *tol);
    f.instances = instances;
    for r in f.instances.iter().filter(|r| !r.passed) {
        for c in r.failures() {
            eprintln!(
                "FAIL {} [{}]: {} residual {:.3e} > {:.3e}",
                r.suite,
                r.notes.first().map(String::as_str).unwrap_or(""),
                c.name,
                c.residual,
                c.tolerance
            );
        }
    }
    if let Some(p) = report {
        write_text(p, &f.to_json())?;
    }
    Ok(if f.passed() { EXIT_OK } else { EXIT_SUITE_FAILURE })
}

fn random(kind: Kind, n: usize, seed: u64, norm: f64, out: Option<&Path>, tol: &Tolerances) -> Result<i32, CliError> {
    if n == 0 {
        return Err(CliError::Input("--n must be positive".into()));
    }
    let mut r = rng(seed);
    let s = match kind {
        Kind::Accretive => matrix_to_json(&accretive_with(n, std::f64::consts::FRAC_PI_2, &mut r)?),
        Kind::Contraction => {
            if !(norm.is_finite() && norm >= 0.0) {
                return Err(CliError::Input(format!("--norm {norm} must be finite and >= 0")));
            }
            matrix_to_json(&contraction_with(n, norm, &mut r))
        }
        Kind::Idempotent => matrix_to_json(&idempotent_with(n, 1e3, &mut r)),
        Kind::Algebra => {
            let kernel = r.gen_range(0..n);
            let x: Mat = singular_accretive(n, kernel, &mut r)?;
            algebra_to_json(&ba(&x, &AmbientContext::full(n), tol)?)
        }
    };
    emit(out, &s)?;
    Ok(EXIT_OK)
}
