use statrs::function::gamma::gamma;

use super::power_cross;
use super::spectral::pow_accretive;
use crate::cones::{membership, require_r, AmbientContext};
use crate::error::{Error, Result};
use crate::linalg::{c, operator_norm, Mat, Tolerances};
use crate::numrange::sectorial_angle;
use crate::report::VerificationReport;

/// `sin(t pi) / (pi t (1 - t))`, the operator-algebra constant in
/// `||x^t|| <= C_t ||x||^t`.
pub fn bal_constant(t: f64) -> f64 {
    (t * std::f64::consts::PI).sin() / (std::f64::consts::PI * t * (1.0 - t))
}

/// `Gamma(t/2) Gamma((1-t)/2) / (2 sqrt(pi) Gamma(t) Gamma(1-t))`, the bound on
/// `||x^t||` for accretive contractions.
pub fn drury_constant(t: f64) -> f64 {
    gamma(t / 2.0) * gamma((1.0 - t) / 2.0)
        / (2.0 * std::f64::consts::PI.sqrt() * gamma(t) * gamma(1.0 - t))
}

fn label(t: f64) -> String {
    format!("{t}")
}

/// Semigroup, Esterle, scaling and cone-closure laws together with the norm
/// and sector bounds for `x^t`, `t` in `grid`.
pub fn power_property_report(
    x: &Mat,
    ctx: &AmbientContext,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Input("exponent grid must be nonempty and inside (0, 1)".into()));
    }
    let t0 = std::time::Instant::now();
    let y = require_r(x, ctx, tol)?;
    let nx = operator_norm(&y);
    let in_f = membership(x, ctx, tol)?.in_f;
    let mut rep = VerificationReport::new("power_laws", &[x], *tol);
    let pw = |t: f64| -> Result<Mat> {
        if t == 1.0 {
            return Ok(x.clone());
        }
        Ok(power_cross(x, t, ctx, tol)?.value.into_inner())
    };
    let powers: Vec<Mat> = grid.iter().map(|&t| pw(t)).collect::<Result<_>>()?;
    let theta = sectorial_angle(&y).angle.unwrap_or(std::f64::consts::PI);

    for (i, &s) in grid.iter().enumerate() {
        for (j, &t) in grid.iter().enumerate().skip(i) {
            if s + t > 1.0 + 1e-15 {
                continue;
            }
            let lhs = &powers[i] * &powers[j];
            let rhs = pw((s + t).min(1.0))?;
            rep.bound(
                &format!("semigroup s={} t={}", label(s), label(t)),
                operator_norm(&(lhs - rhs)),
                1e-7 * (1.0 + nx).powi(2),
            );
        }
    }

    if in_f {
        for (i, &t) in grid.iter().enumerate() {
            for &r in grid {
                let lhs = power_cross(&powers[i], r, ctx, tol)?.value.into_inner();
                let rhs = pw(t * r)?;
                rep.bound(
                    &format!("esterle t={} r={}", label(t), label(r)),
                    operator_norm(&(lhs - rhs)),
                    1e-7 * (1.0 + nx),
                );
            }
        }
    } else {
        rep.note("esterle law skipped: x is not in F");
    }

    let cs = 2.5;
    let xs = x * c(cs);
    for (i, &t) in grid.iter().enumerate() {
        let pt = &powers[i];
        let npt = operator_norm(&ctx.restrict(pt, tol)?);
        rep.bound(
            &format!("bal t={}", label(t)),
            npt - bal_constant(t) * nx.powf(t),
            tol.eq_tol,
        );
        if nx <= 1.0 + tol.eq_tol {
            rep.bound(&format!("drury t={}", label(t)), npt - drury_constant(t), tol.eq_tol);
        }
        let restricted = ctx.restrict(pt, tol)?;
        let ang = sectorial_angle(&restricted).angle.unwrap_or(f64::INFINITY);
        rep.bound(&format!("sector sharp t={}", label(t)), ang - t * theta, 1e-6);
        rep.bound(
            &format!("sector banach t={}", label(t)),
            ang - (t * theta + (1.0 - t) * std::f64::consts::FRAC_PI_2),
            1e-6,
        );
        let scaled = power_cross(&xs, t, ctx, tol)?.value.into_inner();
        rep.bound(
            &format!("scaling t={}", label(t)),
            operator_norm(&(scaled - pt * c(cs.powf(t)))),
            1e-7 * (1.0 + cs * nx),
        );
        let m = membership(pt, ctx, tol)?;
        rep.flag(&format!("r closed t={}", label(t)), m.in_r, format!("r residual {:.3e}", m.r_residual));
        if in_f {
            rep.flag(&format!("F closed t={}", label(t)), m.in_f, format!("F residual {:.3e}", m.f_residual));
        }
    }
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// Sector bounds for `x^t` on `grid` and for the roots `x^{1/m}`, `m` in `roots`.
pub fn sector_power_report(
    x: &Mat,
    ctx: &AmbientContext,
    grid: &[f64],
    roots: &[u32],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) || roots.contains(&0) {
        return Err(Error::Input("exponents must lie in (0, 1]".into()));
    }
    let t0 = std::time::Instant::now();
    let y = require_r(x, ctx, tol)?;
    let theta = sectorial_angle(&y).angle.unwrap_or(std::f64::consts::FRAC_PI_2);
    let mut rep = VerificationReport::new("sectt", &[x], *tol);
    rep.note(format!("angle(x) = {theta:.12e}"));
    let angle_of = |t: f64| -> Result<f64> {
        let p = power_cross(x, t, ctx, tol)?.value.into_inner();
        Ok(sectorial_angle(&ctx.restrict(&p, tol)?).angle.unwrap_or(f64::INFINITY))
    };
    for &t in grid {
        let a = angle_of(t)?;
        rep.bound(&format!("sharp t={}", label(t)), a - t * theta, 1e-6);
        rep.bound(
            &format!("banach t={}", label(t)),
            a - (t * theta + (1.0 - t) * std::f64::consts::FRAC_PI_2),
            1e-6,
        );
    }
    for &m in roots {
        let a = angle_of(1.0 / m as f64)?;
        rep.bound(
            &format!("root m={m}"),
            a - std::f64::consts::FRAC_PI_2 / m as f64,
            1e-6,
        );
    }
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// Residuals `||x^{1/n} x - x||` for `n = 2, 4, ..., 2^k <= n_max`.
#[derive(Clone, Debug)]
pub struct RootBai {
    pub n: Vec<u64>,
    pub residuals: Vec<f64>,
    pub report: VerificationReport,
}

pub const DEFAULT_ROOT_N_MAX: u64 = 1 << 30;

pub fn root_bai_check(x: &Mat, ctx: &AmbientContext, n_max: u64, tol: &Tolerances) -> Result<RootBai> {
    if n_max < 2 {
        return Err(Error::Input("n_max must be at least 2".into()));
    }
    let t0 = std::time::Instant::now();
    let y = require_r(x, ctx, tol)?;
    let levels = 63 - n_max.leading_zeros();
    let mut ns = Vec::new();
    let mut res = Vec::new();
    for j in 1..=levels {
        let n = 1u64 << j;
        let root = pow_accretive(&y, 1.0 / n as f64)?;
        ns.push(n);
        res.push(operator_norm(&(root * &y - &y)));
    }
    let mut rep = VerificationReport::new("root_bai", &[x], *tol);
    let last = *res.last().unwrap();
    rep.bound(
        &format!("residual at n={}", ns.last().unwrap()),
        last,
        1e-6 * operator_norm(&y).max(1.0),
    );
    let monotone = res.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    rep.note(format!(
        "decay {}: {}",
        if monotone { "monotone" } else { "not monotone" },
        res.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(" ")
    ));
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(RootBai {
        n: ns,
        residuals: res,
        report: rep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, CMatrix, C64, I};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn constants() {
        assert!((bal_constant(0.5) - 4.0 / std::f64::consts::PI).abs() < 1e-15);
        let g14 = gamma(0.25);
        let d = g14 * g14 / (2.0 * std::f64::consts::PI.sqrt() * std::f64::consts::PI);
        assert!((drury_constant(0.5) - d).abs() < 1e-13);
        for k in 1..10 {
            let t = k as f64 / 10.0;
            assert!(drury_constant(t) <= bal_constant(t));
            assert!(drury_constant(t) >= 1.0);
        }
    }

    #[test]
    fn laws_on_unit() {
        let ctx = AmbientContext::full(2);
        let rep = power_property_report(&eye(2), &ctx, &[0.25, 0.5, 0.75], &tol()).unwrap();
        assert!(rep.passed, "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn sector_of_root_of_normal() {
        let x = CMatrix::from_diagonal(&[I, c(1.0)]).unwrap();
        let ctx = AmbientContext::full(2);
        let h = power_cross(&x, 0.5, &ctx, &tol()).unwrap().value;
        let a = sectorial_angle(&h).angle.unwrap();
        assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
        let rep = power_property_report(&x, &ctx, &[0.5], &tol()).unwrap();
        assert!(rep.passed, "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn sector_report_on_rotated_scalar() {
        // x = e^{i 0.4} has angle 0.4 and x^t has angle 0.4 t exactly
        let x = eye(1) * C64::from_polar(1.0, 0.4);
        let rep = sector_power_report(&x, &AmbientContext::full(1), &[0.5], &[2, 4], &tol()).unwrap();
        assert!(rep.passed, "{:?}", rep.failures().collect::<Vec<_>>());
        assert!(rep.check("sharp t=0.5").unwrap().residual.abs() < 1e-12);
    }

    #[test]
    fn root_bai_examples() {
        let ctx = AmbientContext::full(2);
        let rb = root_bai_check(&eye(2), &ctx, 1024, &tol()).unwrap();
        assert!(rb.residuals.iter().all(|&r| r < 1e-15));
        let x = CMatrix::from_diagonal(&[c(1.0), c(0.5)]).unwrap();
        let rb = root_bai_check(&x, &ctx, 1024, &tol()).unwrap();
        for (n, r) in rb.n.iter().zip(&rb.residuals) {
            let oracle = (0.5f64.powf(1.0 / *n as f64) * 0.5 - 0.5).abs();
            assert!((r - oracle).abs() < 1e-13);
        }
        let j = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let rb = root_bai_check(&j, &ctx, 1024, &tol()).unwrap();
        // x^{1/n} x - x = [[0, 1/n], [0, 0]]
        let r1024 = *rb.residuals.last().unwrap();
        assert!((r1024 - 1.0 / 1024.0).abs() < 1e-12);
        assert!(!rb.report.passed);
        let rb = root_bai_check(&j, &ctx, DEFAULT_ROOT_N_MAX, &tol()).unwrap();
        assert!(rb.report.passed);
    }
}
