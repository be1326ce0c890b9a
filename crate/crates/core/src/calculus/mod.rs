//! Principal fractional powers of accretive elements and the F-transform.
//!
//! Three independent routes to `x^r` are provided:
//!
//! * [`power_series`]: the binomial series `sum_k C(r,k) (-1)^k (e - x)^k`,
//!   valid on `F`;
//! * [`power_shifted`]: `lim_{eps -> 0} (x + eps e)^r` on the Schur form, with
//!   Richardson extrapolation along a halving ladder of shifts;
//! * [`power_balakrishnan`]: `sin(r pi)/pi int_0^inf s^{r-1} (s + x)^{-1} x ds`.
//!
//! [`power`] runs every applicable route and refuses to answer when they
//! disagree. For accretive `x` the kernel is reducing, so every route
//! deflates it exactly and works on the invertible remainder.

mod laws;
pub mod quadrature;
pub mod spectral;

pub use laws::{
    bal_constant, drury_constant, power_property_report, root_bai_check, sector_power_report, RootBai,
    DEFAULT_ROOT_N_MAX,
};

use serde::{Deserialize, Serialize};

use crate::cones::{membership, require_r, AmbientContext};
use crate::error::{Error, Result};
use crate::linalg::{c, eye, frob, operator_norm, schur, singular_values, solve, CMatrix, Mat, Tolerances};
use crate::numrange::dist_to_point;
use crate::report::VerificationReport;
use quadrature::{integrate_unit, Rule};
use spectral::{check_branch, deflate, shifted_ladder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    ShiftedSpectral,
    Balakrishnan,
    CrossValidated,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::ShiftedSpectral => "shifted",
            Method::Balakrishnan => "balakrishnan",
            Method::CrossValidated => "cross",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Method::Series),
            "shifted" => Ok(Method::ShiftedSpectral),
            "balakrishnan" => Ok(Method::Balakrishnan),
            "cross" => Ok(Method::CrossValidated),
            _ => Err(Error::Input(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss nodes in the initial panel layout of each half-integral.
    pub node_count: usize,
    /// Extrapolation levels of the shifted-spectral ladder.
    pub richardson_levels: usize,
    /// Term budget of the binomial series.
    pub series_budget: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            node_count: 200,
            richardson_levels: 4,
            series_budget: 200_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 16 {
            return Err(Error::Input(format!("node_count {} must be at least 16", self.node_count)));
        }
        if self.richardson_levels < 1 {
            return Err(Error::Input("richardson_levels must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_exponent(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Input(format!("exponent {r} must lie in (0, 1]")));
    }
    Ok(())
}

/// Outcome of the binomial series on the deflated core.
enum SeriesRun {
    Converged { value: Mat, terms: usize },
    Budget { terms: usize, bound: f64 },
}

fn series_core(y: &Mat, r: f64, conv_tol: f64, budget: usize) -> SeriesRun {
    let d = deflate(y);
    let m = d.core.nrows();
    if m == 0 {
        return SeriesRun::Converged {
            value: Mat::zeros(y.nrows(), y.nrows()),
            terms: 0,
        };
    }
    let a = eye(m) - &d.core;
    let mut sum = eye(m);
    let mut apow = eye(m);
    let mut coef = 1.0;
    let mut bound = f64::INFINITY;
    for k in 1..=budget {
        // coef = C(r, k) (-1)^k, negative for every k >= 1
        coef *= (k as f64 - 1.0 - r) / k as f64;
        apow = &apow * &a;
        sum += &apow * c(coef);
        let next = frob(&(&apow * &a));
        let tail = coef.abs() * (k as f64 - r) / r;
        bound = next * tail;
        if bound < conv_tol {
            return SeriesRun::Converged {
                value: d.lift(&sum),
                terms: k,
            };
        }
    }
    SeriesRun::Budget { terms: budget, bound }
}

/// `x^r` by the binomial series; requires `x` in `F`.
pub fn power_series(x: &Mat, r: f64, ctx: &AmbientContext, tol: &Tolerances) -> Result<CMatrix> {
    power_series_with(x, r, ctx, tol, &QuadratureConfig::default())
}

pub fn power_series_with(
    x: &Mat,
    r: f64,
    ctx: &AmbientContext,
    tol: &Tolerances,
    cfg: &QuadratureConfig,
) -> Result<CMatrix> {
    check_exponent(r)?;
    let y = crate::cones::require_f(x, ctx, tol)?;
    if r == 1.0 {
        return CMatrix::computed(x.clone(), "power_series");
    }
    match series_core(&y, r, tol.conv_tol, cfg.series_budget) {
        SeriesRun::Converged { value, .. } => CMatrix::computed(ctx.embed(&value), "power_series"),
        SeriesRun::Budget { terms, bound } => Err(Error::Numeric(format!(
            "binomial series: tail bound {bound:.3e} above {:.3e} after {terms} terms",
            tol.conv_tol
        ))),
    }
}

/// `x^r` as the extrapolated limit of `(x + eps e)^r`.
pub fn power_shifted(
    x: &Mat,
    r: f64,
    ctx: &AmbientContext,
    quad: &QuadratureConfig,
    tol: &Tolerances,
) -> Result<CMatrix> {
    check_exponent(r)?;
    quad.validate()?;
    let y = require_r(x, ctx, tol)?;
    if r == 1.0 {
        return CMatrix::computed(x.clone(), "power_shifted");
    }
    let ladder = shifted_ladder(&y, r, quad.richardson_levels)?;
    let scale = 1.0 + operator_norm(&y);
    let inc = &ladder.increments;
    if let (Some(first), Some(last)) = (inc.first(), inc.last()) {
        if *last > 1e-8 * scale && last > first {
            return Err(Error::Numeric(format!(
                "shifted ladder diverges: eps0 = {:.3e}, increments = {:?}",
                ladder.eps0, inc
            )));
        }
        if *last > 1e-6 * scale {
            return Err(Error::Numeric(format!(
                "shifted ladder not converged: eps0 = {:.3e}, increments = {:?}",
                ladder.eps0, inc
            )));
        }
    }
    CMatrix::computed(ctx.embed(&ladder.value), "power_shifted")
}

/// `x^r` by the Balakrishnan integral.
///
/// With `Y = x/||x||` and the split at `s = 1`, the substitutions
/// `s = v^{1/r}` on `[0, 1]` and `s = v^{-1/(1-r)}` on `[1, inf)` remove both
/// endpoint singularities:
/// `x^r = sin(r pi)/pi ||x||^r ( 1/r int_0^1 (v^{1/r} + Y)^{-1} Y dv
///        + 1/(1-r) int_0^1 (1 + v^{1/(1-r)} Y)^{-1} Y dv )`.
pub fn power_balakrishnan(
    x: &Mat,
    r: f64,
    ctx: &AmbientContext,
    quad: &QuadratureConfig,
    tol: &Tolerances,
) -> Result<CMatrix> {
    check_exponent(r)?;
    quad.validate()?;
    let y = require_r(x, ctx, tol)?;
    if r == 1.0 {
        return CMatrix::computed(x.clone(), "power_balakrishnan");
    }
    let d = deflate(&y);
    let m = d.core.nrows();
    if m == 0 {
        return CMatrix::computed(Mat::zeros(x.nrows(), x.nrows()), "power_balakrishnan");
    }
    let norm = operator_norm(&d.core);
    let (q, t) = schur(&(&d.core / c(norm)))?;
    check_branch(&t)?;
    let id = eye(m);
    let resolvent = |a: f64, b: f64| -> Result<Mat> {
        // (a + b T)^{-1} T, upper triangular
        let lhs = &id * c(a) + &t * c(b);
        lhs.solve_upper_triangular(&t)
            .ok_or_else(|| Error::Numeric("singular resolvent in quadrature".into()))
    };
    let rule = Rule::new(20, 14);
    let panels = (quad.node_count / 20).max(1);
    let abs_tol = 1e-12;
    let max_panels = 200 * panels;
    let lower = integrate_unit(|v| resolvent(v.powf(1.0 / r), 1.0), &rule, panels, abs_tol, max_panels)?;
    let upper = integrate_unit(
        |v| resolvent(1.0, v.powf(1.0 / (1.0 - r))),
        &rule,
        panels,
        abs_tol,
        max_panels,
    )?;
    let pref = (r * std::f64::consts::PI).sin() / std::f64::consts::PI * norm.powf(r);
    let value = (lower.value * c(1.0 / r) + upper.value * c(1.0 / (1.0 - r))) * c(pref);
    let err = pref * (lower.error_estimate / r + upper.error_estimate / (1.0 - r));
    let target = 1e-6 * norm.powf(r);
    if err > target {
        return Err(Error::Numeric(format!(
            "Balakrishnan quadrature error estimate {err:.3e} exceeds {target:.3e}; increase node_count"
        )));
    }
    let z = &q * value * q.adjoint();
    CMatrix::computed(ctx.embed(&d.lift(&z)), "power_balakrishnan")
}

/// All candidate values of the cross-validated dispatcher.
#[derive(Clone, Debug)]
pub struct PowerOutcome {
    pub value: CMatrix,
    pub candidates: Vec<(Method, CMatrix)>,
    /// Pairwise operator-norm deviations.
    pub deviations: Vec<(Method, Method, f64)>,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl PowerOutcome {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().map(|d| d.2).fold(0.0, f64::max)
    }
}

/// Runs every applicable definition of `x^r` and returns the shifted-spectral
/// value when all agree within `1e-6 (1 + ||x||)`.
pub fn power_cross(x: &Mat, r: f64, ctx: &AmbientContext, tol: &Tolerances) -> Result<PowerOutcome> {
    power_cross_with(x, r, ctx, tol, &QuadratureConfig::default())
}

pub fn power_cross_with(
    x: &Mat,
    r: f64,
    ctx: &AmbientContext,
    tol: &Tolerances,
    quad: &QuadratureConfig,
) -> Result<PowerOutcome> {
    check_exponent(r)?;
    let y = require_r(x, ctx, tol)?;
    let mut notes = Vec::new();
    let mut candidates = vec![(Method::ShiftedSpectral, power_shifted(x, r, ctx, quad, tol)?)];
    if membership(x, ctx, tol)?.in_f {
        match series_core(&y, r, tol.conv_tol, quad.series_budget) {
            SeriesRun::Converged { value, terms } => {
                notes.push(format!("series converged in {terms} terms"));
                candidates.push((Method::Series, CMatrix::computed(ctx.embed(&value), "series")?));
            }
            SeriesRun::Budget { terms, bound } => {
                notes.push(format!("series skipped (budget): tail bound {bound:.3e} after {terms} terms"));
            }
        }
    } else {
        notes.push("series not applicable (outside F)".into());
    }
    if r < 1.0 {
        candidates.push((Method::Balakrishnan, power_balakrishnan(x, r, ctx, quad, tol)?));
    }
    let mut deviations = Vec::new();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let d = operator_norm(&(candidates[i].1.as_mat() - candidates[j].1.as_mat()));
            deviations.push((candidates[i].0, candidates[j].0, d));
        }
    }
    let tolerance = 1e-6 * (1.0 + operator_norm(&y));
    let worst = deviations.iter().map(|d| d.2).fold(0.0, f64::max);
    if worst > tolerance {
        let detail = deviations
            .iter()
            .map(|(a, b, d)| format!("{}-{}: {d:.3e}", a.name(), b.name()))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::MethodDisagreement {
            max_deviation: worst,
            tolerance,
            detail,
            candidates: candidates.into_iter().map(|(m, v)| (m.name().to_string(), v)).collect(),
        });
    }
    Ok(PowerOutcome {
        value: candidates[0].1.clone(),
        candidates,
        deviations,
        tolerance,
        notes,
    })
}

/// Cross-validated `x^r`.
pub fn power(x: &Mat, r: f64, ctx: &AmbientContext, tol: &Tolerances) -> Result<CMatrix> {
    Ok(power_cross(x, r, ctx, tol)?.value)
}

/// Dispatches on `method`.
pub fn power_by(
    x: &Mat,
    r: f64,
    method: Method,
    ctx: &AmbientContext,
    tol: &Tolerances,
) -> Result<CMatrix> {
    let quad = QuadratureConfig::default();
    match method {
        Method::Series => power_series_with(x, r, ctx, tol, &quad),
        Method::ShiftedSpectral => power_shifted(x, r, ctx, &quad, tol),
        Method::Balakrishnan => power_balakrishnan(x, r, ctx, &quad, tol),
        Method::CrossValidated => power(x, r, ctx, tol),
    }
}

/// `F(x) = x (e + x)^{-1}`.
pub fn f_transform(x: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<CMatrix> {
    let y = require_r(x, ctx, tol)?;
    let k = y.nrows();
    let z = solve(&(eye(k) + &y), &y).ok_or_else(|| Error::Numeric("e + x is singular".into()))?;
    CMatrix::computed(ctx.embed(&z), "f_transform")
}

/// Contraction certificate `||e - F(x)|| <= min(1, 1/d(-1, W(x)))`.
pub fn f_transform_report(x: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<VerificationReport> {
    let fx = f_transform(x, ctx, tol)?;
    let y = ctx.restrict(x, tol)?;
    let fy = ctx.restrict(&fx, tol)?;
    let k = y.nrows();
    let lhs = operator_norm(&(eye(k) - &fy));
    let d = dist_to_point(&y, c(-1.0));
    let bound = if d > 0.0 { (1.0 / d).min(1.0) } else { 1.0 };
    let mut rep = VerificationReport::new("f_transform", &[x], *tol);
    rep.bound("||e - F(x)|| <= min(1, 1/d(-1, W))", lhs - bound, 1e-8);
    let (back, cond) = f_inverse(fx.as_mat(), ctx, tol)?;
    rep.bound(
        "round trip",
        operator_norm(&(back.as_mat() - x)),
        1e-8 * (1.0 + cond),
    );
    rep.note(format!("distance from -1 = {d:.17e}, cond(e - F(x)) = {cond:.6e}"));
    Ok(rep)
}

/// `y (e - y)^{-1}` together with the condition number of `e - y`.
pub fn f_inverse(y: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<(CMatrix, f64)> {
    let z = ctx.restrict(y, tol)?;
    let k = z.nrows();
    let m = eye(k) - &z;
    let s = singular_values(&m);
    let (smax, smin) = (s[0], *s.last().unwrap());
    if !(smin > 1e-14 * smax.max(1e-300)) {
        return Err(Error::Input(format!(
            "e - y is singular (smallest singular value {smin:.3e})"
        )));
    }
    let w = solve(&m, &z).ok_or_else(|| Error::Input("e - y is singular".into()))?;
    Ok((CMatrix::computed(ctx.embed(&w), "f_inverse")?, smax / smin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::*;
    use crate::linalg::{C64, I};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn m(rows: &[&[f64]]) -> Mat {
        CMatrix::from_real_rows(rows).unwrap().into_inner()
    }

    fn diag(d: &[C64]) -> Mat {
        CMatrix::from_diagonal(d).unwrap().into_inner()
    }

    fn close(a: &Mat, b: &Mat, eps: f64) -> bool {
        operator_norm(&(a - b)) <= eps
    }

    #[test]
    fn series_examples() {
        let ctx = AmbientContext::full(2);
        for &r in &[0.1, 0.5, 0.9] {
            let y = power_series(&eye(2), r, &ctx, &tol()).unwrap();
            assert!(close(&y, &eye(2), 1e-15));
        }
        let y = power_series(&diag(&[c(1.0), c(0.25)]), 0.5, &ctx, &tol()).unwrap();
        assert!(close(&y, &diag(&[c(1.0), c(0.5)]), 1e-10));
        let x = m(&[&[1.0, 0.5], &[0.0, 1.0]]);
        let y = power_series(&x, 0.5, &ctx, &tol()).unwrap();
        assert!(close(&(y.as_mat() * y.as_mat()), &x, 1e-8));
        assert!(close(&y, &m(&[&[1.0, 0.25], &[0.0, 1.0]]), 1e-9));
        assert!(matches!(
            power_series(&(eye(2) * c(3.0)), 0.5, &ctx, &tol()),
            Err(Error::NotInCone { cone: "F", .. })
        ));
    }

    #[test]
    fn series_commutes_with_x() {
        let ctx = AmbientContext::full(3);
        let mut r = rng(7);
        let x = accretive_with(3, 1.0, &mut r).unwrap();
        let (_, y, _) = crate::cones::scale_into_f(&x, &ctx, 0.5, &tol()).unwrap();
        let p = power_series(&y, 0.3, &ctx, &tol()).unwrap();
        assert!(close(&(p.as_mat() * y.as_mat()), &(y.as_mat() * p.as_mat()), 1e-8));
    }

    #[test]
    fn shifted_examples() {
        let ctx = AmbientContext::full(2);
        let q = QuadratureConfig::default();
        let y = power_shifted(&diag(&[c(4.0), c(9.0)]), 0.5, &ctx, &q, &tol()).unwrap();
        assert!(close(&y, &diag(&[c(2.0), c(3.0)]), 1e-12));
        let y = power_shifted(&diag(&[c(0.0), c(1.0)]), 0.5, &ctx, &q, &tol()).unwrap();
        assert!(close(&y, &diag(&[c(0.0), c(1.0)]), 1e-12));
        let y = power_shifted(&diag(&[I, c(1.0)]), 0.5, &ctx, &q, &tol()).unwrap();
        let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!(close(&y, &diag(&[e, c(1.0)]), 1e-12));
    }

    fn scalar_oracle(lambda: f64, r: f64) -> f64 {
        // s = lambda e^y turns the Stieltjes integral into one over the real
        // line with exponentially decaying tails; trapezoid there is spectral.
        let h = 1e-3;
        let mut acc = 0.0;
        for k in -120_000i64..=120_000 {
            let y = k as f64 * h;
            acc += (r * y).exp() / (1.0 + y.exp());
        }
        (r * std::f64::consts::PI).sin() / std::f64::consts::PI * lambda * lambda.powf(r - 1.0) * acc * h
    }

    #[test]
    fn balakrishnan_examples() {
        let q = QuadratureConfig::default();
        let ctx = AmbientContext::full(2);
        let y = power_balakrishnan(&eye(2), 0.5, &ctx, &q, &tol()).unwrap();
        assert!(close(&y, &eye(2), 1e-10));
        let ctx1 = AmbientContext::full(1);
        let oracle = scalar_oracle(4.0, 0.5);
        assert!((oracle - 2.0).abs() < 1e-6);
        let y = power_balakrishnan(&(eye(1) * c(4.0)), 0.5, &ctx1, &q, &tol()).unwrap();
        assert!((y[(0, 0)].re - oracle).abs() < 1e-6);
        let x = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let y = power_balakrishnan(&x, 0.5, &ctx, &q, &tol()).unwrap();
        assert!(close(&(y.as_mat() * y.as_mat()), &x, 1e-6));
    }

    #[test]
    fn cross_examples() {
        let ctx = AmbientContext::full(2);
        for &r in &[0.2, 0.7] {
            let o = power_cross(&eye(2), r, &ctx, &tol()).unwrap();
            assert!(close(o.value.as_mat(), &eye(2), 1e-12));
            assert_eq!(o.candidates.len(), 3);
        }
        let o = power_cross(&diag(&[c(1.0), c(0.25)]), 0.5, &ctx, &tol()).unwrap();
        assert_eq!(o.candidates.len(), 3);
        assert!(close(o.value.as_mat(), &diag(&[c(1.0), c(0.5)]), 1e-10));
        let ctx6 = AmbientContext::full(6);
        for seed in 0..10 {
            let x = random_accretive(6, seed, 1.3).unwrap();
            for &r in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                let o = power_cross(&x, r, &ctx6, &tol()).unwrap();
                assert!(o.max_deviation() < 1e-6, "seed {seed} r {r}");
            }
        }
        assert!(matches!(
            power_cross(&(eye(2) * c(-1.0)), 0.5, &ctx, &tol()),
            Err(Error::NotInCone { cone: "r", .. })
        ));
    }

    #[test]
    fn f_transform_examples() {
        let ctx = AmbientContext::full(2);
        let z = f_transform(&Mat::zeros(2, 2), &ctx, &tol()).unwrap();
        assert!(close(&z, &Mat::zeros(2, 2), 0.0));
        let z = f_transform(&eye(2), &ctx, &tol()).unwrap();
        assert!(close(&z, &(eye(2) * c(0.5)), 1e-15));
        let z = f_transform(&diag(&[c(1.0), c(3.0)]), &ctx, &tol()).unwrap();
        assert!(close(&z, &diag(&[c(0.5), c(0.75)]), 1e-15));
        let (w, _) = f_inverse(&Mat::zeros(2, 2), &ctx, &tol()).unwrap();
        assert!(close(&w, &Mat::zeros(2, 2), 0.0));
        let (w, _) = f_inverse(&(eye(2) * c(0.5)), &ctx, &tol()).unwrap();
        assert!(close(&w, &eye(2), 1e-15));
        let x = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let fx = f_transform(&x, &ctx, &tol()).unwrap();
        let (w, _) = f_inverse(&fx, &ctx, &tol()).unwrap();
        assert!(close(&w, &x, 1e-9));
        assert!(matches!(f_inverse(&eye(2), &ctx, &tol()), Err(Error::Input(_))));
        assert!(f_transform_report(&x, &ctx, &tol()).unwrap().passed);
    }
}
