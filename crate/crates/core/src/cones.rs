//! The cones `F = {x : ||e - x|| <= 1}` and `r = {x : Re W(x) >= 0}` relative to
//! an explicit unital ambient, and the order `b <= a iff a - b in r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, eye, herm_part, matrix_exp, operator_norm, singular_values, solve, CMatrix, Mat,
    Tolerances,
};
use crate::numrange::abscissa;
use crate::report::VerificationReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmbientMode {
    Full,
    Corner,
}

/// The unital algebra in which norms, ranges and cones are computed: either
/// `M_n` itself or a corner `e M_n e` for a Hermitian projection `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientContext {
    n: usize,
    unit: CMatrix,
    mode: AmbientMode,
    /// Isometry `w` (`n x k`) with `w w* = e`.
    iso: Mat,
}

impl AmbientContext {
    pub fn full(n: usize) -> Self {
        AmbientContext {
            n,
            unit: CMatrix::identity(n),
            mode: AmbientMode::Full,
            iso: eye(n),
        }
    }

    /// Corner ambient cut down by the Hermitian projection `e`.
    pub fn corner(e: &CMatrix, tol: &Tolerances) -> Result<Self> {
        let n = e.dim();
        let scale = 1.0 + operator_norm(e);
        let idem = operator_norm(&(e.as_mat() * e.as_mat() - e.as_mat()));
        if idem > tol.eq_tol * scale {
            return Err(Error::Input(format!("corner unit is not idempotent (residual {idem:.3e})")));
        }
        let sa = operator_norm(&(e.as_mat() - e.adjoint()));
        if sa > tol.eq_tol * scale {
            return Err(Error::Input(format!("corner unit is not Hermitian (residual {sa:.3e})")));
        }
        let (vals, vecs) = eigh(&herm_part(e));
        let cols: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
        if cols.is_empty() {
            return Err(Error::Input("corner unit is zero".into()));
        }
        let iso = Mat::from_fn(n, cols.len(), |i, k| vecs[(i, cols[k])]);
        if cols.len() == n {
            return Ok(AmbientContext::full(n));
        }
        Ok(AmbientContext {
            n,
            unit: e.clone(),
            mode: AmbientMode::Corner,
            iso,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the underlying Hilbert space of the corner.
    pub fn rank(&self) -> usize {
        self.iso.ncols()
    }

    pub fn unit(&self) -> &CMatrix {
        &self.unit
    }

    pub fn mode(&self) -> AmbientMode {
        self.mode
    }

    pub fn isometry(&self) -> &Mat {
        &self.iso
    }

    /// Checks `e x = x e = x` and returns the compression `w* x w`.
    pub fn restrict(&self, x: &Mat, tol: &Tolerances) -> Result<Mat> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::Input(format!(
                "element is {}x{}, ambient dimension is {}",
                x.nrows(),
                x.ncols(),
                self.n
            )));
        }
        if self.mode == AmbientMode::Full {
            return Ok(x.clone());
        }
        let e = self.unit.as_mat();
        let res = operator_norm(&(e * x - x)).max(operator_norm(&(x * e - x)));
        if res > tol.eq_tol * operator_norm(x).max(1.0) {
            return Err(Error::Input(format!(
                "element does not lie in the corner (residual {res:.3e})"
            )));
        }
        Ok(self.iso.adjoint() * x * &self.iso)
    }

    /// Inverse of [`restrict`](Self::restrict): `w y w*`.
    pub fn embed(&self, y: &Mat) -> Mat {
        if self.mode == AmbientMode::Full {
            return y.clone();
        }
        &self.iso * y * self.iso.adjoint()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeMembership {
    pub in_f: bool,
    pub in_r: bool,
    /// `||e - x|| - 1`.
    pub f_residual: f64,
    /// `-abscissa(x)`.
    pub r_residual: f64,
    pub tolerance: Tolerances,
    /// Some residual lies strictly inside `(-tol, tol)`.
    pub boundary: bool,
}

fn membership_restricted(y: &Mat, tol: &Tolerances) -> ConeMembership {
    let k = y.nrows();
    let f_residual = operator_norm(&(eye(k) - y)) - 1.0;
    let r_residual = -abscissa(y);
    ConeMembership {
        in_f: f_residual <= tol.eq_tol,
        in_r: r_residual <= tol.psd_tol,
        f_residual,
        r_residual,
        tolerance: *tol,
        boundary: f_residual.abs() < tol.eq_tol || r_residual.abs() < tol.psd_tol,
    }
}

/// Membership of `x` in both cones of `ctx`.
pub fn membership(x: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<ConeMembership> {
    Ok(membership_restricted(&ctx.restrict(x, tol)?, tol))
}

pub fn in_f(x: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<ConeMembership> {
    membership(x, ctx, tol)
}

pub fn in_r(x: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<ConeMembership> {
    membership(x, ctx, tol)
}

/// Restricts `x` and fails unless it is accretive.
pub(crate) fn require_r(x: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<Mat> {
    let y = ctx.restrict(x, tol)?;
    let r_residual = -abscissa(&y);
    if r_residual > tol.psd_tol {
        return Err(Error::NotInCone {
            cone: "r",
            residual: r_residual,
        });
    }
    Ok(y)
}

pub(crate) fn require_f(x: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<Mat> {
    let y = ctx.restrict(x, tol)?;
    let f_residual = operator_norm(&(eye(y.nrows()) - &y)) - 1.0;
    if f_residual > tol.eq_tol {
        return Err(Error::NotInCone {
            cone: "F",
            residual: f_residual,
        });
    }
    Ok(y)
}

/// Verdicts and worst margins of the five accretivity conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaccrConditions {
    pub verdicts: [bool; 5],
    /// Worst scaled violation per condition; positive means violated.
    pub margins: [f64; 5],
}

impl ChaccrConditions {
    pub fn unanimous(&self) -> bool {
        self.verdicts.iter().all(|&v| v == self.verdicts[0])
    }
}

/// Evaluates the five equivalent characterisations of accretivity on `t_grid`:
/// (1) `abscissa >= 0`; (2) `||1 - tx|| <= 1 + t^2||x||^2`;
/// (3) `||exp(-tx)|| <= 1`; (4) `||(t + x)^{-1}|| <= 1/t`;
/// (5) `||1 - tx|| <= ||1 - t^2 x^2||`.
pub fn chaccr_conditions(
    x: &Mat,
    ctx: &AmbientContext,
    t_grid: &[f64],
    tol: &Tolerances,
) -> Result<ChaccrConditions> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Input("t grid must be nonempty with positive entries".into()));
    }
    let y = ctx.restrict(x, tol)?;
    let k = y.nrows();
    let id = eye(k);
    let ny = operator_norm(&y);
    let y2 = &y * &y;
    let mut margins = [f64::NEG_INFINITY; 5];
    margins[0] = -abscissa(&y) - tol.psd_tol;
    for &t in t_grid {
        let slack = tol.eq_tol * (1.0 + ny * ny * t * t);
        let one_minus = operator_norm(&(&id - &y * c(t)));
        margins[1] = margins[1].max(one_minus - (1.0 + t * t * ny * ny) - slack);
        let e = match matrix_exp(&(&y * c(-t))) {
            Ok(e) => operator_norm(&e),
            Err(_) => f64::INFINITY,
        };
        margins[2] = margins[2].max(e - 1.0 - slack);
        let smin = singular_values(&(&id * c(t) + &y)).last().copied().unwrap_or(0.0);
        let inv_norm_t = if smin > 0.0 { t / smin } else { f64::INFINITY };
        margins[3] = margins[3].max(inv_norm_t - 1.0 - slack);
        let rhs = operator_norm(&(&id - &y2 * c(t * t)));
        margins[4] = margins[4].max(one_minus - rhs - slack);
    }
    let verdicts = margins.map(|m| m <= 0.0);
    Ok(ChaccrConditions { verdicts, margins })
}

pub fn chaccr_verify(
    x: &Mat,
    ctx: &AmbientContext,
    t_grid: &[f64],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    let cond = chaccr_conditions(x, ctx, t_grid, tol)?;
    let mut rep = VerificationReport::new("chaccr", &[x], *tol);
    for (i, (v, m)) in cond.verdicts.iter().zip(cond.margins).enumerate() {
        rep.note(format!("condition {}: {} (margin {:.6e})", i + 1, v, m));
    }
    let agree = cond.unanimous();
    let detail = format!("verdicts {:?}", cond.verdicts);
    rep.flag("conditions agree", agree, if agree { String::new() } else { detail });
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// `x + eps e` rescaled into `F`: returns `(C, y, ||e - y|| - 1)` with
/// `C = eps + ||x||^2 / eps` and `y = (x + eps e) / C`.
pub fn scale_into_f(
    x: &Mat,
    ctx: &AmbientContext,
    eps: f64,
    tol: &Tolerances,
) -> Result<(f64, CMatrix, f64)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Input(format!("epsilon {eps} must be positive")));
    }
    let y = require_r(x, ctx, tol)?;
    let nx = operator_norm(&y);
    let big_c = eps + nx * nx / eps;
    let z = (&y + eye(y.nrows()) * c(eps)) / c(big_c);
    let cert = operator_norm(&(eye(y.nrows()) - &z)) - 1.0;
    Ok((big_c, CMatrix::computed(ctx.embed(&z), "scale_into_f")?, cert))
}

/// `a_t = x (e + t x)^{-1}`; `t a_t` lies in `F` and `||a_t - x|| <= t ||x||^2`.
pub fn approximate_from_f(x: &Mat, ctx: &AmbientContext, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Input(format!("t = {t} must be positive")));
    }
    let y = require_r(x, ctx, tol)?;
    let k = y.nrows();
    let m = eye(k) + &y * c(t);
    // x (1 + tx)^{-1} = (1 + tx)^{-1} x since they commute
    let a = solve(&m, &y).ok_or_else(|| Error::Numeric("e + tx is singular".into()))?;
    CMatrix::computed(ctx.embed(&a), "approximate_from_f")
}

/// `b <= a` in the real-positive order.
pub fn order_leq(b: &Mat, a: &Mat, tol: &Tolerances) -> Result<bool> {
    if a.shape() != b.shape() {
        return Err(Error::Input("order_leq: dimension mismatch".into()));
    }
    Ok(abscissa(&(a - b)) >= -tol.psd_tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfFDecomposition {
    pub x: CMatrix,
    pub y: CMatrix,
    /// `x - y == b` entrywise in floating point.
    pub bitwise_exact: bool,
    /// Number of entries where floating-point `x - y` differs from `b`.
    pub inexact_entries: usize,
    pub reconstruction_residual: f64,
    /// `||e - 2x|| - 1` and `||e - 2y|| - 1`.
    pub x_residual: f64,
    pub y_residual: f64,
}

/// `b = x - y` with `x = (e + b)/2`, `y = (e - b)/2`, both in `F/2`.
pub fn decompose_half_f(b: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<HalfFDecomposition> {
    let rb = ctx.restrict(b, tol)?;
    let nb = operator_norm(&rb);
    if nb >= 1.0 {
        return Err(Error::Precondition(format!("||b|| = {nb:.6e} must be < 1")));
    }
    let e = ctx.unit().as_mat();
    let half = c(0.5);
    let x = (e + b) * half;
    let y = (e - b) * half;
    let diff = &x - &y;
    let inexact_entries = diff.iter().zip(b.iter()).filter(|(p, q)| p != q).count();
    let reconstruction_residual = operator_norm(&(&diff - b));
    let two = c(2.0);
    let x_residual = operator_norm(&ctx.restrict(&(e - &x * two), tol)?) - 1.0;
    let y_residual = operator_norm(&ctx.restrict(&(e - &y * two), tol)?) - 1.0;
    Ok(HalfFDecomposition {
        x: CMatrix::computed(x, "decompose")?,
        y: CMatrix::computed(y, "decompose")?,
        bitwise_exact: inexact_entries == 0,
        inexact_entries,
        reconstruction_residual,
        x_residual,
        y_residual,
    })
}

/// Membership certificates for [`decompose_half_f`]. Reconstruction is
/// checked to `eq_tol`; the bitwise comparison is recorded as a note.
pub fn decompose_report(b: &Mat, ctx: &AmbientContext, tol: &Tolerances) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    let d = decompose_half_f(b, ctx, tol)?;
    let mut rep = VerificationReport::new("decompose", &[b], *tol);
    rep.bound("x in F/2", d.x_residual, tol.eq_tol);
    rep.bound("y in F/2", d.y_residual, tol.eq_tol);
    rep.bound("x - y = b", d.reconstruction_residual, tol.eq_tol);
    rep.note(format!(
        "bitwise x - y == b: {} ({} inexact entries)",
        d.bitwise_exact, d.inexact_entries
    ));
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// The common upper bound `a = e` of two strict contractions, with the
/// order and `F/2` certificates.
pub fn upper_bound_pair(
    x: &Mat,
    y: &Mat,
    ctx: &AmbientContext,
    tol: &Tolerances,
) -> Result<(CMatrix, VerificationReport)> {
    let rx = ctx.restrict(x, tol)?;
    let ry = ctx.restrict(y, tol)?;
    let (nx, ny) = (operator_norm(&rx), operator_norm(&ry));
    if nx >= 1.0 || ny >= 1.0 {
        return Err(Error::Precondition(format!(
            "upper_bound_pair needs ||x||, ||y|| < 1 (got {nx:.6e}, {ny:.6e})"
        )));
    }
    let k = ctx.rank();
    let id = eye(k);
    let mut rep = VerificationReport::new("upper_bound_pair", &[x, y], *tol);
    rep.bound("x <= e", -abscissa(&(&id - &rx)), tol.psd_tol);
    rep.bound("y <= e", -abscissa(&(&id - &ry)), tol.psd_tol);
    rep.bound("e in F/2", operator_norm(&(&id - &id * c(2.0))) - 1.0, tol.eq_tol);
    Ok((ctx.unit().clone(), rep))
}
