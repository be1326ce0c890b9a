//! Numerical range (field of values) via the support function
//! `h(theta) = lambda_max(Re(e^{-i theta} x))`.
//!
//! For a matrix inside a unital ambient the state-based numerical range of
//! the algebra coincides with the field of values, so everything here works
//! directly on the (possibly corner-compressed) matrix.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, herm_part, operator_norm, top_eigpair, Mat, Tolerances, C64};
use crate::report::VerificationReport;

/// Supporting half-planes and boundary points of `W(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeBoundary {
    pub angles: Vec<f64>,
    pub support_values: Vec<f64>,
    pub boundary_points: Vec<C64>,
}

/// Smallest sector `S_theta` containing `W(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorVerdict {
    /// `None` when 0 is interior to `W(x)` and no sector contains it.
    pub angle: Option<f64>,
    /// Boundary point of maximal `|arg|`.
    pub witness: Option<C64>,
}

fn rotate(x: &Mat, theta: f64) -> Mat {
    x * C64::from_polar(1.0, -theta)
}

fn bra_ket(v: &nalgebra::DVector<C64>, x: &Mat) -> C64 {
    (v.adjoint() * x * v)[(0, 0)]
}

/// `h(theta)` together with the boundary point `v* x v` of the top eigenvector.
pub fn support(x: &Mat, theta: f64) -> (f64, C64) {
    let (h, v) = top_eigpair(&herm_part(&rotate(x, theta)));
    (h, bra_ket(&v, x))
}

pub fn boundary(x: &Mat, m: usize) -> Result<RangeBoundary> {
    if m < 8 {
        return Err(Error::Input(format!("angle count {m} must be at least 8")));
    }
    let mut out = RangeBoundary {
        angles: Vec::with_capacity(m),
        support_values: Vec::with_capacity(m),
        boundary_points: Vec::with_capacity(m),
    };
    for j in 0..m {
        let theta = TAU * j as f64 / m as f64;
        let (h, p) = support(x, theta);
        if !h.is_finite() || !p.re.is_finite() || !p.im.is_finite() {
            return Err(Error::Numeric(format!("eigenproblem failed at theta = {theta}")));
        }
        out.angles.push(theta);
        out.support_values.push(h);
        out.boundary_points.push(p);
    }
    Ok(out)
}

/// Minimum of `Re` over `W(x)`.
pub fn abscissa(x: &Mat) -> f64 {
    eigh(&herm_part(x)).0[0]
}

/// Golden-section maximisation of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximises a `2 pi`-periodic function: grid scan, then golden-section
/// refinement around the best few grid points.
fn periodic_max(f: impl Fn(f64) -> f64, grid: usize) -> (f64, f64) {
    let step = TAU / grid as f64;
    let vals: Vec<f64> = (0..grid).map(|k| f(k as f64 * step)).collect();
    let mut order: Vec<usize> = (0..grid).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut best = (order[0] as f64 * step, vals[order[0]]);
    for &k in order.iter().take(3) {
        let t0 = k as f64 * step;
        let r = golden_max(&f, t0 - step, t0 + step, 60);
        if r.1 > best.1 {
            best = r;
        }
    }
    best
}

/// Euclidean distance from `z` to `W(x)`.
pub fn dist_to_point(x: &Mat, z: C64) -> f64 {
    let g = |theta: f64| (C64::from_polar(1.0, -theta) * z).re - support(x, theta).0;
    let (_, d) = periodic_max(g, 512);
    let scale = operator_norm(x) + z.norm();
    if d <= 1e-12 * scale {
        0.0
    } else {
        d
    }
}

/// `lambda_min(Re(e^{i alpha} x))`, the minimum over `W(x)` of `Re(e^{i alpha} w)`,
/// with the minimising boundary point.
fn mu(x: &Mat, alpha: f64) -> (f64, C64) {
    let (vals, vecs) = eigh(&herm_part(&(x * C64::from_polar(1.0, alpha))));
    let v = vecs.column(0).into_owned();
    (vals[0], bra_ket(&v, x))
}

fn lex_min(a: C64, b: C64) -> C64 {
    if (a.re, a.im) <= (b.re, b.im) {
        a
    } else {
        b
    }
}

pub fn sectorial_angle(x: &Mat) -> SectorVerdict {
    let nx = operator_norm(x);
    if nx == 0.0 {
        return SectorVerdict {
            angle: Some(0.0),
            witness: Some(C64::new(0.0, 0.0)),
        };
    }
    let delta = 1e-14 * nx;
    let feasible = |a: f64| mu(x, a).0 >= -delta;
    let (mut a_star, m_star) = periodic_max(|a| mu(x, a).0, 256);
    if m_star < -delta {
        return SectorVerdict {
            angle: None,
            witness: None,
        };
    }
    // centre the branch so that a_star lies in (-pi, pi]
    if a_star > PI {
        a_star -= TAU;
    }
    // upper end of the feasible interval of rotations
    let (mut lo, mut hi) = (a_star, a_star + PI);
    if feasible(hi) {
        lo = hi;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_b = lo;
    let (mut lo2, mut hi2) = (a_star, a_star - PI);
    if feasible(hi2) {
        lo2 = hi2;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo2 + hi2);
        if feasible(mid) {
            lo2 = mid;
        } else {
            hi2 = mid;
        }
    }
    let alpha_a = lo2;
    let mut psi_hi = FRAC_PI_2 - alpha_b;
    let mut psi_lo = -FRAC_PI_2 - alpha_a;
    while psi_lo > PI {
        psi_lo -= TAU;
        psi_hi -= TAU;
    }
    while psi_hi < -PI {
        psi_lo += TAU;
        psi_hi += TAU;
    }
    let w_hi = mu(x, alpha_b).1;
    let w_lo = mu(x, alpha_a).1;
    let (angle, witness) = if psi_hi >= PI || psi_lo <= -PI {
        let w = if psi_hi >= PI { w_hi } else { w_lo };
        (PI, w)
    } else {
        let (a, b) = (psi_hi.abs(), psi_lo.abs());
        if (a - b).abs() <= 1e-12 {
            (a.max(b), lex_min(w_hi, w_lo))
        } else if a > b {
            (a, w_hi)
        } else {
            (b, w_lo)
        }
    };
    SectorVerdict {
        angle: Some(angle.clamp(0.0, PI)),
        witness: Some(witness),
    }
}

/// Near positivity: a contraction whose sectorial angle is below `arcsin(eps)`.
pub fn is_nearly_positive(x: &Mat, eps: f64, tol: &Tolerances) -> Result<(bool, VerificationReport)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Input(format!("epsilon {eps} must lie in (0, 1)")));
    }
    let mut rep = VerificationReport::new("nearly_positive", &[x], *tol);
    let nx = operator_norm(x);
    let contraction = nx <= 1.0 + tol.eq_tol;
    let sector = sectorial_angle(x);
    let cap = eps.asin();
    let thin = matches!(sector.angle, Some(a) if a < cap);
    let verdict = contraction && thin;
    rep.note(format!("norm = {nx:.17e}"));
    rep.note(match sector.angle {
        Some(a) => format!("sectorial angle = {a:.17e}, arcsin(eps) = {cap:.17e}"),
        None => "not sectorial".to_string(),
    });
    let im_dist = operator_norm(&(x - herm_part(x)));
    rep.note(format!("||x - Re x|| = {im_dist:.17e}"));
    if verdict {
        rep.bound("imaginary part within eps", im_dist, eps + tol.eq_tol);
    }
    Ok((verdict, rep))
}

/// Shifts `x` by the real scalar `s` times the identity.
pub fn shift(x: &Mat, s: f64) -> Mat {
    let mut y = x.clone();
    for i in 0..y.nrows() {
        y[(i, i)] += c(s);
    }
    y
}
