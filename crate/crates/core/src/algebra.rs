//! Explicit subalgebras of `M_n`: spans, generated algebras `ba(x)`, support
//! idempotents and the finite-dimensional ideal-theoretic checks built on
//! them.
//!
//! Closures in the infinite-dimensional statements are automatic here, so
//! `xA`, `xAx` and friends are plain linear spans, compared by rank tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calculus::f_transform;
use crate::calculus::spectral::{kernel_threshold, pow_accretive};
use crate::cones::{membership, require_r, AmbientContext, AmbientMode};
use crate::error::{Error, Result};
use crate::linalg::{c, eye, frob, kron, operator_norm, schur, unit, vec_rows, Mat, Tolerances, C64};
use crate::report::VerificationReport;

/// Relative threshold for rank decisions between spans.
pub const SPAN_RTOL: f64 = 1e-8;
/// Krylov residual below which `ba(x)` stops growing.
pub const BA_RTOL: f64 = 1e-10;
/// Residual threshold for the pseudo-inverse and invertibility solves.
pub const SOLVE_RTOL: f64 = 1e-8;
/// `s(x)` is cross-checked against `x^{1/2^k}` with this `k`.
pub const ROOT_LIMIT_LOG2: i32 = 40;

/// A linear subspace of `M_n` with a basis orthonormal in the trace inner
/// product.
#[derive(Clone, Debug)]
pub struct Span {
    n: usize,
    basis: Vec<Mat>,
}

fn inner(a: &Mat, b: &Mat) -> C64 {
    a.dotc(b)
}

impl Span {
    pub fn empty(n: usize) -> Self {
        Span { n, basis: vec![] }
    }

    pub fn from_generators(n: usize, gens: &[Mat]) -> Self {
        Self::with_tolerance(n, gens, SPAN_RTOL)
    }

    /// Greedy Gram–Schmidt (two passes) keeping directions whose residual
    /// exceeds `rtol` times the largest generator norm.
    pub fn with_tolerance(n: usize, gens: &[Mat], rtol: f64) -> Self {
        let scale = gens.iter().map(frob).fold(0.0, f64::max);
        let mut s = Span::empty(n);
        if scale == 0.0 {
            return s;
        }
        for g in gens {
            if s.basis.len() == n * n {
                break;
            }
            let r = s.residual(g);
            let nr = frob(&r);
            if nr > rtol * scale {
                s.basis.push(r / c(nr));
            }
        }
        s
    }

    fn residual(&self, x: &Mat) -> Mat {
        let mut r = x.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let k = inner(b, &r);
                r -= b * k;
            }
        }
        r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    pub fn coords(&self, x: &Mat) -> DVector<C64> {
        DVector::from_iterator(self.basis.len(), self.basis.iter().map(|b| inner(b, x)))
    }

    pub fn element(&self, coords: &DVector<C64>) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for (b, k) in self.basis.iter().zip(coords.iter()) {
            m += b * *k;
        }
        m
    }

    pub fn project(&self, x: &Mat) -> Mat {
        self.element(&self.coords(x))
    }

    /// `||x - P x||_F`.
    pub fn distance_abs(&self, x: &Mat) -> f64 {
        frob(&self.residual(x))
    }

    /// `||x - P x||_F / ||x||_F`, zero for `x = 0`.
    pub fn distance(&self, x: &Mat) -> f64 {
        let nx = frob(x);
        if nx == 0.0 {
            return 0.0;
        }
        self.distance_abs(x) / nx
    }

    pub fn contains(&self, x: &Mat) -> bool {
        self.distance(x) <= SPAN_RTOL
    }

    /// Largest distance from a basis element of `other` to `self`.
    pub fn excess(&self, other: &Span) -> f64 {
        other.basis.iter().map(|b| self.distance_abs(b)).fold(0.0, f64::max)
    }

    pub fn contains_span(&self, other: &Span) -> bool {
        self.excess(other) <= SPAN_RTOL
    }

    pub fn equals(&self, other: &Span) -> bool {
        self.dim() == other.dim() && self.contains_span(other) && other.contains_span(self)
    }

    /// `span{a b : a in self, b in other}`.
    pub fn products(&self, other: &Span) -> Span {
        let gens: Vec<Mat> = self
            .basis
            .iter()
            .flat_map(|a| other.basis.iter().map(move |b| a * b))
            .collect();
        Span::from_generators(self.n, &gens)
    }

    /// `span{l a r}` over the basis `a` of `self`; `None` stands for the unit.
    pub fn sandwich(&self, l: Option<&Mat>, r: Option<&Mat>) -> Span {
        let gens: Vec<Mat> = self
            .basis
            .iter()
            .map(|a| match (l, r) {
                (Some(l), Some(r)) => l * a * r,
                (Some(l), None) => l * a,
                (None, Some(r)) => a * r,
                (None, None) => a.clone(),
            })
            .collect();
        Span::from_generators(self.n, &gens)
    }

    /// Largest distance of a basis product `a b` from the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            for b in &self.basis {
                worst = worst.max(self.distance_abs(&(a * b)));
            }
        }
        worst
    }
}

/// Least squares `min ||a z - b||` through the SVD, with singular values below
/// `1e-12 sigma_max` discarded.
pub(crate) fn lstsq(a: DMatrix<C64>, b: &DVector<C64>) -> DVector<C64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = crate::linalg::svd(&a);
    let smax = svd.singular_values.max();
    svd.solve(b, 1e-12 * smax.max(f64::MIN_POSITIVE))
        .expect("svd computed with both factors")
}

fn stack(blocks: &[Vec<Mat>], rhs: &[Mat]) -> (DMatrix<C64>, DVector<C64>) {
    let d = blocks.len();
    let rows: usize = rhs.iter().map(|m| m.len()).sum();
    let mut a = DMatrix::zeros(rows, d);
    for (k, col) in blocks.iter().enumerate() {
        let mut off = 0;
        for m in col {
            let v = vec_rows(m);
            a.view_mut((off, k), (v.len(), 1)).copy_from(&v);
            off += v.len();
        }
    }
    let mut b = DVector::zeros(rows);
    let mut off = 0;
    for m in rhs {
        let v = vec_rows(m);
        b.rows_mut(off, v.len()).copy_from(&v);
        off += v.len();
    }
    (a, b)
}

/// Two-sided unit of the span, if one exists within `eq_tol`.
fn find_unit(span: &Span, tol: &Tolerances) -> Option<Mat> {
    let n = span.n;
    if span.dim() == 0 {
        return None;
    }
    let id = eye(n);
    let acts = |e: &Mat| {
        span.basis
            .iter()
            .map(|b| frob(&(e * b - b)).max(frob(&(b * e - b))))
            .fold(frob(&(e * e - e)), f64::max)
    };
    if span.distance_abs(&id) <= tol.eq_tol && acts(&id) <= tol.eq_tol {
        return Some(id);
    }
    let cols: Vec<Vec<Mat>> = span
        .basis
        .iter()
        .map(|bk| {
            span.basis
                .iter()
                .map(|bj| bk * bj)
                .chain(span.basis.iter().map(|bj| bj * bk))
                .collect()
        })
        .collect();
    let rhs: Vec<Mat> = span.basis.iter().chain(span.basis.iter()).cloned().collect();
    let (a, b) = stack(&cols, &rhs);
    let e = span.element(&lstsq(a, &b));
    (acts(&e) <= tol.eq_tol).then_some(e)
}

/// A subalgebra of the ambient matrix algebra, stored through an orthonormal
/// basis.
#[derive(Clone, Debug)]
pub struct SubalgebraBasis {
    pub ambient: AmbientContext,
    span: Span,
    /// Unit of `A` itself, which need not be the ambient unit.
    pub unit: Option<Mat>,
    /// Largest distance of a basis product from the span.
    pub closure_residual: f64,
}

impl SubalgebraBasis {
    /// Spans `gens` and checks that the span is closed under products.
    pub fn new(ambient: AmbientContext, gens: &[Mat], tol: &Tolerances) -> Result<Self> {
        for g in gens {
            ambient.restrict(g, tol)?;
        }
        let span = Span::from_generators(ambient.n(), gens);
        Self::from_span(ambient, span, tol)
    }

    pub fn from_span(ambient: AmbientContext, span: Span, tol: &Tolerances) -> Result<Self> {
        if span.n != ambient.n() {
            return Err(Error::Input("span and ambient dimensions differ".into()));
        }
        let closure_residual = span.closure_residual();
        if closure_residual > tol.eq_tol {
            return Err(Error::Input(format!(
                "span is not closed under multiplication (residual {closure_residual:.3e})"
            )));
        }
        let unit = find_unit(&span, tol);
        Ok(SubalgebraBasis {
            ambient,
            span,
            unit,
            closure_residual,
        })
    }

    /// `M_n` with the matrix units in row-major order.
    pub fn full(n: usize) -> Self {
        let basis = (0..n * n).map(|k| unit(n, k / n, k % n)).collect();
        SubalgebraBasis {
            ambient: AmbientContext::full(n),
            span: Span { n, basis },
            unit: Some(eye(n)),
            closure_residual: 0.0,
        }
    }

    pub fn diagonal(n: usize) -> Self {
        let basis = (0..n).map(|k| unit(n, k, k)).collect();
        SubalgebraBasis {
            ambient: AmbientContext::full(n),
            span: Span { n, basis },
            unit: Some(eye(n)),
            closure_residual: 0.0,
        }
    }

    /// `M_{k_1} + ... + M_{k_m}` placed block-diagonally.
    pub fn block_diagonal(sizes: &[usize]) -> Self {
        let n: usize = sizes.iter().sum();
        let mut basis = vec![];
        let mut off = 0;
        for &k in sizes {
            for i in 0..k {
                for j in 0..k {
                    basis.push(unit(n, off + i, off + j));
                }
            }
            off += k;
        }
        SubalgebraBasis {
            ambient: AmbientContext::full(n),
            span: Span { n, basis },
            unit: Some(eye(n)),
            closure_residual: 0.0,
        }
    }

    /// `M_k(A)` inside `M_k(ambient)`, with basis `E_ab (x) b_i` ordered by
    /// `(a, b, i)`.
    pub fn amplify(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Input("amplification level must be at least 1".into()));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let n = self.n();
        let ambient = match self.ambient.mode() {
            AmbientMode::Full => AmbientContext::full(k * n),
            AmbientMode::Corner => {
                let e = crate::linalg::CMatrix::new(kron(&eye(k), self.ambient.unit()))?;
                AmbientContext::corner(&e, &Tolerances::default())?
            }
        };
        let mut basis = Vec::with_capacity(k * k * self.dim());
        for a in 0..k {
            for b in 0..k {
                let eab = unit(k, a, b);
                basis.extend(self.basis().iter().map(|x| kron(&eab, x)));
            }
        }
        Ok(SubalgebraBasis {
            ambient,
            span: Span { n: k * n, basis },
            unit: self.unit.as_ref().map(|u| kron(&eye(k), u)),
            closure_residual: self.closure_residual,
        })
    }

    /// Closed under the adjoint.
    pub fn is_star_closed(&self) -> bool {
        self.basis().iter().all(|b| self.span.distance(&b.adjoint()) <= SPAN_RTOL)
    }

    pub fn n(&self) -> usize {
        self.span.n
    }

    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    pub fn basis(&self) -> &[Mat] {
        self.span.basis()
    }

    pub fn span(&self) -> &Span {
        &self.span
    }

    /// `A` is the whole of `M_n`.
    pub fn is_full(&self) -> bool {
        self.ambient.mode() == AmbientMode::Full && self.dim() == self.n() * self.n()
    }

    pub fn contains(&self, x: &Mat) -> bool {
        self.span.contains(x)
    }

    pub fn coords(&self, x: &Mat) -> DVector<C64> {
        self.span.coords(x)
    }

    pub fn element(&self, coords: &DVector<C64>) -> Mat {
        self.span.element(coords)
    }

    fn require_member(&self, x: &Mat, what: &str) -> Result<()> {
        if x.shape() != (self.n(), self.n()) {
            return Err(Error::Input(format!("{what} has the wrong dimension")));
        }
        let d = self.span.distance(x);
        if d > SPAN_RTOL {
            return Err(Error::Precondition(format!(
                "{what} is not in the algebra (relative distance {d:.3e})"
            )));
        }
        Ok(())
    }
}

/// `ba(x) = span{x, x^2, ...}` by Arnoldi in the trace inner product.
pub fn ba(x: &Mat, ambient: &AmbientContext, tol: &Tolerances) -> Result<SubalgebraBasis> {
    ambient.restrict(x, tol)?;
    let n = ambient.n();
    let nx = operator_norm(x);
    let mut basis: Vec<Mat> = vec![];
    let fx = frob(x);
    if fx > 0.0 {
        basis.push(x / c(fx));
        while basis.len() < n * n {
            let mut w = basis.last().unwrap() * x;
            for _ in 0..2 {
                for b in &basis {
                    let k = inner(b, &w);
                    w -= b * k;
                }
            }
            let rel = frob(&w) / nx;
            if rel <= BA_RTOL {
                break;
            }
            if rel <= 10.0 * BA_RTOL {
                return Err(Error::Numeric(format!(
                    "ba(x): Krylov residual {rel:.3e} is too close to the rank threshold {BA_RTOL:e}; \
                     override the tolerance"
                )));
            }
            basis.push(&w / c(frob(&w)));
        }
    }
    SubalgebraBasis::from_span(ambient.clone(), Span { n, basis }, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportMethod {
    RieszProjection,
    RootLimit,
}

/// `s(x)`, the limit of `x^{1/n}`.
#[derive(Clone, Debug)]
pub struct SupportIdempotent {
    pub s: Mat,
    pub method: SupportMethod,
    /// `||s_riesz - s_root||`.
    pub agreement_residual: f64,
}

const RIESZ_POINTS: usize = 128;

/// `1 - P_0`, with `P_0` the Riesz projection of the eigenvalue 0, evaluated by
/// the trapezoid rule on a circle of radius half the smallest nonzero
/// eigenvalue modulus.
fn riesz_support(y: &Mat) -> Result<Mat> {
    let k = y.nrows();
    let (q, t) = schur(y)?;
    let thr = kernel_threshold(y);
    let mods: Vec<f64> = (0..k).map(|i| t[(i, i)].norm()).collect();
    let nonzero: Vec<f64> = mods.iter().copied().filter(|&m| m > thr).collect();
    if nonzero.len() == k {
        return Ok(eye(k));
    }
    if nonzero.is_empty() {
        return Ok(Mat::zeros(k, k));
    }
    let rho = 0.5 * nonzero.iter().copied().fold(f64::INFINITY, f64::min);
    let id = eye(k);
    let mut p0 = Mat::zeros(k, k);
    for m in 0..RIESZ_POINTS {
        let z = C64::from_polar(rho, std::f64::consts::TAU * (m as f64 + 0.5) / RIESZ_POINTS as f64);
        let res = (&id * z - &t)
            .solve_upper_triangular(&id)
            .ok_or_else(|| Error::Numeric("resolvent on the Riesz contour is singular".into()))?;
        p0 += res * z;
    }
    p0 /= c(RIESZ_POINTS as f64);
    Ok(&q * (id - p0) * q.adjoint())
}

/// `s(x)` by the Riesz projection, cross-checked against `x^{1/2^40}`.
pub fn support_idem(x: &Mat, ambient: &AmbientContext, tol: &Tolerances) -> Result<SupportIdempotent> {
    let y = require_r(x, ambient, tol)?;
    let riesz = riesz_support(&y)?;
    let root = pow_accretive(&y, 2f64.powi(-ROOT_LIMIT_LOG2))?;
    let agreement_residual = operator_norm(&(&riesz - &root));
    if agreement_residual >= 1e-6 {
        return Err(Error::MethodDisagreement {
            max_deviation: agreement_residual,
            tolerance: 1e-6,
            detail: "support idempotent: Riesz projection and root limit differ".into(),
            candidates: vec![
                ("riesz".into(), crate::linalg::CMatrix::computed(ambient.embed(&riesz), "s(x)")?),
                ("root".into(), crate::linalg::CMatrix::computed(ambient.embed(&root), "s(x)")?),
            ],
        });
    }
    Ok(SupportIdempotent {
        s: ambient.embed(&riesz),
        method: SupportMethod::RieszProjection,
        agreement_residual,
    })
}

/// Checks `s^2 = s`, `xs = sx = x` and `s in F` for `s = s(x)`.
pub fn support_report(x: &Mat, ambient: &AmbientContext, tol: &Tolerances) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    let si = support_idem(x, ambient, tol)?;
    let s = &si.s;
    let mut rep = VerificationReport::new("support", &[x], *tol);
    let sc = operator_norm(x).max(1.0);
    rep.bound("methods agree", si.agreement_residual, 1e-6);
    rep.bound("s^2 = s", operator_norm(&(s * s - s)), tol.eq_tol);
    rep.bound("s x = x", operator_norm(&(s * x - x)) / sc, tol.eq_tol);
    rep.bound("x s = x", operator_norm(&(x * s - x)) / sc, tol.eq_tol);
    let m = membership(s, ambient, tol)?;
    rep.bound("s in F", m.f_residual, tol.eq_tol);
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// Verdicts of the pseudo-invertibility equivalences for `x` in `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsVerdicts {
    /// `s(x) in A`.
    pub support_in_a: bool,
    /// `xyx = x` for some `y in A`.
    pub pseudo_invertible: bool,
    /// `x` is invertible in `ba(x)`.
    pub invertible_in_ba: bool,
    /// 0 is isolated in or absent from the spectrum.
    pub zero_isolated: bool,
    pub support_distance: f64,
    pub pinv_residual: f64,
    pub ba_residual: f64,
    /// Smallest modulus of a nonzero eigenvalue.
    pub spectral_gap: f64,
}

pub fn ws_verdicts(x: &Mat, a: &SubalgebraBasis, tol: &Tolerances) -> Result<WsVerdicts> {
    let y = require_r(x, &a.ambient, tol)?;
    a.require_member(x, "x")?;
    let fx = frob(x);
    if fx == 0.0 {
        return Ok(WsVerdicts {
            support_in_a: true,
            pseudo_invertible: true,
            invertible_in_ba: true,
            zero_isolated: true,
            support_distance: 0.0,
            pinv_residual: 0.0,
            ba_residual: 0.0,
            spectral_gap: f64::INFINITY,
        });
    }

    let s = support_idem(x, &a.ambient, tol)?.s;
    let support_distance = a.span.distance(&s);

    let cols: Vec<Vec<Mat>> = a.basis().iter().map(|b| vec![x * b * x]).collect();
    let (m, rhs) = stack(&cols, std::slice::from_ref(x));
    let yc = a.element(&lstsq(m, &rhs));
    let pinv_residual = frob(&(x * &yc * x - x)) / fx;

    let b = ba(x, &a.ambient, tol)?;
    let ba_residual = match &b.unit {
        None => f64::INFINITY,
        Some(u) => {
            let cols: Vec<Vec<Mat>> = b.basis().iter().map(|z| vec![x * z, z * x]).collect();
            let (m, rhs) = stack(&cols, &[u.clone(), u.clone()]);
            let z = b.element(&lstsq(m, &rhs));
            frob(&(x * &z - u)).max(frob(&(&z * x - u))) / frob(u).max(f64::MIN_POSITIVE)
        }
    };

    let (_, t) = schur(&y)?;
    let thr = kernel_threshold(&y);
    let spectral_gap = (0..t.nrows())
        .map(|i| t[(i, i)].norm())
        .filter(|&m| m > thr)
        .fold(f64::INFINITY, f64::min);

    Ok(WsVerdicts {
        support_in_a: support_distance <= SPAN_RTOL,
        pseudo_invertible: pinv_residual <= SOLVE_RTOL,
        invertible_in_ba: ba_residual <= SOLVE_RTOL,
        zero_isolated: spectral_gap > 1e-8,
        support_distance,
        pinv_residual,
        ba_residual,
        spectral_gap,
    })
}

/// Asserts `(i) <=> (iv) <=> (v)` and that each implies `(vi)`.
pub fn ws_suite(x: &Mat, a: &SubalgebraBasis, tol: &Tolerances) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    let v = ws_verdicts(x, a, tol)?;
    let mut rep = VerificationReport::new("ws", &[x], *tol);
    rep.note(format!(
        "(i) s(x) in A: {} (distance {:.3e})",
        v.support_in_a, v.support_distance
    ));
    rep.note("(ii), (iii): xA and Ax are finite-dimensional, hence closed");
    rep.note(format!(
        "(iv) pseudo-invertible: {} (residual {:.3e})",
        v.pseudo_invertible, v.pinv_residual
    ));
    rep.note(format!(
        "(v) invertible in ba(x): {} (residual {:.3e})",
        v.invertible_in_ba, v.ba_residual
    ));
    rep.note(format!("(vi) gap at 0: {:.3e}", v.spectral_gap));
    rep.flag("(i) <=> (iv)", v.support_in_a == v.pseudo_invertible, "");
    rep.flag("(iv) <=> (v)", v.pseudo_invertible == v.invertible_in_ba, "");
    let any = v.support_in_a || v.pseudo_invertible || v.invertible_in_ba;
    rep.flag("(i) => (vi)", !any || v.zero_isolated, format!("gap {:.3e}", v.spectral_gap));
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// The spans `zA`, `zAz`, `Az` and their ideal certificates.
#[derive(Clone, Debug)]
pub struct HsaSpans {
    pub j: Span,
    pub d: Span,
    pub k: Span,
    pub report: VerificationReport,
}

pub fn hsa_from_z(z: &Mat, a: &SubalgebraBasis, tol: &Tolerances) -> Result<HsaSpans> {
    let t0 = std::time::Instant::now();
    a.require_member(z, "z")?;
    let m = membership(z, &a.ambient, tol)?;
    if !m.in_f {
        return Err(Error::NotInCone {
            cone: "F",
            residual: m.f_residual,
        });
    }
    let sa = &a.span;
    let j = sa.sandwich(Some(z), None);
    let d = sa.sandwich(Some(z), Some(z));
    let k = sa.sandwich(None, Some(z));
    let mut rep = VerificationReport::new("hsa", &[z], *tol);
    rep.note(format!("dim zA = {}, dim zAz = {}, dim Az = {}", j.dim(), d.dim(), k.dim()));

    let mut inner_res: f64 = 0.0;
    for p in d.basis() {
        for b in sa.basis() {
            for q in d.basis() {
                inner_res = inner_res.max(d.distance_abs(&(p * b * q)));
            }
        }
    }
    rep.bound("D A D in D", inner_res, tol.eq_tol);
    rep.bound("J A in J", j.excess(&j.products(sa)), tol.eq_tol);
    rep.bound("A K in K", k.excess(&sa.products(&k)), tol.eq_tol);

    let s = support_idem(z, &a.ambient, tol)?.s;
    let act = d
        .basis()
        .iter()
        .map(|b| frob(&(&s * b - b)).max(frob(&(b * &s - b))))
        .fold(0.0, f64::max);
    rep.bound("s(z) is a unit for D", act, tol.eq_tol);
    rep.note(format!("s(z) lies in D: {} (distance {:.3e})", d.contains(&s), d.distance(&s)));
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(HsaSpans { j, d, k, report: rep })
}

/// `xA in yA iff s(y) s(x) = s(x)`.
pub fn supp_order(x: &Mat, y: &Mat, a: &SubalgebraBasis, tol: &Tolerances) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    a.require_member(x, "x")?;
    a.require_member(y, "y")?;
    let sx = support_idem(x, &a.ambient, tol)?.s;
    let sy = support_idem(y, &a.ambient, tol)?.s;
    let xa = a.span.sandwich(Some(x), None);
    let ya = a.span.sandwich(Some(y), None);
    let excess = ya.excess(&xa);
    let contained = excess <= SPAN_RTOL;
    let id_res = operator_norm(&(&sy * &sx - &sx));
    let identity = id_res <= 1e-7;
    let mut rep = VerificationReport::new("supp3", &[x, y], *tol);
    rep.note(format!("xA in yA: {contained} (excess {excess:.3e})"));
    rep.note(format!("s(y)s(x) = s(x): {identity} (residual {id_res:.3e})"));
    rep.flag("verdicts agree", contained == identity, "");
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// For an idempotent `p`: `p in F iff p in r`.
pub fn lump_check(p: &Mat, ambient: &AmbientContext, tol: &Tolerances) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    let np = operator_norm(p);
    let idem = operator_norm(&(p * p - p));
    if idem > tol.eq_tol * (1.0 + np).powi(2) {
        return Err(Error::Precondition(format!("p is not idempotent (residual {idem:.3e})")));
    }
    let m = membership(p, ambient, tol)?;
    let mut rep = VerificationReport::new("lump", &[p], *tol);
    rep.note(format!(
        "in F: {} (residual {:.3e}); in r: {} (residual {:.3e})",
        m.in_f, m.f_residual, m.in_r, m.r_residual
    ));
    rep.flag("in F <=> in r", m.in_f == m.in_r, "");
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// `A = xAx`, `A = xA = Ax` and "s(x) is the unit of A" agree.
pub fn aarnes_kadison_check(x: &Mat, a: &SubalgebraBasis, tol: &Tolerances) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    a.require_member(x, "x")?;
    require_r(x, &a.ambient, tol)?;
    let sa = &a.span;
    let xax = sa.sandwich(Some(x), Some(x));
    let xa = sa.sandwich(Some(x), None);
    let ax = sa.sandwich(None, Some(x));
    let v1 = xax.equals(sa);
    let v2 = xa.equals(sa) && ax.equals(sa);
    let s = support_idem(x, &a.ambient, tol)?.s;
    let act = sa
        .basis()
        .iter()
        .map(|b| frob(&(&s * b - b)).max(frob(&(b * &s - b))))
        .fold(0.0, f64::max);
    let v3 = act <= SOLVE_RTOL;
    let mut rep = VerificationReport::new("aarnes", &[x], *tol);
    rep.note(format!(
        "dim A = {}, dim xAx = {}, dim xA = {}, dim Ax = {}",
        sa.dim(),
        xax.dim(),
        xa.dim(),
        ax.dim()
    ));
    rep.note(format!("A = xAx: {v1}; A = xA = Ax: {v2}; s(x) unit of A: {v3} (residual {act:.3e})"));
    rep.flag("(i) <=> (ii)", v1 == v2, "");
    rep.flag("(ii) <=> (iii)", v2 == v3, "");
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// `ba(x) = ba(F(x))`.
pub fn ba_ftransform_equal(x: &Mat, ambient: &AmbientContext, tol: &Tolerances) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    require_r(x, ambient, tol)?;
    let fx = f_transform(x, ambient, tol)?;
    let b1 = ba(x, ambient, tol)?;
    let b2 = ba(&fx, ambient, tol)?;
    let mut rep = VerificationReport::new("ba_ftransform", &[x], *tol);
    rep.note(format!("dim ba(x) = {}, dim ba(F(x)) = {}", b1.dim(), b2.dim()));
    rep.flag("equal dimensions", b1.dim() == b2.dim(), "");
    rep.bound("ba(F(x)) in ba(x)", b1.span.excess(&b2.span), SPAN_RTOL);
    rep.bound("ba(x) in ba(F(x))", b2.span.excess(&b1.span), SPAN_RTOL);
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// `qA` is a right ideal with left unit `q`; for accretive `x` with
/// `s(x) in A`, also `xA = s(x) A`.
pub fn idempotent_ideal(
    q: &Mat,
    a: &SubalgebraBasis,
    x: Option<&Mat>,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let t0 = std::time::Instant::now();
    let nq = operator_norm(q);
    let idem = operator_norm(&(q * q - q));
    if idem > tol.eq_tol * (1.0 + nq).powi(2) {
        return Err(Error::Precondition(format!("q is not idempotent (residual {idem:.3e})")));
    }
    a.require_member(q, "q")?;
    let m = membership(q, &a.ambient, tol)?;
    if !m.in_f {
        return Err(Error::NotInCone {
            cone: "F",
            residual: m.f_residual,
        });
    }
    let sa = &a.span;
    let qa = sa.sandwich(Some(q), None);
    let mut inputs = vec![q];
    if let Some(x) = x {
        inputs.push(x);
    }
    let mut rep = VerificationReport::new("idempotent_ideal", &inputs, *tol);
    rep.note(format!("dim qA = {}", qa.dim()));
    rep.bound("qA A in qA", qa.excess(&qa.products(sa)), tol.eq_tol);
    let left = qa.basis().iter().map(|b| frob(&(q * b - b))).fold(0.0, f64::max);
    rep.bound("q is a left unit for qA", left, tol.eq_tol);
    if let Some(x) = x {
        a.require_member(x, "x")?;
        let s = support_idem(x, &a.ambient, tol)?.s;
        if sa.contains(&s) {
            let xa = sa.sandwich(Some(x), None);
            let sa_ = sa.sandwich(Some(&s), None);
            rep.flag(
                "xA = s(x)A",
                xa.equals(&sa_),
                format!("dims {} and {}", xa.dim(), sa_.dim()),
            );
        } else {
            rep.note("s(x) is not in A; xA = s(x)A not tested");
        }
    }
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}
