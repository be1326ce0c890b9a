//! Linear maps between matrix algebras: amplifications, norm ladders,
//! Choi/Kraus certificates, real complete positivity tests and symmetric
//! projections.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;

use crate::algebra::{Span, SubalgebraBasis, SPAN_RTOL};
use crate::cones::{AmbientContext, AmbientMode};
use crate::error::{Error, Result};
use crate::linalg::random::{accretive_with, gaussian, substream, Rng64};
use crate::linalg::{c, eigh, eye, frob, herm_part, kron, operator_norm, unit, Mat, Tolerances, C64};
use crate::numrange::abscissa;
use crate::report::VerificationReport;

pub const DEFAULT_NORM_BUDGET: usize = 200;
pub const DEFAULT_RCP_SAMPLES: usize = 64;
pub const DEFAULT_RCP_BUDGET: usize = 2000;
const NORM_STARTS: u64 = 6;

/// `T : A -> B` given by its matrix in the orthonormal bases of `A` and `B`.
#[derive(Clone, Debug)]
pub struct LinearMapOnAlgebra {
    pub domain: SubalgebraBasis,
    pub codomain: SubalgebraBasis,
    /// `codomain.dim() x domain.dim()`.
    pub action: Mat,
    pub full_domain: bool,
}

impl LinearMapOnAlgebra {
    pub fn new(domain: SubalgebraBasis, codomain: SubalgebraBasis, action: Mat) -> Result<Self> {
        if action.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::Input(format!(
                "action is {}x{}, bases have dimensions {} and {}",
                action.nrows(),
                action.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        let full_domain = domain.is_full();
        Ok(LinearMapOnAlgebra {
            domain,
            codomain,
            action,
            full_domain,
        })
    }

    /// Tabulates `f` on the domain basis.
    pub fn from_fn<F>(domain: SubalgebraBasis, codomain: SubalgebraBasis, f: F) -> Result<Self>
    where
        F: Fn(&Mat) -> Mat,
    {
        let mut action = Mat::zeros(codomain.dim(), domain.dim());
        for (j, b) in domain.basis().iter().enumerate() {
            let img = f(b);
            if img.shape() != (codomain.n(), codomain.n()) {
                return Err(Error::Input("image has the wrong dimension".into()));
            }
            let d = codomain.span().distance(&img);
            if d > SPAN_RTOL {
                return Err(Error::Input(format!(
                    "image of basis element {j} leaves the codomain (relative distance {d:.3e})"
                )));
            }
            action.set_column(j, &codomain.coords(&img));
        }
        Self::new(domain, codomain, action)
    }

    pub fn identity(a: &SubalgebraBasis) -> Self {
        let d = a.dim();
        Self::new(a.clone(), a.clone(), eye(d)).expect("square action")
    }

    /// `alpha self + beta other` for maps with the same bases.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.action.shape() != other.action.shape() {
            return Err(Error::Input("maps have different shapes".into()));
        }
        Self::new(
            self.domain.clone(),
            self.codomain.clone(),
            &self.action * c(alpha) + &other.action * c(beta),
        )
    }

    pub fn apply(&self, a: &Mat) -> Mat {
        self.codomain.element(&(&self.action * self.domain.coords(a)))
    }

    /// Trace-duality adjoint of `a -> T(P_A a)`.
    pub fn adjoint_apply(&self, g: &Mat) -> Mat {
        self.domain.element(&(self.action.adjoint() * self.codomain.coords(g)))
    }

    /// `T (x) id_k` applied blockwise to a `k x k` block matrix.
    pub fn apply_k(&self, k: usize, x: &Mat) -> Mat {
        blockwise(x, k, self.domain.n(), self.codomain.n(), |b| self.apply(b))
    }

    fn adjoint_k(&self, k: usize, g: &Mat) -> Mat {
        blockwise(g, k, self.codomain.n(), self.domain.n(), |b| self.adjoint_apply(b))
    }

    fn project_k(&self, k: usize, x: &Mat) -> Mat {
        let n = self.domain.n();
        blockwise(x, k, n, n, |b| self.domain.span().project(b))
    }
}

fn blockwise<F: Fn(&Mat) -> Mat>(x: &Mat, k: usize, n_in: usize, n_out: usize, f: F) -> Mat {
    let mut out = Mat::zeros(k * n_out, k * n_out);
    for a in 0..k {
        for b in 0..k {
            let blk = x.view((a * n_in, b * n_in), (n_in, n_in)).into_owned();
            out.view_mut((a * n_out, b * n_out), (n_out, n_out)).copy_from(&f(&blk));
        }
    }
    out
}

/// The `k`-th amplification `T (x) id_k` as a map `M_k(A) -> M_k(B)`.
pub fn amplify(t: &LinearMapOnAlgebra, k: usize) -> Result<LinearMapOnAlgebra> {
    if k == 1 {
        return Ok(t.clone());
    }
    let dom = t.domain.amplify(k)?;
    let cod = t.codomain.amplify(k)?;
    let action = kron(&eye(k * k), &t.action);
    LinearMapOnAlgebra::new(dom, cod, action)
}

fn ambient_k(ctx: &AmbientContext, k: usize) -> Result<AmbientContext> {
    match ctx.mode() {
        AmbientMode::Full => Ok(AmbientContext::full(k * ctx.n())),
        AmbientMode::Corner => {
            let e = crate::linalg::CMatrix::new(kron(&eye(k), ctx.unit()))?;
            AmbientContext::corner(&e, &Tolerances::default())
        }
    }
}

/// Lower bound for `||T_k||` with the input attaining it.
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub value: f64,
    /// The last ascent step improved the value by less than `1e-10` relative.
    pub stationary: bool,
    pub iterations: usize,
    pub argmax: Mat,
}

fn unit_ball_ratio(t: &LinearMapOnAlgebra, k: usize, u: &Mat) -> (f64, Mat) {
    let nu = operator_norm(u);
    if nu == 0.0 {
        return (0.0, u.clone());
    }
    let u = u / c(nu);
    (operator_norm(&t.apply_k(k, &u)), u)
}

fn ascend(t: &LinearMapOnAlgebra, k: usize, start: &Mat, budget: usize) -> NormEstimate {
    let (mut best, mut u) = unit_ball_ratio(t, k, start);
    let mut stationary = false;
    let mut it = 0;
    while it < budget {
        it += 1;
        let v = t.apply_k(k, &u);
        let svd = crate::linalg::svd(&v);
        let (uu, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let imax = svd.singular_values.imax();
        let g = uu.column(imax) * vt.row(imax);
        let h = t.adjoint_k(k, &g);
        let hs = crate::linalg::svd(&h);
        let polar = hs.u.unwrap() * hs.v_t.unwrap();
        let (val, cand) = unit_ball_ratio(t, k, &t.project_k(k, &polar));
        if val <= best * (1.0 + 1e-12) {
            stationary = true;
            if val > best {
                best = val;
                u = cand;
            }
            break;
        }
        stationary = val - best <= 1e-10 * val;
        best = val;
        u = cand;
    }
    NormEstimate {
        value: best,
        stationary,
        iterations: it,
        argmax: u,
    }
}

fn random_element_k(t: &LinearMapOnAlgebra, k: usize, rng: &mut Rng64) -> Mat {
    let n = t.domain.n();
    t.project_k(k, &gaussian(k * n, k * n, rng))
}

/// `sum_{a,b} E_ab (x) P_A(E_ba)`, the swap operator when `k = n` and `A = M_n`.
fn flip_start(t: &LinearMapOnAlgebra, k: usize) -> Mat {
    let n = t.domain.n();
    let m = k.min(n);
    let mut x = Mat::zeros(k * n, k * n);
    for a in 0..m {
        for b in 0..m {
            x += kron(&unit(k, a, b), &t.domain.span().project(&unit(n, b, a)));
        }
    }
    x
}

fn pad(u: &Mat, k: usize, n: usize) -> Mat {
    let mut x = Mat::zeros(k * n, k * n);
    let s = u.nrows().min(k * n);
    x.view_mut((0, 0), (s, s)).copy_from(&u.view((0, 0), (s, s)));
    x
}

/// Multi-start alternating ascent for `sup ||T_k(u)||` over `||u|| <= 1`.
pub fn op_norm_estimate(t: &LinearMapOnAlgebra, k: usize, budget: usize, seed: u64) -> Result<NormEstimate> {
    op_norm_estimate_from(t, k, budget, seed, None)
}

fn op_norm_estimate_from(
    t: &LinearMapOnAlgebra,
    k: usize,
    budget: usize,
    seed: u64,
    warm: Option<&Mat>,
) -> Result<NormEstimate> {
    if budget == 0 || k == 0 {
        return Err(Error::Input("norm estimate needs k >= 1 and budget >= 1".into()));
    }
    let n = t.domain.n();
    let mut starts: Vec<Mat> = vec![];
    if let Some(w) = warm {
        starts.push(pad(w, k, n));
    }
    starts.push(flip_start(t, k));
    if let Some(u) = &t.domain.unit {
        starts.push(kron(&eye(k), u));
    }
    for s in 0..NORM_STARTS {
        starts.push(random_element_k(t, k, &mut substream(seed, s)));
    }
    let mut best: Option<NormEstimate> = None;
    for s in &starts {
        let est = ascend(t, k, s, budget);
        if best.as_ref().is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Estimates at each level, each warm-started from the previous level's
/// maximiser so the ladder is non-decreasing.
pub fn norm_ladder(
    t: &LinearMapOnAlgebra,
    levels: &[usize],
    budget: usize,
    seed: u64,
) -> Result<BTreeMap<usize, NormEstimate>> {
    let mut ks: Vec<usize> = levels.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut out = BTreeMap::new();
    let mut warm: Option<Mat> = None;
    for k in ks {
        let est = op_norm_estimate_from(t, k, budget, seed.wrapping_add(k as u64), warm.as_ref())?;
        warm = Some(est.argmax.clone());
        out.insert(k, est);
    }
    Ok(out)
}

/// The block matrix `[T(E_ij)]`.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub c: Mat,
    pub herm: bool,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eig: f64,
}

pub fn choi(t: &LinearMapOnAlgebra, tol: &Tolerances) -> Result<ChoiMatrix> {
    if !t.full_domain {
        return Err(Error::Unsupported(
            "Choi matrix needs the domain to be all of M_n".into(),
        ));
    }
    let n = t.domain.n();
    let m = t.codomain.n();
    let mut cm = Mat::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            cm.view_mut((i * m, j * m), (m, m)).copy_from(&t.apply(&unit(n, i, j)));
        }
    }
    let scale = operator_norm(&cm).max(1.0);
    let herm = operator_norm(&(&cm - cm.adjoint())) <= tol.eq_tol * scale;
    let min_eig = eigh(&herm_part(&cm)).0.first().copied().unwrap_or(0.0);
    Ok(ChoiMatrix { c: cm, herm, min_eig })
}

/// `(T is CP, Choi matrix)`: CP iff the Choi matrix is positive semidefinite.
pub fn is_cp(t: &LinearMapOnAlgebra, tol: &Tolerances) -> Result<(bool, ChoiMatrix)> {
    let ch = choi(t, tol)?;
    let cp = ch.herm && ch.min_eig >= -tol.psd_tol;
    Ok((cp, ch))
}

/// `T(a) = sum V_i* a V_i`.
#[derive(Clone, Debug)]
pub struct KrausFactors {
    pub ops: Vec<Mat>,
    /// `max ||T(E_ij) - sum V* E_ij V||` over matrix units.
    pub residual: f64,
}

pub fn kraus_factor(t: &LinearMapOnAlgebra, tol: &Tolerances) -> Result<KrausFactors> {
    let (cp, ch) = is_cp(t, tol)?;
    if !cp {
        return Err(Error::Precondition(format!(
            "map is not completely positive (Choi min eigenvalue {:.3e})",
            ch.min_eig
        )));
    }
    let n = t.domain.n();
    let m = t.codomain.n();
    let (vals, vecs) = eigh(&herm_part(&ch.c));
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let mut ops = vec![];
    for (l, &lam) in vals.iter().enumerate().rev() {
        if lam <= 1e-14 * top.max(1.0) {
            continue;
        }
        let s = lam.sqrt();
        // K[alpha, i] = sqrt(lambda) v[i m + alpha], and V = K*
        let kmat = Mat::from_fn(m, n, |a, i| vecs[(i * m + a, l)] * s);
        ops.push(kmat.adjoint());
    }
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = unit(n, i, j);
            let mut acc = Mat::zeros(m, m);
            for v in &ops {
                acc += v.adjoint() * &e * v;
            }
            residual = residual.max(operator_norm(&(t.apply(&e) - acc)));
        }
    }
    Ok(KrausFactors { ops, residual })
}

/// Accretive input `x` whose image `T_k(x)` has negative abscissa.
#[derive(Clone, Debug)]
pub struct RcpWitness {
    pub level: usize,
    pub x: Mat,
    pub x_abscissa: f64,
    pub image_abscissa: f64,
}

#[derive(Clone, Debug)]
pub struct RcpVerdict {
    pub passed: bool,
    /// PASS backed by the Choi criterion rather than sampling alone.
    pub certified: bool,
    pub sampled: usize,
    pub violations: usize,
    pub evaluations: usize,
    pub witness: Option<RcpWitness>,
    pub report: VerificationReport,
}

struct Level<'a> {
    t: &'a LinearMapOnAlgebra,
    k: usize,
    dom: AmbientContext,
    cod: AmbientContext,
    unit_k: Option<Mat>,
    star: bool,
}

impl Level<'_> {
    fn abscissa_in(ctx: &AmbientContext, x: &Mat) -> f64 {
        match ctx.mode() {
            AmbientMode::Full => abscissa(x),
            AmbientMode::Corner => abscissa(&(ctx.isometry().adjoint() * x * ctx.isometry())),
        }
    }

    fn x_abscissa(&self, x: &Mat) -> f64 {
        Self::abscissa_in(&self.dom, x)
    }

    fn image(&self, x: &Mat) -> (f64, f64) {
        let y = self.t.apply_k(self.k, x);
        (Self::abscissa_in(&self.cod, &y), operator_norm(&y).max(1.0))
    }

    /// Pulls `x` back into the accretive part of the unit ball of `M_k(A)`.
    fn make_accretive(&self, x: &Mat) -> Option<Mat> {
        let mut x = if self.t.full_domain && self.dom.mode() == AmbientMode::Full {
            let h = herm_part(x);
            let skew = x - &h;
            let (vals, vecs) = eigh(&h);
            let d = Mat::from_fn(vals.len(), vals.len(), |i, j| if i == j { c(vals[i].max(0.0)) } else { c(0.0) });
            &vecs * d * vecs.adjoint() + skew
        } else {
            self.t.project_k(self.k, x)
        };
        for _ in 0..4 {
            let a = self.x_abscissa(&x);
            if a >= 0.0 {
                let nx = operator_norm(&x);
                return Some(if nx > 1.0 { x / c(nx) } else { x });
            }
            let u = self.unit_k.as_ref()?;
            x += u * c(-a + 1e-15);
        }
        None
    }

    fn sample(&self, rng: &mut Rng64, i: usize) -> Option<Mat> {
        let n = self.t.domain.n();
        let kn = self.k * n;
        if self.t.full_domain && self.dom.mode() == AmbientMode::Full {
            if i.is_multiple_of(2) {
                let x = accretive_with(kn, std::f64::consts::FRAC_PI_2, rng).ok()?;
                let nx = operator_norm(&x);
                return Some(x / c(nx));
            }
            let v = gaussian(kn, 1, rng);
            let p = &v * v.adjoint();
            let w = crate::linalg::random::hermitian(kn, rng) * C64::new(0.0, rng.gen_range(0.0..0.5));
            let x = p + w;
            let nx = operator_norm(&x);
            return Some(x / c(nx));
        }
        let u = random_element_k(self.t, self.k, rng);
        let x = if self.star {
            let w = random_element_k(self.t, self.k, rng);
            let h = herm_part(&w) * C64::new(0.0, rng.gen_range(0.0..1.0));
            &u * u.adjoint() + h
        } else {
            u
        };
        self.make_accretive(&x)
    }
}

/// Chooses where to start the falsification search.
fn descent_starts(lv: &Level, rng: &mut Rng64) -> Vec<Mat> {
    let mut starts = vec![];
    let n = lv.t.domain.n();
    if lv.t.full_domain && lv.k >= n {
        // Omega Omega* / n, whose image under T_n is the Choi matrix
        let mut x = Mat::zeros(lv.k * n, lv.k * n);
        for i in 0..n {
            for j in 0..n {
                x.view_mut((i * n, j * n), (n, n)).copy_from(&(unit(n, i, j) / c(n as f64)));
            }
        }
        starts.push(x);
    }
    for i in 0..3 {
        if let Some(x) = lv.sample(rng, i) {
            starts.push(x);
        }
    }
    starts
}

/// Sampling, then projected random-direction descent on `abscissa(T_k(x))`.
pub fn rcp_test(
    t: &LinearMapOnAlgebra,
    levels: &[usize],
    samples: usize,
    budget: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<RcpVerdict> {
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::Input("rcp_test needs a nonempty list of levels >= 1".into()));
    }
    let t0 = std::time::Instant::now();
    let mut rep = VerificationReport::new("rcp", &[&t.action], *tol).with_seed(seed);
    let certified = if t.full_domain {
        let (cp, ch) = is_cp(t, tol)?;
        rep.note(format!("Choi min eigenvalue {:.6e}, Hermitian {}", ch.min_eig, ch.herm));
        cp
    } else {
        rep.note("domain is a proper subalgebra: verdict is sampling-based, not a proof");
        false
    };
    let star = t.domain.is_star_closed();
    let mut sampled = 0;
    let mut violations = 0;
    let mut evaluations = 0;
    let mut witness: Option<RcpWitness> = None;
    let accept = |lv: &Level, x: &Mat| -> Option<RcpWitness> {
        let xa = lv.x_abscissa(x);
        let (ia, scale) = lv.image(x);
        (xa >= -tol.psd_tol && ia < -1e-8 * scale).then(|| RcpWitness {
            level: lv.k,
            x: x.clone(),
            x_abscissa: xa,
            image_abscissa: ia,
        })
    };
    let per_level = (budget / levels.len()).max(1);
    for (li, &k) in levels.iter().enumerate() {
        let lv = Level {
            t,
            k,
            dom: ambient_k(&t.domain.ambient, k)?,
            cod: ambient_k(&t.codomain.ambient, k)?,
            unit_k: t.domain.unit.as_ref().map(|u| kron(&eye(k), u)),
            star,
        };
        let mut rng = substream(seed, 2 * li as u64);
        for i in 0..samples {
            let Some(x) = lv.sample(&mut rng, i) else { continue };
            sampled += 1;
            evaluations += 1;
            if let Some(w) = accept(&lv, &x) {
                violations += 1;
                if witness.as_ref().is_none_or(|b| w.image_abscissa < b.image_abscissa) {
                    witness = Some(w);
                }
            }
        }
        if certified {
            continue;
        }
        let mut rng = substream(seed, 2 * li as u64 + 1);
        let mut spent = 0;
        for start in descent_starts(&lv, &mut rng) {
            if spent >= per_level {
                break;
            }
            let mut x = start;
            let mut f = lv.image(&x).0;
            spent += 1;
            let mut eta = 0.25;
            let share = per_level / 4;
            let mut local = 0;
            while local < share && spent < per_level && eta > 1e-6 {
                let d = random_element_k(t, k, &mut rng);
                let d = &d / c(frob(&d).max(f64::MIN_POSITIVE));
                local += 1;
                spent += 1;
                let Some(cand) = lv.make_accretive(&(&x + d * c(eta))) else {
                    eta *= 0.5;
                    continue;
                };
                let fc = lv.image(&cand).0;
                if fc < f {
                    x = cand;
                    f = fc;
                    eta *= 1.5;
                } else {
                    eta *= 0.7;
                }
            }
            if let Some(w) = accept(&lv, &x) {
                if witness.as_ref().is_none_or(|b| w.image_abscissa < b.image_abscissa) {
                    witness = Some(w);
                }
            }
        }
        evaluations += spent;
    }
    rep.note(format!("{sampled} samples, {evaluations} evaluations"));
    rep.bound("sampled violations", violations as f64, 0.0);
    if let Some(w) = &witness {
        rep.push(
            "no witness",
            false,
            -w.image_abscissa,
            0.0,
            Some(format!(
                "level {}: input abscissa {:.3e}, image abscissa {:.3e}",
                w.level, w.x_abscissa, w.image_abscissa
            )),
        );
    } else if certified {
        rep.note("PASS certified: completely positive by the Choi criterion, hence RCP");
    } else {
        rep.note("PASS (sampled): not a proof");
    }
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(RcpVerdict {
        passed: witness.is_none(),
        certified: certified && witness.is_none(),
        sampled,
        violations,
        evaluations,
        witness,
        report: rep,
    })
}

/// `P` with its certificate.
#[derive(Clone, Debug)]
pub struct SymmetricProjection {
    pub p: LinearMapOnAlgebra,
    pub report: VerificationReport,
}

fn map_scale(t: &LinearMapOnAlgebra) -> f64 {
    operator_norm(&t.action).max(1.0)
}

/// `P(a) = (a + theta(a)(2q - 1)) / 2` for a period-2 automorphism `theta`
/// and an idempotent `q` fixed by it.
pub fn build_symmetric_projection(
    theta: &LinearMapOnAlgebra,
    q: &Mat,
    a: &SubalgebraBasis,
    tol: &Tolerances,
    seed: u64,
) -> Result<SymmetricProjection> {
    let t0 = std::time::Instant::now();
    let d = a.dim();
    if theta.domain.dim() != d || theta.codomain.dim() != d || theta.domain.n() != a.n() {
        return Err(Error::Input("theta must map A to A".into()));
    }
    let sc = map_scale(theta).powi(2);
    let inv = operator_norm(&(&theta.action * &theta.action - eye(d)));
    if inv > tol.eq_tol * sc {
        return Err(Error::Precondition(format!("theta o theta = id fails (residual {inv:.3e})")));
    }
    let mut mult: f64 = 0.0;
    let imgs: Vec<Mat> = a.basis().iter().map(|b| theta.apply(b)).collect();
    for (i, bi) in a.basis().iter().enumerate() {
        for (j, bj) in a.basis().iter().enumerate() {
            mult = mult.max(frob(&(theta.apply(&(bi * bj)) - &imgs[i] * &imgs[j])));
        }
    }
    if mult > tol.eq_tol * sc {
        return Err(Error::Precondition(format!(
            "theta(ab) = theta(a) theta(b) fails (residual {mult:.3e})"
        )));
    }
    let nq = operator_norm(q);
    let idem = operator_norm(&(q * q - q));
    if idem > tol.eq_tol * (1.0 + nq).powi(2) {
        return Err(Error::Precondition(format!("q^2 = q fails (residual {idem:.3e})")));
    }
    let dq = a.span().distance(q);
    if dq > SPAN_RTOL {
        return Err(Error::Precondition(format!("q in A fails (distance {dq:.3e})")));
    }
    let fix = operator_norm(&(theta.apply(q) - q));
    if fix > tol.eq_tol * (1.0 + nq) {
        return Err(Error::Precondition(format!("theta(q) = q fails (residual {fix:.3e})")));
    }

    let p = LinearMapOnAlgebra::from_fn(a.clone(), a.clone(), |x| {
        let tx = theta.apply(x);
        (x + &tx * q * c(2.0) - tx) * c(0.5)
    })?;
    let mut rep = VerificationReport::new("proj", &[&theta.action, q], *tol).with_seed(seed);
    rep.bound("P^2 = P", operator_norm(&(&p.action * &p.action - &p.action)), 1e-9);

    let sym = LinearMapOnAlgebra::identity(a).combine(1.0, &p, -2.0)?;
    for (k, est) in norm_ladder(&sym, &[1, 2, 3], DEFAULT_NORM_BUDGET, seed)? {
        rep.bound(&format!("||I - 2P|| level {k}"), est.value, 1.0 + 1e-6);
    }
    let rcp = rcp_test(&p, &[1, 2, 3], DEFAULT_RCP_SAMPLES, DEFAULT_RCP_BUDGET, seed, tol)?;
    rep.flag(
        "rcp_test PASS",
        rcp.passed,
        rcp.witness
            .as_ref()
            .map(|w| format!("witness at level {} with image abscissa {:.3e}", w.level, w.image_abscissa))
            .unwrap_or_default(),
    );

    // fixed points of theta inside qAq
    let qaq = a.span().sandwich(Some(q), Some(q));
    let cols: Vec<DVector<C64>> = qaq
        .basis()
        .iter()
        .map(|b| a.coords(&(theta.apply(b) - b)))
        .collect();
    let mut fixed_gens = vec![];
    if !cols.is_empty() {
        let m = Mat::from_columns(&cols);
        let svd = crate::linalg::svd(&m);
        let vt = svd.v_t.unwrap();
        for r in 0..vt.nrows() {
            let sv = if r < svd.singular_values.len() { svd.singular_values[r] } else { 0.0 };
            if sv <= 1e-8 {
                let coeffs = vt.row(r).adjoint();
                let mut g = Mat::zeros(a.n(), a.n());
                for (b, w) in qaq.basis().iter().zip(coeffs.iter()) {
                    g += b * *w;
                }
                fixed_gens.push(g);
            }
        }
    }
    let fixed = Span::from_generators(a.n(), &fixed_gens);
    let range = Span::from_generators(a.n(), &a.basis().iter().map(|b| p.apply(b)).collect::<Vec<_>>());
    rep.note(format!("dim range(P) = {}, dim Fix(theta) in qAq = {}", range.dim(), fixed.dim()));
    rep.flag("range(P) = Fix(theta) in qAq", range.equals(&fixed), "");
    let vanish = a
        .basis()
        .iter()
        .map(|b| {
            let l = p.apply(&(b - q * b));
            let r = p.apply(&(b - b * q));
            frob(&l).max(frob(&r))
        })
        .fold(0.0, f64::max);
    rep.bound("P = 0 on q'A + Aq'", vanish, tol.eq_tol);
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(SymmetricProjection { p, report: rep })
}

#[derive(Clone, Debug)]
pub struct ProjectionClassification {
    pub idempotent: bool,
    /// Level `k` to the estimate of `||P_k||`.
    pub contractive_levels: BTreeMap<usize, f64>,
    pub complement_levels: BTreeMap<usize, f64>,
    pub symmetry_levels: BTreeMap<usize, f64>,
    pub contractive: bool,
    /// `P` and `I - P` are contractive at every tested level.
    pub bicontractive: bool,
    /// `||I - 2P|| <= 1` at every tested level.
    pub symmetric: bool,
    pub rcp_sampled: RcpVerdict,
    pub conditional_expectation_residual: f64,
    pub range_is_subalgebra: bool,
    /// `max ||P(xy) - xy||` over range basis pairs.
    pub range_product_residual: f64,
    /// `max ||k1 k2||` over kernel basis pairs.
    pub kernel_square_residual: f64,
    pub report: VerificationReport,
}

const CONTRACTIVE_SLACK: f64 = 1e-6;

pub fn classify_projection(
    p: &LinearMapOnAlgebra,
    levels: &[usize],
    tol: &Tolerances,
    seed: u64,
) -> Result<ProjectionClassification> {
    let t0 = std::time::Instant::now();
    if p.domain.dim() != p.codomain.dim() || p.domain.n() != p.codomain.n() {
        return Err(Error::Input("a projection maps A into A".into()));
    }
    let na = map_scale(p);
    let idem_res = operator_norm(&(&p.action * &p.action - &p.action));
    if idem_res > tol.eq_tol * na * na {
        return Err(Error::Precondition(format!("P is not idempotent (residual {idem_res:.3e})")));
    }
    let mut rep = VerificationReport::new("classify", &[&p.action], *tol).with_seed(seed);
    rep.bound("P idempotent", idem_res, tol.eq_tol * na * na);
    let id = LinearMapOnAlgebra::identity(&p.domain);
    let comp = id.combine(1.0, p, -1.0)?;
    let sym = id.combine(1.0, p, -2.0)?;
    let est = |m: &LinearMapOnAlgebra, s: u64| -> Result<BTreeMap<usize, f64>> {
        Ok(norm_ladder(m, levels, DEFAULT_NORM_BUDGET, seed.wrapping_add(s))?
            .into_iter()
            .map(|(k, e)| (k, e.value))
            .collect())
    };
    let contractive_levels = est(p, 0)?;
    let complement_levels = est(&comp, 100)?;
    let symmetry_levels = est(&sym, 200)?;
    let within = |m: &BTreeMap<usize, f64>| m.values().all(|&v| v <= 1.0 + CONTRACTIVE_SLACK);
    let contractive = within(&contractive_levels);
    let bicontractive = contractive && within(&complement_levels);
    let symmetric = within(&symmetry_levels);
    let monotone = [&contractive_levels, &complement_levels, &symmetry_levels]
        .iter()
        .all(|m| m.values().zip(m.values().skip(1)).all(|(a, b)| *b >= *a * (1.0 - 1e-12)));
    rep.flag("estimates non-decreasing in level", monotone, "");
    // ||I - P|| <= (1 + ||I - 2P||) / 2 and ||P|| likewise
    rep.flag("symmetric => bicontractive", !symmetric || bicontractive, "");
    for (name, m) in [("P", &contractive_levels), ("I - P", &complement_levels), ("I - 2P", &symmetry_levels)] {
        rep.note(format!(
            "||{name}|| by level: {}",
            m.iter().map(|(k, v)| format!("{k}: {v:.9}")).collect::<Vec<_>>().join(", ")
        ));
    }

    let imgs: Vec<Mat> = p.domain.basis().iter().map(|b| p.apply(b)).collect();
    let mut ce: f64 = 0.0;
    for pa in &imgs {
        for b in p.domain.basis() {
            let mid = pa * b;
            for pc in &imgs {
                let lhs = p.apply(&(&mid * pc));
                let pb = p.apply(b);
                ce = ce.max(frob(&(lhs - pa * pb * pc)));
            }
        }
    }
    let range = Span::from_generators(p.domain.n(), &imgs);
    let range_is_subalgebra = range.closure_residual() <= SPAN_RTOL;
    let mut range_product_residual: f64 = 0.0;
    for x in range.basis() {
        for y in range.basis() {
            let xy = x * y;
            range_product_residual = range_product_residual.max(frob(&(p.apply(&xy) - xy)));
        }
    }
    let kernel_gens: Vec<Mat> = p.domain.basis().iter().map(|b| b - p.apply(b)).collect();
    let kernel = Span::from_generators(p.domain.n(), &kernel_gens);
    let mut kernel_square_residual: f64 = 0.0;
    for x in kernel.basis() {
        for y in kernel.basis() {
            kernel_square_residual = kernel_square_residual.max(frob(&(x * y)));
        }
    }
    rep.note(format!("conditional expectation residual {ce:.3e}"));
    rep.note(format!(
        "range is a subalgebra: {range_is_subalgebra}; P(xy) - xy on range: {range_product_residual:.3e}; \
         kernel square: {kernel_square_residual:.3e}"
    ));
    let rcp_sampled = rcp_test(p, levels, DEFAULT_RCP_SAMPLES, DEFAULT_RCP_BUDGET, seed, tol)?;
    rep.note(format!(
        "rcp_test: {}",
        if rcp_sampled.passed { "PASS" } else { "FAIL (witness found)" }
    ));
    rep.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(ProjectionClassification {
        idempotent: true,
        contractive_levels,
        complement_levels,
        symmetry_levels,
        contractive,
        bicontractive,
        symmetric,
        rcp_sampled,
        conditional_expectation_residual: ce,
        range_is_subalgebra,
        range_product_residual,
        kernel_square_residual,
        report: rep,
    })
}

/// Seeded maps used by the suites.
pub mod fixtures {
    use super::*;
    use crate::linalg::random::symmetry;

    pub fn transpose(n: usize) -> LinearMapOnAlgebra {
        let a = SubalgebraBasis::full(n);
        LinearMapOnAlgebra::from_fn(a.clone(), a, |x| x.transpose()).expect("transpose stays in M_n")
    }

    /// `a -> sum V_i* a V_i` from `M_n` to `M_m`, each `V_i` being `n x m`.
    pub fn kraus_map(vs: &[Mat]) -> Result<LinearMapOnAlgebra> {
        let first = vs.first().ok_or_else(|| Error::Input("empty Kraus list".into()))?;
        let (n, m) = first.shape();
        if vs.iter().any(|v| v.shape() != (n, m)) {
            return Err(Error::Input("Kraus operators differ in shape".into()));
        }
        LinearMapOnAlgebra::from_fn(SubalgebraBasis::full(n), SubalgebraBasis::full(m), |a| {
            let mut acc = Mat::zeros(m, m);
            for v in vs {
                acc += v.adjoint() * a * v;
            }
            acc
        })
    }

    /// Random CP map on `M_n` with `count` Kraus operators.
    pub fn random_cp(n: usize, count: usize, rng: &mut Rng64) -> LinearMapOnAlgebra {
        let s = 1.0 / (count as f64 * n as f64).sqrt();
        let vs: Vec<Mat> = (0..count).map(|_| gaussian(n, n, rng) * c(s)).collect();
        kraus_map(&vs).expect("nonempty Kraus list")
    }

    /// `a -> Phi(a)^T` for a random CP `Phi`: positive, generically not CP.
    pub fn random_non_cp(n: usize, rng: &mut Rng64) -> LinearMapOnAlgebra {
        let phi = random_cp(n, 2, rng);
        let a = SubalgebraBasis::full(n);
        LinearMapOnAlgebra::from_fn(a.clone(), a, |x| phi.apply(x).transpose()).expect("stays in M_n")
    }

    /// A period-2 automorphism `theta`, a `theta`-fixed central projection `q`
    /// and the algebra they act on.
    pub struct SymmetricFixture {
        pub name: &'static str,
        pub theta: LinearMapOnAlgebra,
        pub q: Mat,
        pub algebra: SubalgebraBasis,
    }

    /// `kind % 3`: 0 is `Ad u` on `M_n` with a symmetry `u`; 1 is a coordinate
    /// involution of the diagonal algebra; 2 is `Ad(u + 1)` on `M_k + M_m`
    /// with `q` the unit of `M_k`.
    pub fn symmetric_fixture(kind: usize, n: usize, rng: &mut Rng64) -> SymmetricFixture {
        match kind % 3 {
            0 => {
                let a = SubalgebraBasis::full(n);
                let u = symmetry(n, rng);
                let theta = LinearMapOnAlgebra::from_fn(a.clone(), a.clone(), |x| &u * x * &u).expect("Ad u");
                SymmetricFixture {
                    name: "conjugation by a symmetry",
                    theta,
                    q: eye(n),
                    algebra: a,
                }
            }
            1 => {
                let a = SubalgebraBasis::diagonal(n);
                let mut perm: Vec<usize> = (0..n).collect();
                let mut idx: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    idx.swap(i, rng.gen_range(0..=i));
                }
                for pair in idx.chunks(2) {
                    if pair.len() == 2 && rng.gen_bool(0.8) {
                        perm[pair[0]] = pair[1];
                        perm[pair[1]] = pair[0];
                    }
                }
                let theta = LinearMapOnAlgebra::from_fn(a.clone(), a.clone(), |x| {
                    Mat::from_fn(n, n, |i, j| if i == j { x[(perm[i], perm[i])] } else { c(0.0) })
                })
                .expect("permutation of the diagonal");
                SymmetricFixture {
                    name: "involution of the diagonal",
                    theta,
                    q: eye(n),
                    algebra: a,
                }
            }
            _ => {
                let k = rng.gen_range(1..n.max(2));
                let m = n.max(2) - k;
                let a = SubalgebraBasis::block_diagonal(&[k, m]);
                let nn = k + m;
                let su = symmetry(k, rng);
                let mut u = eye(nn);
                u.view_mut((0, 0), (k, k)).copy_from(&su);
                let theta = LinearMapOnAlgebra::from_fn(a.clone(), a.clone(), |x| &u * x * &u).expect("Ad u");
                let mut q = Mat::zeros(nn, nn);
                q.view_mut((0, 0), (k, k)).copy_from(&eye(k));
                SymmetricFixture {
                    name: "block conjugation with a central projection",
                    theta,
                    q,
                    algebra: a,
                }
            }
        }
    }

    /// `diag(a, b) -> ((a + b) / 2) I` on the diagonal 2x2 algebra.
    pub fn scalar_averaging() -> LinearMapOnAlgebra {
        let a = SubalgebraBasis::diagonal(2);
        LinearMapOnAlgebra::from_fn(a.clone(), a, |x| eye(2) * ((x[(0, 0)] + x[(1, 1)]) * 0.5)).expect("averaging")
    }

    /// Kills the strictly lower entry of a 2x2 matrix.
    pub fn upper_triangular_projection() -> LinearMapOnAlgebra {
        let a = SubalgebraBasis::full(2);
        LinearMapOnAlgebra::from_fn(a.clone(), a, |x| {
            let mut y = x.clone();
            y[(1, 0)] = c(0.0);
            y
        })
        .expect("stays in M_2")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::linalg::random::rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn amplify_examples() {
        let id = LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2));
        let a3 = amplify(&id, 3).unwrap();
        assert!(frob(&(a3.action.clone() - eye(a3.action.nrows()))) < 1e-15);
        let t = transpose(2);
        let t1 = amplify(&t, 1).unwrap();
        assert_eq!(t1.action, t.action);
        let two = LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2)).combine(2.0, &id, 0.0).unwrap();
        let a = amplify(&two, 3).unwrap();
        let x = gaussian(6, 6, &mut rng(1));
        assert!(frob(&(a.apply(&x) - &x * c(2.0))) < 1e-13);
        assert!(frob(&(a.apply(&x) - two.apply_k(3, &x))) < 1e-13);
    }

    #[test]
    fn amplified_transpose_is_partial_transpose() {
        let t = transpose(2);
        let x = gaussian(4, 4, &mut rng(2));
        let y = t.apply_k(2, &x);
        for a in 0..2 {
            for b in 0..2 {
                let blk = x.view((2 * a, 2 * b), (2, 2)).transpose();
                assert!(frob(&(y.view((2 * a, 2 * b), (2, 2)) - blk)) < 1e-15);
            }
        }
        let big = amplify(&t, 2).unwrap();
        assert!(frob(&(big.apply(&x) - y)) < 1e-13);
    }

    #[test]
    fn norm_examples() {
        let full = SubalgebraBasis::full(2);
        let id = LinearMapOnAlgebra::identity(&full);
        for k in 1..=3 {
            let e = op_norm_estimate(&id, k, 50, 3).unwrap();
            assert!((e.value - 1.0).abs() < 1e-12);
        }
        let e = op_norm_estimate(&transpose(2), 2, 100, 3).unwrap();
        assert!(e.value >= 2.0 - 1e-6);
        let half = LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2)).combine(0.5, &id, 0.0).unwrap();
        let e = op_norm_estimate(&half, 3, 50, 3).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn transpose_norm_oracle_from_swap() {
        // swap has norm 1 and its partial transpose is Omega Omega*, norm 2
        let mut swap = Mat::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                swap += kron(&unit(2, a, b), &unit(2, b, a));
            }
        }
        assert!((operator_norm(&swap) - 1.0).abs() < 1e-15);
        assert!((operator_norm(&transpose(2).apply_k(2, &swap)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn choi_examples() {
        let id = LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2));
        let (cp, ch) = is_cp(&id, &tol()).unwrap();
        assert!(cp);
        assert!(ch.min_eig.abs() < 1e-14);
        let (cp, ch) = is_cp(&transpose(2), &tol()).unwrap();
        assert!(!cp);
        assert!((ch.min_eig + 1.0).abs() < 1e-12);
        let v = gaussian(2, 2, &mut rng(4));
        let (cp, _) = is_cp(&kraus_map(&[v]).unwrap(), &tol()).unwrap();
        assert!(cp);
        let avg = scalar_averaging();
        assert!(matches!(is_cp(&avg, &tol()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kraus_examples() {
        let id = LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2));
        let k = kraus_factor(&id, &tol()).unwrap();
        assert_eq!(k.ops.len(), 1);
        let v = &k.ops[0];
        let ph = v[(0, 0)] / v[(0, 0)].norm();
        assert!(frob(&(v / ph - eye(2))) < 1e-12);
        let full = SubalgebraBasis::full(2);
        let e = LinearMapOnAlgebra::from_fn(full.clone(), full.clone(), |a| {
            Mat::from_fn(2, 2, |i, j| if i == j { a[(i, i)] } else { c(0.0) })
        })
        .unwrap();
        let k = kraus_factor(&e, &tol()).unwrap();
        assert_eq!(k.ops.len(), 2);
        assert!(k.residual < 1e-12);
        for v in &k.ops {
            assert!(v[(0, 1)].norm() < 1e-12 && v[(1, 0)].norm() < 1e-12);
        }
        let zero = LinearMapOnAlgebra::new(full.clone(), full, Mat::zeros(4, 4)).unwrap();
        let k = kraus_factor(&zero, &tol()).unwrap();
        assert!(k.ops.is_empty() && k.residual == 0.0);
        assert!(matches!(kraus_factor(&transpose(2), &tol()), Err(Error::Precondition(_))));
    }

    #[test]
    fn rcp_examples() {
        let id = LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2));
        let v = rcp_test(&id, &[1, 2, 3], 32, 400, 5, &tol()).unwrap();
        assert!(v.passed && v.certified && v.violations == 0);
        let v = rcp_test(&transpose(2), &[2], 32, DEFAULT_RCP_BUDGET, 5, &tol()).unwrap();
        assert!(!v.passed);
        let w = v.witness.unwrap();
        assert_eq!(w.level, 2);
        assert!(w.x_abscissa >= -1e-12);
        assert!(w.image_abscissa <= -1e-4);
        let cp = random_cp(2, 3, &mut rng(6));
        let v = rcp_test(&cp, &[1, 2, 3], 32, 400, 6, &tol()).unwrap();
        assert!(v.passed && v.violations == 0);
    }

    #[test]
    fn transpose_is_positive_at_level_one() {
        let v = rcp_test(&transpose(2), &[1], 64, 400, 9, &tol()).unwrap();
        assert!(v.passed && !v.certified);
    }

    #[test]
    fn symmetric_projection_examples() {
        let full = SubalgebraBasis::full(2);
        let id = LinearMapOnAlgebra::identity(&full);
        let sp = build_symmetric_projection(&id, &eye(2), &full, &tol(), 1).unwrap();
        assert!(frob(&(sp.p.action.clone() - eye(4))) < 1e-14);
        assert!(sp.report.passed, "{:?}", sp.report.failures().collect::<Vec<_>>());

        let d = SubalgebraBasis::diagonal(2);
        let swap = LinearMapOnAlgebra::from_fn(d.clone(), d.clone(), |x| {
            Mat::from_fn(2, 2, |i, j| if i == j { x[(1 - i, 1 - i)] } else { c(0.0) })
        })
        .unwrap();
        let sp = build_symmetric_projection(&swap, &eye(2), &d, &tol(), 2).unwrap();
        assert!(sp.report.passed, "{:?}", sp.report.failures().collect::<Vec<_>>());
        let x = Mat::from_diagonal(&DVector::from_vec(vec![c(3.0), c(5.0)]));
        assert!(frob(&(sp.p.apply(&x) - eye(2) * c(4.0))) < 1e-14);

        for kind in 0..3 {
            let f = symmetric_fixture(kind, 3, &mut rng(10 + kind as u64));
            let sp = build_symmetric_projection(&f.theta, &f.q, &f.algebra, &tol(), 3).unwrap();
            assert!(sp.report.passed, "{}: {:?}", f.name, sp.report.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn symmetric_projection_rejects_non_involution() {
        let full = SubalgebraBasis::full(2);
        let t = transpose(2);
        // transpose is an anti-homomorphism
        let err = build_symmetric_projection(&t, &eye(2), &full, &tol(), 1).unwrap_err();
        match err {
            Error::Precondition(m) => assert!(m.contains("theta(ab)")),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn classify_examples() {
        let id = LinearMapOnAlgebra::identity(&SubalgebraBasis::full(2));
        let c1 = classify_projection(&id, &[1, 2], &tol(), 1).unwrap();
        assert!(c1.symmetric && c1.bicontractive && c1.conditional_expectation_residual < 1e-14);
        assert!(c1.report.passed);

        let avg = classify_projection(&scalar_averaging(), &[1, 2, 3], &tol(), 2).unwrap();
        assert!(avg.symmetric && avg.bicontractive);
        assert!(avg.conditional_expectation_residual <= 1e-10);
        assert!((avg.symmetry_levels[&1] - 1.0).abs() < 1e-9);
        assert!(avg.range_is_subalgebra);

        // P(a) for a = [[1, 1], [1, -1]] / sqrt 2 has norm (1 + sqrt 5) / (2 sqrt 2)
        let up = classify_projection(&upper_triangular_projection(), &[1, 2], &tol(), 3).unwrap();
        let oracle = (1.0 + 5f64.sqrt()) / (2.0 * 2f64.sqrt());
        assert!(up.contractive_levels[&1] >= oracle - 1e-9);
        assert!(!up.contractive);
        assert!(up.report.passed, "{:?}", up.report);
        assert!(matches!(
            classify_projection(&transpose(2), &[1], &tol(), 1),
            Err(Error::Precondition(_))
        ));
    }
}
