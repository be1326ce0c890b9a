//! Dense complex linear algebra kernel.
//!
//! [`CMatrix`] is the validated carrier (square, finite). All helpers work on
//! plain `&Mat` so that a `&CMatrix` coerces into them through `Deref`.

use std::ops::Deref;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A finite, square, dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix(Mat);

impl CMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Input(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Input("matrix has dimension 0".into()));
        }
        if !is_finite(&m) {
            return Err(Error::Input("matrix has non-finite entries".into()));
        }
        Ok(CMatrix(m))
    }

    /// Wraps a computed matrix, turning non-finite results into numeric errors.
    pub(crate) fn computed(m: Mat, what: &str) -> Result<Self> {
        if !is_finite(&m) {
            return Err(Error::Numeric(format!("{what}: result has non-finite entries")));
        }
        Ok(CMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("rows have inconsistent lengths".into()));
        }
        CMatrix::new(Mat::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| C64::new(v, 0.0)).collect())
            .collect();
        CMatrix::from_rows(&rows)
    }

    pub fn from_diagonal(d: &[C64]) -> Result<Self> {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        CMatrix::new(m)
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(eye(n))
    }

    pub fn zeros(n: usize) -> Self {
        CMatrix(Mat::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    pub fn scale(&self, c: f64) -> CMatrix {
        CMatrix(&self.0 * C64::new(c, 0.0))
    }
}

impl Deref for CMatrix {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

impl From<CMatrix> for Mat {
    fn from(m: CMatrix) -> Mat {
        m.0
    }
}

/// Numerical tolerances shared by every operation and suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eq_tol: f64,
    pub psd_tol: f64,
    pub conv_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq_tol: 1e-9,
            psd_tol: 1e-9,
            conv_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eq_tol", self.eq_tol),
            ("psd_tol", self.psd_tol),
            ("conv_tol", self.conv_tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!("tolerance {name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Sets a tolerance by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "eq_tol" => self.eq_tol = value,
            "psd_tol" => self.psd_tol = value,
            "conv_tol" => self.conv_tol = value,
            _ => return Err(Error::Input(format!("unknown tolerance '{name}'"))),
        }
        self.validate()
    }
}

/// Eigenvalues together with a Schur factorization `x = q t q*`.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<C64>,
    pub q: Mat,
    pub t: Mat,
}

impl SpectrumResult {
    pub fn reconstruct(&self) -> Mat {
        &self.q * &self.t * self.q.adjoint()
    }
}

pub fn spectrum(x: &Mat) -> Result<SpectrumResult> {
    let (q, t) = schur(x)?;
    let eigenvalues = t.diagonal().iter().copied().collect();
    Ok(SpectrumResult { eigenvalues, q, t })
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest singular value.
pub fn operator_norm(x: &Mat) -> f64 {
    match (x.nrows(), x.ncols()) {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => x[(0, 0)].norm(),
        _ => {
            let s = x.clone().svd(false, false).singular_values;
            s.iter().fold(0.0_f64, |a, &b| a.max(b))
        }
    }
}

pub fn singular_values(x: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = x.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

type Svd = nalgebra::SVD<C64, nalgebra::Dyn, nalgebra::Dyn>;

/// Thin SVD whose factors are verified to recompose `x`.
///
/// nalgebra's complex SVD occasionally returns wrong singular vectors (with
/// correct singular values) for rank-deficient inputs. When its factors fail
/// to recompose `x`, one-sided Jacobi is used instead.
pub fn svd(x: &Mat) -> Svd {
    let fx = frob(x);
    let s = x.clone().svd(true, true);
    let accept = 1e-13 * fx * (1.0 + x.nrows().min(x.ncols()) as f64).sqrt();
    let ok = s.clone().recompose().is_ok_and(|r| frob(&(r - x)) <= accept);
    if ok || fx == 0.0 {
        return s;
    }
    if x.nrows() >= x.ncols() {
        jacobi_svd(x)
    } else {
        let t = jacobi_svd(&x.adjoint());
        Svd {
            u: t.v_t.map(|v| v.adjoint()),
            v_t: t.u.map(|u| u.adjoint()),
            singular_values: t.singular_values,
        }
    }
}

/// One-sided (Hestenes) Jacobi SVD of a tall matrix, singular values in
/// decreasing order.
fn jacobi_svd(a: &Mat) -> Svd {
    let (m, n) = a.shape();
    let mut u = a.clone();
    let mut v = eye(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dotc(&u.column(q));
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for w in [&mut u, &mut v] {
                    for i in 0..w.nrows() {
                        let wp = w[(i, p)];
                        let wq = w[(i, q)] * phase.conj();
                        w[(i, p)] = wp * cs - wq * sn;
                        w[(i, q)] = wp * sn + wq * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sv = nalgebra::DVector::from_iterator(n, order.iter().map(|&j| norms[j]));
    let mut uo = Mat::zeros(m, n);
    let mut vo = Mat::zeros(n, n);
    let tiny = f64::MIN_POSITIVE.sqrt() * norms.iter().fold(1.0f64, |a, &b| a.max(b));
    for (k, &j) in order.iter().enumerate() {
        vo.set_column(k, &v.column(j));
        if norms[j] > tiny {
            uo.set_column(k, &(u.column(j) / c(norms[j])));
        }
    }
    // complete U on the columns of vanishing singular values
    for k in 0..n {
        if norms[order[k]] > tiny {
            continue;
        }
        for e in 0..m {
            let mut cand = nalgebra::DVector::<C64>::zeros(m);
            cand[e] = ONE;
            for _ in 0..2 {
                for l in 0..n {
                    if l != k {
                        let col = uo.column(l).clone_owned();
                        let proj = col.dotc(&cand);
                        cand -= col * proj;
                    }
                }
            }
            let nc = cand.norm();
            if nc > 0.5 {
                uo.set_column(k, &(cand / c(nc)));
                break;
            }
        }
    }
    Svd {
        u: Some(uo),
        v_t: Some(vo.adjoint()),
        singular_values: sv,
    }
}

pub fn frob(x: &Mat) -> f64 {
    x.norm()
}

/// `(x + x*)/2`, exactly Hermitian.
pub fn herm_part(x: &Mat) -> Mat {
    let n = x.nrows();
    let mut h = Mat::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = c(x[(i, i)].re);
        for j in i + 1..n {
            let v = (x[(i, j)] + x[(j, i)].conj()) * 0.5;
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    h
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(h: &Mat) -> (Vec<f64>, Mat) {
    let n = h.nrows();
    if n == 1 {
        return (vec![h[(0, 0)].re], eye(1));
    }
    let e = SymmetricEigen::new(h.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = Mat::from_fn(n, n, |r, k| e.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

pub fn lambda_min(h: &Mat) -> f64 {
    eigh(h).0[0]
}

pub fn lambda_max(h: &Mat) -> f64 {
    *eigh(h).0.last().unwrap()
}

/// Largest eigenvalue of a Hermitian matrix with a unit eigenvector.
pub fn top_eigpair(h: &Mat) -> (f64, nalgebra::DVector<C64>) {
    let (vals, vecs) = eigh(h);
    let k = vals.len() - 1;
    (vals[k], vecs.column(k).into_owned())
}

/// Matrix exponential by Padé scaling and squaring.
pub fn matrix_exp(x: &Mat) -> Result<Mat> {
    let e = x.exp();
    if !is_finite(&e) {
        return Err(Error::Numeric(format!(
            "matrix_exp: overflow for input of norm {:.3e}",
            operator_norm(x)
        )));
    }
    Ok(e)
}

pub fn inverse(x: &Mat) -> Option<Mat> {
    let inv = x.clone().try_inverse()?;
    is_finite(&inv).then_some(inv)
}

/// Solves `a z = b`.
pub fn solve(a: &Mat, b: &Mat) -> Option<Mat> {
    let z = a.clone().lu().solve(b)?;
    is_finite(&z).then_some(z)
}

/// Complex Schur form `x = q t q*` with `t` upper triangular.
pub fn schur(x: &Mat) -> Result<(Mat, Mat)> {
    let n = x.nrows();
    if n == 1 {
        return Ok((eye(1), x.clone()));
    }
    let s = Schur::try_new(x.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((q, t))
}

/// Principal square root of an upper triangular matrix (Björck–Hammarling).
pub fn tri_sqrt(t: &Mat) -> Result<Mat> {
    let n = t.nrows();
    let mut r = Mat::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            let den = r[(i, i)] + r[(j, j)];
            if den.norm() == 0.0 {
                if s.norm() == 0.0 {
                    continue;
                }
                return Err(Error::Numeric("tri_sqrt: singular Sylvester equation".into()));
            }
            r[(i, j)] = s / den;
        }
    }
    Ok(r)
}

/// Kronecker product.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Column-stacking of the entries in row-major order.
pub fn vec_rows(x: &Mat) -> nalgebra::DVector<C64> {
    let (r, cl) = x.shape();
    nalgebra::DVector::from_fn(r * cl, |k, _| x[(k / cl, k % cl)])
}

pub fn unvec_rows(v: &[C64], n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| v[i * n + j])
}

/// Matrix unit `E_ij` of size n.
pub fn unit(n: usize, i: usize, j: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

/// Seeded instance generators. Every generator takes its randomness from an
/// explicit seed or RNG.
pub mod random {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub type Rng64 = ChaCha8Rng;

    pub fn rng(seed: u64) -> Rng64 {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Derives an independent stream for sub-instance `k` of a seeded run.
    pub fn substream(seed: u64, k: u64) -> Rng64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(k.wrapping_add(1));
        r
    }

    pub fn normal(rng: &mut Rng64) -> f64 {
        rng.sample(StandardNormal)
    }

    /// Complex Ginibre matrix with unit-variance entries.
    pub fn gaussian(rows: usize, cols: usize, rng: &mut Rng64) -> Mat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Mat::from_fn(rows, cols, |_, _| C64::new(normal(rng) * s, normal(rng) * s))
    }

    pub fn hermitian(n: usize, rng: &mut Rng64) -> Mat {
        herm_part(&gaussian(n, n, rng))
    }

    /// Haar-distributed unitary.
    pub fn unitary(n: usize, rng: &mut Rng64) -> Mat {
        let g = gaussian(n, n, rng);
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..n {
            let d = r[(j, j)];
            let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
        q
    }

    /// Random `n x k` isometry (orthonormal columns).
    pub fn isometry(n: usize, k: usize, rng: &mut Rng64) -> Mat {
        unitary(n, rng).columns(0, k).into_owned()
    }

    /// `H + i c K` with `H` positive definite, scaled so the sectorial angle
    /// does not exceed `cap`.
    pub fn accretive_with(n: usize, cap: f64, rng: &mut Rng64) -> Result<Mat> {
        if !(cap > 0.0 && cap <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::Input(format!("angle_cap {cap} must lie in (0, pi/2]")));
        }
        let g = gaussian(n, n, rng);
        let h = herm_part(&(&g * g.adjoint() / c(n as f64)));
        let k = hermitian(n, rng);
        let u: f64 = rng.gen_range(0.2..1.0);
        let scale = if cap >= std::f64::consts::FRAC_PI_2 {
            u * (1.0 + operator_norm(&h)) / (1e-300 + operator_norm(&k))
        } else {
            let (vals, vecs) = eigh(&h);
            let floor = vals.last().copied().unwrap_or(0.0) * 1e-14;
            let d = Mat::from_fn(n, n, |i, j| {
                if i == j {
                    c(1.0 / vals[i].max(floor).max(1e-300).sqrt())
                } else {
                    ZERO
                }
            });
            let hm = &vecs * d * vecs.adjoint();
            let m = operator_norm(&(&hm * &k * &hm));
            if m == 0.0 {
                0.0
            } else {
                u * cap.tan() / m
            }
        };
        Ok(h + k * C64::new(0.0, scale))
    }

    pub fn random_accretive(n: usize, seed: u64, angle_cap: f64) -> Result<CMatrix> {
        if n == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        let m = accretive_with(n, angle_cap, &mut rng(seed))?;
        CMatrix::new(m)
    }

    /// Random matrix of operator norm exactly `norm`.
    pub fn contraction_with(n: usize, norm: f64, rng: &mut Rng64) -> Mat {
        let g = gaussian(n, n, rng);
        let s = operator_norm(&g);
        g * c(norm / s)
    }

    pub fn random_contraction(n: usize, seed: u64, norm: f64) -> Result<CMatrix> {
        if !(norm.is_finite() && norm >= 0.0) || n == 0 {
            return Err(Error::Input("contraction needs n > 0 and finite norm >= 0".into()));
        }
        CMatrix::new(contraction_with(n, norm, &mut rng(seed)))
    }

    /// Orthogonal projection onto a random subspace of dimension `k`.
    pub fn projection(n: usize, k: usize, rng: &mut Rng64) -> Mat {
        let v = isometry(n, k, rng);
        herm_part(&(&v * v.adjoint()))
    }

    /// Idempotent `s p s^{-1}` for a random projection `p` and a similarity
    /// `s` of condition number at most `max_cond`, polished by Newton steps.
    pub fn idempotent_with(n: usize, max_cond: f64, rng: &mut Rng64) -> Mat {
        let k = rng.gen_range(0..=n);
        let p = projection(n, k, rng);
        let u = unitary(n, rng);
        let v = unitary(n, rng);
        let lc = max_cond.max(1.0).ln();
        let d = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c((rng.gen_range(0.0..=1.0) * lc).exp())
            } else {
                ZERO
            }
        });
        let dinv = Mat::from_fn(n, n, |i, j| if i == j { ONE / d[(i, i)] } else { ZERO });
        let s = &u * &d * &v;
        let sinv = v.adjoint() * dinv * u.adjoint();
        polish_idempotent(&(s * p * sinv))
    }

    pub fn random_idempotent(n: usize, seed: u64, max_cond: f64) -> Result<CMatrix> {
        if n == 0 || !(max_cond >= 1.0) {
            return Err(Error::Input("idempotent needs n > 0 and max_cond >= 1".into()));
        }
        CMatrix::new(idempotent_with(n, max_cond, &mut rng(seed)))
    }

    /// Iterates `p <- 3p^2 - 2p^3` until the idempotent residual stalls.
    pub fn polish_idempotent(p: &Mat) -> Mat {
        let mut p = p.clone();
        let mut res = frob(&(&p * &p - &p));
        for _ in 0..8 {
            let p2 = &p * &p;
            let next = &p2 * c(3.0) - &p2 * &p * c(2.0);
            let r = frob(&(&next * &next - &next));
            if r >= res {
                break;
            }
            p = next;
            res = r;
        }
        p
    }

    /// Hermitian unitary (a symmetry) with a random eigenspace split.
    pub fn symmetry(n: usize, rng: &mut Rng64) -> Mat {
        let k = rng.gen_range(0..=n);
        let p = projection(n, k, rng);
        p * c(2.0) - eye(n)
    }
}
