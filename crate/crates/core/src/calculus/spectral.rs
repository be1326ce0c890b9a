//! Principal fractional powers on the Schur form by inverse scaling and
//! squaring, with exact deflation of the (reducing) kernel of an accretive
//! matrix.

use crate::error::{Error, Result};
use crate::linalg::{c, eye, frob, operator_norm, schur, tri_sqrt, Mat, C64, ONE};

/// Singular values at or below this (relative to `max(1, ||x||)`) are
/// treated as an exact kernel.
pub const KERNEL_RTOL: f64 = 1e-11;

/// `y = w core w*` where `w` has orthonormal columns spanning `ker(y)^perp`.
///
/// For accretive `y` the kernel is reducing (`ker y = ker y*`), so `y` splits
/// as `0` on the kernel plus an invertible accretive `core`.
#[derive(Clone, Debug)]
pub struct Deflated {
    pub w: Mat,
    pub core: Mat,
    pub kernel_dim: usize,
}

impl Deflated {
    pub fn lift(&self, z: &Mat) -> Mat {
        if self.kernel_dim == 0 {
            return z.clone();
        }
        &self.w * z * self.w.adjoint()
    }
}

pub fn kernel_threshold(y: &Mat) -> f64 {
    KERNEL_RTOL * operator_norm(y).max(1.0)
}

pub fn deflate(y: &Mat) -> Deflated {
    let k = y.nrows();
    let kappa = kernel_threshold(y);
    let svd = crate::linalg::svd(y);
    let vt = svd.v_t.expect("svd with v");
    let keep: Vec<usize> = (0..k).filter(|&i| svd.singular_values[i] > kappa).collect();
    if keep.len() == k {
        return Deflated {
            w: eye(k),
            core: y.clone(),
            kernel_dim: 0,
        };
    }
    let w = Mat::from_fn(k, keep.len(), |i, j| vt[(keep[j], i)].conj());
    let core = w.adjoint() * y * &w;
    Deflated {
        w,
        core,
        kernel_dim: k - keep.len(),
    }
}

/// Principal `lambda^p`.
pub fn cpow(lambda: C64, p: f64) -> C64 {
    if lambda == C64::new(0.0, 0.0) {
        return C64::new(0.0, 0.0);
    }
    (lambda.ln() * p).exp()
}

fn atanh_small(z: C64) -> C64 {
    if z.norm() < 0.1 {
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        for k in 1..40 {
            term *= z2;
            let add = term / c((2 * k + 1) as f64);
            sum += add;
            if add.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        ((ONE + z).ln() - (ONE - z).ln()) * 0.5
    }
}

/// Divided difference `(l2^p - l1^p) / (l2 - l1)` evaluated stably.
pub fn pow_divdiff(l1: C64, l2: C64, p: f64) -> C64 {
    if l1 == l2 {
        return cpow(l1, p - 1.0) * p;
    }
    let d = l2 - l1;
    if d.norm() > 0.5 * (l1 + l2).norm() {
        return (cpow(l2, p) - cpow(l1, p)) / d;
    }
    let z = d / (l2 + l1);
    let w = atanh_small(z);
    let mid = ((l1.ln() + l2.ln()) * (0.5 * p)).exp();
    mid * (w * p).sinh() * 2.0 / d
}

fn fix_diagonals(x: &mut Mat, t: &Mat, p: f64) {
    let m = t.nrows();
    for i in 0..m {
        x[(i, i)] = cpow(t[(i, i)], p);
    }
    for i in 0..m.saturating_sub(1) {
        x[(i, i + 1)] = t[(i, i + 1)] * pow_divdiff(t[(i, i)], t[(i + 1, i + 1)], p);
    }
}

/// `t^p` for upper triangular `t` with no eigenvalue on `(-inf, 0]`.
pub fn tri_pow(t: &Mat, p: f64) -> Result<Mat> {
    let m = t.nrows();
    if m == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if p == 1.0 {
        return Ok(t.clone());
    }
    let id = eye(m);
    let mut r = t.clone();
    let mut s = 0u32;
    while frob(&(&r - &id)) > 0.25 {
        if s >= 64 {
            return Err(Error::Numeric("tri_pow: square roots failed to approach the identity".into()));
        }
        r = tri_sqrt(&r)?;
        s += 1;
    }
    // r = t^{1/2^s}, so r^p = t^{p/2^s}
    let q = p / 2f64.powi(s as i32);
    let a = &r - &id;
    let mut sum = id.clone();
    let mut apow = id;
    let mut coef = 1.0;
    for k in 1..400 {
        coef *= (p - (k - 1) as f64) / k as f64;
        apow = &apow * &a;
        let term = &apow * c(coef);
        sum += &term;
        if frob(&term) <= 1e-18 * frob(&sum) || coef == 0.0 {
            break;
        }
    }
    let mut x = sum;
    fix_diagonals(&mut x, t, q);
    for j in 1..=s {
        x = &x * &x;
        fix_diagonals(&mut x, t, p * 2f64.powi(j as i32) / 2f64.powi(s as i32));
    }
    Ok(x)
}

/// Principal power of an invertible matrix whose spectrum avoids `(-inf, 0]`.
pub fn pow_invertible(y: &Mat, p: f64) -> Result<Mat> {
    let (q, t) = schur(y)?;
    check_branch(&t)?;
    let tp = tri_pow(&t, p)?;
    Ok(&q * tp * q.adjoint())
}

pub(crate) fn check_branch(t: &Mat) -> Result<()> {
    for i in 0..t.nrows() {
        let l = t[(i, i)];
        if l.re <= 0.0 && l.im == 0.0 {
            return Err(Error::Numeric(format!(
                "eigenvalue {l} lies on the branch cut of the principal power"
            )));
        }
    }
    Ok(())
}

/// Principal `y^p` of an accretive matrix: kernel deflated exactly, the rest
/// by inverse scaling and squaring.
pub fn pow_accretive(y: &Mat, p: f64) -> Result<Mat> {
    if p == 1.0 {
        return Ok(y.clone());
    }
    let d = deflate(y);
    if d.core.nrows() == 0 {
        return Ok(Mat::zeros(y.nrows(), y.nrows()));
    }
    Ok(d.lift(&pow_invertible(&d.core, p)?))
}

/// `(x + eps)^r` on a halving ladder of shifts, extrapolated to `eps = 0`.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub value: Mat,
    pub eps0: f64,
    /// `||T_{j,j} - T_{j-1,j-1}||` along the Richardson diagonal.
    pub increments: Vec<f64>,
}

pub fn shifted_ladder(y: &Mat, p: f64, levels: usize) -> Result<Ladder> {
    let d = deflate(y);
    let m = d.core.nrows();
    if m == 0 {
        return Ok(Ladder {
            value: Mat::zeros(y.nrows(), y.nrows()),
            eps0: 0.0,
            increments: vec![],
        });
    }
    let (q, t) = schur(&d.core)?;
    let min_abs = (0..m).map(|i| t[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    let ny = operator_norm(y);
    let eps0 = (1e-3f64.max(1e-3 * ny)).min(1e-2 * min_abs);
    let mut table: Vec<Vec<Mat>> = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let eps = eps0 / 2f64.powi(k as i32);
        let mut ts = t.clone();
        for i in 0..m {
            ts[(i, i)] += c(eps);
        }
        let mut row = vec![tri_pow(&ts, p)?];
        for j in 1..=k {
            let f = 2f64.powi(j as i32);
            let v = (&row[j - 1] * c(f) - &table[k - 1][j - 1]) / c(f - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    let increments: Vec<f64> = (1..=levels)
        .map(|j| frob(&(&table[j][j] - &table[j - 1][j - 1])))
        .collect();
    let best = table[levels][levels].clone();
    Ok(Ladder {
        value: d.lift(&(&q * best * q.adjoint())),
        eps0,
        increments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::*;
    use crate::linalg::{CMatrix, I};

    #[test]
    fn divdiff_matches_direct_formula_far_apart() {
        let a = C64::new(1.0, 0.5);
        let b = C64::new(3.0, -1.0);
        let direct = (cpow(b, 0.3) - cpow(a, 0.3)) / (b - a);
        let close = {
            let z = (b - a) / (b + a);
            let w = ((ONE + z).ln() - (ONE - z).ln()) * 0.5;
            ((a.ln() + b.ln()) * 0.15).exp() * (w * 0.3).sinh() * 2.0 / (b - a)
        };
        assert!((direct - close).norm() < 1e-13);
        assert!((pow_divdiff(a, b, 0.3) - direct).norm() < 1e-14);
    }

    #[test]
    fn divdiff_close_eigenvalues_tends_to_derivative() {
        let a = C64::new(2.0, 1.0);
        let b = a + C64::new(1e-13, 0.0);
        let der = cpow(a, 0.7 - 1.0) * 0.7;
        assert!((pow_divdiff(a, b, 0.7) - der).norm() < 1e-12);
    }

    #[test]
    fn tri_pow_inverts_by_powering() {
        let mut r = rng(31);
        for _ in 0..20 {
            let x = accretive_with(5, 1.4, &mut r).unwrap();
            let (_, t) = schur(&x).unwrap();
            let third = tri_pow(&t, 1.0 / 3.0).unwrap();
            let back = &third * &third * &third;
            assert!(frob(&(back - &t)) < 1e-11 * frob(&t));
        }
    }

    #[test]
    fn scalar_principal_powers() {
        let x = CMatrix::from_diagonal(&[I, c(4.0)]).unwrap();
        let y = pow_accretive(&x, 0.5).unwrap();
        assert!((y[(0, 0)] - C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        assert!((y[(1, 1)] - c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn kernel_is_deflated() {
        let x = CMatrix::from_diagonal(&[c(0.0), c(1.0)]).unwrap();
        let y = pow_accretive(&x, 0.1).unwrap();
        assert!(frob(&(y - x.as_mat())) < 1e-15);
        let d = deflate(&x);
        assert_eq!(d.kernel_dim, 1);
    }

    #[test]
    fn ladder_converges_for_jordan_block() {
        let x = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let l = shifted_ladder(&x, 0.5, 4).unwrap();
        let exact = CMatrix::from_real_rows(&[&[1.0, 0.5], &[0.0, 1.0]]).unwrap();
        assert!(frob(&(l.value - exact.as_mat())) < 1e-12);
    }
}
