//! Adaptive composite Gauss–Legendre quadrature for matrix-valued integrands
//! on `[0, 1]`.

use crate::error::{Error, Result};
use crate::linalg::{c, frob, Mat};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

pub struct Rule {
    hi: (Vec<f64>, Vec<f64>),
    lo: (Vec<f64>, Vec<f64>),
}

impl Rule {
    pub fn new(hi: usize, lo: usize) -> Self {
        Rule {
            hi: gauss_legendre(hi),
            lo: gauss_legendre(lo),
        }
    }

    fn apply<F>(rule: &(Vec<f64>, Vec<f64>), f: &F, a: f64, b: f64) -> Result<Mat>
    where
        F: Fn(f64) -> Result<Mat>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc: Option<Mat> = None;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            let v = f(mid + half * x)? * c(w * half);
            acc = Some(match acc {
                Some(s) => s + v,
                None => v,
            });
        }
        Ok(acc.expect("rule has nodes"))
    }
}

pub struct Integral {
    pub value: Mat,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Integrates `f` over `[0, 1]`, starting from `initial` panels graded
/// geometrically toward 0 and bisecting panels whose two-rule difference
/// exceeds their share of `abs_tol`.
pub fn integrate_unit<F>(f: F, rule: &Rule, initial: usize, abs_tol: f64, max_panels: usize) -> Result<Integral>
where
    F: Fn(f64) -> Result<Mat>,
{
    let initial = initial.max(1);
    let mut edges = vec![0.0];
    for k in (0..initial).rev() {
        edges.push(0.25f64.powi(k as i32));
    }
    let mut stack: Vec<(f64, f64, u32)> = edges.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    let mut value: Option<Mat> = None;
    let mut err = 0.0;
    let mut panels = 0;
    while let Some((a, b, depth)) = stack.pop() {
        let hi = Rule::apply(&rule.hi, &f, a, b)?;
        let lo = Rule::apply(&rule.lo, &f, a, b)?;
        let e = frob(&(&hi - &lo));
        let share = abs_tol * (b - a).max(1e-3);
        if e > share && depth < 40 && panels + stack.len() < max_panels {
            let m = 0.5 * (a + b);
            stack.push((m, b, depth + 1));
            stack.push((a, m, depth + 1));
            continue;
        }
        panels += 1;
        err += e;
        value = Some(match value {
            Some(v) => v + hi,
            None => hi,
        });
    }
    let value = value.ok_or_else(|| Error::Numeric("quadrature produced no panels".into()))?;
    Ok(Integral {
        value,
        error_estimate: err,
        panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eye;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((m - 2.0 / 39.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!(x1, vec![0.0]);
        assert!((w1[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn integrates_a_kink_near_zero() {
        let rule = Rule::new(20, 14);
        let r = integrate_unit(|v| Ok(eye(1) * c(v.sqrt())), &rule, 10, 1e-13, 4000).unwrap();
        assert!((r.value[(0, 0)].re - 2.0 / 3.0).abs() < 1e-12);
    }
}
