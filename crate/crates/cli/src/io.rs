//! JSON matrix and algebra files.
//!
//! A matrix is `{"n": n, "entries": [[[re, im], ...], ...]}`. Numbers are
//! written with 17 significant digits so every `f64` round-trips.

use std::path::Path;

use realpos_core::algebra::SubalgebraBasis;
use realpos_core::cones::AmbientContext;
use realpos_core::linalg::Mat;
use realpos_core::{CMatrix, Tolerances, C64};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::CliError;

/// Decimal with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn raw(v: f64) -> Box<RawValue> {
    RawValue::from_string(fmt_f64(v)).expect("finite floats format as JSON numbers")
}

#[derive(Serialize)]
struct MatrixOut {
    n: usize,
    entries: Vec<Vec<[Box<RawValue>; 2]>>,
}

#[derive(Deserialize)]
struct MatrixIn {
    n: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

fn to_out(m: &Mat) -> MatrixOut {
    let n = m.nrows();
    MatrixOut {
        n,
        entries: (0..n)
            .map(|i| (0..n).map(|j| [raw(m[(i, j)].re), raw(m[(i, j)].im)]).collect())
            .collect(),
    }
}

fn from_in(m: MatrixIn) -> Result<Mat, CliError> {
    if m.entries.len() != m.n || m.entries.iter().any(|r| r.len() != m.n) {
        return Err(CliError::Input(format!("matrix rows and columns must both number n = {}", m.n)));
    }
    let out = Mat::from_fn(m.n, m.n, |i, j| {
        let [re, im] = m.entries[i][j];
        C64::new(re, im)
    });
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CliError::Input("matrix entries must be finite".into()));
    }
    Ok(out)
}

pub fn matrix_to_json(m: &Mat) -> String {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        panic!("refusing to serialize a non-finite matrix");
    }
    let mut s = serde_json::to_string_pretty(&to_out(m)).expect("serializable");
    s.push('\n');
    s
}

pub fn matrix_from_json(s: &str) -> Result<CMatrix, CliError> {
    let m: MatrixIn = serde_json::from_str(s).map_err(|e| CliError::Input(format!("malformed matrix file: {e}")))?;
    CMatrix::new(from_in(m)?).map_err(CliError::Core)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, s: &str) -> Result<(), CliError> {
    std::fs::write(path, s).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    matrix_from_json(&read_text(path)?)
}

pub fn write_matrix(path: &Path, m: &Mat) -> Result<(), CliError> {
    write_text(path, &matrix_to_json(m))
}

#[derive(Serialize)]
struct AlgebraOut {
    ambient_n: usize,
    unit: Option<MatrixOut>,
    basis: Vec<MatrixOut>,
}

#[derive(Deserialize)]
struct AlgebraIn {
    ambient_n: usize,
    unit: Option<MatrixIn>,
    basis: Vec<MatrixIn>,
}

pub fn algebra_to_json(a: &SubalgebraBasis) -> String {
    let out = AlgebraOut {
        ambient_n: a.n(),
        unit: a.unit.as_ref().map(to_out),
        basis: a.basis().iter().map(to_out).collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("serializable");
    s.push('\n');
    s
}

/// Parses an algebra file and re-certifies closure under multiplication in
/// the full ambient `M_n`.
pub fn algebra_from_json(s: &str, tol: &Tolerances) -> Result<SubalgebraBasis, CliError> {
    let a: AlgebraIn = serde_json::from_str(s).map_err(|e| CliError::Input(format!("malformed algebra file: {e}")))?;
    let n = a.ambient_n;
    let basis = a.basis.into_iter().map(from_in).collect::<Result<Vec<_>, _>>()?;
    if basis.iter().any(|b| b.nrows() != n) {
        return Err(CliError::Input(format!("basis matrices must be {n} x {n}")));
    }
    let alg = SubalgebraBasis::new(AmbientContext::full(n), &basis, tol).map_err(CliError::Core)?;
    if let Some(u) = a.unit {
        let u = from_in(u)?;
        let ok = alg.unit.as_ref().is_some_and(|e| (e - &u).norm() <= 1e-8 * (1.0 + u.norm()));
        if !ok {
            return Err(CliError::Input("declared unit does not act as the unit of the span".into()));
        }
    }
    Ok(alg)
}
