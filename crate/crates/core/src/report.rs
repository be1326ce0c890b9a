//! Structured pass/fail records for verification suites.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::{Mat, Tolerances};

/// One checked condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `tolerance`; for failing checks it
    /// always exceeds the tolerance.
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub inputs_digest: String,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    pub wall_time_ms: f64,
}

impl VerificationReport {
    pub fn new(suite: &str, inputs: &[&Mat], tol: Tolerances) -> Self {
        VerificationReport {
            suite: suite.to_string(),
            inputs_digest: digest(inputs),
            seed: None,
            tolerances: tol,
            checks: Vec::new(),
            passed: true,
            notes: Vec::new(),
            wall_time_ms: 0.0,
        }
    }

    /// Records `residual <= tolerance`.
    pub fn bound(&mut self, name: &str, residual: f64, tolerance: f64) -> bool {
        let ok = residual <= tolerance;
        self.push(name, ok, residual, tolerance, None);
        ok
    }

    /// Records a boolean condition. A failing flag is stored with residual 1
    /// against tolerance 0.
    pub fn flag(&mut self, name: &str, ok: bool, detail: impl Into<String>) -> bool {
        let d = detail.into();
        let d = (!d.is_empty()).then_some(d);
        self.push(name, ok, if ok { 0.0 } else { 1.0 }, 0.0, d);
        ok
    }

    pub fn push(&mut self, name: &str, passed: bool, residual: f64, tolerance: f64, detail: Option<String>) {
        // A failing check must carry a residual above its tolerance.
        let residual = if !passed && !(residual > tolerance) {
            if tolerance.is_finite() {
                tolerance + tolerance.abs().max(1.0)
            } else {
                f64::MAX
            }
        } else if residual.is_nan() {
            f64::MAX
        } else {
            residual
        };
        self.passed &= passed;
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            residual,
            tolerance,
            detail,
        });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Runs `f` and stores its wall time.
    pub fn timed<F: FnOnce(&mut Self)>(mut self, f: F) -> Self {
        let t0 = std::time::Instant::now();
        f(&mut self);
        self.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
        self
    }
}

/// SHA-256 over shapes and IEEE bit patterns of the inputs.
pub fn digest(inputs: &[&Mat]) -> String {
    let mut h = Sha256::new();
    for m in inputs {
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                h.update(m[(i, j)].re.to_bits().to_le_bytes());
                h.update(m[(i, j)].im.to_bits().to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}
