//! Residuals of the Stokes algebra on every block up to a photon cap.

use depol_core::algebra::{stokes_matrices, CMatrix, StokesMatrices};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::Status;

/// Largest photon number the check accepts.
pub const MAX_N: usize = 16;
pub const ALGEBRA_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraReport {
    pub n_max: usize,
    pub threshold: f64,
    /// `max ‖[S_i, S_j] - 2i ε_ijk S_k‖` over the cyclic triples.
    pub commutator: f64,
    /// `max ‖S² - N(N+2) 𝟙‖`.
    pub casimir: f64,
    /// `max ‖[S₀, S_k]‖`.
    pub number_commutator: f64,
    pub hermiticity: f64,
    /// `max ‖S₊ - (S₁ + i S₂)‖`.
    pub ladder: f64,
    pub pass: bool,
    pub fault_injected: bool,
}

impl AlgebraReport {
    pub fn status(&self) -> Status {
        if self.pass {
            Status::Pass
        } else {
            Status::Violation
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn comm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn algebra_check(n_max: usize, inject_fault: bool) -> Result<AlgebraReport> {
    if n_max > MAX_N {
        return Err(CliError::Invalid(format!("--n-max {n_max} exceeds the cap of {MAX_N}")));
    }
    let i2 = Complex64::new(0.0, 2.0);
    let mut report = AlgebraReport {
        n_max,
        threshold: ALGEBRA_THRESHOLD,
        commutator: 0.0,
        casimir: 0.0,
        number_commutator: 0.0,
        hermiticity: 0.0,
        ladder: 0.0,
        pass: false,
        fault_injected: inject_fault,
    };
    for n in 0..=n_max {
        let mut s: StokesMatrices = stokes_matrices(n);
        if inject_fault && n == n_max {
            s.s3[(0, 0)] += Complex64::from(1e-3);
        }
        let dim = n + 1;
        let triples = [(&s.s1, &s.s2, &s.s3), (&s.s2, &s.s3, &s.s1), (&s.s3, &s.s1, &s.s2)];
        for (a, b, c) in triples {
            report.commutator = report.commutator.max(max_abs(&(comm(a, b) - c * i2)));
        }
        let casimir = CMatrix::identity(dim, dim).scale((n * (n + 2)) as f64);
        report.casimir = report.casimir.max(max_abs(&(s.casimir() - casimir)));
        for k in [&s.s1, &s.s2, &s.s3] {
            report.number_commutator = report.number_commutator.max(max_abs(&comm(&s.s0, k)));
            report.hermiticity = report.hermiticity.max(max_abs(&(k - k.adjoint())));
        }
        let ladder = &s.s1 + &s.s2 * Complex64::i();
        report.ladder = report.ladder.max(max_abs(&(&s.splus - ladder)));
    }
    report.pass = [report.commutator, report.casimir, report.number_commutator, report.hermiticity, report.ladder]
        .iter()
        .all(|r| *r <= ALGEBRA_THRESHOLD);
    Ok(report)
}
