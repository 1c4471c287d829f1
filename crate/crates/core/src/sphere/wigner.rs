//! Wigner rotation functions and spherical harmonics.
//!
//! Euler angles follow the zyz convention with
//! `D^S_{mm'}(φ,θ,ψ) = e^{-imφ} d^S_{mm'}(θ) e^{-im'ψ}`. With these phases
//! `D^S_{m0}(φ,θ,ψ)* = √(4π/(2S+1)) Y_{Sm}(θ,φ)` and `D¹₀₀ = cos θ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::factorial;
use crate::error::{Error, Result};
use crate::spin::HalfInt;

fn check_labels(s: HalfInt, m: HalfInt, mp: HalfInt) -> Result<()> {
    let ok = s.twice() >= 0
        && m.abs() <= s
        && mp.abs() <= s
        && s.same_parity(m)
        && s.same_parity(mp);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSpinLabels { s, m, mp })
    }
}

/// Small Wigner function `d^S_{mm'}(θ)` from the explicit finite sum.
pub fn wigner_d(s: HalfInt, m: HalfInt, mp: HalfInt, theta: f64) -> Result<f64> {
    check_labels(s, m, mp)?;
    Ok(wigner_d_unchecked(s, m, mp, theta))
}

pub(crate) fn wigner_d_unchecked(s: HalfInt, m: HalfInt, mp: HalfInt, theta: f64) -> f64 {
    // All of j±m, j±m' are integers once the labels pass the parity check.
    let (j2, a2, b2) = (s.twice(), m.twice(), mp.twice());
    let jpa = ((j2 + a2) / 2) as usize;
    let jma = ((j2 - a2) / 2) as usize;
    let jpb = ((j2 + b2) / 2) as usize;
    let jmb = ((j2 - b2) / 2) as usize;
    let amb = (a2 - b2) / 2;
    let prefactor = (factorial(jpa) * factorial(jma) * factorial(jpb) * factorial(jmb)).sqrt();
    let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let k_min = (-amb).max(0) as usize;
    let k_max = jpb.min(jma);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let sign = if (amb + k as i32).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let denom = factorial(jpb - k)
            * factorial(k)
            * factorial((amb + k as i32) as usize)
            * factorial(jma - k);
        let cos_exp = (jpb + jma - 2 * k) as i32;
        let sin_exp = amb + 2 * k as i32;
        sum += sign * c.powi(cos_exp) * sn.powi(sin_exp) / denom;
    }
    prefactor * sum
}

/// `D^S_{mm'}(φ,θ,ψ) = e^{-imφ} d^S_{mm'}(θ) e^{-im'ψ}`.
#[allow(non_snake_case)]
pub fn wigner_D(s: HalfInt, m: HalfInt, mp: HalfInt, phi: f64, theta: f64, psi: f64) -> Result<Complex64> {
    let d = wigner_d(s, m, mp, theta)?;
    Ok(Complex64::from_polar(d, -(m.value() * phi + mp.value() * psi)))
}

/// Orthonormal spherical harmonic with the Condon–Shortley phase.
pub fn spherical_harmonic(l: usize, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::InvalidSpinLabels {
            s: HalfInt::from_int(l as i32),
            m: HalfInt::from_int(m),
            mp: HalfInt::ZERO,
        });
    }
    let p = associated_legendre(l, am, theta.cos());
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    let y = Complex64::from_polar(norm * p, am as f64 * phi);
    Ok(if m >= 0 {
        y
    } else if am % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    })
}

/// `P_l^m(x)` for `m ≥ 0`, including the `(-1)^m` Condon–Shortley factor.
fn associated_legendre(l: usize, m: usize, x: f64) -> f64 {
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = ((2 * ll - 1) as f64 * x * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}
