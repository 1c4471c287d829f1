//! Multipole expansions of sphere distributions and their exact depolarizing dynamics.
//!
//! Two bases are used. A `ψ`-integrated distribution `f(θ,φ)` expands in
//! orthonormal spherical harmonics, `f = Σ c_{Sm} Y_{Sm}`. A block-pair symbol
//! on the full rotation group expands in the orthonormal functions
//! `B^S_{mm'} = √((2S+1)/8π²) D^S_{mm'}(φ,θ,ψ)`. Under the depolarizing
//! generator each coefficient evolves independently:
//!
//! `c^S_{mm'}(t) = c^S_{mm'}(0) exp{[-k₂γ(S(S+1) - m²) - k₁Γm'²] t}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::SphereGrid;
use super::husimi::pair_symbol;
use super::wigner::{spherical_harmonic, wigner_d_unchecked};
use crate::algebra::{CMatrix, TwoModeState};
use crate::depolarizer::DepolarizerRates;
use crate::error::{Error, Result};
use crate::spin::HalfInt;

/// Labels `(S, m, m')` of one multipole.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub s: HalfInt,
    pub m: HalfInt,
    pub mp: HalfInt,
}

impl Channel {
    pub fn new(s: HalfInt, m: HalfInt, mp: HalfInt) -> Result<Self> {
        let ok = s.twice() >= 0
            && m.abs() <= s
            && mp.abs() <= s
            && s.same_parity(m)
            && s.same_parity(mp);
        if ok {
            Ok(Channel { s, m, mp })
        } else {
            Err(Error::InvalidSpinLabels { s, m, mp })
        }
    }

    /// Integer-spin channel of a `ψ`-integrated distribution.
    pub fn sphere(s: usize, m: i32) -> Result<Self> {
        Self::new(HalfInt::from_int(s as i32), HalfInt::from_int(m), HalfInt::ZERO)
    }
}

/// Exponents `(k₁, k₂)` multiplying `Γm'²` and `γ(S(S+1) - m²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub k1: f64,
    pub k2: f64,
}

impl Default for Kappa {
    fn default() -> Self {
        Kappa { k1: 4.0, k2: 8.0 }
    }
}

/// Decay exponent of `channel`; never positive for non-negative rates.
pub fn channel_exponent(channel: &Channel, rates: &DepolarizerRates, kappa: &Kappa) -> f64 {
    let m = channel.m.value();
    let mp = channel.mp.value();
    -kappa.k2 * rates.gamma * (channel.s.casimir() - m * m) - kappa.k1 * rates.gamma0 * mp * mp
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultipoleCoefficients {
    s_max: HalfInt,
    psi_integrated: bool,
    entries: BTreeMap<Channel, Complex64>,
}

impl MultipoleCoefficients {
    /// Checks that every channel lies within `s_max` and, for `ψ`-integrated
    /// sets, that `S` is an integer and `m' = 0`.
    pub fn from_entries(
        s_max: HalfInt,
        psi_integrated: bool,
        entries: BTreeMap<Channel, Complex64>,
    ) -> Result<Self> {
        for ch in entries.keys() {
            Channel::new(ch.s, ch.m, ch.mp)?;
            if ch.s > s_max {
                return Err(Error::BandLimit(format!("channel S={} above s_max={s_max}", ch.s)));
            }
            if psi_integrated && (ch.mp != HalfInt::ZERO || !ch.s.is_integer()) {
                return Err(Error::InvalidSpinLabels { s: ch.s, m: ch.m, mp: ch.mp });
            }
        }
        Ok(MultipoleCoefficients { s_max, psi_integrated, entries })
    }

    pub fn s_max(&self) -> HalfInt {
        self.s_max
    }

    pub fn psi_integrated(&self) -> bool {
        self.psi_integrated
    }

    pub fn get(&self, channel: &Channel) -> Complex64 {
        self.entries.get(channel).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Channel, &Complex64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `Σ |c|²`, the squared L² norm of the represented function.
    pub fn norm_squared(&self) -> f64 {
        self.entries.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &MultipoleCoefficients) -> f64 {
        self.entries
            .keys()
            .chain(other.entries.keys())
            .map(|ch| (self.get(ch) - other.get(ch)).norm())
            .fold(0.0, f64::max)
    }

    /// `max |Δc| / max |c|`, relative to `self`.
    pub fn relative_error(&self, other: &MultipoleCoefficients) -> f64 {
        let scale = self.max_abs();
        let diff = self.max_abs_diff(other);
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    /// Coefficients over unnormalized harmonics: weights of `D^S_{mm'}` for
    /// group functions, of `D^{S*}_{m0}` for `ψ`-integrated ones.
    pub fn unnormalized_basis(&self) -> BTreeMap<Channel, Complex64> {
        let group = if self.psi_integrated { 4.0 * PI } else { 8.0 * PI * PI };
        self.entries
            .iter()
            .map(|(ch, c)| (*ch, c * ((2.0 * ch.s.value() + 1.0) / group).sqrt()))
            .collect()
    }
}

fn fourier_rows(samples: &[Complex64], grid: &SphereGrid, freq: f64) -> Vec<Complex64> {
    let n_phi = grid.phi.len();
    let w = grid.phi_weight();
    let phases: Vec<Complex64> = grid.phi.iter().map(|p| Complex64::from_polar(w, freq * p)).collect();
    samples
        .chunks(n_phi)
        .map(|row| row.iter().zip(&phases).map(|(f, e)| f * e).sum())
        .collect()
}

fn check_band(s_max: usize, grid: &SphereGrid) -> Result<()> {
    if s_max > grid.band_limit {
        return Err(Error::BandLimit(format!(
            "s_max={s_max} exceeds the grid band limit {}",
            grid.band_limit
        )));
    }
    Ok(())
}

/// Spherical-harmonic coefficients `c_{Sm} = ∫ Y*_{Sm} f dΩ` for `S ≤ s_max`.
pub fn multipole_transform(samples: &[f64], grid: &SphereGrid, s_max: usize) -> Result<MultipoleCoefficients> {
    let complex: Vec<Complex64> = samples.iter().map(|&v| Complex64::from(v)).collect();
    multipole_transform_complex(&complex, grid, s_max)
}

pub fn multipole_transform_complex(
    samples: &[Complex64],
    grid: &SphereGrid,
    s_max: usize,
) -> Result<MultipoleCoefficients> {
    check_band(s_max, grid)?;
    if samples.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!("{} samples on a {}-node grid", samples.len(), grid.len())));
    }
    let mut entries = BTreeMap::new();
    for m in -(s_max as i32)..=(s_max as i32) {
        let rows = fourier_rows(samples, grid, -(m as f64));
        for s in m.unsigned_abs() as usize..=s_max {
            let c: Complex64 = grid
                .theta
                .iter()
                .zip(&grid.theta_weights)
                .zip(&rows)
                .map(|((&t, &w), f)| f * (w * spherical_harmonic(s, m, t, 0.0).expect("valid labels").re))
                .sum();
            entries.insert(Channel::sphere(s, m)?, c);
        }
    }
    Ok(MultipoleCoefficients { s_max: HalfInt::from_int(s_max as i32), psi_integrated: true, entries })
}

/// Orthonormal group harmonic `B^S_{mm'}(φ,θ,ψ)`.
fn group_harmonic(ch: &Channel, phi: f64, theta: f64, psi: f64) -> Complex64 {
    let norm = ((2.0 * ch.s.value() + 1.0) / (8.0 * PI * PI)).sqrt();
    let d = wigner_d_unchecked(ch.s, ch.m, ch.mp, theta);
    Complex64::from_polar(norm * d, -(ch.m.value() * phi + ch.mp.value() * psi))
}

/// Evaluates the expansion on `grid`. `ψ`-integrated sets ignore `psi`.
pub fn reconstruct(c: &MultipoleCoefficients, grid: &SphereGrid, psi: f64) -> Vec<Complex64> {
    grid.nodes()
        .map(|(theta, phi, _)| {
            c.iter()
                .map(|(ch, v)| {
                    let basis = if c.psi_integrated {
                        spherical_harmonic(ch.s.twice() as usize / 2, ch.m.twice() / 2, theta, phi)
                            .expect("valid labels")
                    } else {
                        group_harmonic(ch, phi, theta, psi)
                    };
                    v * basis
                })
                .sum()
        })
        .collect()
}

/// Group-harmonic coefficients of the `(N, N')` block-pair symbol.
///
/// The symbol carries `m' = (N - N')/2` and spans `S = |N-N'|/2 ..= (N+N')/2`.
/// Needs `N + N' ≤ 2L` for the grid band limit `L`.
pub fn pair_multipoles(n: usize, n_prime: usize, block: &CMatrix, grid: &SphereGrid) -> Result<MultipoleCoefficients> {
    if n + n_prime > 2 * grid.band_limit {
        return Err(Error::BandLimit(format!(
            "block pair ({n},{n_prime}) needs a grid band limit of at least {}",
            (n + n_prime).div_ceil(2)
        )));
    }
    let q = pair_symbol(n, n_prime, block, grid)?;
    let mp = HalfInt::from_twice(n as i32 - n_prime as i32);
    let s_lo = mp.abs();
    let s_hi = HalfInt::from_twice((n + n_prime) as i32);
    let mut entries = BTreeMap::new();
    for m in s_hi.projections() {
        let rows = fourier_rows(&q, grid, m.value());
        let mut s = s_lo.max(m.abs());
        while s <= s_hi {
            let norm = ((2.0 * s.value() + 1.0) / (8.0 * PI * PI)).sqrt() * 2.0 * PI;
            let c: Complex64 = grid
                .theta
                .iter()
                .zip(&grid.theta_weights)
                .zip(&rows)
                .map(|((&t, &w), f)| f * (w * wigner_d_unchecked(s, m, mp, t)))
                .sum();
            entries.insert(Channel { s, m, mp }, c * norm);
            s = s + HalfInt::ONE;
        }
    }
    Ok(MultipoleCoefficients { s_max: s_hi, psi_integrated: false, entries })
}

/// Multipoles of every populated block pair of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateMultipoles {
    pub pairs: BTreeMap<(usize, usize), MultipoleCoefficients>,
}

impl StateMultipoles {
    pub fn from_state(state: &TwoModeState, grid: &SphereGrid) -> Result<Self> {
        let items: Vec<_> = state.blocks().iter().collect();
        let computed: Result<Vec<_>> = items
            .par_iter()
            .map(|&((a, b), block)| pair_multipoles(a, b, block, grid).map(|c| ((a, b), c)))
            .collect();
        Ok(StateMultipoles { pairs: computed?.into_iter().collect() })
    }

    pub fn propagate(&self, t: f64, rates: &DepolarizerRates, kappa: &Kappa) -> Result<Self> {
        let pairs = self
            .pairs
            .iter()
            .map(|(k, c)| propagate_multipoles(c, t, rates, kappa).map(|p| (*k, p)))
            .collect::<Result<_>>()?;
        Ok(StateMultipoles { pairs })
    }

    /// Worst per-pair relative error against `other`, which must carry the same pairs.
    pub fn relative_error(&self, other: &StateMultipoles) -> f64 {
        let empty = MultipoleCoefficients {
            s_max: HalfInt::ZERO,
            psi_integrated: false,
            entries: BTreeMap::new(),
        };
        self.pairs
            .iter()
            .map(|(k, c)| c.relative_error(other.pairs.get(k).unwrap_or(&empty)))
            .chain(other.pairs.keys().filter(|k| !self.pairs.contains_key(k)).map(|_| f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// Multiplies every coefficient by `exp(E t)` with its channel exponent `E`.
pub fn propagate_multipoles(
    c: &MultipoleCoefficients,
    t: f64,
    rates: &DepolarizerRates,
    kappa: &Kappa,
) -> Result<MultipoleCoefficients> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::OutOfRange(format!("propagation time {t}")));
    }
    rates.check()?;
    let entries = c
        .entries
        .iter()
        .map(|(ch, v)| (*ch, v * (channel_exponent(ch, rates, kappa) * t).exp()))
        .collect();
    Ok(MultipoleCoefficients { s_max: c.s_max, psi_integrated: c.psi_integrated, entries })
}

/// `𝔻(t) = Σ |c|² e^{2Et}`, the squared L² norm of the propagated distribution.
pub fn depolarization_measure(
    c: &MultipoleCoefficients,
    rates: &DepolarizerRates,
    kappa: &Kappa,
    t: f64,
) -> Result<f64> {
    Ok(propagate_multipoles(c, t, rates, kappa)?.norm_squared())
}

/// Stokes first moments `(⟨S1⟩, ⟨S2⟩, ⟨S3⟩)` from the dipole of a block-`N` Husimi function.
///
/// The `Q`-average of the unit vector is `⟨S⟩/(N+2)`, which fixes
/// `⟨S3⟩ = (N+2)√(4π/3) c₁₀` and `⟨S1⟩ + i⟨S2⟩ = -(N+2)√(8π/3) c₁₁`.
pub fn dipole_moments_from_multipoles(c: &MultipoleCoefficients, n: usize) -> Result<[f64; 3]> {
    if !c.psi_integrated {
        return Err(Error::InvalidState("dipole extraction needs ψ-integrated coefficients".into()));
    }
    let c10 = c.entries.get(&Channel::sphere(1, 0)?);
    let c11 = c.entries.get(&Channel::sphere(1, 1)?);
    let (Some(c10), Some(c11)) = (c10, c11) else {
        return Err(Error::BandLimit("coefficient set has no S=1 entries".into()));
    };
    let scale = (n + 2) as f64;
    let plus = -*c11 * scale * (8.0 * PI / 3.0).sqrt();
    Ok([plus.re, plus.im, scale * (4.0 * PI / 3.0).sqrt() * c10.re])
}

/// Group coefficients of the band-limited point mass at `(φ₀, θ₀, ψ₀)`,
/// `c^S_{mm'} = B^S_{mm'}(φ₀,θ₀,ψ₀)*` for integer `S ≤ s_max`.
pub fn pointmass_coefficients(theta0: f64, phi0: f64, psi0: f64, s_max: usize) -> MultipoleCoefficients {
    let mut entries = BTreeMap::new();
    for s in 0..=s_max as i32 {
        let s = HalfInt::from_int(s);
        for m in s.projections() {
            for mp in s.projections() {
                let ch = Channel { s, m, mp };
                entries.insert(ch, group_harmonic(&ch, phi0, theta0, psi0).conj());
            }
        }
    }
    MultipoleCoefficients { s_max: HalfInt::from_int(s_max as i32), psi_integrated: false, entries }
}

/// Snapshots of one coefficient set at increasing times.
#[derive(Clone, Debug)]
pub struct MultipoleSeries {
    pub times: Vec<f64>,
    pub snapshots: Vec<MultipoleCoefficients>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `None` when no channel with `m' ≠ 0` decays under a nonzero `Γ`.
    pub k1: Option<f64>,
    pub k2: f64,
    /// Largest absolute residual of the log-ratio fit.
    pub residual: f64,
    pub rows: usize,
}

/// Rows whose coefficient magnitude falls below this fraction of the series
/// scale are dropped; their logarithms carry round-off, not dynamics.
const CALIBRATION_FLOOR: f64 = 1e-6;

/// Least-squares `(k₁, k₂)` from `ln|c(t)/c(0)| = [-k₁Γm'² - k₂γ(S(S+1)-m²)] t`.
pub fn calibrate_exponents(series: &[MultipoleSeries], rates: &DepolarizerRates) -> Result<Calibration> {
    rates.check()?;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for ser in series {
        if ser.times.len() != ser.snapshots.len() {
            return Err(Error::DimensionMismatch("times and snapshots differ in length".into()));
        }
        if ser.times.len() < 6 {
            return Err(Error::Fit(format!("calibration needs at least 6 times, got {}", ser.times.len())));
        }
        let first = &ser.snapshots[0];
        let floor = CALIBRATION_FLOOR * first.max_abs();
        for (ch, c0) in first.iter() {
            if c0.norm() < floor {
                continue;
            }
            let mp = ch.mp.value();
            let m = ch.m.value();
            for (&t, snap) in ser.times.iter().zip(&ser.snapshots).skip(1) {
                let ct = snap.get(ch);
                if ct.norm() < floor || t <= ser.times[0] {
                    continue;
                }
                let dt = t - ser.times[0];
                rows.push((
                    -rates.gamma0 * mp * mp * dt,
                    -rates.gamma * (ch.s.casimir() - m * m) * dt,
                    (ct.norm() / c0.norm()).ln(),
                ));
            }
        }
    }
    let x1_scale = rows.iter().map(|r| r.0.abs()).fold(0.0, f64::max);
    let x2_scale = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    if x2_scale == 0.0 {
        return Err(Error::Degenerate("no channel with S(S+1) > m² decays; k2 is unidentified".into()));
    }
    let (k1, k2) = if x1_scale == 0.0 {
        let sxx: f64 = rows.iter().map(|r| r.1 * r.1).sum();
        let sxy: f64 = rows.iter().map(|r| r.1 * r.2).sum();
        (None, sxy / sxx)
    } else {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x1, x2, y) in &rows {
            a11 += x1 * x1;
            a12 += x1 * x2;
            a22 += x2 * x2;
            b1 += x1 * y;
            b2 += x2 * y;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() <= 1e-12 * a11 * a22 {
            return Err(Error::Degenerate("Γ and γ columns are collinear".into()));
        }
        (Some((b1 * a22 - b2 * a12) / det), (a11 * b2 - a12 * b1) / det)
    };
    let residual = rows
        .iter()
        .map(|&(x1, x2, y)| (y - k1.unwrap_or(0.0) * x1 - k2 * x2).abs())
        .fold(0.0, f64::max);
    Ok(Calibration { k1, k2, residual, rows: rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{su2_coherent_state, TwoModeState};
    use crate::metrics::stokes_moments;
    use crate::sphere::husimi::su2_q_sphere;
    use crate::sphere::wigner::wigner_D;
    use std::f64::consts::FRAC_PI_2;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn rates(g: f64, g0: f64) -> DepolarizerRates {
        DepolarizerRates::new(g, g0).unwrap()
    }

    #[test]
    fn constant_has_only_monopole() {
        let grid = SphereGrid::new(4);
        let f = vec![1.0 / (4.0 * PI); grid.len()];
        let c = multipole_transform(&f, &grid, 4).unwrap();
        for (ch, v) in c.iter() {
            let expected = if ch.s == HalfInt::ZERO { 1.0 / (4.0 * PI).sqrt() } else { 0.0 };
            assert!((v - Complex64::from(expected)).norm() < 1e-14, "{ch:?}");
        }
        let raw = c.unnormalized_basis();
        assert!((raw[&Channel::sphere(0, 0).unwrap()].re - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn band_limit_is_enforced() {
        let grid = SphereGrid::new(2);
        assert!(multipole_transform(&vec![0.0; grid.len()], &grid, 3).is_err());
        assert!(pair_multipoles(3, 2, &CMatrix::zeros(4, 3), &grid).is_err());
    }

    #[test]
    fn coherent_dipole_points_along_s1() {
        let grid = SphereGrid::new(2);
        let st = su2_coherent_state(1, FRAC_PI_2, 0.0, 0.0).unwrap();
        let q = su2_q_sphere(st.block(1, 1).unwrap(), &grid).unwrap();
        let c = multipole_transform(&q, &grid, 2).unwrap();
        let [s1, s2, s3] = dipole_moments_from_multipoles(&c, 1).unwrap();
        assert!((s1 - 1.0).abs() < 1e-12 && s2.abs() < 1e-12 && s3.abs() < 1e-12);
    }

    #[test]
    fn dipole_matches_moments_for_coherent_states() {
        let grid = SphereGrid::new(5);
        for n in 1..=5 {
            let st = su2_coherent_state(n, 0.9, 2.1, 0.3).unwrap();
            let q = su2_q_sphere(st.block(n, n).unwrap(), &grid).unwrap();
            let c = multipole_transform(&q, &grid, n).unwrap();
            let d = dipole_moments_from_multipoles(&c, n).unwrap();
            let m = stokes_moments(&st);
            assert!((d[0] - m.s1).abs() < 1e-12 && (d[1] - m.s2).abs() < 1e-12 && (d[2] - m.s3).abs() < 1e-12);
        }
        let c = multipole_transform(&vec![1.0 / (4.0 * PI); grid.len()], &grid, 0).unwrap();
        assert!(dipole_moments_from_multipoles(&c, 2).is_err());
    }

    #[test]
    fn husimi_band_limit() {
        let grid = SphereGrid::new(6);
        let st = su2_coherent_state(3, 1.2, -0.5, 0.0).unwrap();
        let q = su2_q_sphere(st.block(3, 3).unwrap(), &grid).unwrap();
        let c = multipole_transform(&q, &grid, 6).unwrap();
        for (ch, v) in c.iter() {
            if ch.s > HalfInt::from_int(3) {
                assert!(v.norm() < 1e-10, "{ch:?} = {v}");
            }
        }
    }

    #[test]
    fn propagation_examples() {
        let one = |ch: Channel| {
            let mut e = BTreeMap::new();
            e.insert(ch, Complex64::from(1.0));
            MultipoleCoefficients::from_entries(ch.s, false, e).unwrap()
        };
        let c = one(Channel::new(h(2), h(0), h(0)).unwrap());
        let p = propagate_multipoles(&c, 0.1, &rates(1.0, 5.0), &Kappa::default()).unwrap();
        assert!((p.get(&Channel::new(h(2), h(0), h(0)).unwrap()).re - (-1.6f64).exp()).abs() < 1e-15);
        let ch = Channel::new(h(1), h(1), h(1)).unwrap();
        let p = propagate_multipoles(&one(ch), 1.0, &rates(1.0, 1.0), &Kappa::default()).unwrap();
        assert!((p.get(&ch).re - (-5.0f64).exp()).abs() < 1e-15);
        assert_eq!(propagate_multipoles(&one(ch), 0.0, &rates(1.0, 1.0), &Kappa::default()).unwrap(), one(ch));
        assert!(propagate_multipoles(&one(ch), -1.0, &rates(1.0, 1.0), &Kappa::default()).is_err());
    }

    #[test]
    fn pointmass_examples() {
        let c = pointmass_coefficients(0.0, 0.0, 0.0, 3);
        for (ch, v) in c.iter() {
            if ch.m != ch.mp {
                assert!(v.norm() < 1e-15);
            }
        }
        let c = pointmass_coefficients(FRAC_PI_2, 0.0, 0.0, 2);
        for (ch, v) in c.iter() {
            let d = wigner_D(ch.s, ch.m, ch.mp, 0.0, FRAC_PI_2, 0.0).unwrap().conj();
            let norm = ((2.0 * ch.s.value() + 1.0) / (8.0 * PI * PI)).sqrt();
            assert!((v - d * norm).norm() < 1e-15);
        }
    }

    #[test]
    fn pointmass_peaks_at_its_location() {
        let (theta0, phi0) = (FRAC_PI_2, 0.0);
        let c = pointmass_coefficients(theta0, phi0, 0.0, 4);
        let grid = SphereGrid::new(8);
        let peak = group_harmonic_sum(&c, phi0, theta0, 0.0);
        let values = reconstruct(&c, &grid, 0.0);
        assert!(values.iter().all(|v| v.re <= peak.re + 1e-12));
        assert!(peak.im.abs() < 1e-12);
    }

    fn group_harmonic_sum(c: &MultipoleCoefficients, phi: f64, theta: f64, psi: f64) -> Complex64 {
        c.iter().map(|(ch, v)| v * group_harmonic(ch, phi, theta, psi)).sum()
    }

    #[test]
    fn pair_symbols_round_trip() {
        let grid = SphereGrid::new(3);
        let st = crate::algebra::two_mode_coherent_state(Complex64::new(0.6, 0.2), Complex64::new(0.3, -0.5), 3);
        let mult = StateMultipoles::from_state(&st, &grid).unwrap();
        for (&(a, b), c) in &mult.pairs {
            let q = pair_symbol(a, b, st.block(a, b).unwrap(), &grid).unwrap();
            let back = reconstruct(c, &grid, 0.0);
            let err = q.iter().zip(&back).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "pair ({a},{b}) error {err}");
        }
    }

    #[test]
    fn closed_loop_calibration() {
        let mut e = BTreeMap::new();
        for (s, m, mp, v) in [(2, 0, 0, 0.3), (2, 2, 0, 0.2), (1, 1, 1, 0.4), (3, 1, -1, 0.1), (4, 2, 2, 0.25)] {
            e.insert(Channel::new(h(s), h(m), h(mp)).unwrap(), Complex64::new(v, 0.1));
        }
        let c0 = MultipoleCoefficients::from_entries(h(4), false, e).unwrap();
        let r = rates(0.7, 1.3);
        let kappa = Kappa { k1: 4.0, k2: 8.0 };
        let times: Vec<f64> = (0..8).map(|i| 0.02 * i as f64).collect();
        let snapshots = times.iter().map(|&t| propagate_multipoles(&c0, t, &r, &kappa).unwrap()).collect();
        let cal = calibrate_exponents(&[MultipoleSeries { times, snapshots }], &r).unwrap();
        assert!((cal.k1.unwrap() - 4.0).abs() < 1e-10 && (cal.k2 - 8.0).abs() < 1e-10);
    }

    #[test]
    fn calibration_rejects_monopole_only_data() {
        let mut e = BTreeMap::new();
        e.insert(Channel::sphere(0, 0).unwrap(), Complex64::from(1.0));
        let c = MultipoleCoefficients::from_entries(HalfInt::ZERO, true, e).unwrap();
        let times: Vec<f64> = (0..6).map(f64::from).collect();
        let snapshots = vec![c; 6];
        let err = calibrate_exponents(&[MultipoleSeries { times, snapshots }], &rates(1.0, 0.0));
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn measure_of_uniform_distribution_is_constant() {
        let grid = SphereGrid::new(3);
        let c = multipole_transform(&vec![1.0 / (4.0 * PI); grid.len()], &grid, 3).unwrap();
        let r = rates(1.0, 0.5);
        let d0 = depolarization_measure(&c, &r, &Kappa::default(), 0.0).unwrap();
        let d1 = depolarization_measure(&c, &r, &Kappa::default(), 3.0).unwrap();
        assert!((d0 - 1.0 / (4.0 * PI)).abs() < 1e-15 && (d1 - d0).abs() < 1e-15);
    }

    #[test]
    fn from_entries_validates() {
        let mut e = BTreeMap::new();
        e.insert(Channel::new(h(1), h(1), h(1)).unwrap(), Complex64::from(1.0));
        assert!(MultipoleCoefficients::from_entries(h(1), true, e.clone()).is_err());
        assert!(MultipoleCoefficients::from_entries(h(0), false, e).is_err());
        assert!(Channel::new(h(2), h(1), h(0)).is_err());
    }

    #[test]
    fn fock_state_is_in_state_multipoles() {
        let grid = SphereGrid::new(2);
        let st = TwoModeState::fock(2, 1).unwrap();
        let m = StateMultipoles::from_state(&st, &grid).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert!(m.relative_error(&m) == 0.0);
    }
}
