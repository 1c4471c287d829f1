//! Stokes moments, degree of polarization and trajectories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{stokes_matrices, TwoModeState};
use crate::depolarizer::{generator_spectrum, DepolarizerRates, Evolver};
use crate::error::{Error, Result};

/// Mean values `(⟨S0⟩, ⟨S1⟩, ⟨S2⟩, ⟨S3⟩)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StokesMoments {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesMoments {
    /// `|⟨S⟩|`, the length of the mean Stokes vector.
    pub fn norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }
}

/// The Stokes operators are block diagonal, so only `ρ_{N,N}` contributes.
pub fn stokes_moments(state: &TwoModeState) -> StokesMoments {
    let mut out = StokesMoments::default();
    for n in 0..=state.n_max() {
        let Some(rho) = state.block(n, n) else { continue };
        let s = stokes_matrices(n);
        let tr = |m: &crate::algebra::CMatrix| (rho * m).trace().re;
        out.s0 += n as f64 * rho.trace().re;
        out.s1 += tr(&s.s1);
        out.s2 += tr(&s.s2);
        out.s3 += tr(&s.s3);
    }
    out
}

/// `|⟨S⟩| / ⟨S0⟩`, taken as 0 when the field is empty.
pub fn degree_of_polarization(state: &TwoModeState) -> f64 {
    dop_from_moments(&stokes_moments(state))
}

pub fn dop_from_moments(m: &StokesMoments) -> f64 {
    if m.s0 > 0.0 {
        m.norm() / m.s0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyCheck {
    /// `(ΔS)² = ⟨S1²+S2²+S3²⟩ - |⟨S⟩|²`.
    pub lhs: f64,
    /// `2⟨S0⟩`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `(ΔS)² ≥ 2⟨S0⟩` using the Casimir `S² = N(N+2)` on each block.
pub fn uncertainty_check(state: &TwoModeState) -> UncertaintyCheck {
    let m = stokes_moments(state);
    let s_squared: f64 = (0..=state.n_max())
        .map(|n| (n * (n + 2)) as f64 * state.block_weight(n))
        .sum();
    let lhs = s_squared - m.norm().powi(2);
    let rhs = 2.0 * m.s0;
    UncertaintyCheck { lhs, rhs, holds: lhs >= rhs - 1e-9 }
}

/// `Tr ρ²`.
pub fn purity(state: &TwoModeState) -> f64 {
    state.blocks().iter().map(|(_, m)| m.norm_squared()).sum()
}

/// Bloch vector of the one-photon block, `ρ₁ = p (𝟙 + r·σ)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochRecord {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochRecord { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Reads the `N = 1` block, normalized by its weight. `None` if the block is empty.
    pub fn from_state(state: &TwoModeState) -> Option<Self> {
        let rho = state.block(1, 1)?;
        let p = rho.trace().re;
        if p <= 0.0 {
            return None;
        }
        let s = stokes_matrices(1);
        let tr = |m: &crate::algebra::CMatrix| (rho * m).trace().re / p;
        Some(BlochRecord { x: tr(&s.s1), y: tr(&s.s2), z: tr(&s.s3) })
    }
}

/// Transverse decay rate `r` of the one-photon block: the slowest nonzero
/// rate of the `N = N' = 1` generator.
pub fn one_photon_rate(rates: &DepolarizerRates) -> f64 {
    generator_spectrum(1, 1, rates)
        .iter()
        .map(|z| -z.re)
        .filter(|r| *r > 1e-12)
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form one-photon dynamics: `x, y` decay at `r_xy` and `z` at `2 r_xy`.
pub fn one_photon_analytic(r0: &BlochRecord, t: f64, r_xy: f64) -> BlochRecord {
    let fx = (-r_xy * t).exp();
    let fz = (-2.0 * r_xy * t).exp();
    BlochRecord { x: r0.x * fx, y: r0.y * fx, z: r0.z * fz }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub kind: GridKind,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn linear(t_min: f64, t_max: f64, points: usize) -> Self {
        TimeGrid { kind: GridKind::Linear, t_min, t_max, points }
    }

    pub fn log(t_min: f64, t_max: f64, points: usize) -> Self {
        TimeGrid { kind: GridKind::Log, t_min, t_max, points }
    }

    /// Sample times; errors unless they come out strictly increasing and non-negative.
    pub fn times(&self) -> Result<Vec<f64>> {
        let TimeGrid { kind, t_min, t_max, points } = *self;
        if points < 2 || !(t_max > t_min) || !(t_min >= 0.0) || !t_max.is_finite() {
            return Err(Error::OutOfRange(format!(
                "time grid needs points ≥ 2 and 0 ≤ t_min < t_max, got {points} points on [{t_min}, {t_max}]"
            )));
        }
        let step = |i: usize| i as f64 / (points - 1) as f64;
        let times: Vec<f64> = match kind {
            GridKind::Linear => (0..points).map(|i| t_min + (t_max - t_min) * step(i)).collect(),
            GridKind::Log => {
                if t_min <= 0.0 {
                    return Err(Error::OutOfRange("log time grid needs t_min > 0".into()));
                }
                let (a, b) = (t_min.ln(), t_max.ln());
                (0..points).map(|i| (a + (b - a) * step(i)).exp()).collect()
            }
        };
        Ok(times)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub rates: DepolarizerRates,
    pub initial_state: String,
    pub n_max: usize,
}

/// Time series of the field observables along a depolarizing evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub s0: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Vec<f64>,
    pub dop: Vec<f64>,
    pub purity: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Evolves `state` to each time in `times`. Samples are independent, so
    /// they run in parallel; the output order follows `times`.
    pub fn compute(
        state: &TwoModeState,
        rates: &DepolarizerRates,
        times: &[f64],
        initial_state: impl Into<String>,
    ) -> Result<Self> {
        rates.check()?;
        if let Some(t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::OutOfRange(format!("sample time {t}")));
        }
        let evolver = Evolver::for_state(state, rates);
        let samples: Vec<(StokesMoments, f64)> = times
            .par_iter()
            .map(|&t| {
                let rho = evolver.evolve(state, t);
                (stokes_moments(&rho), purity(&rho))
            })
            .collect();
        let col = |f: fn(&StokesMoments) -> f64| samples.iter().map(|(m, _)| f(m)).collect::<Vec<_>>();
        Ok(Trajectory {
            times: times.to_vec(),
            s0: col(|m| m.s0),
            s1: col(|m| m.s1),
            s2: col(|m| m.s2),
            s3: col(|m| m.s3),
            dop: col(dop_from_moments),
            purity: samples.iter().map(|(_, p)| *p).collect(),
            meta: TrajectoryMeta {
                rates: *rates,
                initial_state: initial_state.into(),
                n_max: state.n_max(),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
