//! Microscopic model behind the depolarizing channel: a two-mode field
//! coupled off-resonantly to thermally damped two-level atoms.
//!
//! Composite states are ordered field ⊗ atom₁ ⊗ atom₂ ⊗ …, with the field in
//! the `|N,k⟩` block order and each atom as `(|g⟩, |e⟩)`.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{annihilation, truncated_dim, BlockLabel, CMatrix, Mode};
use crate::depolarizer::DepolarizerRates;
use crate::error::{Error, Result};
use crate::fit::fit_decay_rate;
use crate::metrics::one_photon_rate;

/// Largest composite Hilbert dimension accepted; the Liouvillian is its square.
pub const MAX_HILBERT_DIM: usize = 64;

/// `|g|/|Δ|` above which an atom is no longer treated as far detuned.
pub const DISPERSIVE_LIMIT: f64 = 0.2;

/// Relative deviation from a single exponential above which the fitted
/// dephasing is reported as a regime violation.
pub const REGIME_RESIDUAL_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// `|g_a|`, equal for both circular modes.
    pub g_abs: f64,
    /// `Δ_a = ω_a - ω`.
    pub detuning: f64,
    pub gamma_a: f64,
    pub nbar: f64,
    /// `φ_a` in `g_{a±} = |g_a| e^{±iφ_a/2}`.
    #[serde(default)]
    pub phase: f64,
}

impl AtomConfig {
    pub fn new(g_abs: f64, detuning: f64, gamma_a: f64, nbar: f64) -> Self {
        AtomConfig { g_abs, detuning, gamma_a, nbar, phase: 0.0 }
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.g_abs >= 0.0
            && self.gamma_a > 0.0
            && self.nbar >= 0.0
            && [self.g_abs, self.detuning, self.gamma_a, self.nbar, self.phase].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("atom parameters {self:?}")))
        }
    }

    /// `|g|/|Δ| ≤ 0.2`.
    pub fn is_dispersive(&self) -> bool {
        self.detuning != 0.0 && self.g_abs / self.detuning.abs() <= DISPERSIVE_LIMIT
    }

    fn coupling(&self, mode: Mode) -> Complex64 {
        let sign = match mode {
            Mode::Plus => 1.0,
            Mode::Minus => -1.0,
        };
        Complex64::from_polar(self.g_abs, sign * self.phase / 2.0)
    }
}

/// Draws every `φ_a` uniformly from `[0, 2π)` with a ChaCha8 stream seeded by `seed`.
pub fn assign_random_phases(atoms: &mut [AtomConfig], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for a in atoms {
        a.phase = rng.gen_range(0.0..2.0 * PI);
    }
}

/// `γ = Σ_a |g_a|⁴ / (γ_a Δ_a² n̄_a)`.
pub fn effective_gamma(atoms: &[AtomConfig]) -> Result<f64> {
    let mut total = 0.0;
    for a in atoms {
        a.check()?;
        if a.detuning == 0.0 {
            return Err(Error::OutOfRange("effective rate needs nonzero detuning".into()));
        }
        if a.nbar <= 0.0 {
            return Err(Error::OutOfRange("effective rate needs a thermal occupation n̄ > 0".into()));
        }
        total += a.g_abs.powi(4) / (a.gamma_a * a.detuning * a.detuning * a.nbar);
    }
    Ok(total)
}

/// Field plus atoms with their Hamiltonian and jump operators.
#[derive(Clone, Debug)]
pub struct MicroSystem {
    pub atoms: Vec<AtomConfig>,
    pub n_max: usize,
    pub omega: f64,
    pub field_dim: usize,
    pub hamiltonian: CMatrix,
    /// `(C, r)` pairs entering as `r L[C]`.
    pub dissipators: Vec<(CMatrix, f64)>,
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Embeds a single-atom operator for atom `index` of `count`.
fn atom_op(op: &CMatrix, index: usize, count: usize) -> CMatrix {
    let id2 = CMatrix::identity(2, 2);
    (0..count).fold(CMatrix::identity(1, 1), |acc, j| kron(&acc, if j == index { op } else { &id2 }))
}

fn sigma_minus() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(0, 1)] = Complex64::from(1.0);
    s
}

fn sigma_z() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(0, 0)] = Complex64::from(-1.0);
    s[(1, 1)] = Complex64::from(1.0);
    s
}

/// `H = ω n + Σ_a (ω_a/2) σz_a + Σ_{a,λ} (g_{aλ} σ⁻_a a†_λ + h.c.)` with
/// `ω_a = ω + Δ_a`; jump operators `σ⁻_a` at `γ_a(n̄_a+1)/2` and `σ⁺_a` at `γ_a n̄_a/2`.
pub fn build_system(atoms: &[AtomConfig], n_max: usize, omega: f64) -> Result<MicroSystem> {
    if atoms.is_empty() {
        return Err(Error::OutOfRange("at least one atom is required".into()));
    }
    if n_max < 1 {
        return Err(Error::OutOfRange("the field needs n_max ≥ 1".into()));
    }
    for a in atoms {
        a.check()?;
    }
    let field_dim = truncated_dim(n_max);
    let atom_dim = 1usize.checked_shl(atoms.len() as u32).unwrap_or(usize::MAX);
    let dim = field_dim.saturating_mul(atom_dim);
    if dim > MAX_HILBERT_DIM {
        return Err(Error::TooLarge(dim.saturating_mul(dim)));
    }
    let count = atoms.len();
    let id_atoms = CMatrix::identity(atom_dim, atom_dim);
    let id_field = CMatrix::identity(field_dim, field_dim);
    let number = number_operator(n_max);
    let mut h = kron(&number, &id_atoms).scale(omega);
    let sm = sigma_minus();
    let sz = sigma_z();
    let mut dissipators = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        let sz_i = kron(&id_field, &atom_op(&sz, i, count));
        h += sz_i.scale((omega + a.detuning) / 2.0);
        for mode in [Mode::Plus, Mode::Minus] {
            let adag = annihilation(mode, n_max).to_dense().adjoint();
            let term = kron(&adag, &atom_op(&sm, i, count)) * a.coupling(mode);
            h += &term + term.adjoint();
        }
        let lower = kron(&id_field, &atom_op(&sm, i, count));
        let raise = lower.adjoint();
        dissipators.push((lower, a.gamma_a * (a.nbar + 1.0) / 2.0));
        dissipators.push((raise, a.gamma_a * a.nbar / 2.0));
    }
    Ok(MicroSystem { atoms: atoms.to_vec(), n_max, omega, field_dim, hamiltonian: h, dissipators })
}

fn number_operator(n_max: usize) -> CMatrix {
    let dim = truncated_dim(n_max);
    let mut diag = DVector::zeros(dim);
    for n in 0..=n_max {
        for k in 0..=n {
            diag[BlockLabel(n).offset() + k] = Complex64::from(n as f64);
        }
    }
    CMatrix::from_diagonal(&diag)
}

impl MicroSystem {
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn atom_dim(&self) -> usize {
        self.dim() / self.field_dim
    }

    /// Photons plus excited atoms; conserved by the rotating-wave Hamiltonian.
    pub fn excitation_number(&self) -> CMatrix {
        let count = self.atoms.len();
        let mut n = kron(&number_operator(self.n_max), &CMatrix::identity(self.atom_dim(), self.atom_dim()));
        let mut excited = CMatrix::zeros(2, 2);
        excited[(1, 1)] = Complex64::from(1.0);
        let id_field = CMatrix::identity(self.field_dim, self.field_dim);
        for i in 0..count {
            n += kron(&id_field, &atom_op(&excited, i, count));
        }
        n
    }

    /// Column-major Liouvillian, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
    pub fn liouvillian(&self) -> CMatrix {
        let d = self.dim();
        let id = CMatrix::identity(d, d);
        let h = &self.hamiltonian;
        let i = Complex64::new(0.0, 1.0);
        let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * (-i);
        for (c, rate) in &self.dissipators {
            let cdc = c.adjoint() * c;
            l += (kron(&c.conjugate(), c).scale(2.0) - kron(&id, &cdc) - kron(&cdc.transpose(), &id)).scale(*rate);
        }
        l
    }

    /// `exp(𝓛 t)` acting on column-major vectorized density matrices.
    pub fn propagator(&self, t: f64) -> Result<CMatrix> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::OutOfRange(format!("evolution time {t}")));
        }
        let d2 = self.dim() * self.dim();
        if t == 0.0 {
            return Ok(CMatrix::identity(d2, d2));
        }
        Ok(self.liouvillian().scale(t).exp())
    }

    /// `Tr_atoms ρ`.
    pub fn trace_atoms(&self, rho: &CMatrix) -> CMatrix {
        let na = self.atom_dim();
        CMatrix::from_fn(self.field_dim, self.field_dim, |i, j| {
            (0..na).map(|a| rho[(i * na + a, j * na + a)]).sum()
        })
    }

    /// Excited-state population of atom `index`.
    pub fn excited_population(&self, rho: &CMatrix, index: usize) -> f64 {
        let count = self.atoms.len();
        let mut excited = CMatrix::zeros(2, 2);
        excited[(1, 1)] = Complex64::from(1.0);
        let proj = kron(&CMatrix::identity(self.field_dim, self.field_dim), &atom_op(&excited, index, count));
        (rho * proj).trace().re
    }

    /// Field state `ρ_f` times every atom in `𝟙/2`.
    pub fn product_with_unpolarized_atoms(&self, field: &CMatrix) -> Result<CMatrix> {
        if field.shape() != (self.field_dim, self.field_dim) {
            return Err(Error::DimensionMismatch(format!("field state of shape {:?}", field.shape())));
        }
        let na = self.atom_dim();
        Ok(kron(field, &CMatrix::identity(na, na).unscale(na as f64)))
    }
}

pub(crate) fn apply_superop(p: &CMatrix, rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let v = p * DVector::from_column_slice(rho.as_slice());
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// `exp(𝓛t) ρ₀` by one dense superoperator exponential.
pub fn evolve_full(system: &MicroSystem, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
    let d = system.dim();
    if rho0.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("state of shape {:?} for dimension {d}", rho0.shape())));
    }
    Ok(apply_superop(&system.propagator(t)?, rho0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdiabaticOptions {
    /// Field truncation; 2 is the smallest value that keeps the dispersive
    /// shift of a single photon.
    pub n_max: usize,
    pub omega: f64,
    /// Number of equally spaced samples including `t = 0`.
    pub points: usize,
    /// Horizon in units of `1/γ`.
    pub horizon: f64,
}

impl Default for AdiabaticOptions {
    fn default() -> Self {
        AdiabaticOptions { n_max: 2, omega: 0.0, points: 7, horizon: 1.0 }
    }
}

/// Outcome of one microscopic check of the effective rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticReport {
    /// `γ` from the closed-form sum over atoms.
    pub gamma_effective: f64,
    /// One-photon coherence rate of the effective generator with `γ` and `Γ = 2γ`.
    pub gamma_predicted: f64,
    /// Phase-averaged in-plane dephasing rate of the microscopic model.
    pub rate_fitted: f64,
    /// Decay rate of `|⟨1,0|ρ_f|0,1⟩|` for the diagonal initial state alone.
    pub rate_x_state: f64,
    /// `rate_fitted / gamma_predicted`; `None` when both vanish.
    pub ratio: Option<f64>,
    pub both_zero: bool,
    /// `rate_fitted / gamma_effective`.
    pub ratio_to_gamma: Option<f64>,
    pub residual: f64,
    pub non_exponential: bool,
    pub dispersive: bool,
    /// Largest loss of population from the one-photon block.
    pub population_drift: f64,
    /// Extremes of every atom's excited population over the run.
    pub atomic_population_range: (f64, f64),
    pub times: Vec<f64>,
    pub phases: Vec<f64>,
    pub seed: Option<u64>,
}

impl AdiabaticReport {
    pub fn within_tolerance(&self, tolerance: f64) -> bool {
        self.both_zero || self.ratio.is_some_and(|r| (r - 1.0).abs() <= tolerance)
    }

    pub fn regime_violation(&self) -> bool {
        !self.both_zero && (self.non_exponential || !self.dispersive)
    }
}

fn one_photon_field_state(field_dim: usize, phase: f64) -> CMatrix {
    let mut psi = DVector::<Complex64>::zeros(field_dim);
    let off = BlockLabel(1).offset();
    psi[off + 1] = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    psi[off] = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phase);
    &psi * psi.adjoint()
}

/// Evolves the field from `(|1,0⟩+|0,1⟩)/√2` and `(|1,0⟩+i|0,1⟩)/√2` with
/// the atoms unpolarized, and compares the in-plane dephasing rate with the
/// effective model.
///
/// A single atom dephases the one-photon Bloch vector about one equatorial
/// axis set by its phase, so one initial state alone sees a phase-dependent
/// rate. The determinant of the 2×2 in-plane response is rotation invariant
/// and decays at twice the phase-averaged rate, which is what is fitted.
pub fn validate_adiabatic(atoms: &[AtomConfig], opts: &AdiabaticOptions, seed: Option<u64>) -> Result<AdiabaticReport> {
    if opts.points < 4 || !(opts.horizon > 0.0) {
        return Err(Error::OutOfRange("need ≥ 4 samples and a positive horizon".into()));
    }
    let system = build_system(atoms, opts.n_max, opts.omega)?;
    let all_uncoupled = atoms.iter().all(|a| a.g_abs == 0.0);
    let gamma_eff = if all_uncoupled { 0.0 } else { effective_gamma(atoms)? };
    for a in atoms {
        if a.nbar < 10.0 {
            warn!("n̄ = {} is not large; the effective rate assumes n̄ ≫ 1", a.nbar);
        }
    }
    let predicted = one_photon_rate(&DepolarizerRates::atomic_medium(gamma_eff)?);
    let predicted = if predicted.is_finite() { predicted } else { 0.0 };
    let t_max = if gamma_eff > 0.0 {
        opts.horizon / gamma_eff
    } else {
        let slowest = atoms.iter().map(|a| a.gamma_a).fold(f64::INFINITY, f64::min);
        10.0 * opts.horizon / slowest
    };
    let dt = t_max / (opts.points - 1) as f64;
    let times: Vec<f64> = (0..opts.points).map(|i| i as f64 * dt).collect();
    let step = system.propagator(dt)?;

    let stokes = crate::algebra::stokes_matrices(1);
    let off = BlockLabel(1).offset();
    let in_plane = |rho_f: &CMatrix| {
        let block = rho_f.view((off, off), (2, 2)).into_owned();
        ((&block * &stokes.s1).trace().re, (&block * &stokes.s2).trace().re)
    };

    let mut columns: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut x_coherence = Vec::new();
    let mut drift: f64 = 0.0;
    let mut pop_range = (f64::INFINITY, f64::NEG_INFINITY);
    for (which, phase) in [0.0, PI / 2.0].into_iter().enumerate() {
        let mut rho = system.product_with_unpolarized_atoms(&one_photon_field_state(system.field_dim, phase))?;
        let mut col = Vec::with_capacity(opts.points);
        for i in 0..opts.points {
            if i > 0 {
                rho = apply_superop(&step, &rho);
            }
            let rho_f = system.trace_atoms(&rho);
            col.push(in_plane(&rho_f));
            if which == 0 {
                x_coherence.push(rho_f[(off + 1, off)].norm());
            }
            let p1 = rho_f[(off, off)].re + rho_f[(off + 1, off + 1)].re;
            drift = drift.max((1.0 - p1).abs());
            for a in 0..atoms.len() {
                let p = system.excited_population(&rho, a);
                pop_range = (pop_range.0.min(p), pop_range.1.max(p));
            }
        }
        columns.push(col);
    }
    let det: Vec<f64> = (0..opts.points)
        .map(|i| {
            let ((a, c), (b, d)) = (columns[0][i], columns[1][i]);
            (a * d - b * c).abs()
        })
        .collect();

    let fit = fit_decay_rate(&times, &det)?;
    let rate_fitted = fit.rate / 2.0;
    let rate_x = fit_decay_rate(&times, &x_coherence)?.rate;
    let zero = |r: f64| r.abs() < 1e-12;
    let both_zero = zero(rate_fitted) && zero(predicted);
    let ratio = (!zero(predicted)).then(|| rate_fitted / predicted);
    let ratio_to_gamma = (gamma_eff > 0.0).then(|| rate_fitted / gamma_eff);
    Ok(AdiabaticReport {
        gamma_effective: gamma_eff,
        gamma_predicted: predicted,
        rate_fitted,
        rate_x_state: rate_x,
        ratio,
        both_zero,
        ratio_to_gamma,
        residual: fit.relative_residual,
        non_exponential: fit.relative_residual > REGIME_RESIDUAL_LIMIT,
        dispersive: atoms.iter().all(|a| a.g_abs == 0.0 || a.is_dispersive()),
        population_drift: drift,
        atomic_population_range: pop_range,
        times,
        phases: atoms.iter().map(|a| a.phase).collect(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comm_norm(a: &CMatrix, b: &CMatrix) -> f64 {
        (a * b - b * a).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dimensions() {
        let sys = build_system(&[AtomConfig::new(0.1, 2.0, 0.5, 20.0)], 1, 0.0).unwrap();
        assert_eq!(sys.dim(), 6);
        let two = [AtomConfig::new(0.1, 2.0, 0.5, 20.0); 2];
        assert_eq!(build_system(&two, 2, 0.0).unwrap().dim(), 24);
        let many = [AtomConfig::new(0.1, 2.0, 0.5, 20.0); 4];
        assert!(matches!(build_system(&many, 3, 0.0), Err(Error::TooLarge(_))));
        assert!(build_system(&[], 1, 0.0).is_err());
        assert!(build_system(&two, 0, 0.0).is_err());
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_excitations() {
        let mut atoms = [AtomConfig::new(0.3, 1.5, 0.5, 5.0), AtomConfig::new(0.2, -2.0, 0.1, 3.0)];
        assign_random_phases(&mut atoms, 7);
        let sys = build_system(&atoms, 2, 1.3).unwrap();
        let h = &sys.hamiltonian;
        assert!((h - h.adjoint()).iter().all(|z| z.norm() < 1e-12));
        assert!(comm_norm(h, &sys.excitation_number()) < 1e-12);
    }

    #[test]
    fn effective_gamma_examples() {
        let a = AtomConfig::new(0.1, 2.0, 0.5, 20.0);
        let g = effective_gamma(&[a]).unwrap();
        assert!((g - 2.5e-6).abs() < 1e-18);
        assert!((effective_gamma(&[a, a]).unwrap() - 2.0 * g).abs() < 1e-18);
        let b = AtomConfig { g_abs: 0.2, ..a };
        assert!((effective_gamma(&[b]).unwrap() / g - 16.0).abs() < 1e-12);
        assert!(effective_gamma(&[AtomConfig { detuning: 0.0, ..a }]).is_err());
        assert!(effective_gamma(&[AtomConfig { gamma_a: 0.0, ..a }]).is_err());
    }

    #[test]
    fn seeded_phases_are_reproducible() {
        let mut a = [AtomConfig::new(0.1, 2.0, 0.5, 20.0); 3];
        let mut b = a;
        assign_random_phases(&mut a, 42);
        assign_random_phases(&mut b, 42);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (0.0..2.0 * PI).contains(&x.phase)));
    }

    #[test]
    fn zero_time_is_identity_and_trace_is_kept() {
        let sys = build_system(&[AtomConfig::new(0.2, 1.0, 0.5, 2.0)], 1, 0.0).unwrap();
        let rho0 = sys.product_with_unpolarized_atoms(&one_photon_field_state(sys.field_dim, 0.3)).unwrap();
        assert_eq!(evolve_full(&sys, &rho0, 0.0).unwrap(), rho0);
        let rho = evolve_full(&sys, &rho0, 3.7).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-9);
        let herm = (&rho + rho.adjoint()).scale(0.5);
        let min = nalgebra::SymmetricEigen::new(herm).eigenvalues.min();
        assert!(min > -1e-9);
    }

    #[test]
    fn uncoupled_field_keeps_its_coherence() {
        let atoms = [AtomConfig::new(0.0, 1.0, 0.5, 20.0)];
        let rep = validate_adiabatic(&atoms, &AdiabaticOptions::default(), None).unwrap();
        assert!(rep.both_zero && rep.ratio.is_none());
        assert!(rep.rate_fitted.abs() < 1e-12);
        assert!(rep.within_tolerance(0.3) && !rep.regime_violation());
    }
}
