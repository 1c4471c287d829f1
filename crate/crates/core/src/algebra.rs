//! Two-mode Fock blocks, Stokes operators and the standard initial states.
//!
//! The two-mode space truncated at `n_max` photons is the direct sum of the
//! blocks `N = 0..=n_max`, each spanned by `|N,k⟩ = |k⟩₊ ⊗ |N-k⟩₋` with
//! `k = 0..=N` in ascending order. Every operator that commutes with the total
//! photon number lives on the diagonal blocks; a density matrix additionally
//! carries coherences between blocks, so states are stored as a map from block
//! pairs `(N, N')` to `(N+1)×(N'+1)` matrices.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermiticity, trace and positivity tolerance used by state validation.
pub const STATE_TOLERANCE: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Total photon number `N` of an invariant block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockLabel(pub usize);

impl BlockLabel {
    pub fn photons(self) -> usize {
        self.0
    }

    pub fn dim(self) -> usize {
        self.0 + 1
    }

    /// Row offset of this block in the dense, `N`-ascending basis.
    pub fn offset(self) -> usize {
        self.0 * (self.0 + 1) / 2
    }
}

/// Dimension of the two-mode space holding at most `n_max` photons.
pub fn truncated_dim(n_max: usize) -> usize {
    (n_max + 1) * (n_max + 2) / 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StokesComponent {
    S0,
    S1,
    S2,
    S3,
    Plus,
    Minus,
}

/// Matrices of the Stokes operators restricted to block `N`.
#[derive(Clone, Debug)]
pub struct StokesMatrices {
    pub block: BlockLabel,
    pub s0: CMatrix,
    pub s1: CMatrix,
    pub s2: CMatrix,
    pub s3: CMatrix,
    pub splus: CMatrix,
    pub sminus: CMatrix,
}

impl StokesMatrices {
    pub fn component(&self, which: StokesComponent) -> &CMatrix {
        match which {
            StokesComponent::S0 => &self.s0,
            StokesComponent::S1 => &self.s1,
            StokesComponent::S2 => &self.s2,
            StokesComponent::S3 => &self.s3,
            StokesComponent::Plus => &self.splus,
            StokesComponent::Minus => &self.sminus,
        }
    }

    /// `S1² + S2² + S3²`, equal to `N(N+2)` times the identity.
    pub fn casimir(&self) -> CMatrix {
        &self.s1 * &self.s1 + &self.s2 * &self.s2 + &self.s3 * &self.s3
    }
}

/// Stokes matrices of block `n` in the `k`-ascending basis.
///
/// `⟨N,k+1|S₊|N,k⟩ = 2√((k+1)(N-k))` and `S₃|N,k⟩ = 2(k - N/2)|N,k⟩`.
pub fn stokes_matrices(n: usize) -> StokesMatrices {
    let dim = n + 1;
    let mut splus = CMatrix::zeros(dim, dim);
    for k in 0..n {
        splus[(k + 1, k)] = Complex64::from(2.0 * (((k + 1) * (n - k)) as f64).sqrt());
    }
    let sminus = splus.adjoint();
    let s3 = CMatrix::from_diagonal(&CVector::from_fn(dim, |k, _| {
        Complex64::from(2.0 * k as f64 - n as f64)
    }));
    let s1 = (&splus + &sminus).scale(0.5);
    let s2 = (&splus - &sminus) / (2.0 * I);
    StokesMatrices {
        block: BlockLabel(n),
        s0: CMatrix::identity(dim, dim).scale(n as f64),
        s1,
        s2,
        s3,
        splus,
        sminus,
    }
}

/// A block-sparse operator on the truncated two-mode space.
///
/// The entry at `(N, N')` is the `(N+1)×(N'+1)` matrix `⟨N,·|O|N',·⟩`; missing
/// entries are zero blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPairs {
    n_max: usize,
    blocks: BTreeMap<(usize, usize), CMatrix>,
}

impl BlockPairs {
    pub fn new(n_max: usize) -> Self {
        BlockPairs { n_max, blocks: BTreeMap::new() }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn insert(&mut self, n: usize, np: usize, block: CMatrix) -> Result<()> {
        if n > self.n_max || np > self.n_max {
            return Err(Error::DimensionMismatch(format!(
                "block ({n},{np}) exceeds truncation n_max={}",
                self.n_max
            )));
        }
        if block.shape() != (n + 1, np + 1) {
            return Err(Error::DimensionMismatch(format!(
                "block ({n},{np}) must be {}x{}, got {}x{}",
                n + 1,
                np + 1,
                block.nrows(),
                block.ncols()
            )));
        }
        self.blocks.insert((n, np), block);
        Ok(())
    }

    pub fn get(&self, n: usize, np: usize) -> Option<&CMatrix> {
        self.blocks.get(&(n, np))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &CMatrix)> {
        self.blocks.iter().map(|(k, v)| (*k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.blocks.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Largest block label carrying a stored entry.
    pub fn max_block(&self) -> Option<usize> {
        self.blocks.keys().map(|&(a, b)| a.max(b)).max()
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks
            .iter()
            .filter(|((a, b), _)| a == b)
            .map(|(_, m)| m.trace())
            .sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let dim = truncated_dim(self.n_max);
        let mut out = CMatrix::zeros(dim, dim);
        for (&(a, b), m) in &self.blocks {
            let (r0, c0) = (BlockLabel(a).offset(), BlockLabel(b).offset());
            out.view_mut((r0, c0), m.shape()).copy_from(m);
        }
        out
    }

    /// Splits a dense matrix into blocks, keeping every block with a nonzero entry.
    pub fn from_dense(n_max: usize, dense: &CMatrix) -> Result<Self> {
        let dim = truncated_dim(n_max);
        if dense.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "dense matrix must be {dim}x{dim} for n_max={n_max}"
            )));
        }
        let mut out = BlockPairs::new(n_max);
        for a in 0..=n_max {
            for b in 0..=n_max {
                let view = dense.view((BlockLabel(a).offset(), BlockLabel(b).offset()), (a + 1, b + 1));
                if view.iter().any(|z| *z != Complex64::from(0.0)) {
                    out.blocks.insert((a, b), view.into_owned());
                }
            }
        }
        Ok(out)
    }

    /// `self + alpha * other`, with the union of both block patterns.
    pub fn axpy(&self, alpha: f64, other: &BlockPairs) -> BlockPairs {
        let mut out = self.clone();
        out.n_max = self.n_max.max(other.n_max);
        for (&key, m) in &other.blocks {
            match out.blocks.get_mut(&key) {
                Some(existing) => *existing += m.scale(alpha),
                None => {
                    out.blocks.insert(key, m.scale(alpha));
                }
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> BlockPairs {
        BlockPairs {
            n_max: self.n_max,
            blocks: self.blocks.iter().map(|(&k, m)| (k, m.scale(alpha))).collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &BlockPairs) -> f64 {
        let keys: std::collections::BTreeSet<_> =
            self.blocks.keys().chain(other.blocks.keys()).copied().collect();
        keys.into_iter()
            .map(|key| match (self.blocks.get(&key), other.blocks.get(&key)) {
                (Some(a), Some(b)) => (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max),
                (Some(a), None) | (None, Some(a)) => a.iter().map(|z| z.norm()).fold(0.0, f64::max),
                (None, None) => 0.0,
            })
            .fold(0.0, f64::max)
    }
}

/// Density matrix of the truncated two-mode field.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    rho: BlockPairs,
    discarded_weight: f64,
}

impl TwoModeState {
    /// Wraps `rho` after checking Hermiticity, unit trace and positivity.
    pub fn from_blocks(rho: BlockPairs) -> Result<Self> {
        let state = TwoModeState { rho, discarded_weight: 0.0 };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn from_blocks_unchecked(rho: BlockPairs) -> Self {
        TwoModeState { rho, discarded_weight: 0.0 }
    }

    pub(crate) fn with_discarded_weight(mut self, w: f64) -> Self {
        self.discarded_weight = w;
        self
    }

    /// `|N,k⟩⟨N,k|`.
    pub fn fock(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::OutOfRange(format!("k={k} exceeds N={n}")));
        }
        let mut amp = CVector::zeros(n + 1);
        amp[k] = Complex64::from(1.0);
        Self::pure_block(n, &amp)
    }

    /// `𝟙/(N+1)` on block `n`.
    pub fn maximally_mixed(n: usize) -> Self {
        let mut rho = BlockPairs::new(n);
        let dim = n + 1;
        rho.blocks.insert((n, n), CMatrix::identity(dim, dim).scale(1.0 / dim as f64));
        Self::from_blocks_unchecked(rho)
    }

    /// Pure state with amplitudes `amp` on block `n`, normalized.
    pub fn pure_block(n: usize, amp: &CVector) -> Result<Self> {
        let mut blocks = BTreeMap::new();
        blocks.insert(n, amp.clone());
        Self::pure(n, &blocks)
    }

    /// Pure state `Σ_N |ψ_N⟩`, normalized over all blocks.
    pub fn pure(n_max: usize, amplitudes: &BTreeMap<usize, CVector>) -> Result<Self> {
        let norm2: f64 = amplitudes.values().map(|v| v.norm_squared()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(Error::InvalidState("pure state with zero norm".into()));
        }
        let scale = 1.0 / norm2.sqrt();
        let mut rho = BlockPairs::new(n_max);
        for (&a, va) in amplitudes {
            if va.len() != a + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "block {a} amplitude vector must have length {}",
                    a + 1
                )));
            }
            for (&b, vb) in amplitudes {
                let block = (va * vb.adjoint()).scale(scale * scale);
                rho.insert(a, b, block)?;
            }
        }
        Ok(Self::from_blocks_unchecked(rho))
    }

    /// Convex combination of states; weights must sum to one within 1e-12.
    pub fn mixture(components: &[(f64, TwoModeState)]) -> Result<Self> {
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.is_empty() || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("mixture weights sum to {total}, expected 1")));
        }
        if components.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::InvalidState("negative mixture weight".into()));
        }
        let n_max = components.iter().map(|(_, s)| s.n_max()).max().unwrap_or(0);
        let mut acc = BlockPairs::new(n_max);
        for (w, s) in components {
            acc = acc.axpy(*w, &s.rho);
        }
        Self::from_blocks(acc)
    }

    pub fn n_max(&self) -> usize {
        self.rho.n_max
    }

    pub fn blocks(&self) -> &BlockPairs {
        &self.rho
    }

    pub fn into_blocks(self) -> BlockPairs {
        self.rho
    }

    pub fn block(&self, n: usize, np: usize) -> Option<&CMatrix> {
        self.rho.get(n, np)
    }

    /// Probability weight discarded by truncation before renormalization.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    /// Population of block `n`, `Tr ρ_{N,N}`.
    pub fn block_weight(&self, n: usize) -> f64 {
        self.rho.get(n, n).map_or(0.0, |m| m.trace().re)
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn to_dense(&self) -> CMatrix {
        self.rho.to_dense()
    }

    /// Smallest eigenvalue of the assembled density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let dense = self.to_dense();
        let herm = (&dense + dense.adjoint()).scale(0.5);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        for ((a, b), m) in self.rho.iter() {
            let partner = self.rho.get(b, a);
            let err = match partner {
                Some(p) => (m - p.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max),
                None => m.iter().map(|z| z.norm()).fold(0.0, f64::max),
            };
            if err > STATE_TOLERANCE {
                return Err(Error::InvalidState(format!(
                    "block ({a},{b}) is not the adjoint of ({b},{a}); deviation {err:e}"
                )));
            }
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOLERANCE || tr.im.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(())
    }
}

/// Amplitudes over `k = 0..=N` of the SU(2) coherent state labelled `(θ, φ, ψ)`.
///
/// `c_k = √C(N,k) β₊^k β₋^(N-k)` with `β₊ = e^{i(φ+ψ)/2} cos(θ/2)` and
/// `β₋ = e^{-i(φ-ψ)/2} sin(θ/2)`. This phase choice gives the coherent symbol
/// `⟨S±⟩ = N e^{∓iφ} sin θ`, so the mean Stokes vector points along
/// `N (sin θ cos φ, -sin θ sin φ, cos θ)`.
pub fn su2_coherent_amplitudes(n: usize, theta: f64, phi: f64, psi: f64) -> CVector {
    let bp = Complex64::from_polar((theta / 2.0).cos(), (phi + psi) / 2.0);
    let bm = Complex64::from_polar((theta / 2.0).sin(), -(phi - psi) / 2.0);
    CVector::from_fn(n + 1, |k, _| {
        Complex64::from(binomial(n, k).sqrt()) * bp.powu(k as u32) * bm.powu((n - k) as u32)
    })
}

/// Pure SU(2) coherent state on block `n`.
pub fn su2_coherent_state(n: usize, theta: f64, phi: f64, psi: f64) -> Result<TwoModeState> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::OutOfRange(format!("theta={theta} outside [0, π]")));
    }
    TwoModeState::pure_block(n, &su2_coherent_amplitudes(n, theta, phi, psi))
}

/// Spherical coordinates of a pair of mode amplitudes, in the labelling of
/// [`su2_coherent_amplitudes`]: `α₊ = r e^{i(φ+ψ)/2} cos(θ/2)`,
/// `α₋ = r e^{-i(φ-ψ)/2} sin(θ/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereAngles {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

pub fn sphere_angles(alpha_plus: Complex64, alpha_minus: Complex64) -> Option<SphereAngles> {
    let r = (alpha_plus.norm_sqr() + alpha_minus.norm_sqr()).sqrt();
    if r == 0.0 {
        return None;
    }
    let theta = 2.0 * alpha_minus.norm().atan2(alpha_plus.norm());
    let (ap, am) = (alpha_plus.arg(), alpha_minus.arg());
    Some(SphereAngles { r, theta, phi: ap - am, psi: ap + am })
}

/// Product coherent state `|α₊⟩ ⊗ |α₋⟩`, truncated at `n_max` photons and
/// renormalized; the discarded Poisson weight is kept on the state.
pub fn two_mode_coherent_state(
    alpha_plus: Complex64,
    alpha_minus: Complex64,
    n_max: usize,
) -> TwoModeState {
    let r2 = alpha_plus.norm_sqr() + alpha_minus.norm_sqr();
    let mut amplitudes = BTreeMap::new();
    let mut kept = 0.0;
    for n in 0..=n_max {
        let amp = CVector::from_fn(n + 1, |k, _| {
            let norm = (-r2 / 2.0).exp() / (factorial(k) * factorial(n - k)).sqrt();
            alpha_plus.powu(k as u32) * alpha_minus.powu((n - k) as u32) * norm
        });
        kept += amp.norm_squared();
        if amp.iter().any(|z| z.norm() > 0.0) {
            amplitudes.insert(n, amp);
        }
    }
    let discarded = (1.0 - kept).max(0.0);
    if discarded > 1e-6 {
        log::warn!("coherent state with r²={r2} loses weight {discarded:e} beyond n_max={n_max}");
    }
    TwoModeState::pure(n_max, &amplitudes)
        .expect("coherent amplitudes include the vacuum term")
        .with_discarded_weight(discarded)
}

/// Random full-rank density matrix on block `n`: `G G† / Tr(G G†)` with
/// entries of `G` uniform in the unit square around the origin.
pub fn random_block_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TwoModeState {
    let g = CMatrix::from_fn(n + 1, n + 1, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    let mut rho = BlockPairs::new(n);
    rho.blocks.insert((n, n), gg.unscale(tr));
    TwoModeState::from_blocks_unchecked(rho)
}

/// `Tr(ρ O)` over all block pairs present in `observable`.
pub fn expectation(state: &TwoModeState, observable: &BlockPairs) -> Result<Complex64> {
    if let Some(top) = state.blocks().max_block() {
        if top > observable.n_max() {
            return Err(Error::DimensionMismatch(format!(
                "state populates block {top} but the observable stops at {}",
                observable.n_max()
            )));
        }
    }
    let mut acc = Complex64::from(0.0);
    for ((a, b), o) in observable.iter() {
        if let Some(rho) = state.block(b, a) {
            if rho.shape() != (o.ncols(), o.nrows()) {
                return Err(Error::DimensionMismatch(format!("observable block ({a},{b})")));
            }
            acc += (rho * o).trace();
        }
    }
    Ok(acc)
}

/// Block-diagonal family of one Stokes operator up to `n_max`.
pub fn stokes_observable(which: StokesComponent, n_max: usize) -> BlockPairs {
    let mut out = BlockPairs::new(n_max);
    for n in 0..=n_max {
        out.blocks.insert((n, n), stokes_matrices(n).component(which).clone());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Plus,
    Minus,
}

/// The annihilation operator `a₊` or `a₋`, mapping block `N` into `N-1`.
pub fn annihilation(mode: Mode, n_max: usize) -> BlockPairs {
    let mut out = BlockPairs::new(n_max);
    for n in 1..=n_max {
        let mut m = CMatrix::zeros(n, n + 1);
        for k in 0..=n {
            match mode {
                Mode::Plus if k > 0 => m[(k - 1, k)] = Complex64::from((k as f64).sqrt()),
                Mode::Minus if k < n => m[(k, k)] = Complex64::from(((n - k) as f64).sqrt()),
                _ => {}
            }
        }
        out.blocks.insert((n - 1, n), m);
    }
    out
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}
