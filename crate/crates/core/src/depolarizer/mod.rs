//! The depolarizing master equation
//!
//! ```text
//! dρ/dt = Γ L[S₀]ρ + γ L[S₊]ρ + γ L[S₋]ρ,    L[C]ρ = 2CρC† - {C†C, ρ}
//! ```
//!
//! Every term maps a block pair `ρ_{N,N'}` into itself, so the generator is
//! assembled and exponentiated one block pair at a time.

mod evolve;

pub use evolve::{evolve, Evolver, Method, RkOptions};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{stokes_matrices, BlockPairs, CMatrix, TwoModeState};
use crate::error::{Error, Result};

/// Rates of the depolarizing equation: `gamma` multiplies `L[S₊]` and
/// `L[S₋]`, `gamma0` multiplies `L[S₀]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepolarizerRates {
    pub gamma: f64,
    pub gamma0: f64,
}

impl DepolarizerRates {
    pub fn new(gamma: f64, gamma0: f64) -> Result<Self> {
        let rates = DepolarizerRates { gamma, gamma0 };
        rates.check()?;
        Ok(rates)
    }

    /// The rates obtained from the dispersive atomic medium, `Γ = 2γ`.
    pub fn atomic_medium(gamma: f64) -> Result<Self> {
        Self::new(gamma, 2.0 * gamma)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma0 >= 0.0) || !self.gamma.is_finite() || !self.gamma0.is_finite()
        {
            return Err(Error::OutOfRange(format!(
                "rates must be finite and non-negative, got gamma={}, gamma0={}",
                self.gamma, self.gamma0
            )));
        }
        Ok(())
    }
}

/// `L[C]ρ = 2CρC† - C†Cρ - ρC†C` for a square `ρ`.
pub fn dissipator(c: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    dissipator_pair(c, c, rho)
}

/// The dissipator acting on a block pair `ρ_{N,N'}`: `c_left` is the block-`N`
/// matrix of the jump operator, `c_right` its block-`N'` matrix.
pub fn dissipator_pair(c_left: &CMatrix, c_right: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    if !c_left.is_square() || !c_right.is_square() {
        return Err(Error::DimensionMismatch("jump operators must be square on their block".into()));
    }
    if c_left.ncols() != rho.nrows() || c_right.nrows() != rho.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "jump operators {}x{} / {}x{} incompatible with a {}x{} block",
            c_left.nrows(),
            c_left.ncols(),
            c_right.nrows(),
            c_right.ncols(),
            rho.nrows(),
            rho.ncols()
        )));
    }
    let gain = c_left * rho * c_right.adjoint();
    let left = c_left.adjoint() * c_left * rho;
    let right = rho * (c_right.adjoint() * c_right);
    Ok(gain.scale(2.0) - left - right)
}

fn pair_rhs(n: usize, np: usize, rho: &CMatrix, rates: &DepolarizerRates) -> CMatrix {
    let (l, r) = (stokes_matrices(n), stokes_matrices(np));
    let dn = n as f64 - np as f64;
    let mut out = rho.scale(-rates.gamma0 * dn * dn);
    debug_assert!({
        let explicit = dissipator_pair(&l.s0, &r.s0, rho).unwrap();
        (explicit.scale(rates.gamma0) - &out).iter().all(|z| z.norm() <= 1e-9 * (1.0 + rho.norm()))
    });
    if rates.gamma != 0.0 {
        let ladder = dissipator_pair(&l.splus, &r.splus, rho).unwrap()
            + dissipator_pair(&l.sminus, &r.sminus, rho).unwrap();
        out += ladder.scale(rates.gamma);
    }
    out
}

/// Time derivative of `state` under the depolarizing equation. The result
/// has the block pattern of the state and zero total trace.
pub fn depolarizing_rhs(state: &TwoModeState, rates: &DepolarizerRates) -> BlockPairs {
    rhs_blocks(state.blocks(), rates)
}

pub(crate) fn rhs_blocks(rho: &BlockPairs, rates: &DepolarizerRates) -> BlockPairs {
    let mut out = BlockPairs::new(rho.n_max());
    for ((n, np), block) in rho.iter() {
        out.insert(n, np, pair_rhs(n, np, block, rates)).expect("same block shape");
    }
    out
}

/// Matrix of the depolarizing generator on the column-major vectorization
/// of a block pair `ρ_{N,N'}`.
#[derive(Clone, Debug)]
pub struct BlockPairGenerator {
    pub n: usize,
    pub n_prime: usize,
    pub matrix: CMatrix,
}

impl BlockPairGenerator {
    pub fn new(n: usize, n_prime: usize, rates: &DepolarizerRates) -> Self {
        let (l, r) = (stokes_matrices(n), stokes_matrices(n_prime));
        let (a, b) = (n + 1, n_prime + 1);
        let id_a = CMatrix::identity(a, a);
        let id_b = CMatrix::identity(b, b);
        let dn = n as f64 - n_prime as f64;
        // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
        let mut matrix = CMatrix::identity(a * b, a * b).scale(-rates.gamma0 * dn * dn);
        for (cl, cr) in [(&l.splus, &r.splus), (&l.sminus, &r.sminus)] {
            let gain = cr.map(|z| z.conj()).kronecker(cl).scale(2.0);
            let left = id_b.kronecker(&(cl.adjoint() * cl));
            let right = (cr.adjoint() * cr).transpose().kronecker(&id_a);
            matrix += (gain - left - right).scale(rates.gamma);
        }
        BlockPairGenerator { n, n_prime, matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = self.matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        (&self.matrix - self.matrix.adjoint()).iter().all(|z| z.norm() <= 1e-13 * scale)
    }

    /// Applies the generator to a block.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = vectorize(rho);
        unvectorize(&(&self.matrix * v), self.n + 1, self.n_prime + 1)
    }

    /// `exp(t·G)` by scaling and squaring with Padé approximants.
    pub fn exp(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return CMatrix::identity(self.dim(), self.dim());
        }
        self.matrix.scale(t).exp()
    }
}

pub(crate) fn vectorize(m: &CMatrix) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvectorize(v: &nalgebra::DVector<Complex64>, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Eigenvalues of the block-pair generator, sorted by real part, largest first.
pub fn generator_spectrum(n: usize, n_prime: usize, rates: &DepolarizerRates) -> Vec<Complex64> {
    let generator = BlockPairGenerator::new(n, n_prime, rates);
    let mut eigs: Vec<Complex64> = if generator.is_hermitian() {
        let herm = (&generator.matrix + generator.matrix.adjoint()).scale(0.5);
        SymmetricEigen::new(herm).eigenvalues.iter().map(|&x| Complex64::from(x)).collect()
    } else {
        let schur = nalgebra::Schur::new(generator.matrix.clone());
        let (_, t) = schur.unpack();
        t.diagonal().iter().copied().collect()
    };
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    eigs
}

/// The stationary state `𝟙/(N+1)` of block `n`.
pub fn steady_state(n: usize) -> CMatrix {
    CMatrix::identity(n + 1, n + 1).scale(1.0 / (n + 1) as f64)
}
