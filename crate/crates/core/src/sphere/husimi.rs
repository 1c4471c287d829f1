//! Husimi functions of block states on the Poincaré sphere.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::SphereGrid;
use crate::algebra::{su2_coherent_amplitudes, CMatrix, CVector, STATE_TOLERANCE};
use crate::error::{Error, Result};

/// `Q_N(θ,φ) = (N+1)/(4π) ⟨N;θ,φ|ρ|N;θ,φ⟩` sampled on `grid`, with `ψ = 0`.
pub fn su2_q_sphere(block: &CMatrix, grid: &SphereGrid) -> Result<Vec<f64>> {
    if !block.is_square() || block.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!("block of shape {:?}", block.shape())));
    }
    let herm_err = (block - block.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm_err > STATE_TOLERANCE {
        return Err(Error::InvalidState(format!("block is not Hermitian (deviation {herm_err:e})")));
    }
    let n = block.nrows() - 1;
    Ok(pair_symbol(n, n, block, grid)?.into_iter().map(|z| z.re).collect())
}

/// Symbol of the block pair `ρ_{N,N'}` on the sphere at `ψ = 0`:
/// `√((N+1)(N'+1))/(4π) ⟨N;θ,φ|ρ_{N,N'}|N';θ,φ⟩`.
///
/// At general `ψ` the symbol picks up `e^{-im'ψ}` with `m' = (N-N')/2`.
/// For `N = N'` it is the Husimi function of the block.
pub fn pair_symbol(n: usize, n_prime: usize, block: &CMatrix, grid: &SphereGrid) -> Result<Vec<Complex64>> {
    if block.shape() != (n + 1, n_prime + 1) {
        return Err(Error::DimensionMismatch(format!(
            "block ({n},{n_prime}) has shape {:?}",
            block.shape()
        )));
    }
    let scale = (((n + 1) * (n_prime + 1)) as f64).sqrt() / (4.0 * PI);
    Ok(grid
        .nodes()
        .map(|(theta, phi, _)| {
            let left: CVector = su2_coherent_amplitudes(n, theta, phi, 0.0);
            let right: CVector = if n == n_prime { left.clone() } else { su2_coherent_amplitudes(n_prime, theta, phi, 0.0) };
            left.dotc(&(block * right)) * scale
        })
        .collect())
}
