use std::collections::BTreeMap;

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;

use super::{rhs_blocks, unvectorize, vectorize, BlockPairGenerator, DepolarizerRates};
use crate::algebra::{BlockPairs, CMatrix, TwoModeState};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RkOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Smallest admissible step; anything below signals stiffness.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions { atol: 1e-10, rtol: 1e-8, min_step: 1e-12, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Matrix exponential of each block-pair generator.
    ExactExpm,
    /// Dormand–Prince 5(4) on the full block-sparse state.
    RkAdaptive(RkOptions),
}

/// Evolves `state` for a time `t ≥ 0`.
pub fn evolve(
    state: &TwoModeState,
    t: f64,
    rates: &DepolarizerRates,
    method: Method,
) -> Result<TwoModeState> {
    rates.check()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::OutOfRange(format!("evolution time {t} must be finite and non-negative")));
    }
    match method {
        Method::ExactExpm => Ok(Evolver::for_state(state, rates).evolve(state, t)),
        Method::RkAdaptive(opts) => {
            let rho = dormand_prince(state.blocks(), t, rates, &opts)?;
            Ok(TwoModeState::from_blocks_unchecked(rho))
        }
    }
}

/// Spectral form `G = V diag(λ) V†` of a Hermitian block-pair generator.
#[derive(Clone, Debug)]
struct SpectralPropagator {
    rows: usize,
    cols: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
}

impl SpectralPropagator {
    fn new(generator: &BlockPairGenerator) -> Self {
        assert!(generator.is_hermitian(), "depolarizing generators are Hermitian");
        let herm = (&generator.matrix + generator.matrix.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(herm);
        SpectralPropagator {
            rows: generator.n + 1,
            cols: generator.n_prime + 1,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    fn apply(&self, rho: &CMatrix, t: f64) -> CMatrix {
        let coeffs = self.eigenvectors.adjoint() * vectorize(rho);
        let scaled = DVector::from_fn(coeffs.len(), |i, _| coeffs[i] * (self.eigenvalues[i] * t).exp());
        unvectorize(&(&self.eigenvectors * scaled), self.rows, self.cols)
    }
}

/// Cached per-block-pair propagators for a fixed set of rates.
///
/// Evolving to many times only costs one eigendecomposition per block pair.
#[derive(Clone, Debug)]
pub struct Evolver {
    rates: DepolarizerRates,
    pairs: BTreeMap<(usize, usize), SpectralPropagator>,
}

impl Evolver {
    /// Prepares propagators for every block pair up to `n_max`.
    pub fn new(rates: &DepolarizerRates, n_max: usize) -> Self {
        let keys: Vec<_> = (0..=n_max).flat_map(|a| (0..=n_max).map(move |b| (a, b))).collect();
        Self::with_pairs(rates, &keys)
    }

    /// Prepares propagators for the block pairs populated in `state`.
    pub fn for_state(state: &TwoModeState, rates: &DepolarizerRates) -> Self {
        let keys: Vec<_> = state.blocks().keys().collect();
        Self::with_pairs(rates, &keys)
    }

    fn with_pairs(rates: &DepolarizerRates, keys: &[(usize, usize)]) -> Self {
        let built: Vec<_> = keys
            .par_iter()
            .map(|&(a, b)| ((a, b), SpectralPropagator::new(&BlockPairGenerator::new(a, b, rates))))
            .collect();
        Evolver { rates: *rates, pairs: built.into_iter().collect() }
    }

    pub fn rates(&self) -> &DepolarizerRates {
        &self.rates
    }

    /// `exp(t𝓛)ρ`; block pairs run in parallel and the result does not
    /// depend on the thread count.
    pub fn evolve(&self, state: &TwoModeState, t: f64) -> TwoModeState {
        if t == 0.0 {
            return state.clone();
        }
        let items: Vec<_> = state.blocks().iter().collect();
        let evolved: Vec<_> = items
            .par_iter()
            .map(|&((a, b), block)| {
                let out = match self.pairs.get(&(a, b)) {
                    Some(p) => p.apply(block, t),
                    None => SpectralPropagator::new(&BlockPairGenerator::new(a, b, &self.rates))
                        .apply(block, t),
                };
                ((a, b), out)
            })
            .collect();
        let mut rho = BlockPairs::new(state.n_max());
        for ((a, b), m) in evolved {
            rho.insert(a, b, m).expect("propagation keeps block shapes");
        }
        TwoModeState::from_blocks_unchecked(rho).with_discarded_weight(state.discarded_weight())
    }
}

// Dormand–Prince 5(4) tableau; the generator is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn error_norm(err: &BlockPairs, y0: &BlockPairs, y1: &BlockPairs, opts: &RkOptions) -> f64 {
    let mut worst: f64 = 0.0;
    for (key, e) in err.iter() {
        let a = y0.get(key.0, key.1);
        let b = y1.get(key.0, key.1);
        for (i, z) in e.iter().enumerate() {
            let scale_a = a.map_or(0.0, |m| m.as_slice()[i].norm());
            let scale_b = b.map_or(0.0, |m| m.as_slice()[i].norm());
            let tol = opts.atol + opts.rtol * scale_a.max(scale_b);
            worst = worst.max(z.norm() / tol);
        }
    }
    worst
}

fn dormand_prince(
    rho0: &BlockPairs,
    t_end: f64,
    rates: &DepolarizerRates,
    opts: &RkOptions,
) -> Result<BlockPairs> {
    let mut y = rho0.clone();
    if t_end == 0.0 {
        return Ok(y);
    }
    let mut t = 0.0;
    let mut k1 = rhs_blocks(&y, rates);
    let scale = k1.iter().flat_map(|(_, m)| m.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    let mut h = if scale > 0.0 { (0.01 / scale).min(t_end) } else { t_end };
    let mut steps = 0usize;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::StepUnderflow { t, step: h });
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let mut ks: Vec<BlockPairs> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for stage in 1..7 {
            let mut ys = y.clone();
            for (j, k) in ks.iter().enumerate() {
                if A[stage][j] != 0.0 {
                    ys = ys.axpy(h * A[stage][j], k);
                }
            }
            ks.push(rhs_blocks(&ys, rates));
        }
        let mut y5 = y.clone();
        let mut err = BlockPairs::new(y.n_max());
        for (i, k) in ks.iter().enumerate() {
            if B5[i] != 0.0 {
                y5 = y5.axpy(h * B5[i], k);
            }
            if B5[i] != B4[i] {
                err = err.axpy(h * (B5[i] - B4[i]), k);
            }
        }
        let en = error_norm(&err, &y, &y5, opts);
        if en <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y5;
            // FSAL: the last stage is the derivative at the accepted point.
            k1 = ks.pop().expect("seven stages");
        }
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < opts.min_step && t < t_end {
            return Err(Error::StepUnderflow { t, step: h });
        }
    }
    Ok(y)
}
