//! Product quadrature on the sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes descending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss–Legendre in `cos θ` times a uniform `φ` grid.
///
/// With band limit `L` the grid has `2(L+1)` polar and `2L+1` azimuthal
/// nodes, which integrates products of two functions of degree `≤ L` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub band_limit: usize,
    pub theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SphereGrid {
    pub fn new(band_limit: usize) -> Self {
        let (x, w) = gauss_legendre(2 * (band_limit + 1));
        let n_phi = 2 * band_limit + 1;
        SphereGrid {
            band_limit,
            theta: x.iter().map(|x| x.acos()).collect(),
            theta_weights: w,
            phi: (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.phi.len() as f64
    }

    /// `(θ, φ, weight)` in θ-major order; samples on this grid use the same order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let wp = self.phi_weight();
        self.theta
            .iter()
            .zip(&self.theta_weights)
            .flat_map(move |(&t, &wt)| self.phi.iter().map(move |&p| (t, p, wt * wp)))
    }

    /// `∫ f dΩ` of samples in node order.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        self.nodes().zip(samples).map(|((_, _, w), f)| w * f).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::wigner::spherical_harmonic;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for p in 0..10 {
            let exact = if p % 2 == 0 { 2.0 / (p + 1) as f64 } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn harmonics_are_orthonormal_on_grid() {
        let l_max = 5;
        let grid = SphereGrid::new(l_max);
        let mut labels = Vec::new();
        for l in 0..=l_max {
            for m in -(l as i32)..=(l as i32) {
                labels.push((l, m));
            }
        }
        let tables: Vec<Vec<_>> = labels
            .iter()
            .map(|&(l, m)| grid.nodes().map(|(t, p, _)| spherical_harmonic(l, m, t, p).unwrap()).collect())
            .collect();
        let weights: Vec<f64> = grid.nodes().map(|(_, _, w)| w).collect();
        for (i, a) in tables.iter().enumerate() {
            for (j, b) in tables.iter().enumerate() {
                let dot: num_complex::Complex64 =
                    a.iter().zip(b).zip(&weights).map(|((a, b), w)| a.conj() * b * *w).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot.re - expected).abs() < 1e-12 && dot.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_area() {
        let g = SphereGrid::new(3);
        assert_eq!(g.len(), 8 * 7);
        assert!((g.integrate(&vec![1.0; g.len()]) - 4.0 * PI).abs() < 1e-12);
    }
}
