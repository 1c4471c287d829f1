//! Phase-space picture of depolarization on the Poincaré sphere.

pub mod grid;
pub mod husimi;
pub mod multipole;
pub mod wigner;

pub use grid::{gauss_legendre, SphereGrid};
pub use husimi::{pair_symbol, su2_q_sphere};
pub use multipole::{
    calibrate_exponents, channel_exponent, depolarization_measure, dipole_moments_from_multipoles,
    multipole_transform, multipole_transform_complex, pair_multipoles, pointmass_coefficients,
    propagate_multipoles, reconstruct, Calibration, Channel, Kappa, MultipoleCoefficients, MultipoleSeries,
    StateMultipoles,
};
#[allow(non_snake_case)]
pub use wigner::{spherical_harmonic, wigner_D, wigner_d};
