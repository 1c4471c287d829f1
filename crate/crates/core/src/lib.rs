//! Depolarization of two-mode quantum light.
//!
//! The crate evolves polarization states of a two-mode field under a
//! depolarizing Lindblad equation built from the Stokes operators, maps the
//! dynamics onto the Poincaré sphere through Husimi multipoles, and checks
//! the effective depolarization rate against a microscopic model of a
//! dispersive, thermally damped atomic medium.
//!
//! Modules:
//!
//! - [`algebra`]: Fock blocks `|N,k⟩`, Stokes matrices, initial states.
//! - [`depolarizer`]: the master equation, its generator and evolution.
//! - [`metrics`]: Stokes moments, degree of polarization, trajectories.
//! - [`sphere`]: Wigner functions, sphere quadrature, multipole dynamics.
//! - [`reservoir`]: the atom–field model the effective rate is derived from.

pub mod algebra;
pub mod depolarizer;
pub mod error;
pub mod fit;
pub mod metrics;
pub mod reservoir;
pub mod sphere;
pub mod spin;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/stokes.md")]
    mod stokes {}
    #[doc = include_str!("../../../book/src/master_equation.md")]
    mod master_equation {}
    #[doc = include_str!("../../../book/src/phase_space.md")]
    mod phase_space {}
    #[doc = include_str!("../../../book/src/reservoir.md")]
    mod reservoir {}
}
