//! Numerical laboratory for spectral gap estimates of the linearized
//! Boltzmann and Landau collision operators with hard potentials.
//!
//! The crate evaluates the entropy dissipation functionals `D^Bo` and
//! `D^La` on test functions in the Gaussian-weighted space `L^2(M)`,
//! assembles Galerkin discretizations over a Sonine x spherical-harmonic
//! basis, computes the explicit spectral-gap constants, and checks the
//! inequality chain relating hard potentials to Maxwellian molecules,
//! including the grazing-collision limit that connects the Boltzmann
//! functional to the Landau one.

pub mod basis;
pub mod bounds;
pub mod config;
pub mod dissipation;
pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
