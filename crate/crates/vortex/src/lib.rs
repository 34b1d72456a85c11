//! Point-vortex dynamics in planar domains.
//!
//! The library models N point vortices with circulations Γ moving in a
//! domain Ω ⊆ ℝ², governed by the Hamiltonian
//!
//!   H_Ω(z) = H_0(z) − F(z),
//!
//! where H_0 is the free interaction energy and F collects the domain's
//! regular (image/boundary) terms built from its hydrodynamic Green's
//! function. On top of the model it provides:
//!
//! - adaptive and symplectic integration of the vortex ODE ([`dynamics`]),
//! - relative equilibria of the free system, their linearization spectra,
//!   and non-degeneracy counts ([`equilibria`]),
//! - Robin-function critical points and Brouwer indices ([`domains`]),
//! - the scaled periodic boundary-value problem on a Fourier loop space
//!   and its Newton solver ([`loopspace`]),
//! - continuation of the branch of periodic orbits from a rigidly rotating
//!   configuration shrunk towards a Robin critical point ([`continuation`]),
//! - the finite-dimensional S¹-equivariant degree bookkeeping that certifies
//!   the branch ([`s1deg`]).
//!
//! Every capability has a runnable example under `examples/` and a thin CLI
//! (`vortex` bin) driven by JSON experiment configs.

pub mod config;
pub mod continuation;
pub mod domains;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod loopspace;
pub mod model;
pub mod runner;
pub mod s1deg;

pub use error::VortexError;
pub use model::{Configuration, EnergyReport, VortexSystem};
