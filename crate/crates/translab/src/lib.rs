//! Numerical laboratory for the anisotropic transmission eigenvalue problem
//!
//! `div(A_j grad u_j) - lambda Sigma_j u_j = 0` in a planar domain, `j = 1, 2`, with
//! `u_1 = u_2` and matching conormal fluxes on the boundary.
//!
//! The crate covers mesh generation, coefficient checks, P1 assembly of the pencil
//! `K x = lambda M x`, shift-invert Arnoldi, spectral diagnostics (Weyl constant,
//! resolvent decay, Hilbert-Schmidt norms, trace identities, Tauberian fits) and
//! closed-form reference solutions.

pub mod analytic_oracles;
pub mod assembly;
pub mod eigensolve;
pub mod geometry;
pub mod linalg;
pub mod media;
pub mod spectral_analysis;

pub use linalg::C64;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
