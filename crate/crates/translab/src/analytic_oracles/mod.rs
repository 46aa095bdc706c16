//! Closed-form reference solutions.

mod bessel;
mod disk;
mod halfspace;
mod multiplier;

use thiserror::Error;

pub use bessel::{bessel_j, bessel_j_orders, bessel_j_prime, MAX_ARGUMENT, MAX_ORDER};
pub use disk::{disk_determinant, disk_eigenvalues, find_bracketed_roots, DiskOracle, DiskRoot};
pub use halfspace::{
    halfspace_solve, halfspace_solve_2d, root_with_positive_real_part, verify_halfspace, HalfSpaceResidual,
    HalfSpaceSolution, MediumSymbols,
};
pub use multiplier::{mode_residual, multiplier_mode_solve, ModeProblem};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("Bessel order {0} exceeds the supported maximum")]
    BesselOrder(u32),
    #[error("Bessel argument {0} outside the supported range")]
    BesselArgument(f64),
    #[error("symbol vanishes: <A xi, xi> + lambda Sigma = {0}")]
    SymbolVanishes(crate::C64),
    #[error("the two media have equal characteristic roots (|sqrt(D2) - sqrt(D1)| = {0:e})")]
    DegenerateContrast(f64),
    #[error("no decaying branch: Delta = {0} lies on the non-positive real axis")]
    NoDecayingBranch(crate::C64),
    #[error("invalid input: {0}")]
    Invalid(String),
}
