use crate::media::SymMat2;
use crate::C64;

use super::OracleError;

/// One Fourier mode `g = amplitude * exp(i <xi, x>)` of the whole-space problem
/// `div(A grad u) - lambda Sigma u = g`.
#[derive(Debug, Clone, Copy)]
pub struct ModeProblem {
    pub a: SymMat2,
    pub sigma: f64,
    pub lambda: C64,
    pub xi: [f64; 2],
    pub amplitude: C64,
}

/// Coefficient of `u = c exp(i <xi, x>)`: `c = -amplitude / (<A xi, xi> + lambda Sigma)`.
pub fn multiplier_mode_solve(problem: &ModeProblem) -> Result<C64, OracleError> {
    let q = problem.a.form(problem.xi, problem.xi);
    let denominator = q + problem.lambda * problem.sigma;
    let scale = q.abs() + (problem.lambda * problem.sigma).norm();
    if denominator.norm() <= 1e-14 * scale || denominator.norm() == 0.0 {
        return Err(OracleError::SymbolVanishes(denominator));
    }
    Ok(-problem.amplitude / denominator)
}

/// `(div(A grad) - lambda Sigma)` applied to the mode with the given coefficient, minus the source amplitude.
pub fn mode_residual(problem: &ModeProblem, coefficient: C64) -> C64 {
    let q = problem.a.form(problem.xi, problem.xi);
    (-q - problem.lambda * problem.sigma) * coefficient - problem.amplitude
}
