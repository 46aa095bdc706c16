//! Quantitative spectral checks: Weyl constants and fits, resolvent decay scans,
//! Hilbert-Schmidt norms, the resolvent trace identity and the Tauberian pipeline.

mod completeness;
mod hilbert_schmidt;
mod kernel;
mod resolvent;
mod tauberian;
mod trace;
mod weyl;

use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::eigensolve::EigenError;
use crate::linalg::LinalgError;

pub use completeness::{projection_residuals, CompletenessReport};
pub use hilbert_schmidt::{
    dense_resolvent, hs_decay_scan, hs_norm, lumped_weights, modified_resolvent_check, resolvent_product_hs_norm,
    HsDecayReport, ModifiedResolventReport,
};
pub use kernel::{kernel_diag_asymptotic, KernelDiagonal, KernelMedium, KernelOptions};
pub use resolvent::{
    adjoint_defect, ray_distance, resolvent_norm_scan, ResolventPoint, ResolventScan, ResolventScanOptions,
};
pub use tauberian::{stieltjes_normalization, tauberian_check, tauberian_grid, TauberianReport};
pub use trace::{trace_identity_check, trace_shifts, TraceOptions, TraceReport};
pub use weyl::{
    fit_weyl, sublevel_volume, sublevel_volume_2d, trace_constant, unit_ball_volume, weyl_constant, WeylEstimate,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("weight {index} is not positive: {value}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("only {found} eigenvalues in the fit window, at least {needed} required")]
    TooFewEigenvalues { found: usize, needed: usize },
    #[error("window upper end {t_hi} exceeds the computed range t_max = {t_max}")]
    WindowBeyondCoverage { t_hi: f64, t_max: f64 },
    #[error("fitted exponent a = {a} lies outside (0, 1)")]
    ExponentOutOfRange { a: f64 },
    #[error("ray angle {theta} is within {distance} of the real axis, below eps0 = {eps0}")]
    RayTooClose { theta: f64, distance: f64, eps0: f64 },
    #[error("grid value t = {t} is not above the threshold {threshold}")]
    GridBelowThreshold { t: f64, threshold: f64 },
    #[error("{dofs} degrees of freedom exceed the dense cap {cap}")]
    DenseCap { dofs: usize, cap: usize },
    #[error("ill-conditioned shifts: {0}")]
    IllConditioned(String),
    #[error("quadrature tail ratio {ratio:.2e} exceeds {limit:.0e}; increase the radius")]
    TailTooLarge { ratio: f64, limit: f64 },
    #[error("invalid analysis input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Least-squares line `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(AnalysisError::Invalid("a line fit needs at least two paired samples".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::Invalid("line fit abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(AnalysisError::Invalid("log-log fit needs positive samples".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.0)
}

/// `n` points from `lo` to `hi`, equally spaced in `log t`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = log_grid(1.0, 100.0, 7);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-1.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
        assert!((xs[6] - 100.0).abs() < 1e-12);
    }
}
