use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::eigensolve::Spectrum;
use crate::geometry::TriMesh;
use crate::linalg::C64;
use crate::media::{MediumPair, SymMat2};

use super::AnalysisError;

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// `|{xi : <A xi, xi> < sigma}| = omega_d sigma^{d/2} / sqrt(det A)`.
pub fn sublevel_volume(a: &DMatrix<f64>, sigma: f64) -> Result<f64, AnalysisError> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(AnalysisError::Invalid("coefficient matrix must be square and non-empty".into()));
    }
    if !(sigma > 0.0) {
        return Err(AnalysisError::NonPositiveDensity(sigma));
    }
    let d = a.nrows();
    let chol = nalgebra::Cholesky::new(a.clone()).ok_or(AnalysisError::NotPositiveDefinite)?;
    let sqrt_det: f64 = chol.l().diagonal().iter().product();
    Ok(unit_ball_volume(d) * sigma.powf(d as f64 / 2.0) / sqrt_det)
}

pub fn sublevel_volume_2d(a: &SymMat2, sigma: f64) -> Result<f64, AnalysisError> {
    sublevel_volume(&DMatrix::from_row_slice(2, 2, &[a.a11, a.a12, a.a12, a.a22]), sigma)
}

/// `(2 pi)^{-2} sum_j int |{<A_j xi, xi> < Sigma_j}| dx` by centroid quadrature.
pub fn weyl_constant(mesh: &TriMesh, pair: &MediumPair) -> Result<f64, AnalysisError> {
    let mut total = 0.0;
    for t in 0..mesh.triangles().len() {
        let c = mesh.centroid(t);
        let area = mesh.triangle_area(t);
        for j in 1..=2 {
            let (a, sigma) = pair.medium(j, c);
            total += area * sublevel_volume_2d(&a, sigma)?;
        }
    }
    Ok(total / (4.0 * PI * PI))
}

/// The resolvent-trace constant `(2 pi)^{-d} sum_j int int d xi / (q_j(xi)^{2(k+1)} - i) dx`
/// with `q_j = <A_j xi, xi> / Sigma_j`, expressed through the Weyl constant.
pub fn trace_constant(weyl: f64, d: usize, k: usize) -> C64 {
    let alpha = d as f64 / (4.0 * (k + 1) as f64);
    let magnitude = weyl * alpha * PI / (alpha * PI).sin();
    magnitude * C64::from_polar(1.0, -0.5 * PI * (alpha - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylEstimate {
    pub c_analytic: f64,
    pub c_fit: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub relative_deviation: f64,
    /// Eigenvalues (with multiplicity) whose modulus falls in the window.
    pub count_in_window: usize,
    /// `(t, N(t))` pairs entering the fit.
    pub samples: Vec<(f64, usize)>,
}

pub const MIN_FIT_EIGENVALUES: usize = 10;

/// Least squares of `N(t)` against `c t^{d/2}`, sampling `N` at each eigenvalue modulus in the window.
pub fn fit_weyl(spectrum: &Spectrum, window: (f64, f64), c_analytic: f64, d: usize) -> Result<WeylEstimate, AnalysisError> {
    let (t_lo, t_hi) = window;
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(AnalysisError::Invalid(format!("fit window [{t_lo}, {t_hi}] is empty")));
    }
    if t_hi > spectrum.t_max * (1.0 + 1e-12) {
        return Err(AnalysisError::WindowBeyondCoverage { t_hi, t_max: spectrum.t_max });
    }
    let mut samples = Vec::new();
    let mut count_in_window = 0;
    let mut running = 0;
    for e in &spectrum.entries {
        let t = e.lambda.norm();
        running += e.multiplicity;
        if t >= t_lo && t <= t_hi {
            count_in_window += e.multiplicity;
            samples.push((t, running));
        }
    }
    if count_in_window < MIN_FIT_EIGENVALUES {
        return Err(AnalysisError::TooFewEigenvalues { found: count_in_window, needed: MIN_FIT_EIGENVALUES });
    }
    let p = d as f64 / 2.0;
    let num: f64 = samples.iter().map(|&(t, n)| n as f64 * t.powf(p)).sum();
    let den: f64 = samples.iter().map(|&(t, _)| t.powf(2.0 * p)).sum();
    let c_fit = num / den;
    Ok(WeylEstimate {
        c_analytic,
        c_fit,
        t_lo,
        t_hi,
        relative_deviation: (c_fit - c_analytic).abs() / c_analytic,
        count_in_window,
        samples,
    })
}
