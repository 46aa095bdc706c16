use serde::Serialize;

use crate::eigensolve::Spectrum;
use crate::linalg::C64;

use super::{linear_fit, log_grid, AnalysisError};

/// `int_0^inf t^{a-1} / (1 + t) dt` by the trapezoid rule after `t = e^u`.
pub fn stieltjes_normalization(a: f64) -> Result<f64, AnalysisError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(AnalysisError::ExponentOutOfRange { a });
    }
    let (lo, hi) = (-40.0 / a, 40.0 / (1.0 - a));
    let h = 0.02;
    let n = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / n as f64;
    let f = |u: f64| {
        if u > 0.0 {
            ((a - 1.0) * u).exp() / (1.0 + (-u).exp())
        } else {
            (a * u).exp() / (1.0 + u.exp())
        }
    };
    let interior: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    Ok(h * (interior + 0.5 * (f(lo) + f(hi))))
}

#[derive(Debug, Clone, Serialize)]
pub struct TauberianReport {
    pub lambda0: C64,
    pub k: usize,
    pub d: usize,
    /// `a = d / (8 (k + 1))`.
    pub exponent: f64,
    /// `1 + slope` of the free log-log fit.
    pub exponent_fit: f64,
    /// `P` in `S(t) ~ P t^{a-1}` with the exponent held at `a`.
    pub prefactor: f64,
    pub normalization: f64,
    /// `P / (a int_0^inf t^{a-1}/(1+t) dt)`.
    pub c_tauberian: f64,
    pub c_reference: Option<f64>,
    pub relative_deviation: Option<f64>,
    /// `(s, t = s^{4(k+1)}, S(t))`.
    pub grid: Vec<(f64, f64, f64)>,
    pub warnings: Vec<String>,
}

/// Default grid of spectral radii `s` for a window of radius `t_max`.
pub fn tauberian_grid(t_max: f64, points: usize) -> Vec<f64> {
    log_grid(0.2 * t_max, 0.5 * t_max, points)
}

/// Evaluates `S(t) = sum_j mult_j / (|lambda_j - lambda0|^{4(k+1)} + t)` at `t = s^{4(k+1)}`
/// over the grid of radii `s`, fits a power law and converts its prefactor to a counting constant.
pub fn tauberian_check(
    spectrum: &Spectrum,
    lambda0: C64,
    s_grid: &[f64],
    d: usize,
    k: usize,
    c_reference: Option<f64>,
) -> Result<TauberianReport, AnalysisError> {
    if spectrum.entries.is_empty() {
        return Err(AnalysisError::Invalid("spectrum is empty".into()));
    }
    if s_grid.len() < 2 || s_grid.iter().any(|s| !(*s > 0.0)) {
        return Err(AnalysisError::Invalid("grid needs at least two positive radii".into()));
    }
    let power = 4 * (k + 1);
    let shifted: Vec<(f64, f64)> = spectrum
        .entries
        .iter()
        .map(|e| ((e.lambda - lambda0).norm().powi(power as i32), e.multiplicity as f64))
        .collect();
    let mut grid = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let t = s.powi(power as i32);
        let value: f64 = shifted.iter().map(|&(p, m)| m / (p + t)).sum();
        grid.push((s, t, value));
    }

    let mut warnings = Vec::new();
    let smallest = shifted.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let largest = shifted.iter().map(|p| p.0).fold(0.0, f64::max);
    let t_first = grid.first().map(|g| g.1).unwrap_or(0.0);
    let t_last = grid.last().map(|g| g.1).unwrap_or(0.0);
    if t_last > largest / 100.0 {
        warnings.push(format!("grid reaches t = {t_last:.3e}, beyond 1/100 of the largest |lambda~|^{power} = {largest:.3e}"));
    }
    if t_first < 100.0 * smallest {
        warnings.push(format!("grid starts at t = {t_first:.3e}, below 100 times the smallest |lambda~|^{power}"));
    }

    let lt: Vec<f64> = grid.iter().map(|g| g.1.ln()).collect();
    let ls: Vec<f64> = grid.iter().map(|g| g.2.ln()).collect();
    let (slope, _) = linear_fit(&lt, &ls)?;
    let exponent_fit = slope + 1.0;
    if !(exponent_fit > 0.0 && exponent_fit < 1.0) {
        return Err(AnalysisError::ExponentOutOfRange { a: exponent_fit });
    }
    let exponent = d as f64 / (8.0 * (k + 1) as f64);
    let log_p = lt.iter().zip(&ls).map(|(t, s)| s - (exponent - 1.0) * t).sum::<f64>() / lt.len() as f64;
    let prefactor = log_p.exp();
    let normalization = stieltjes_normalization(exponent)?;
    let c_tauberian = prefactor / (exponent * normalization);
    Ok(TauberianReport {
        lambda0,
        k,
        d,
        exponent,
        exponent_fit,
        prefactor,
        normalization,
        c_tauberian,
        c_reference,
        relative_deviation: c_reference.map(|c| (c_tauberian - c).abs() / c),
        grid,
        warnings,
    })
}
