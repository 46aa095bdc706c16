use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::assembly::TransmissionPencil;
use crate::eigensolve::{dense_pencil_eigenvalues, dense_shift_inverse};
use crate::linalg::C64;

use super::AnalysisError;

/// `mu_j = lambda0 + t e^{i theta_j}` for `j = 1..2(k+1)`: the `(k+1)`-th roots of
/// `e^{i pi/4}` followed by those of `e^{5 i pi/4}`.
pub fn trace_shifts(lambda0: C64, t: f64, k: usize) -> Vec<C64> {
    let kk = (k + 1) as f64;
    let first = (0..=k).map(|j| (0.25 + 2.0 * j as f64) * PI / kk);
    let second = (0..=k).map(|j| (1.25 + 2.0 * j as f64) * PI / kk);
    first.chain(second).map(|theta| lambda0 + C64::from_polar(t, theta)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub dense_cap: usize,
    /// Doublings of `Lambda0` allowed when a shift sits too close to the spectrum.
    pub max_raises: usize,
    /// Minimum of `|mu_j - lambda_k| / |mu_j|` for a shift to count as well conditioned.
    pub min_separation: f64,
    pub k: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { dense_cap: 400, max_raises: 5, min_separation: 1e-6, k: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub t: f64,
    pub k: usize,
    /// `Lambda0` actually used, after any raises.
    pub big_lambda0: f64,
    pub lambda0: C64,
    pub raises: usize,
    pub shifts: Vec<C64>,
    /// Trace of the `2(k+1)`-fold resolvent product.
    pub lhs: C64,
    /// `sum_j 1 / ((lambda_j - lambda0)^{2(k+1)} - i t^{2(k+1)})` over the pencil spectrum.
    pub rhs: C64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub dofs: usize,
    pub finite_eigenvalues: usize,
    pub min_separation: f64,
}

/// Checks the resolvent trace identity on a dense pencil with `lambda0 = i Lambda0`.
pub fn trace_identity_check(pencil: &TransmissionPencil, t: f64, big_lambda0: f64, options: &TraceOptions) -> Result<TraceReport, AnalysisError> {
    let dofs = pencil.n_dofs();
    if dofs > options.dense_cap {
        return Err(AnalysisError::DenseCap { dofs, cap: options.dense_cap });
    }
    if !(big_lambda0 > 0.0) || t < 10.0 * big_lambda0 {
        return Err(AnalysisError::Invalid(format!("need t >= 10 Lambda0, got t = {t}, Lambda0 = {big_lambda0}")));
    }
    let spectrum = dense_pencil_eigenvalues(&pencil.k, &pencil.m)?;
    let k = options.k;
    let power = 2 * (k + 1);

    let mut current = big_lambda0;
    let mut raises = 0;
    let (lambda0, shifts, separation) = loop {
        let lambda0 = C64::new(0.0, current);
        let shifts = trace_shifts(lambda0, t, k);
        let separation = shifts
            .iter()
            .flat_map(|mu| spectrum.finite.iter().map(move |l| (mu - l).norm() / mu.norm()))
            .fold(f64::INFINITY, f64::min);
        if separation >= options.min_separation {
            break (lambda0, shifts, separation);
        }
        if raises == options.max_raises || t < 20.0 * current {
            return Err(AnalysisError::IllConditioned(format!(
                "a shift lies within relative distance {separation:.2e} of the spectrum at Lambda0 = {current}"
            )));
        }
        current *= 2.0;
        raises += 1;
    };

    let (kd, md) = (pencil.k.to_dense(), pencil.m.to_dense());
    let mut product = DMatrix::<C64>::identity(dofs, dofs);
    for &mu in &shifts {
        product = dense_shift_inverse(&kd, &md, mu)? * product;
    }
    let lhs = product.trace();
    let tp = C64::new(0.0, t.powi(power as i32));
    let rhs: C64 = spectrum.finite.iter().map(|l| 1.0 / ((l - lambda0).powi(power as i32) - tp)).sum();
    let abs_gap = (lhs - rhs).norm();
    Ok(TraceReport {
        t,
        k,
        big_lambda0: current,
        lambda0,
        raises,
        shifts,
        lhs,
        rhs,
        abs_gap,
        rel_gap: abs_gap / rhs.norm().max(f64::MIN_POSITIVE),
        dofs,
        finite_eigenvalues: spectrum.finite.len(),
        min_separation: separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifts_solve_the_quartic() {
        let lambda0 = C64::new(0.0, 10.0);
        let t = 100.0;
        let shifts = trace_shifts(lambda0, t, 1);
        assert_eq!(shifts.len(), 4);
        let z = C64::new(0.3, -0.7);
        let product: C64 = shifts.iter().map(|mu| z - (mu - lambda0) / t).product();
        assert!((product - (z.powi(4) - C64::new(0.0, 1.0))).norm() < 1e-13);
    }
}
