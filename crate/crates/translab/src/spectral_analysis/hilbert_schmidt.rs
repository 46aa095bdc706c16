use nalgebra::DMatrix;
use serde::Serialize;

use crate::assembly::{make_resolvent, TransmissionPencil};
use crate::eigensolve::dense_shift_inverse;
use crate::linalg::C64;

use super::trace::trace_shifts;
use super::{loglog_slope, AnalysisError};

fn check_weights(weights: &[f64]) -> Result<(), AnalysisError> {
    match weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        Some((index, &value)) => Err(AnalysisError::NonPositiveWeight { index, value }),
        None => Ok(()),
    }
}

/// Hilbert-Schmidt norm in the inner product `<u, v> = sum_i w_i conj(u_i) v_i`:
/// the Frobenius norm of `W^{1/2} T W^{-1/2}`.
pub fn hs_norm(t: &DMatrix<C64>, weights: &[f64]) -> Result<f64, AnalysisError> {
    if !t.is_square() || t.nrows() != weights.len() {
        return Err(AnalysisError::Invalid(format!(
            "operator is {}x{} but {} weights were given",
            t.nrows(),
            t.ncols(),
            weights.len()
        )));
    }
    check_weights(weights)?;
    let mut sum = 0.0;
    for j in 0..t.ncols() {
        for i in 0..t.nrows() {
            sum += t[(i, j)].norm_sqr() * weights[i] / weights[j];
        }
    }
    Ok(sum.sqrt())
}

/// Row sums of the unsigned nodal mass matrices of both media, back to back.
pub fn lumped_weights(pencil: &TransmissionPencil) -> Vec<f64> {
    let row_sums = |m: &crate::linalg::SparseSym| {
        let mut s = vec![0.0; m.dim()];
        for (i, _, v) in m.iter() {
            s[i] += v;
        }
        s
    };
    let mut w = row_sums(&pencil.mass1);
    w.extend(row_sums(&pencil.mass2));
    w
}

/// Dense `T_lambda = (K - lambda M)^{-1} M` on the glued space.
pub fn dense_resolvent(pencil: &TransmissionPencil, lambda: C64) -> Result<DMatrix<C64>, AnalysisError> {
    Ok(dense_shift_inverse(&pencil.k.to_dense(), &pencil.m.to_dense(), lambda)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModifiedResolventReport {
    pub s: C64,
    /// `max |T_{lambda+s} - T (I - s T)^{-1}| / max |T_{lambda+s}|`.
    pub deviation: f64,
    /// Same for `(I - s T)^{-1} T`.
    pub commuted_deviation: f64,
    /// 2-norm condition number of `I - s T`.
    pub condition: f64,
}

/// Compares the directly computed `T_{lambda+s}` with both modified-resolvent forms of `T_lambda`.
pub fn modified_resolvent_check(t: &DMatrix<C64>, t_shifted: &DMatrix<C64>, s: C64) -> Result<ModifiedResolventReport, AnalysisError> {
    if !t.is_square() || t.shape() != t_shifted.shape() {
        return Err(AnalysisError::Invalid("operators must be square and of equal size".into()));
    }
    let n = t.nrows();
    let a = DMatrix::<C64>::identity(n, n) - t * s;
    let sv = a.clone().svd(false, false).singular_values;
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let lu = a.clone().lu();
    let right = t * lu.try_inverse().ok_or_else(|| AnalysisError::IllConditioned(format!("I - sT is singular for s = {s}")))?;
    let left = a.lu().solve(t).ok_or_else(|| AnalysisError::IllConditioned(format!("I - sT is singular for s = {s}")))?;
    let scale = t_shifted.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let gap = |m: &DMatrix<C64>| m.iter().zip(t_shifted.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale;
    Ok(ModifiedResolventReport { s, deviation: gap(&right), commuted_deviation: gap(&left), condition })
}

/// Hilbert-Schmidt norm of `T_{lambda_r} ... T_{lambda_1}` on pairs of nodal fields, in the
/// lumped-mass inner product, assembled one basis column at a time.
pub fn resolvent_product_hs_norm(pencil: &TransmissionPencil, lambdas: &[C64]) -> Result<f64, AnalysisError> {
    if lambdas.is_empty() {
        return Err(AnalysisError::Invalid("at least one shift is required".into()));
    }
    let weights = lumped_weights(pencil);
    check_weights(&weights)?;
    let nv = pencil.n_vertices();
    let factors = lambdas.iter().map(|&l| make_resolvent(pencil, l)).collect::<Result<Vec<_>, _>>()?;
    let mut sum = 0.0;
    let zero = C64::new(0.0, 0.0);
    for col in 0..2 * nv {
        let mut f1 = vec![zero; nv];
        let mut f2 = vec![zero; nv];
        let value = C64::new(1.0 / weights[col].sqrt(), 0.0);
        if col < nv {
            f1[col] = value;
        } else {
            f2[col - nv] = value;
        }
        for factor in &factors {
            (f1, f2) = factor.apply(&f1, &f2)?;
        }
        sum += f1.iter().chain(&f2).zip(&weights).map(|(u, w)| w * u.norm_sqr()).sum::<f64>();
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct HsDecayReport {
    pub lambda0: C64,
    pub t_grid: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
}

/// HS norm of `T_{mu_2} T_{mu_1}` with `mu_j = lambda0 + t e^{i theta_j}` (the first two trace
/// shifts for `k = 1`) over a grid of `t`, and its log-log slope.
pub fn hs_decay_scan(pencil: &TransmissionPencil, lambda0: C64, t_grid: &[f64]) -> Result<HsDecayReport, AnalysisError> {
    let mut norms = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let shifts = trace_shifts(lambda0, t, 1);
        norms.push(resolvent_product_hs_norm(pencil, &shifts[..2])?);
    }
    let slope = loglog_slope(t_grid, &norms)?;
    Ok(HsDecayReport { lambda0, t_grid: t_grid.to_vec(), norms, slope })
}
