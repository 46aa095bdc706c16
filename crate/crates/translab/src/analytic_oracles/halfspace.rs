//! Two-media problem in the half space `x_d > 0` for one tangential frequency.
//!
//! Each medium contributes `v_j(t) = alpha_j exp(eta_j t)` solving
//! `a_j v'' + 2 i b_j v' - (c_j + lambda Sigma_j) v = 0`, with
//! `v_1(0) - v_2(0) = phi` and matching conormal fluxes.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::media::SymMat2;
use crate::C64;

use super::OracleError;

/// Symbols and solution coefficients of one medium.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MediumSymbols {
    /// `<A e_d, e_d>`
    pub a: f64,
    /// `<A xi, e_d>`
    pub b: f64,
    /// `<A xi, xi>`
    pub c: f64,
    pub sigma: f64,
    /// `-b^2 + a (c + lambda Sigma)`
    pub delta: C64,
    pub sqrt_delta: C64,
    /// `(-i b - sqrt(delta)) / a`
    pub eta: C64,
    pub alpha: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfSpaceSolution {
    pub media: [MediumSymbols; 2],
    pub lambda: C64,
    pub xi_tangential: Vec<f64>,
    pub phi: C64,
}

/// Square root with strictly positive real part.
pub fn root_with_positive_real_part(z: C64) -> Result<C64, OracleError> {
    let mut r = z.sqrt();
    if r.re < 0.0 {
        r = -r;
    }
    if !(r.re > 0.0) {
        return Err(OracleError::NoDecayingBranch(z));
    }
    Ok(r)
}

fn symbols(a_mat: &DMatrix<f64>, sigma: f64, lambda: C64, xi: &[f64]) -> Result<MediumSymbols, OracleError> {
    let d = a_mat.nrows();
    let form = |u: &[f64], v: &[f64]| {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += u[i] * a_mat[(i, j)] * v[j];
            }
        }
        s
    };
    let mut e_d = vec![0.0; d];
    e_d[d - 1] = 1.0;
    let (a, b, c) = (form(&e_d, &e_d), form(xi, &e_d), form(xi, xi));
    let delta = -b * b + a * (c + lambda * sigma);
    let sqrt_delta = root_with_positive_real_part(delta)?;
    let eta = (C64::new(0.0, -b) - sqrt_delta) / a;
    Ok(MediumSymbols { a, b, c, sigma, delta, sqrt_delta, eta, alpha: C64::new(0.0, 0.0) })
}

/// Solves the half-space problem in `d` dimensions. `xi_tangential` holds the first
/// `d - 1` frequency components; the normal component is zero.
pub fn halfspace_solve(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    sigma1: f64,
    sigma2: f64,
    lambda: C64,
    xi_tangential: &[f64],
    phi: C64,
) -> Result<HalfSpaceSolution, OracleError> {
    let d = a1.nrows();
    if d < 1 || a1.shape() != (d, d) || a2.shape() != (d, d) || xi_tangential.len() + 1 != d {
        return Err(OracleError::Invalid(format!(
            "matrices must be {d}x{d} with {} tangential components",
            d.saturating_sub(1)
        )));
    }
    let mut xi = xi_tangential.to_vec();
    xi.push(0.0);
    let mut m1 = symbols(a1, sigma1, lambda, &xi)?;
    let mut m2 = symbols(a2, sigma2, lambda, &xi)?;
    let gap = m2.sqrt_delta - m1.sqrt_delta;
    if gap.norm() <= 1e-12 * m1.sqrt_delta.norm().max(m2.sqrt_delta.norm()) {
        return Err(OracleError::DegenerateContrast(gap.norm()));
    }
    m1.alpha = phi * m2.sqrt_delta / gap;
    m2.alpha = m1.alpha - phi;
    Ok(HalfSpaceSolution { media: [m1, m2], lambda, xi_tangential: xi_tangential.to_vec(), phi })
}

/// Planar case with `xi = (xi', 0)` and normal `e_2`.
pub fn halfspace_solve_2d(
    a1: SymMat2,
    a2: SymMat2,
    sigma1: f64,
    sigma2: f64,
    lambda: C64,
    xi_tangential: f64,
    phi: C64,
) -> Result<HalfSpaceSolution, OracleError> {
    let to_matrix = |a: SymMat2| DMatrix::from_row_slice(2, 2, &[a.a11, a.a12, a.a12, a.a22]);
    halfspace_solve(&to_matrix(a1), &to_matrix(a2), sigma1, sigma2, lambda, &[xi_tangential], phi)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HalfSpaceResidual {
    /// Largest `|a eta^2 + 2 i b eta - (c + lambda Sigma)|`, relative to the size of its terms.
    pub ode: f64,
    /// `|(v_1(0) - v_2(0)) - phi|`.
    pub jump: f64,
    /// `|alpha_1 sqrt(D_1) - alpha_2 sqrt(D_2)|` relative to `|alpha_1 sqrt(D_1)|`.
    pub flux: f64,
    /// Same flux match evaluated from the conormal derivative `a v' + i b v` at the interface.
    pub conormal_flux: f64,
    pub branch_ok: bool,
    /// `|v_j(t)| <= |alpha_j| exp(-|Re eta_j| t)` at every sampled depth.
    pub decay_ok: bool,
}

pub fn verify_halfspace(sol: &HalfSpaceSolution, depths: &[f64]) -> HalfSpaceResidual {
    let i = C64::new(0.0, 1.0);
    let mut ode: f64 = 0.0;
    let mut branch_ok = true;
    let mut decay_ok = true;
    for m in &sol.media {
        let shifted = m.c + sol.lambda * m.sigma;
        let terms = [m.a * m.eta * m.eta, 2.0 * i * m.b * m.eta, shifted];
        let scale: f64 = terms.iter().map(|t| t.norm()).sum();
        let residual = (terms[0] + terms[1] - terms[2]).norm();
        ode = ode.max(if scale > 0.0 { residual / scale } else { residual });
        branch_ok &= m.sqrt_delta.re > 0.0 && m.eta.re < 0.0;
        for &t in depths {
            let v = m.alpha * (m.eta * t).exp();
            decay_ok &= v.norm() <= m.alpha.norm() * (-m.eta.re.abs() * t).exp() * (1.0 + 1e-12);
        }
    }
    let [m1, m2] = &sol.media;
    let jump = ((m1.alpha - m2.alpha) - sol.phi).norm();
    let f1 = m1.alpha * m1.sqrt_delta;
    let f2 = m2.alpha * m2.sqrt_delta;
    let flux = (f1 - f2).norm() / f1.norm().max(f2.norm()).max(f64::MIN_POSITIVE);
    let g1 = m1.alpha * (m1.a * m1.eta + i * m1.b);
    let g2 = m2.alpha * (m2.a * m2.eta + i * m2.b);
    let conormal_flux = (g1 - g2).norm() / g1.norm().max(g2.norm()).max(f64::MIN_POSITIVE);
    HalfSpaceResidual { ode, jump, flux, conormal_flux, branch_ok, decay_ok }
}
