use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{make_resolvent, DiscreteResolvent, TransmissionPencil};
use crate::linalg::{SparseSym, C64};

use super::{loglog_slope, AnalysisError};

#[derive(Debug, Clone, Copy)]
pub struct ResolventScanOptions {
    pub power_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub eps0: f64,
    /// Grid values must be at least this.
    pub lambda0: f64,
    /// Random sign probes for the nodal max-norm ratio, in addition to the constant field.
    pub sup_probes: usize,
}

impl Default for ResolventScanOptions {
    fn default() -> Self {
        Self { power_iterations: 30, restarts: 3, seed: 1, eps0: PI / 8.0, lambda0: 10.0, sup_probes: 4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventPoint {
    pub t: f64,
    pub lambda: C64,
    /// Mass-weighted `L^2 -> L^2` norm of `f -> u`.
    pub operator_norm: Option<f64>,
    /// `L^2 -> H^1` seminorm of `f -> u`.
    pub gradient_norm: Option<f64>,
    /// Largest nodal max-norm ratio `|u|_inf / |f|_inf` over the probes.
    pub sup_ratio: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventScan {
    pub theta: f64,
    pub points: Vec<ResolventPoint>,
    pub operator_slope: Option<f64>,
    pub gradient_slope: Option<f64>,
    pub sup_slope: Option<f64>,
}

/// `inf_n |theta - n pi|`.
pub fn ray_distance(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    r.min(PI - r)
}

/// Operator on pairs of nodal fields stored back to back: `f -> P G P^T (W_1 f_1 - W_2 f_2)`.
struct UngluedResolvent<'a> {
    pencil: &'a TransmissionPencil,
    resolvent: DiscreteResolvent<'a>,
}

impl<'a> UngluedResolvent<'a> {
    fn new(pencil: &'a TransmissionPencil, lambda: C64) -> Result<Self, AnalysisError> {
        Ok(Self { pencil, resolvent: make_resolvent(pencil, lambda)? })
    }

    fn nv(&self) -> usize {
        self.pencil.n_vertices()
    }

    fn unglued_norm_sq(&self, x: &[C64]) -> f64 {
        let nv = self.nv();
        self.pencil.mass1.quadratic_form(&x[..nv]) + self.pencil.mass2.quadratic_form(&x[nv..])
    }

    /// Glued `G P^T B x`.
    fn forward(&self, x: &[C64]) -> Result<Vec<C64>, AnalysisError> {
        let nv = self.nv();
        let rhs = self.pencil.source_rhs(&x[..nv], &x[nv..])?;
        Ok(self.resolvent.solve(&rhs)?)
    }

    fn scatter(&self, y: &[C64]) -> Vec<C64> {
        let (mut u1, u2) = self.pencil.dof_map.scatter(y);
        u1.extend(u2);
        u1
    }

    /// `J P G(conj lambda) y` for a glued vector `y`.
    fn backward_glued(&self, y: &[C64]) -> Result<Vec<C64>, AnalysisError> {
        let z = self.resolvent.solve_adjoint_shift(y)?;
        let (mut u1, u2) = self.pencil.dof_map.scatter(&z);
        u1.extend(u2.into_iter().map(|v| -v));
        Ok(u1)
    }

    /// `T x` on the unglued space.
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>, AnalysisError> {
        Ok(self.scatter(&self.forward(x)?))
    }

    /// `T^* x = J P G(conj lambda) P^T W x`, the adjoint in the unsigned mass inner product.
    fn apply_adjoint(&self, x: &[C64]) -> Result<Vec<C64>, AnalysisError> {
        let nv = self.nv();
        let g1 = self.pencil.mass1.mul_complex(&x[..nv]);
        let g2 = self.pencil.mass2.mul_complex(&x[nv..]);
        self.backward_glued(&self.pencil.dof_map.gather(&g1, &g2))
    }

    /// Power iteration on `(D T)^* (D T)` where `target` is the glued Gram matrix of `D`.
    fn norm_estimate(&self, target: &SparseSym, iterations: usize, restarts: usize, rng: &mut ChaCha8Rng) -> Result<f64, AnalysisError> {
        let n = 2 * self.nv();
        let mut best: f64 = 0.0;
        for _ in 0..restarts {
            let mut x: Vec<C64> = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let mut estimate = 0.0;
            for _ in 0..iterations {
                let xn = self.unglued_norm_sq(&x).sqrt();
                x.iter_mut().for_each(|z| *z /= xn);
                let y = self.forward(&x)?;
                estimate = target.quadratic_form(&y).max(0.0).sqrt();
                x = self.backward_glued(&target.mul_complex(&y))?;
                if x.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                    break;
                }
            }
            best = best.max(estimate);
        }
        Ok(best)
    }

    fn sup_ratio(&self, probes: usize, rng: &mut ChaCha8Rng) -> Result<f64, AnalysisError> {
        let n = 2 * self.nv();
        let mut fields = vec![vec![C64::new(1.0, 0.0); n]];
        for _ in 0..probes {
            fields.push((0..n).map(|_| C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)).collect());
        }
        let mut best: f64 = 0.0;
        for f in fields {
            let u = self.apply(&f)?;
            let top = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
            best = best.max(top / f.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        Ok(best)
    }
}

/// Norms of the solution operator at `lambda = t e^{i theta}` over the grid, with log-log slopes.
pub fn resolvent_norm_scan(
    pencil: &TransmissionPencil,
    theta: f64,
    t_grid: &[f64],
    options: &ResolventScanOptions,
) -> Result<ResolventScan, AnalysisError> {
    let distance = ray_distance(theta);
    if distance < options.eps0 {
        return Err(AnalysisError::RayTooClose { theta, distance, eps0: options.eps0 });
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AnalysisError::Invalid("t grid must be strictly increasing".into()));
    }
    if let Some(&t) = t_grid.iter().find(|&&t| !(t >= options.lambda0)) {
        return Err(AnalysisError::GridBelowThreshold { t, threshold: options.lambda0 });
    }
    let mut points = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let lambda = C64::from_polar(t, theta);
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(i as u64));
        let evaluate = |rng: &mut ChaCha8Rng| -> Result<(f64, f64, f64), AnalysisError> {
            let op = UngluedResolvent::new(pencil, lambda)?;
            let l2 = op.norm_estimate(&pencil.mass_abs, options.power_iterations, options.restarts, rng)?;
            let grad = op.norm_estimate(&pencil.stiffness_abs, options.power_iterations, options.restarts, rng)?;
            let sup = op.sup_ratio(options.sup_probes, rng)?;
            Ok((l2, grad, sup))
        };
        points.push(match evaluate(&mut rng) {
            Ok((l2, grad, sup)) => ResolventPoint {
                t,
                lambda,
                operator_norm: Some(l2),
                gradient_norm: Some(grad),
                sup_ratio: Some(sup),
                flag: None,
            },
            Err(e) => ResolventPoint { t, lambda, operator_norm: None, gradient_norm: None, sup_ratio: None, flag: Some(e.to_string()) },
        });
    }
    let slope = |get: fn(&ResolventPoint) -> Option<f64>| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().filter_map(|p| get(p).map(|v| (p.t, v))).unzip();
        loglog_slope(&xs, &ys).ok()
    };
    Ok(ResolventScan {
        theta,
        operator_slope: slope(|p| p.operator_norm),
        gradient_slope: slope(|p| p.gradient_norm),
        sup_slope: slope(|p| p.sup_ratio),
        points,
    })
}

/// Relative mismatch of `<T f, g>` and `<f, T^* g>` in the unsigned mass inner product, where
/// `T^* = J T_{conj lambda} J` with `J` flipping the sign of the second medium.
pub fn adjoint_defect(pencil: &TransmissionPencil, lambda: C64, f: &[C64], g: &[C64]) -> Result<f64, AnalysisError> {
    let nv = pencil.n_vertices();
    if f.len() != 2 * nv || g.len() != 2 * nv {
        return Err(AnalysisError::Invalid(format!("fields must have {} entries", 2 * nv)));
    }
    let op = UngluedResolvent::new(pencil, lambda)?;
    let conj_op = UngluedResolvent::new(pencil, lambda.conj())?;
    let inner = |a: &[C64], b: &[C64]| {
        let wb1 = pencil.mass1.mul_complex(&b[..nv]);
        let wb2 = pencil.mass2.mul_complex(&b[nv..]);
        a[..nv].iter().zip(&wb1).chain(a[nv..].iter().zip(&wb2)).map(|(x, y)| x.conj() * y).sum::<C64>()
    };
    let flip = |x: &[C64]| -> Vec<C64> { x[..nv].iter().copied().chain(x[nv..].iter().map(|v| -v)).collect() };
    let lhs = inner(&op.apply(f)?, g);
    let adjoint_g = flip(&conj_op.apply(&flip(g))?);
    let rhs = inner(f, &adjoint_g);
    let direct = inner(f, &op.apply_adjoint(g)?);
    let scale = lhs.norm().max(f64::MIN_POSITIVE);
    Ok(((lhs - rhs).norm() / scale).max((lhs - direct).norm() / scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_distance_examples() {
        assert!((ray_distance(PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert!((ray_distance(3.0 * PI / 4.0) - PI / 4.0).abs() < 1e-15);
        assert!(ray_distance(PI) < 1e-15);
        assert!((ray_distance(-PI / 8.0) - PI / 8.0).abs() < 1e-15);
    }
}
