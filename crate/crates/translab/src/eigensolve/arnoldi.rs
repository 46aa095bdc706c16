//! Thick-restarted Arnoldi for complex operators.
//!
//! At each restart the wanted Ritz vectors are orthonormalized; their span is an
//! approximate invariant subspace of the projected matrix, so the Krylov relation carries
//! over to the compressed basis.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dot, lu_factor, norm2, ComplexLu, LinalgError, SparseSym, C64};

use super::EigenError;

pub trait KrylovOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>, LinalgError>;
}

/// `(K - sigma M)^{-1} M`.
pub struct ShiftInvert<'a> {
    pub lu: &'a ComplexLu,
    pub m: &'a SparseSym,
}

impl KrylovOperator for ShiftInvert<'_> {
    fn dim(&self) -> usize {
        self.m.dim()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>, LinalgError> {
        self.lu.solve_raw(&self.m.mul_complex(x))
    }
}

/// Orthonormal basis `V` (columns `0..=k`) and the `(k+1) x k` projected matrix `H`
/// with `Op V_k = V_{k+1} H`.
#[derive(Debug, Clone)]
pub struct ArnoldiState {
    pub basis: Vec<Vec<C64>>,
    pub h: DMatrix<C64>,
    pub restarts: usize,
}

impl ArnoldiState {
    /// `||Op V_k - V_{k+1} H|| / ||H||` in the Frobenius norm.
    pub fn relation_residual<O: KrylovOperator>(&self, op: &O) -> Result<f64, LinalgError> {
        let k = self.h.ncols();
        let mut num = 0.0;
        for j in 0..k {
            let mut w = op.apply(&self.basis[j])?;
            for i in 0..=k {
                let h = self.h[(i, j)];
                for (wi, vi) in w.iter_mut().zip(&self.basis[i]) {
                    *wi -= h * vi;
                }
            }
            num += w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        Ok(num.sqrt() / self.h.norm().max(f64::MIN_POSITIVE))
    }

    /// Largest `|<v_i, v_j> - delta_ij|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.basis.len() {
            for j in 0..=i {
                let g = dot(&self.basis[i], &self.basis[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    pub nev: usize,
    pub subspace: usize,
    /// Ritz residual estimate relative to `|theta|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { nev: 40, subspace: 100, tol: 1e-11, max_restarts: 80, seed: 7 }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub theta: C64,
    pub vector: Vec<C64>,
    pub estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct KrylovResult {
    /// Wanted Ritz pairs, largest `|theta|` first.
    pub pairs: Vec<RitzPair>,
    pub state: ArnoldiState,
    pub all_converged: bool,
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let s = 1.0 / norm2(&v);
    v.iter_mut().for_each(|z| *z *= s);
    v
}

/// Two passes of classical Gram-Schmidt; returns the projection coefficients.
fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) -> Vec<C64> {
    let mut coeffs = vec![C64::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        for (c, v) in coeffs.iter_mut().zip(basis) {
            let h = dot(v, w);
            *c += h;
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= h * vi;
            }
        }
    }
    coeffs
}

/// Eigenvalues of a small dense matrix, largest modulus first, with unit eigenvectors as columns.
pub(crate) fn ritz_decomposition(h: &DMatrix<C64>) -> Result<(Vec<C64>, DMatrix<C64>), EigenError> {
    let n = h.nrows();
    let dense = faer::Mat::<C64>::from_fn(n, n, |i, j| h[(i, j)]);
    let evd = dense.eigen().map_err(|e| EigenError::Invalid(format!("dense eigensolver failed: {e:?}")))?;
    let (values, vectors) = (evd.S(), evd.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].norm().total_cmp(&values[a].norm()));
    let thetas = order.iter().map(|&i| values[i]).collect();
    let mut y = DMatrix::<C64>::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    for mut col in y.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= C64::new(nrm, 0.0);
        }
    }
    Ok((thetas, y))
}

/// Restarted Arnoldi iteration for the `nev` largest-modulus eigenvalues of `op`.
pub fn restarted_arnoldi<O: KrylovOperator>(op: &O, options: &KrylovOptions) -> Result<KrylovResult, EigenError> {
    let n = op.dim();
    if n == 0 {
        return Err(EigenError::Invalid("empty operator".into()));
    }
    let m = options.subspace.min(n).max(1);
    let nev = options.nev.min(m).max(1);
    let keep_target = if m > nev { (nev + (m - nev) / 2).min(m - 1).max(nev) } else { nev };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let mut basis: Vec<Vec<C64>> = vec![random_unit(n, &mut rng)];
    let mut h = DMatrix::<C64>::zeros(m + 1, m);
    let mut k = 0usize;
    let mut restarts = 0usize;

    loop {
        for j in k..m {
            let mut w = op.apply(&basis[j])?;
            let before = norm2(&w);
            let coeffs = orthogonalize(&mut w, &basis);
            for (i, c) in coeffs.iter().enumerate() {
                h[(i, j)] = *c;
            }
            let beta = norm2(&w);
            if beta <= 1e-13 * before.max(f64::MIN_POSITIVE) || basis.len() == n {
                h[(j + 1, j)] = C64::new(0.0, 0.0);
                if basis.len() < n {
                    let mut fresh = random_unit(n, &mut rng);
                    orthogonalize(&mut fresh, &basis);
                    let s = 1.0 / norm2(&fresh);
                    fresh.iter_mut().for_each(|z| *z *= s);
                    basis.push(fresh);
                } else {
                    basis.push(vec![C64::new(0.0, 0.0); n]);
                }
            } else {
                h[(j + 1, j)] = C64::new(beta, 0.0);
                w.iter_mut().for_each(|z| *z /= beta);
                basis.push(w);
            }
        }

        let square = h.rows(0, m).into_owned();
        let residual_row: Vec<C64> = (0..m).map(|c| h[(m, c)]).collect();
        let (thetas, y) = ritz_decomposition(&square)?;

        let mut pairs = Vec::with_capacity(nev);
        for (i, &theta) in thetas.iter().enumerate().take(nev) {
            let s: Vec<C64> = y.column(i).iter().copied().collect();
            let estimate = residual_row.iter().zip(&s).map(|(b, x)| b * x).sum::<C64>().norm();
            let converged = estimate <= options.tol * theta.norm();
            pairs.push((theta, s, estimate, converged));
        }
        let all_converged = pairs.iter().all(|p| p.3);

        if all_converged || restarts >= options.max_restarts {
            let pairs = pairs
                .into_iter()
                .map(|(theta, s, estimate, converged)| {
                    let mut vector = vec![C64::new(0.0, 0.0); n];
                    for (coef, v) in s.iter().zip(&basis) {
                        for (x, vi) in vector.iter_mut().zip(v) {
                            *x += coef * vi;
                        }
                    }
                    let nrm = norm2(&vector);
                    vector.iter_mut().for_each(|z| *z /= nrm);
                    RitzPair { theta, vector, estimate, converged }
                })
                .collect();
            let state = ArnoldiState { basis, h, restarts };
            return Ok(KrylovResult { pairs, state, all_converged });
        }

        let keep = keep_target;
        let q = y.columns(0, keep).into_owned().qr().q();
        let mut new_basis = Vec::with_capacity(m + 1);
        for c in 0..keep {
            let mut v = vec![C64::new(0.0, 0.0); n];
            for (r, b) in basis.iter().take(m).enumerate() {
                let coef = q[(r, c)];
                for (x, bi) in v.iter_mut().zip(b) {
                    *x += coef * bi;
                }
            }
            new_basis.push(v);
        }
        new_basis.push(basis[m].clone());
        let projected = q.adjoint() * &square * &q;
        let mut new_h = DMatrix::<C64>::zeros(m + 1, m);
        new_h.view_mut((0, 0), (keep, keep)).copy_from(&projected);
        for c in 0..keep {
            new_h[(keep, c)] = (0..m).map(|r| residual_row[r] * q[(r, c)]).sum();
        }
        basis = new_basis;
        h = new_h;
        k = keep;
        restarts += 1;
    }
}

/// Eigenvalue estimate `lambda = sigma + 1/theta` with its true relative residual
/// `||K x - lambda M x|| / ||M x||`.
pub fn pencil_residual(k: &SparseSym, m: &SparseSym, lambda: C64, x: &[C64]) -> f64 {
    let kx = k.mul_complex(x);
    let mx = m.mul_complex(x);
    let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
    r / norm2(&mx).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
pub struct ShiftInvertPair {
    pub lambda: C64,
    pub residual: f64,
    pub vector: Vec<C64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ShiftInvertResult {
    pub shift: C64,
    /// Ordered by distance to the shift.
    pub pairs: Vec<ShiftInvertPair>,
    pub all_converged: bool,
    pub restarts: usize,
}

/// `nev` eigenvalues of `K x = lambda M x` closest to `shift`, each with its true residual.
/// Pairs failing `tol` are returned with `converged = false`.
pub fn shift_invert_arnoldi(
    k: &SparseSym,
    m: &SparseSym,
    shift: C64,
    options: &KrylovOptions,
    residual_tol: f64,
) -> Result<ShiftInvertResult, EigenError> {
    let lu = lu_factor(k, m, shift)?;
    shift_invert_with(&lu, k, m, options, residual_tol)
}

pub(crate) fn shift_invert_with(
    lu: &ComplexLu,
    k: &SparseSym,
    m: &SparseSym,
    options: &KrylovOptions,
    residual_tol: f64,
) -> Result<ShiftInvertResult, EigenError> {
    let shift = lu.shift();
    let op = ShiftInvert { lu, m };
    let result = restarted_arnoldi(&op, options)?;
    let mut pairs: Vec<ShiftInvertPair> = result
        .pairs
        .into_iter()
        .filter(|p| p.theta.norm() > 0.0)
        .map(|p| {
            let lambda = shift + 1.0 / p.theta;
            let residual = pencil_residual(k, m, lambda, &p.vector);
            ShiftInvertPair { lambda, residual, converged: p.converged && residual <= residual_tol, vector: p.vector }
        })
        .collect();
    pairs.sort_by(|a, b| (a.lambda - shift).norm().total_cmp(&(b.lambda - shift).norm()));
    let all_converged = pairs.iter().all(|p| p.converged);
    Ok(ShiftInvertResult { shift, pairs, all_converged, restarts: result.state.restarts })
}
