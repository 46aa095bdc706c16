//! Separation of variables on the unit disk for `A_1 = A_2 = I`, `Sigma_1 = 1`, `Sigma_2 = n`.

use serde::Serialize;

use super::bessel::{bessel_j_orders, value_and_derivative};
use super::OracleError;

fn check_contrast(n: f64) -> Result<(), OracleError> {
    if !(n > 0.0) || (n - 1.0).abs() < 1e-12 {
        return Err(OracleError::Invalid(format!("contrast n = {n} must be positive and different from 1")));
    }
    Ok(())
}

/// `D_m(k)` together with the magnitude of its two products, for cancellation checks.
fn determinant_parts(m: u32, k: f64, n: f64) -> Result<(f64, f64), OracleError> {
    let root_n = n.sqrt();
    let inner = bessel_j_orders(m + 1, k)?;
    let outer = bessel_j_orders(m + 1, root_n * k)?;
    let (j, jp) = value_and_derivative(&inner, m);
    let (js, jsp) = value_and_derivative(&outer, m);
    let first = j * root_n * jsp;
    let second = jp * js;
    Ok((first - second, first.abs() + second.abs()))
}

/// `D_m(k) = J_m(k) sqrt(n) J_m'(sqrt(n) k) - J_m'(k) J_m(sqrt(n) k)`.
pub fn disk_determinant(m: u32, k: f64, n: f64) -> Result<f64, OracleError> {
    check_contrast(n)?;
    if !(k > 0.0) {
        return Err(OracleError::Invalid(format!("wavenumber k = {k} must be positive")));
    }
    Ok(determinant_parts(m, k, n)?.0)
}

/// Roots of `f` on `(lo, hi]` from sign changes on a uniform grid, refined by bisection.
/// Brackets where `f` returns `None` (value lost to rounding) are skipped.
pub fn find_bracketed_roots<F>(f: F, lo: f64, hi: f64, step: f64, tolerance: f64) -> Vec<f64>
where
    F: Fn(f64) -> Option<f64>,
{
    let mut roots = Vec::new();
    let cells = ((hi - lo) / step).ceil() as usize;
    let mut a = lo;
    let mut fa = f(a);
    for c in 1..=cells {
        let b = (lo + c as f64 * step).min(hi);
        let fb = f(b);
        if let (Some(va), Some(vb)) = (fa, fb) {
            if va == 0.0 {
                roots.push(a);
            } else if va * vb < 0.0 {
                let (mut x0, mut x1, mut v0) = (a, b, va);
                while x1 - x0 > tolerance * x1.abs().max(1.0) {
                    let mid = 0.5 * (x0 + x1);
                    match f(mid) {
                        Some(vm) if vm * v0 > 0.0 => {
                            x0 = mid;
                            v0 = vm;
                        }
                        Some(vm) if vm == 0.0 => {
                            x0 = mid;
                            x1 = mid;
                        }
                        _ => x1 = mid,
                    }
                }
                roots.push(0.5 * (x0 + x1));
            }
        }
        a = b;
        fa = fb;
    }
    roots
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiskRoot {
    pub m: u32,
    pub k: f64,
    /// `-k^2`
    pub lambda: f64,
    pub multiplicity: usize,
    pub determinant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiskOracle {
    pub n: f64,
    pub k_max: f64,
    pub mode_cap: u32,
    /// Sorted by `|lambda|`.
    pub roots: Vec<DiskRoot>,
    /// Modes that produced no root in the scanned range.
    pub modes_without_roots: Vec<u32>,
}

impl DiskOracle {
    /// Counting function with multiplicity.
    pub fn count(&self, t: f64) -> usize {
        self.roots.iter().filter(|r| r.lambda.abs() <= t).map(|r| r.multiplicity).sum()
    }

    pub fn smallest(&self) -> Option<&DiskRoot> {
        self.roots.first()
    }
}

/// Real transmission eigenvalues `lambda = -k^2` with `k <= k_max` for modes `0..=mode_cap`.
pub fn disk_eigenvalues(n: f64, mode_cap: u32, k_max: f64, step: f64) -> Result<DiskOracle, OracleError> {
    check_contrast(n)?;
    if !(k_max > 0.0 && step > 0.0) {
        return Err(OracleError::Invalid("k_max and step must be positive".into()));
    }
    let k_min = step.min(0.05);
    let mut roots = Vec::new();
    let mut modes_without_roots = Vec::new();
    for m in 0..=mode_cap {
        let f = |k: f64| {
            let (value, scale) = determinant_parts(m, k, n).ok()?;
            (value.abs() > 1e-12 * scale).then_some(value)
        };
        let found = find_bracketed_roots(f, k_min, k_max, step, 1e-14);
        if found.is_empty() {
            modes_without_roots.push(m);
        }
        for k in found {
            roots.push(DiskRoot {
                m,
                k,
                lambda: -k * k,
                multiplicity: if m == 0 { 1 } else { 2 },
                determinant: determinant_parts(m, k, n)?.0,
            });
        }
    }
    roots.sort_by(|a, b| a.lambda.abs().total_cmp(&b.lambda.abs()));
    Ok(DiskOracle { n, k_max, mode_cap, roots, modes_without_roots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_contrast_rejected() {
        assert!(disk_determinant(0, 1.0, 1.0).is_err());
        assert!(disk_eigenvalues(1.0, 3, 10.0, 0.01).is_err());
    }

    #[test]
    fn multiplicities_follow_mode() {
        let oracle = disk_eigenvalues(4.0, 6, 8.0, 0.01).unwrap();
        for r in &oracle.roots {
            assert_eq!(r.multiplicity, if r.m == 0 { 1 } else { 2 });
            assert!(r.determinant.abs() <= 1e-10);
        }
    }
}
