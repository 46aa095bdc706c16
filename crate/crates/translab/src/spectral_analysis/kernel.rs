use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::geometry::Point2;
use crate::linalg::C64;
use crate::media::{MediumPair, SymMat2};

use super::AnalysisError;

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    /// Radius of the integration disk in the rescaled variable `xi / sqrt(t)`.
    pub radius: f64,
    pub angles: usize,
    /// Gauss-Legendre nodes per radial panel.
    pub nodes: usize,
    pub lambda0: C64,
    pub k: usize,
    pub min_t: f64,
    pub tail_limit: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { radius: 100.0, angles: 64, nodes: 24, lambda0: C64::new(0.0, 10.0), k: 1, min_t: 100.0, tail_limit: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelMedium {
    pub full: C64,
    pub leading: C64,
    pub ratio: C64,
    /// Estimated truncated tail relative to the computed integral.
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelDiagonal {
    pub x0: Point2,
    pub t: f64,
    pub media: [KernelMedium; 2],
    pub full: C64,
    pub leading: C64,
    pub ratio: C64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        let m = i.max(j);
        if i.abs_diff(j) == 1 {
            m as f64 / ((4 * m * m - 1) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `int_0^inf dw / (w^n - i)` in closed form.
fn radial_integral_exact(n: usize) -> C64 {
    let nf = n as f64;
    (PI / nf) / (PI / nf).sin() * C64::from_polar(1.0, 0.5 * PI * (1.0 - 1.0 / nf))
}

/// `int_0^upper dw / ((w + c)^n - i)` on geometric panels.
fn radial_integral(c: C64, n: usize, upper: f64, rule: &(Vec<f64>, Vec<f64>)) -> C64 {
    let mut edges = vec![0.0, 0.25];
    while *edges.last().unwrap() < upper {
        let next = (edges.last().unwrap() * 1.5).min(upper);
        edges.push(next);
    }
    let mut total = C64::new(0.0, 0.0);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in rule.0.iter().zip(&rule.1) {
            let s = mid + half * x;
            total += half * w / ((s + c).powi(n as i32) - C64::new(0.0, 1.0));
        }
    }
    total
}

fn medium_diagonal(a: &SymMat2, sigma: f64, t: f64, options: &KernelOptions, rule: &(Vec<f64>, Vec<f64>)) -> Result<KernelMedium, AnalysisError> {
    if !(sigma > 0.0) {
        return Err(AnalysisError::NonPositiveDensity(sigma));
    }
    let n = 2 * (options.k + 1);
    let c = options.lambda0 / t;
    let exact = radial_integral_exact(n);
    let h = 2.0 * PI / options.angles as f64;
    let (mut full, mut leading) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let mut tail_ratio: f64 = 0.0;
    for i in 0..options.angles {
        let phi = i as f64 * h;
        let q = a.form([phi.cos(), phi.sin()], [phi.cos(), phi.sin()]) / sigma;
        if !(q > 0.0) {
            return Err(AnalysisError::NotPositiveDefinite);
        }
        let upper = options.radius * options.radius * q;
        let head = radial_integral(c, n, upper, rule);
        tail_ratio = tail_ratio.max(upper.powi(1 - n as i32) / ((n - 1) as f64 * head.norm()));
        let weight = 0.5 * h / q;
        full += weight * head;
        leading += weight * exact;
    }
    if tail_ratio > options.tail_limit {
        return Err(AnalysisError::TailTooLarge { ratio: tail_ratio, limit: options.tail_limit });
    }
    let scale = t.powi(1 - n as i32) / (4.0 * PI * PI);
    Ok(KernelMedium { full: full * scale, leading: leading * scale, ratio: full / leading, tail_ratio })
}

/// Diagonal of the frozen-coefficient kernel of the `(k+1)`-fold resolvent product at `x0`,
/// integrated numerically over `|xi| <= R sqrt(t)` next to its leading term.
pub fn kernel_diag_asymptotic(x0: Point2, pair: &MediumPair, t: f64, options: &KernelOptions) -> Result<KernelDiagonal, AnalysisError> {
    if !(t >= options.min_t) {
        return Err(AnalysisError::Invalid(format!("t = {t} is below the asymptotic threshold {}", options.min_t)));
    }
    if options.angles < 4 || options.nodes < 2 || !(options.radius > 0.0) {
        return Err(AnalysisError::Invalid("quadrature needs >= 4 angles, >= 2 nodes and a positive radius".into()));
    }
    let rule = gauss_legendre(options.nodes);
    let (a1, s1) = pair.medium(1, x0);
    let (a2, s2) = pair.medium(2, x0);
    let m1 = medium_diagonal(&a1, s1, t, options, &rule)?;
    let m2 = medium_diagonal(&a2, s2, t, options, &rule)?;
    let full = m1.full + m2.full;
    let leading = m1.leading + m2.leading;
    Ok(KernelDiagonal { x0, t, media: [m1, m2], full, leading, ratio: full / leading })
}
