//! Dense reference eigensolvers for small pencils.

use nalgebra::DMatrix;

use crate::linalg::{SparseSym, C64};

use super::EigenError;

/// `(K - shift M)^{-1} M` as a dense matrix.
pub fn dense_shift_inverse(k: &DMatrix<f64>, m: &DMatrix<f64>, shift: C64) -> Result<DMatrix<C64>, EigenError> {
    let a = k.map(|v| C64::new(v, 0.0)) - m.map(|v| C64::new(v, 0.0)) * shift;
    let lu = a.lu();
    let rhs = m.map(|v| C64::new(v, 0.0));
    lu.solve(&rhs).ok_or(EigenError::DenseSingular { shift })
}

/// Eigenvalues of a dense complex matrix.
pub fn dense_eigenvalues(a: &DMatrix<C64>) -> Result<Vec<C64>, EigenError> {
    let n = a.nrows();
    faer::Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)])
        .eigenvalues()
        .map_err(|e| EigenError::Invalid(format!("dense eigensolver failed: {e:?}")))
}

#[derive(Debug, Clone)]
pub struct DensePencilSpectrum {
    /// Finite eigenvalues, sorted by modulus.
    pub finite: Vec<C64>,
    /// Count of eigenvalues at infinity (singular `M`).
    pub infinite: usize,
}

/// All eigenvalues of `K x = lambda M x`, from the dense spectrum of `(K - sigma M)^{-1} M` mapped
/// back through `lambda = sigma + 1/nu`. Eigenvalues `nu` at rounding level count as infinite.
pub fn dense_pencil_eigenvalues(k: &SparseSym, m: &SparseSym) -> Result<DensePencilSpectrum, EigenError> {
    if k.dim() != m.dim() {
        return Err(EigenError::Invalid("pencil matrices differ in size".into()));
    }
    let (kd, md) = (k.to_dense(), m.to_dense());
    let ratio = k.norm_one() / m.norm_one().max(f64::MIN_POSITIVE);
    let mut last = None;
    for attempt in 0..4 {
        let sigma = C64::new(0.37 + 0.11 * attempt as f64, 0.73) * ratio.max(1.0).sqrt();
        let t = match dense_shift_inverse(&kd, &md, sigma) {
            Ok(t) => t,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut finite = Vec::with_capacity(k.dim());
        let mut infinite = 0;
        for nu in dense_eigenvalues(&t)? {
            if nu.norm() <= 1e-13 * scale {
                infinite += 1;
            } else {
                finite.push(sigma + 1.0 / nu);
            }
        }
        finite.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
        return Ok(DensePencilSpectrum { finite, infinite });
    }
    Err(last.unwrap_or(EigenError::Invalid("no usable shift".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencil() {
        let k = SparseSym::from_triplets(3, &[(0, 0, 2.0), (1, 1, -3.0), (2, 2, 5.0)]);
        let m = SparseSym::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 0.0)]);
        let s = dense_pencil_eigenvalues(&k, &m).unwrap();
        assert_eq!(s.infinite, 1);
        assert!((s.finite[0] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((s.finite[1] - C64::new(-3.0, 0.0)).norm() < 1e-12);
    }
}
