use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::TransmissionPencil;
use crate::linalg::C64;

use super::AnalysisError;

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessReport {
    pub counts: Vec<usize>,
    /// `residuals[i][j]`: relative residual of function `j` projected on the first `counts[i]` modes.
    pub residuals: Vec<Vec<f64>>,
    pub monotone: bool,
}

/// Mass-weighted residuals of random nodal field pairs after orthogonal projection onto the span of
/// the first `m` eigenvector pairs, for each `m` in `counts`. Eigenvectors live on the glued space.
pub fn projection_residuals(
    pencil: &TransmissionPencil,
    eigenvectors: &[Vec<C64>],
    counts: &[usize],
    functions: usize,
    seed: u64,
) -> Result<CompletenessReport, AnalysisError> {
    let nv = pencil.n_vertices();
    if let Some(&m) = counts.iter().find(|&&m| m > eigenvectors.len()) {
        return Err(AnalysisError::TooFewEigenvalues { found: eigenvectors.len(), needed: m });
    }
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(AnalysisError::Invalid("counts must be non-decreasing".into()));
    }
    let inner = |a: &[C64], b: &[C64]| -> C64 {
        let w1 = pencil.mass1.mul_complex(&b[..nv]);
        let w2 = pencil.mass2.mul_complex(&b[nv..]);
        a[..nv].iter().zip(&w1).chain(a[nv..].iter().zip(&w2)).map(|(x, y)| x.conj() * y).sum()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<C64>> = (0..functions).map(|_| (0..2 * nv).map(|_| C64::new(rng.random::<f64>() - 0.5, 0.0)).collect()).collect();
    let norms: Vec<f64> = samples.iter().map(|f| inner(f, f).re.sqrt()).collect();
    let mut remainders = samples.clone();

    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut residuals = Vec::with_capacity(counts.len());
    let mut used = 0;
    for &m in counts {
        for x in &eigenvectors[used..m] {
            if x.len() != pencil.n_dofs() {
                return Err(AnalysisError::Invalid(format!("eigenvector has {} entries, expected {}", x.len(), pencil.n_dofs())));
            }
            let (mut v, v2) = pencil.dof_map.scatter(x);
            v.extend(v2);
            let original = inner(&v, &v).re.max(0.0).sqrt();
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &v);
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
                }
            }
            let norm = inner(&v, &v).re.sqrt();
            if norm > 1e-10 * original {
                v.iter_mut().for_each(|z| *z /= norm);
                for r in remainders.iter_mut() {
                    let c = inner(&v, r);
                    r.iter_mut().zip(&v).for_each(|(ri, vi)| *ri -= c * vi);
                }
                basis.push(v);
            }
        }
        used = m;
        residuals.push(remainders.iter().zip(&norms).map(|(r, n)| inner(r, r).re.max(0.0).sqrt() / n).collect::<Vec<f64>>());
    }
    let monotone = residuals.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| *b <= a * (1.0 + 1e-12)));
    Ok(CompletenessReport { counts: counts.to_vec(), residuals, monotone })
}
