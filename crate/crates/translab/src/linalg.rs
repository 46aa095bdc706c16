//! Sparse storage, complex sparse LU and small dense helpers.

use std::io::Write;

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Relative solution growth `|A| |x| / |b|` above which a system is treated as singular.
pub const DEFAULT_GROWTH_LIMIT: f64 = 1e13;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is structurally singular at column {index}")]
    StructurallySingular { index: usize },
    #[error("shift {shift} is a (near-)eigenvalue of the pencil: solution growth {growth:e}")]
    NearSingular { shift: C64, growth: f64 },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

/// Compressed sparse rows with real entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds the matrix from coordinate entries, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut raw = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            raw[fill[i]] = (j, v);
            fill[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..n {
            let row = &mut raw[counts[i]..counts[i + 1]];
            row.sort_by_key(|e| e.0);
            for &(j, v) in row.iter() {
                if cols.len() > row_ptr[i] && *cols.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[row.clone()].binary_search(&j) {
            Ok(k) => self.values[row.start + k],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.values[k]))
        })
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.values[k] * x[self.cols[k]]).sum())
            .collect()
    }

    pub fn mul_complex(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.mul_complex_into(x, &mut y);
        y
    }

    pub fn mul_complex_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.values[k];
            }
            *yi = acc;
        }
    }

    /// `x^H A x` for Hermitian evaluation of a real symmetric matrix.
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        let ax = self.mul_complex(x);
        x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = self.iter().fold(0.0f64, |m, (i, j, v)| m.max((v - self.get(j, i)).abs()));
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (_, j, v) in self.iter() {
            sums[j] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Coordinate dump, one `i j value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "# {} {} {}", self.n, self.n, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(sink, "{i} {j} {v:?}")?;
        }
        Ok(())
    }
}

/// Complex matrix `alpha K + beta M` in compressed rows, kept for residual checks.
#[derive(Debug, Clone)]
struct ComplexCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl ComplexCsr {
    fn combine(k: &SparseSym, alpha: C64, m: &SparseSym, beta: C64) -> Self {
        let mut triplets: Vec<(usize, usize, f64, bool)> = Vec::with_capacity(k.nnz() + m.nnz());
        triplets.extend(k.iter().map(|(i, j, v)| (i, j, v, true)));
        triplets.extend(m.iter().map(|(i, j, v)| (i, j, v, false)));
        triplets.sort_by_key(|t| (t.0, t.1));
        let n = k.dim();
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v, from_k) in triplets {
            let scaled = if from_k { alpha * v } else { beta * v };
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += scaled;
            } else {
                cols.push(j);
                values.push(scaled);
                row_ptr[i + 1] = cols.len();
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i + 1].max(row_ptr[i]);
        }
        Self { n, row_ptr, cols, values }
    }

    fn mul(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.values[k] * x[self.cols[k]]).sum())
            .collect()
    }

    fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (k, v) in self.values.iter().enumerate() {
            sums[self.cols[k]] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FillStats {
    pub dimension: usize,
    pub matrix_nnz: usize,
}

/// Sparse LU factorization of `K - shift M` with partial pivoting.
pub struct ComplexLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
    matrix: ComplexCsr,
    norm_one: f64,
    shift: C64,
    growth_limit: f64,
}

impl std::fmt::Debug for ComplexLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexLu").field("shift", &self.shift).field("n", &self.matrix.n).finish()
    }
}

fn norm1(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Factors `K - shift M`.
pub fn lu_factor(k: &SparseSym, m: &SparseSym, shift: C64) -> Result<ComplexLu, LinalgError> {
    ComplexLu::new(k, m, shift, DEFAULT_GROWTH_LIMIT)
}

/// Solves `(K - shift M) x = b` with one step of iterative refinement.
pub fn lu_solve(lu: &ComplexLu, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
    lu.solve(b)
}

impl ComplexLu {
    pub fn new(k: &SparseSym, m: &SparseSym, shift: C64, growth_limit: f64) -> Result<Self, LinalgError> {
        if k.dim() != m.dim() {
            return Err(LinalgError::Dimension { expected: k.dim(), got: m.dim() });
        }
        let matrix = ComplexCsr::combine(k, C64::new(1.0, 0.0), m, -shift);
        let n = matrix.n;
        let mut triplets = Vec::with_capacity(matrix.values.len());
        for i in 0..n {
            for idx in matrix.row_ptr[i]..matrix.row_ptr[i + 1] {
                triplets.push(Triplet::new(i, matrix.cols[idx], matrix.values[idx]));
            }
        }
        let sparse = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
        let lu = sparse.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => {
                LinalgError::StructurallySingular { index }
            }
            other => LinalgError::Factorization(format!("{other:?}")),
        })?;
        let norm_one = matrix.norm_one();
        let factor = Self { lu, matrix, norm_one, shift, growth_limit };
        factor.probe()?;
        Ok(factor)
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    pub fn shift(&self) -> C64 {
        self.shift
    }

    pub fn fill_stats(&self) -> FillStats {
        FillStats { dimension: self.matrix.n, matrix_nnz: self.matrix.values.len() }
    }

    /// One solve against a fixed pseudo-random right side, to reject numerically
    /// singular factorizations up front.
    fn probe(&self) -> Result<(), LinalgError> {
        let b: Vec<C64> = (0..self.dim())
            .map(|i| {
                let t = (i as f64 + 1.0) * 0.618_033_988_749_895;
                C64::new((t * 7.0).sin(), (t * 3.0).cos())
            })
            .collect();
        self.solve_raw(&b).map(|_| ())
    }

    fn triangular_solve(&self, b: &[C64]) -> Vec<C64> {
        let mut rhs = Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    fn check_growth(&self, b: &[C64], x: &[C64]) -> Result<(), LinalgError> {
        let bn = norm1(b);
        let xn = norm1(x);
        if !xn.is_finite() {
            return Err(LinalgError::NearSingular { shift: self.shift, growth: f64::INFINITY });
        }
        if bn > 0.0 {
            let growth = self.norm_one * xn / bn;
            if growth > self.growth_limit {
                return Err(LinalgError::NearSingular { shift: self.shift, growth });
            }
        }
        Ok(())
    }

    /// Plain forward/backward substitution with the growth guard.
    pub fn solve_raw(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if b.len() != self.dim() {
            return Err(LinalgError::Dimension { expected: self.dim(), got: b.len() });
        }
        let x = self.triangular_solve(b);
        self.check_growth(b, &x)?;
        Ok(x)
    }

    /// Solve followed by one refinement step.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        let mut x = self.solve_raw(b)?;
        let ax = self.matrix.mul(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = self.triangular_solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        self.check_growth(b, &x)?;
        Ok(x)
    }

    /// Solves `(K - conj(shift) M) x = b` with the same factors; valid because K and M are real.
    pub fn solve_conjugate_shift(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        let conj_b: Vec<C64> = b.iter().map(|z| z.conj()).collect();
        Ok(self.solve(&conj_b)?.into_iter().map(|z| z.conj()).collect())
    }

    /// `||(K - shift M) x - b|| / ||b||` in the 2-norm.
    pub fn relative_residual(&self, x: &[C64], b: &[C64]) -> f64 {
        let ax = self.matrix.mul(x);
        let r: f64 = ax.iter().zip(b).map(|(a, bi)| (a - bi).norm_sqr()).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if bn > 0.0 {
            r / bn
        } else {
            r
        }
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseSym::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0), (0, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.symmetry_defect(), 0.0);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![7.0, 4.0]);
    }

    #[test]
    fn scalar_system() {
        let k = SparseSym::from_triplets(1, &[(0, 0, 3.0)]);
        let m = SparseSym::from_triplets(1, &[(0, 0, 2.0)]);
        let sigma = C64::new(0.5, 1.0);
        let lu = lu_factor(&k, &m, sigma).unwrap();
        let b = [C64::new(1.0, -2.0)];
        let x = lu_solve(&lu, &b).unwrap();
        let expected = b[0] / (3.0 - sigma * 2.0);
        assert!((x[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn exact_eigenvalue_is_reported() {
        let k = SparseSym::from_triplets(2, &[(0, 0, 2.0), (1, 1, 5.0)]);
        let m = SparseSym::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]);
        let err = lu_factor(&k, &m, C64::new(2.0, 0.0)).unwrap_err();
        assert!(matches!(err, LinalgError::NearSingular { .. } | LinalgError::StructurallySingular { .. }));
    }

    #[test]
    fn conjugate_shift_solve() {
        let k = SparseSym::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -3.0)]);
        let m = SparseSym::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        let sigma = C64::new(0.3, 2.0);
        let lu = lu_factor(&k, &m, sigma).unwrap();
        let other = lu_factor(&k, &m, sigma.conj()).unwrap();
        let b = [C64::new(1.0, 0.5), C64::new(-0.25, 2.0)];
        let x = lu.solve_conjugate_shift(&b).unwrap();
        let y = other.solve(&b).unwrap();
        assert!((x[0] - y[0]).norm() + (x[1] - y[1]).norm() < 1e-14);
    }
}
