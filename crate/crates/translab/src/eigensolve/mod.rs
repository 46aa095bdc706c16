//! Eigenvalues of the pencil `K x = lambda M x` and the counting function.

mod arnoldi;
mod dense;
mod window;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{LinalgError, C64};

pub use arnoldi::{
    restarted_arnoldi, pencil_residual, shift_invert_arnoldi, ArnoldiState, KrylovOperator, KrylovOptions, KrylovResult,
    RitzPair, ShiftInvert, ShiftInvertPair, ShiftInvertResult,
};
pub use dense::{dense_eigenvalues, dense_pencil_eigenvalues, dense_shift_inverse, DensePencilSpectrum};
pub use window::{spectrum_window, ShiftStrategy, WindowOptions};

pub use crate::linalg::{lu_factor, lu_solve, ComplexLu};

#[derive(Debug, Error)]
pub enum EigenError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("pencil appears singular: K - sigma M is singular at every tried shift near {shift}")]
    SingularPencil { shift: C64 },
    #[error("spectral window not covered: {uncovered} sample points outside all trusted discs, e.g. {example}")]
    Coverage { uncovered: usize, example: C64 },
    #[error("t = {t} lies beyond the computed window t_max = {t_max}")]
    BeyondWindow { t: f64, t_max: f64 },
    #[error("dense pencil solve is singular at shift {shift}")]
    DenseSingular { shift: C64 },
    #[error("invalid eigensolver input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub lambda: C64,
    pub multiplicity: usize,
    pub residual: f64,
    pub shift: C64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShiftRecord {
    pub shift: C64,
    /// Radius of the disc around the shift within which all eigenvalues were resolved.
    pub trusted_radius: f64,
    pub converged: usize,
    pub restarts: usize,
}

/// Eigenvalues with `|lambda| <= t_max`, ordered by modulus.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub entries: Vec<SpectrumEntry>,
    pub t_max: f64,
    /// Whether `lambda = 0` was detected; it is kept out of `entries`.
    pub zero_eigenvalue: bool,
    pub shifts: Vec<ShiftRecord>,
    pub warnings: Vec<String>,
}

impl Spectrum {
    /// Builds a spectrum from explicit entries, sorting them canonically.
    pub fn from_entries(mut entries: Vec<SpectrumEntry>, t_max: f64) -> Self {
        sort_entries(&mut entries);
        Self { entries, t_max, zero_eigenvalue: false, shifts: Vec::new(), warnings: Vec::new() }
    }

    /// Total count with multiplicity.
    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Moduli repeated according to multiplicity.
    pub fn moduli(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|e| std::iter::repeat_n(e.lambda.norm(), e.multiplicity)).collect()
    }

    /// Largest relative distance from an eigenvalue's conjugate to the nearest computed eigenvalue.
    pub fn conjugation_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let target = e.lambda.conj();
                self.entries
                    .iter()
                    .map(|f| (f.lambda - target).norm())
                    .fold(f64::INFINITY, f64::min)
                    / e.lambda.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn sort_entries(entries: &mut [SpectrumEntry]) {
    entries.sort_by(|a, b| {
        a.lambda.norm().total_cmp(&b.lambda.norm()).then(a.lambda.im.total_cmp(&b.lambda.im))
    });
}

/// `N(t) = #{k : |lambda_k| <= t}` with multiplicity.
pub fn counting_function(spectrum: &Spectrum, t: f64) -> Result<usize, EigenError> {
    if t > spectrum.t_max * (1.0 + 1e-12) {
        return Err(EigenError::BeyondWindow { t, t_max: spectrum.t_max });
    }
    Ok(spectrum.entries.iter().filter(|e| e.lambda.norm() <= t).map(|e| e.multiplicity).sum())
}

/// CSV with columns `re,im,multiplicity,residual,shift_re,shift_im`.
pub fn write_spectrum_csv<W: Write>(spectrum: &Spectrum, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "re,im,multiplicity,residual,shift_re,shift_im")?;
    for e in &spectrum.entries {
        writeln!(
            sink,
            "{:?},{:?},{},{:e},{:?},{:?}",
            e.lambda.re, e.lambda.im, e.multiplicity, e.residual, e.shift.re, e.shift.im
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(re: f64, multiplicity: usize) -> SpectrumEntry {
        SpectrumEntry { lambda: C64::new(re, 0.0), multiplicity, residual: 0.0, shift: C64::new(0.0, 0.0) }
    }

    #[test]
    fn counting_examples() {
        let s = Spectrum::from_entries(vec![entry(-1.0, 1), entry(-2.0, 2), entry(-5.0, 1)], 10.0);
        assert_eq!(counting_function(&s, 3.0).unwrap(), 3);
        assert_eq!(counting_function(&s, 0.5).unwrap(), 0);
        assert_eq!(counting_function(&s, 10.0).unwrap(), 4);
        assert!(counting_function(&s, 11.0).is_err());
    }
}
