//! Multi-shift sweep of the disc `|lambda| <= t_max`.
//!
//! Every shift resolves the eigenvalues nearest to it; the distance to the farthest of
//! them bounds a disc in which nothing was missed. Shifts walk down the negative real
//! axis with overlapping discs, then extra shifts are placed at any sample point of the
//! window left outside every disc. Since `K` and `M` are real, each disc also certifies its
//! mirror image in the real axis.

use std::f64::consts::PI;

use crate::assembly::TransmissionPencil;
use crate::linalg::{lu_factor, ComplexLu, LinalgError, C64};

use super::arnoldi::{shift_invert_with, KrylovOptions, ShiftInvertResult};
use super::{sort_entries, EigenError, ShiftRecord, Spectrum, SpectrumEntry};

#[derive(Debug, Clone)]
pub enum ShiftStrategy {
    /// Negative real ladder `-s_i (1 - i eps)`, `s_{i+1} = min(ratio s_i, s_i + (2 - 2 overlap) r_i)`,
    /// followed by adaptive fill of uncovered regions.
    Ladder,
    /// Exactly these shifts; gaps are reported as errors.
    Explicit(Vec<C64>),
}

#[derive(Debug, Clone)]
pub struct WindowOptions {
    pub krylov: KrylovOptions,
    /// Bound on `||K x - lambda M x|| / ||M x||`.
    pub residual_tol: f64,
    /// Relative distance under which Ritz values of one shift form a multiple eigenvalue.
    pub cluster_tol: f64,
    /// Relative distance under which values from different shifts are merged.
    pub dedup_tol: f64,
    pub ladder_ratio: f64,
    /// Imaginary offset of ladder shifts relative to their modulus.
    pub imag_offset: f64,
    pub first_shift: f64,
    /// Required overlap of neighbouring discs as a fraction of the diameter.
    pub overlap: f64,
    pub max_shifts: usize,
    /// Eigenvalues with modulus below this are reported as the zero eigenvalue.
    pub zero_tol: f64,
    pub coverage_rings: usize,
    pub coverage_angles: usize,
    /// Eigenvalues requested per coverage-fill shift.
    pub fill_nev: usize,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            krylov: KrylovOptions::default(),
            residual_tol: 1e-8,
            cluster_tol: 1e-6,
            dedup_tol: 1e-6,
            ladder_ratio: 1.5,
            imag_offset: 1e-3,
            first_shift: 1.0,
            overlap: 0.25,
            max_shifts: 400,
            zero_tol: 1e-6,
            coverage_rings: 32,
            coverage_angles: 64,
            fill_nev: 16,
        }
    }
}

struct Candidate {
    lambda: C64,
    residual: f64,
    shift: C64,
    multiplicity: usize,
}

struct Sweep<'a> {
    pencil: &'a TransmissionPencil,
    options: &'a WindowOptions,
    records: Vec<ShiftRecord>,
    candidates: Vec<Candidate>,
    zero_found: bool,
}

impl Sweep<'_> {
    fn factor(&self, shift: C64) -> Result<ComplexLu, EigenError> {
        let mut last = None;
        for attempt in 0..4 {
            let trial = shift * C64::from_polar(1.0 + 1e-3 * attempt as f64, 1e-3 * attempt as f64);
            match lu_factor(&self.pencil.k, &self.pencil.m, trial) {
                Ok(lu) => return Ok(lu),
                Err(e @ (LinalgError::NearSingular { .. } | LinalgError::StructurallySingular { .. })) => last = Some(e),
                Err(e) => return Err(e.into()),
            }
        }
        match last {
            Some(_) => Err(EigenError::SingularPencil { shift }),
            None => unreachable!("loop runs at least once"),
        }
    }

    /// Runs one shift and returns its trusted radius.
    fn run(&mut self, shift: C64, nev: usize) -> Result<f64, EigenError> {
        let lu = self.factor(shift)?;
        let mut krylov = self.options.krylov;
        if nev < krylov.nev {
            krylov.nev = nev;
            krylov.subspace = krylov.subspace.min((3 * nev).max(nev + 20));
        }
        krylov.seed = krylov.seed.wrapping_add(self.records.len() as u64);
        let result = shift_invert_with(&lu, &self.pencil.k, &self.pencil.m, &krylov, self.options.residual_tol)?;
        let radius = trusted_radius(&result);
        self.absorb(&result);
        self.records.push(ShiftRecord {
            shift: result.shift,
            trusted_radius: radius,
            converged: result.pairs.iter().filter(|p| p.converged).count(),
            restarts: result.restarts,
        });
        Ok(radius)
    }

    fn absorb(&mut self, result: &ShiftInvertResult) {
        let converged: Vec<_> = result.pairs.iter().filter(|p| p.converged).collect();
        let mut used = vec![false; converged.len()];
        for i in 0..converged.len() {
            if used[i] {
                continue;
            }
            let mut best = i;
            let mut multiplicity = 1;
            for j in (i + 1)..converged.len() {
                if !used[j] && close(converged[i].lambda, converged[j].lambda, self.options.cluster_tol) {
                    used[j] = true;
                    multiplicity += 1;
                    if converged[j].residual < converged[best].residual {
                        best = j;
                    }
                }
            }
            let lambda = converged[best].lambda;
            if lambda.norm() <= self.options.zero_tol {
                self.zero_found = true;
                continue;
            }
            self.candidates.push(Candidate { lambda, residual: converged[best].residual, shift: result.shift, multiplicity });
            if lambda.im != 0.0 {
                self.candidates.push(Candidate {
                    lambda: lambda.conj(),
                    residual: converged[best].residual,
                    shift: result.shift.conj(),
                    multiplicity,
                });
            }
        }
    }
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

fn trusted_radius(result: &ShiftInvertResult) -> f64 {
    let mut radius = 0.0;
    for p in &result.pairs {
        let d = (p.lambda - result.shift).norm();
        if !p.converged {
            return 0.9 * d;
        }
        radius = d;
    }
    radius
}

fn uncovered_points(t_max: f64, records: &[ShiftRecord], rings: usize, angles: usize) -> Vec<C64> {
    let mut points = vec![C64::new(0.0, 0.0)];
    for r in 1..=rings {
        let radius = t_max * r as f64 / rings as f64;
        for a in 0..angles {
            points.push(C64::from_polar(radius, PI * (2 * a + 1) as f64 / angles as f64));
        }
    }
    points
        .into_iter()
        .filter(|p| {
            records.iter().all(|rec| {
                (p - rec.shift).norm() > rec.trusted_radius && (p - rec.shift.conj()).norm() > rec.trusted_radius
            })
        })
        .collect()
}

/// All eigenvalues with `|lambda| <= t_max`, the zero eigenvalue excluded.
pub fn spectrum_window(
    pencil: &TransmissionPencil,
    t_max: f64,
    strategy: &ShiftStrategy,
    options: &WindowOptions,
) -> Result<Spectrum, EigenError> {
    if !(t_max > 0.0) {
        return Err(EigenError::Invalid(format!("t_max = {t_max} must be positive")));
    }
    let mut sweep = Sweep { pencil, options, records: Vec::new(), candidates: Vec::new(), zero_found: false };

    match strategy {
        ShiftStrategy::Explicit(shifts) => {
            for &s in shifts {
                sweep.run(s, options.krylov.nev)?;
            }
        }
        ShiftStrategy::Ladder => {
            let mut s = options.first_shift;
            for i in 0.. {
                let shift = C64::new(-s, options.imag_offset * s);
                let radius = sweep.run(shift, options.krylov.nev)?;
                if s + radius >= t_max || sweep.records.len() >= options.max_shifts {
                    break;
                }
                let step = (2.0 - 2.0 * options.overlap) * radius;
                let next = (options.ladder_ratio * s).min(s + step.max(1e-3 * s));
                s = next * (1.0 - 1e-4 * ((i % 7) as f64));
            }
            loop {
                let gaps = uncovered_points(t_max, &sweep.records, options.coverage_rings, options.coverage_angles);
                let Some(&target) = gaps.first() else { break };
                if sweep.records.len() >= options.max_shifts {
                    break;
                }
                let shift = target + C64::new(1e-3, 1.7e-3) * target.norm().max(1.0);
                sweep.run(shift, options.fill_nev)?;
            }
        }
    }

    let gaps = uncovered_points(t_max, &sweep.records, options.coverage_rings, options.coverage_angles);
    if let Some(&example) = gaps.first() {
        return Err(EigenError::Coverage { uncovered: gaps.len(), example });
    }

    let mut candidates = std::mem::take(&mut sweep.candidates);
    candidates.sort_by(|a, b| {
        a.lambda.norm().total_cmp(&b.lambda.norm()).then(a.residual.total_cmp(&b.residual))
    });
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    for c in candidates {
        if c.lambda.norm() > t_max {
            continue;
        }
        let duplicate = entries.iter_mut().rev().take_while(|e| {
            c.lambda.norm() - e.lambda.norm() <= options.dedup_tol * c.lambda.norm().max(1.0)
        });
        let mut merged = false;
        for e in duplicate {
            if close(e.lambda, c.lambda, options.dedup_tol) {
                e.multiplicity = e.multiplicity.max(c.multiplicity);
                if c.residual < e.residual {
                    e.lambda = c.lambda;
                    e.residual = c.residual;
                    e.shift = c.shift;
                }
                merged = true;
                break;
            }
        }
        if !merged {
            entries.push(SpectrumEntry { lambda: c.lambda, multiplicity: c.multiplicity, residual: c.residual, shift: c.shift });
        }
    }
    sort_entries(&mut entries);

    let mut spectrum = Spectrum {
        entries,
        t_max,
        zero_eigenvalue: sweep.zero_found,
        shifts: sweep.records,
        warnings: pencil.warnings.clone(),
    };
    let defect = spectrum.conjugation_defect();
    if defect > 1e-6 {
        spectrum.warnings.push(format!("spectrum not closed under conjugation: defect {defect:.2e}"));
    }
    Ok(spectrum)
}
