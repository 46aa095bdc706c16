//! Acceptance suite: one PASS/FAIL line per criterion, INFO lines for diagnostics.
//! Exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use translab::analytic_oracles::{disk_eigenvalues, halfspace_solve_2d, verify_halfspace};
use translab::assembly::{assemble_pencil, TransmissionPencil};
use translab::eigensolve::{shift_invert_arnoldi, spectrum_window, KrylovOptions, ShiftStrategy, Spectrum, WindowOptions};
use translab::geometry::mesh_unit_disk;
use translab::media::{complementing_quantity, MediumPair, SymMat2};
use translab::spectral_analysis::{
    dense_resolvent, fit_weyl, hs_decay_scan, hs_norm, log_grid, modified_resolvent_check, projection_residuals,
    resolvent_norm_scan, stieltjes_normalization, tauberian_check, tauberian_grid, trace_identity_check, ResolventScanOptions,
    TraceOptions,
};
use translab::C64;

type Failure = Box<dyn std::error::Error>;

/// Outcome of one criterion: verdict plus a one-line summary of the measured values.
struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

struct Ledger {
    failures: usize,
}

impl Ledger {
    fn run(&mut self, id: u32, title: &str, check: impl FnOnce() -> Result<Verdict, Failure>) {
        let started = Instant::now();
        let result = check();
        let secs = started.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failures += 1;
        }
        println!("{} [{id:>2}] {title}: {detail} ({secs:.1} s)", if pass { "PASS" } else { "FAIL" });
    }
}

fn info(title: &str, detail: String) {
    println!("INFO      {title}: {detail}");
}

fn fixture_pair() -> MediumPair {
    MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::IDENTITY, 4.0, 10.0).expect("fixture media")
}

fn disk_pencil(level: u32, pair: &MediumPair) -> Result<TransmissionPencil, Failure> {
    let mesh = mesh_unit_disk(level)?;
    Ok(assemble_pencil(&mesh, pair)?)
}

fn random_spd(rng: &mut ChaCha8Rng) -> SymMat2 {
    let (e1, e2) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
    let phi: f64 = rng.random_range(0.0..PI);
    let (c, s) = (phi.cos(), phi.sin());
    SymMat2 { a11: e1 * c * c + e2 * s * s, a12: (e1 - e2) * c * s, a22: e1 * s * s + e2 * c * c }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
}

fn condition_algebra() -> Result<Verdict, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 10_000;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = random_spd(&mut rng);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let normal = [phi.cos(), phi.sin()];
        let tangent = [-phi.sin(), phi.cos()];
        let scale = a.eigenvalues().1.powi(2).max(1.0);
        worst = worst.max((complementing_quantity(&a, normal, tangent) - a.det()).abs() / scale);
    }
    Ok(Verdict::new(worst <= 1e-12, format!("{trials} trials, max scaled error {worst:.2e} (tol 1e-12)")))
}

/// Real eigenvalue of smallest modulus near `shift`, from one shift-invert run.
fn smallest_real_eigenvalue(level: u32) -> Result<(f64, usize), Failure> {
    let pencil = disk_pencil(level, &fixture_pair())?;
    let options = KrylovOptions { nev: 8, subspace: 40, ..KrylovOptions::default() };
    let result = shift_invert_arnoldi(&pencil.k, &pencil.m, C64::new(-7.0, 0.01), &options, 1e-8)?;
    let lambda = result
        .pairs
        .iter()
        .filter(|p| p.converged && p.lambda.im.abs() <= 1e-8 * p.lambda.norm() && p.lambda.norm() > 1e-6)
        .map(|p| p.lambda.re)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or("no converged real eigenvalue near the shift")?;
    Ok((lambda, pencil.n_dofs()))
}

fn fem_vs_oracle() -> Result<Verdict, Failure> {
    let start = Instant::now();
    let oracle = disk_eigenvalues(4.0, 20, 20.0, 0.01)?;
    let root = oracle.smallest().ok_or("oracle found no root")?;
    let exact = -root.k * root.k;
    let (coarse, _) = smallest_real_eigenvalue(5)?;
    let (fine, _) = smallest_real_eigenvalue(6)?;
    let (e5, e6) = ((coarse - exact).abs(), (fine - exact).abs());
    let rel5 = e5 / exact.abs();
    let ratio = e5 / e6;
    let secs = start.elapsed().as_secs_f64();
    Ok(Verdict::new(
        rel5 <= 0.01 && ratio >= 3.0 && secs < 120.0,
        format!(
            "oracle {exact:.6} (m = {}), level 5 {coarse:.6} (rel {rel5:.2e} <= 1e-2), level 6 {fine:.6}, gap ratio {ratio:.2} >= 3",
            root.m
        ),
    ))
}

fn weyl_law() -> Result<(Verdict, Option<(Spectrum, f64)>), Failure> {
    let start = Instant::now();
    let pencil = disk_pencil(6, &fixture_pair())?;
    let t_max = 700.0;
    let spectrum = spectrum_window(&pencil, t_max, &ShiftStrategy::Ladder, &WindowOptions::default())?;
    let c_analytic = 1.25;
    let estimate = fit_weyl(&spectrum, (0.2 * t_max, 0.9 * t_max), c_analytic, 2)?;
    let secs = start.elapsed().as_secs_f64();
    let total = spectrum.total();
    let pass = total >= 200 && estimate.relative_deviation <= 0.15 && secs < 1800.0;
    let verdict = Verdict::new(
        pass,
        format!(
            "{} dofs, {total} eigenvalues with |lambda| <= {t_max}, {} shifts, c_fit {:.4} vs {c_analytic} (dev {:.3} <= 0.15)",
            pencil.n_dofs(),
            spectrum.shifts.len(),
            estimate.c_fit,
            estimate.relative_deviation
        ),
    );
    Ok((verdict, Some((spectrum, estimate.c_fit))))
}

fn resolvent_slopes(level: u32, pair: &MediumPair) -> Result<(Option<f64>, Option<f64>), Failure> {
    let pencil = disk_pencil(level, pair)?;
    let grid = log_grid(10.0, 1000.0, 12);
    let scan = resolvent_norm_scan(&pencil, PI / 2.0, &grid, &ResolventScanOptions::default())?;
    Ok((scan.operator_slope, scan.gradient_slope))
}

fn within(slope: Option<f64>, target: f64, tol: f64) -> bool {
    slope.is_some_and(|s| (s - target).abs() <= tol)
}

fn show(slope: Option<f64>) -> String {
    slope.map_or("n/a".into(), |s| format!("{s:.3}"))
}

fn resolvent_decay() -> Result<Verdict, Failure> {
    let start = Instant::now();
    let (operator, gradient) = resolvent_slopes(5, &fixture_pair())?;
    let secs = start.elapsed().as_secs_f64();
    Ok(Verdict::new(
        within(operator, -1.0, 0.15) && within(gradient, -0.5, 0.15) && secs < 600.0,
        format!("operator slope {} (target -1 +- 0.15), gradient slope {} (target -0.5 +- 0.15)", show(operator), show(gradient)),
    ))
}

fn trace_identity() -> Result<Verdict, Failure> {
    let start = Instant::now();
    let pencil = disk_pencil(3, &fixture_pair())?;
    let report = trace_identity_check(&pencil, 100.0, 10.0, &TraceOptions::default())?;
    let secs = start.elapsed().as_secs_f64();
    Ok(Verdict::new(
        report.dofs <= 400 && report.rel_gap <= 1e-8 && secs < 60.0,
        format!(
            "{} dofs, {} finite eigenvalues, Lambda0 {} after {} raises, relative gap {:.2e} <= 1e-8",
            report.dofs, report.finite_eigenvalues, report.big_lambda0, report.raises, report.rel_gap
        ),
    ))
}

fn modified_resolvent() -> Result<Verdict, Failure> {
    let mut worst_closed: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let a = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let b = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let s = C64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
        let t = DMatrix::from_row_slice(2, 2, &[a, C64::new(0.0, 0.0), C64::new(0.0, 0.0), b]);
        let shifted = DMatrix::from_row_slice(2, 2, &[a / (1.0 - s * a), C64::new(0.0, 0.0), C64::new(0.0, 0.0), b / (1.0 - s * b)]);
        let r = modified_resolvent_check(&t, &shifted, s)?;
        worst_closed = worst_closed.max(r.deviation).max(r.commuted_deviation);
    }

    let pencil = disk_pencil(3, &fixture_pair())?;
    let lambda = C64::new(0.0, 10.0);
    let s = C64::new(3.0, 2.0);
    let t = dense_resolvent(&pencil, lambda)?;
    let shifted = dense_resolvent(&pencil, lambda + s)?;
    let r = modified_resolvent_check(&t, &shifted, s)?;
    let deviation = r.deviation.max(r.commuted_deviation);
    Ok(Verdict::new(
        worst_closed <= 1e-14 && deviation <= 1e-8 * r.condition,
        format!(
            "2x2 closed form max dev {worst_closed:.1e} <= 1e-14; {} dofs, s = {s}: dev {deviation:.2e} <= 1e-8 x cond {:.2}",
            pencil.n_dofs(),
            r.condition
        ),
    ))
}

fn halfspace_formulas() -> Result<Verdict, Failure> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut ode, mut jump, mut flux): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut signs_ok = true;
    let mut samples = 0;
    while samples < 100 {
        let (a1, a2) = (random_spd(&mut rng), random_spd(&mut rng));
        if (a1.det() - a2.det()).abs() < 0.1 * a1.det().max(a2.det()) {
            continue;
        }
        let (s1, s2) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let theta = rng.random_range(PI / 8.0..7.0 * PI / 8.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let lambda = C64::from_polar(rng.random_range(1.0..1e3), theta);
        let xi = rng.random_range(-30.0..30.0);
        let phi = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let sol = halfspace_solve_2d(a1, a2, s1, s2, lambda, xi, phi)?;
        let r = verify_halfspace(&sol, &[0.0, 0.01, 0.1, 1.0]);
        ode = ode.max(r.ode);
        jump = jump.max(r.jump);
        flux = flux.max(r.flux).max(r.conormal_flux);
        signs_ok &= r.branch_ok && r.decay_ok;
        samples += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Verdict::new(
        ode <= 1e-12 && jump <= 1e-13 && flux <= 1e-13 && signs_ok && secs < 1.0,
        format!("{samples} samples: ode {ode:.1e}, jump {jump:.1e}, flux {flux:.1e}, branches and decay ok = {signs_ok}"),
    ))
}

fn hs_machinery() -> Result<Verdict, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 30;
    let t = random_matrix(&mut rng, n);
    let w = random_weights(&mut rng, n);
    let similar = DMatrix::from_fn(n, n, |i, j| t[(i, j)] * (w[i] / w[j]).sqrt());
    let svd_sq: f64 = similar.singular_values().iter().map(|s| s * s).sum();
    let hs = hs_norm(&t, &w)?;
    let svd_gap = (hs * hs - svd_sq).abs() / svd_sq;

    let mut violations = 0;
    for _ in 0..1000 {
        let m = rng.random_range(2..12);
        let w = random_weights(&mut rng, m);
        let (t1, t2) = (random_matrix(&mut rng, m), random_matrix(&mut rng, m));
        let trace = (&t1 * &t2).trace().norm();
        if trace > hs_norm(&t1, &w)? * hs_norm(&t2, &w)? * (1.0 + 1e-12) {
            violations += 1;
        }
    }

    let pencil = disk_pencil(4, &fixture_pair())?;
    let decay = hs_decay_scan(&pencil, C64::new(0.0, 10.0), &log_grid(20.0, 200.0, 8))?;
    Ok(Verdict::new(
        svd_gap <= 1e-10 && violations == 0 && decay.slope <= -1.3,
        format!(
            "svd gap {svd_gap:.1e} <= 1e-10, trace bound violations {violations}/1000, 2-fold product slope {:.3} <= -1.3 on {} dofs",
            decay.slope,
            pencil.n_dofs()
        ),
    ))
}

fn tauberian(disk: Option<&(Spectrum, f64)>) -> Result<Verdict, Failure> {
    let a = 0.125;
    let closed = PI / (PI * a).sin();
    let quad = stieltjes_normalization(a)?;
    let normalization_gap = (quad - closed).abs() / closed;

    let c = 1.25;
    let t_max = 2000.0;
    let count = (c * t_max) as usize;
    let entries = (1..=count)
        .map(|j| translab::eigensolve::SpectrumEntry {
            lambda: C64::new(-(j as f64) / c, 0.0),
            multiplicity: 1,
            residual: 0.0,
            shift: C64::new(0.0, 0.0),
        })
        .collect();
    let synthetic = Spectrum::from_entries(entries, t_max);
    let report = tauberian_check(&synthetic, C64::new(0.0, 10.0), &tauberian_grid(t_max, 12), 2, 1, Some(c))?;
    let synthetic_gap = report.relative_deviation.unwrap_or(f64::INFINITY);

    let (spectrum, c_fit) = disk.ok_or("criterion 3 produced no spectrum")?;
    let disk_report = tauberian_check(spectrum, C64::new(0.0, 10.0), &tauberian_grid(spectrum.t_max, 12), 2, 1, Some(*c_fit))?;
    let disk_gap = disk_report.relative_deviation.unwrap_or(f64::INFINITY);
    Ok(Verdict::new(
        normalization_gap <= 0.02 && synthetic_gap <= 0.02 && disk_gap <= 0.2,
        format!(
            "normalization gap {normalization_gap:.1e}, synthetic c {:.4} vs {c} (dev {synthetic_gap:.3} <= 0.02), disk c {:.4} vs c_fit {c_fit:.4} (dev {disk_gap:.3} <= 0.2)",
            report.c_tauberian, disk_report.c_tauberian
        ),
    ))
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, Failure> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !name.ends_with("_manifest.json") {
            files.insert(name, fs::read(entry.path())?);
        }
    }
    Ok(files)
}

fn determinism() -> Result<Verdict, Failure> {
    let work = tempfile::tempdir()?;
    let config = work.path().join("run.ini");
    fs::write(
        &config,
        "[domain]\ndisk_level = 2\n\n[media]\nsigma1 = 1\nsigma2 = 4\n\n[solver]\nt_max = 60\n\n\
         [analysis]\nresolvent_t = 10 1000\nresolvent_points = 5\n\n[output]\nseed = 3\n",
    )?;
    let commands = ["mesh", "check", "eigs", "weyl", "resolvent", "trace", "oracle"];
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = work.path().join(run);
        for command in commands {
            let status = Command::new(env!("CARGO_BIN_EXE_translab"))
                .arg(command)
                .arg("--config")
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .output()?
                .status;
            if status.code().is_none_or(|c| c > 1) {
                return Err(format!("{command} exited with {status}").into());
            }
        }
        runs.push(snapshot(&out)?);
    }
    let differing: Vec<&String> =
        runs[0].iter().filter(|(name, bytes)| runs[1].get(*name) != Some(*bytes)).map(|(name, _)| name).collect();
    let same_names = runs[0].keys().eq(runs[1].keys());
    Ok(Verdict::new(
        differing.is_empty() && same_names && runs[0].len() == 10,
        format!("{} artifacts from {} commands compared, differing: {differing:?}", runs[0].len(), commands.len()),
    ))
}

fn admissible_pair_diagnostic() {
    let pair = MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::scaled_identity(2.0), 4.0, 10.0).expect("media");
    match resolvent_slopes(5, &pair) {
        Ok((operator, gradient)) => info(
            "resolvent decay with A2 = 2I (complementing condition holds)",
            format!("operator slope {}, gradient slope {}", show(operator), show(gradient)),
        ),
        Err(e) => info("resolvent decay with A2 = 2I", format!("error: {e}")),
    }
}

fn completeness_diagnostic() {
    let run = || -> Result<String, Failure> {
        let pencil = disk_pencil(2, &fixture_pair())?;
        let options = KrylovOptions { nev: 30, subspace: 80, ..KrylovOptions::default() };
        let result = shift_invert_arnoldi(&pencil.k, &pencil.m, C64::new(-1.0, 0.01), &options, 1e-8)?;
        let mut pairs: Vec<_> = result.pairs.into_iter().filter(|p| p.converged).collect();
        pairs.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()));
        let vectors: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.vector).collect();
        let counts: Vec<usize> = (1..=5).map(|i| i * vectors.len() / 5).collect();
        let report = projection_residuals(&pencil, &vectors, &counts, 10, 1)?;
        let means: Vec<String> = report
            .residuals
            .iter()
            .map(|r| format!("{:.3}", r.iter().sum::<f64>() / r.len() as f64))
            .collect();
        Ok(format!("modes {:?}, mean residual {}, non-increasing = {}", report.counts, means.join(" "), report.monotone))
    };
    match run() {
        Ok(detail) => info("projection residuals on leading eigenvectors", detail),
        Err(e) => info("projection residuals on leading eigenvectors", format!("error: {e}")),
    }
}

fn main() {
    let mut ledger = Ledger { failures: 0 };
    ledger.run(1, "condition algebra", condition_algebra);
    ledger.run(2, "FEM vs disk oracle", fem_vs_oracle);
    let mut disk = None;
    ledger.run(3, "Weyl law", || {
        let (verdict, spectrum) = weyl_law()?;
        disk = spectrum;
        Ok(verdict)
    });
    ledger.run(4, "resolvent decay", resolvent_decay);
    admissible_pair_diagnostic();
    ledger.run(5, "trace identity", trace_identity);
    ledger.run(6, "modified resolvent identity", modified_resolvent);
    ledger.run(7, "half-space formulas", halfspace_formulas);
    ledger.run(8, "Hilbert-Schmidt machinery", hs_machinery);
    ledger.run(9, "Tauberian pipeline", || tauberian(disk.as_ref()));
    ledger.run(10, "determinism", determinism);
    completeness_diagnostic();

    println!("{} criteria failed", ledger.failures);
    if ledger.failures > 0 {
        std::process::exit(1);
    }
}
