use std::fs::File;
use std::io::BufReader;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;
use translab::analytic_oracles::disk_eigenvalues;
use translab::assembly::{assemble_pencil, TransmissionPencil};
use translab::eigensolve::{spectrum_window, write_spectrum_csv, KrylovOptions, ShiftStrategy, Spectrum, WindowOptions};
use translab::geometry::{boundary_frames, load_mesh, mesh_unit_disk, save_mesh, TriMesh};
use translab::media::{
    check_complementing, check_ellipticity, check_jump, mesh_samples, ConditionReport, Field, FieldKind, FieldValue, MediaError,
    MediumPair, SymMat2,
};
use translab::spectral_analysis::{
    fit_weyl, log_grid, resolvent_norm_scan, tauberian_check, tauberian_grid, trace_constant, trace_identity_check, weyl_constant,
    ResolventScan, ResolventScanOptions, TraceOptions,
};
use translab::C64;

use crate::config::{ConfigError, Domain, FieldSpec, RunConfig};
use crate::output::OutputStage;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Analysis(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Input(_) => 2,
            RunError::Io(_) | RunError::Analysis(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Input(_) => "input",
            RunError::Io(_) => "io",
            RunError::Analysis(_) => "analysis",
        }
    }
}

fn analysis<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Analysis(e.to_string())
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub out: &'a mut OutputStage,
    pub threads: usize,
}

/// Whether every gated check passed.
pub type Outcome = Result<bool, RunError>;

fn field<T: FieldValue>(spec: &FieldSpec, values: Vec<T>, mesh: &TriMesh, name: &str) -> Result<Field<T>, RunError> {
    let input = |e: MediaError| RunError::Input(format!("{name}: {e}"));
    match spec.kind {
        FieldKind::Constant => Ok(Field::Constant(values[0])),
        FieldKind::Radial => Field::radial(values).map_err(input),
        FieldKind::Table => Field::table(mesh.clone(), values).map_err(input),
    }
}

fn matrix_field(spec: &FieldSpec, mesh: &TriMesh, name: &str) -> Result<Field<SymMat2>, RunError> {
    let values = spec.values.chunks(3).map(|c| SymMat2::new(c[0], c[1], c[2])).collect();
    field(spec, values, mesh, name)
}

fn build_mesh(config: &RunConfig) -> Result<TriMesh, RunError> {
    match &config.domain {
        Domain::Disk { level } => mesh_unit_disk(*level).map_err(|e| RunError::Input(e.to_string())),
        Domain::MeshFile { path } => {
            let file = File::open(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
            load_mesh(BufReader::new(file)).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
        }
    }
}

fn build_pair(config: &RunConfig, mesh: &TriMesh) -> Result<MediumPair, RunError> {
    let m = &config.media;
    MediumPair::new(
        matrix_field(&m.a1, mesh, "a1")?,
        field(&m.sigma1, m.sigma1.values.clone(), mesh, "sigma1")?,
        matrix_field(&m.a2, mesh, "a2")?,
        field(&m.sigma2, m.sigma2.values.clone(), mesh, "sigma2")?,
        m.lambda,
    )
    .map_err(|e| RunError::Input(e.to_string()))
}

fn build_pencil(config: &RunConfig) -> Result<(TriMesh, MediumPair, TransmissionPencil), RunError> {
    let mesh = build_mesh(config)?;
    let pair = build_pair(config, &mesh)?;
    let pencil = assemble_pencil(&mesh, &pair).map_err(analysis)?;
    Ok((mesh, pair, pencil))
}

fn window_options(config: &RunConfig) -> WindowOptions {
    let s = &config.solver;
    WindowOptions {
        krylov: KrylovOptions {
            nev: s.nev,
            subspace: s.subspace,
            max_restarts: s.max_restarts,
            seed: config.seed,
            ..KrylovOptions::default()
        },
        residual_tol: s.residual_tol,
        cluster_tol: s.cluster_tol,
        ..WindowOptions::default()
    }
}

fn compute_spectrum(ctx: &mut Context, pencil: &TransmissionPencil) -> Result<Spectrum, RunError> {
    let s = &ctx.config.solver;
    let strategy = if s.shifts.is_empty() {
        ShiftStrategy::Ladder
    } else {
        ShiftStrategy::Explicit(s.shifts.iter().map(|p| C64::new(p[0], p[1])).collect())
    };
    let spectrum = spectrum_window(pencil, s.t_max, &strategy, &window_options(ctx.config)).map_err(analysis)?;
    let mut csv = Vec::new();
    write_spectrum_csv(&spectrum, &mut csv)?;
    ctx.out.write_commented("spectrum.csv", &csv)?;
    Ok(spectrum)
}

pub fn mesh(ctx: &mut Context) -> Outcome {
    let mesh = build_mesh(ctx.config)?;
    let mut text = Vec::new();
    save_mesh(&mesh, &mut text).map_err(analysis)?;
    ctx.out.write_commented("mesh.tmesh", &text)?;
    ctx.out.write_json(
        "mesh.json",
        &json!({
            "vertices": mesh.vertices().len(),
            "triangles": mesh.triangles().len(),
            "boundary_edges": mesh.boundary_edges().len(),
            "h": mesh.characteristic_h(),
            "area": mesh.area(),
        }),
    )?;
    Ok(true)
}

#[derive(Serialize)]
struct CheckReport {
    reports: Vec<ConditionReport>,
    failed: Vec<String>,
    pass: bool,
}

pub fn check(ctx: &mut Context) -> Outcome {
    let mesh = build_mesh(ctx.config)?;
    let pair = build_pair(ctx.config, &mesh)?;
    let frames = boundary_frames(&mesh);
    let a = &ctx.config.analysis;
    let mut reports = Vec::new();
    if a.ellipticity {
        reports.extend(check_ellipticity(&pair, &mesh_samples(&mesh)));
    }
    if a.complementing {
        reports.push(check_complementing(&pair, &frames));
    }
    if a.jump {
        reports.push(check_jump(&pair, &frames));
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| serde_json::to_value(r.condition).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
        .collect();
    let pass = failed.is_empty();
    ctx.out.write_json("check.json", &CheckReport { reports, failed, pass })?;
    Ok(pass)
}

pub fn eigs(ctx: &mut Context) -> Outcome {
    let (_, _, pencil) = build_pencil(ctx.config)?;
    let spectrum = compute_spectrum(ctx, &pencil)?;
    ctx.out.write_json(
        "eigs.json",
        &json!({
            "dofs": pencil.n_dofs(),
            "t_max": spectrum.t_max,
            "total": spectrum.total(),
            "distinct": spectrum.entries.len(),
            "zero_eigenvalue": spectrum.zero_eigenvalue,
            "conjugation_defect": spectrum.conjugation_defect(),
            "shifts": spectrum.shifts,
            "warnings": spectrum.warnings,
        }),
    )?;
    Ok(true)
}

pub fn weyl(ctx: &mut Context) -> Outcome {
    let (mesh, pair, pencil) = build_pencil(ctx.config)?;
    let c_analytic = weyl_constant(&mesh, &pair).map_err(analysis)?;
    let spectrum = compute_spectrum(ctx, &pencil)?;
    let a = &ctx.config.analysis;
    let t_max = spectrum.t_max;
    let estimate = fit_weyl(&spectrum, (a.weyl_window[0] * t_max, a.weyl_window[1] * t_max), c_analytic, 2).map_err(analysis)?;
    let lambda0 = C64::new(0.0, ctx.config.solver.big_lambda0);
    let tauberian = tauberian_check(&spectrum, lambda0, &tauberian_grid(t_max, 12), 2, 1, Some(estimate.c_fit));
    let pass = estimate.relative_deviation <= a.weyl_tolerance;
    ctx.out.write_json(
        "weyl.json",
        &json!({
            "c_analytic": c_analytic,
            "c_fit": estimate.c_fit,
            "relative_deviation": estimate.relative_deviation,
            "tolerance": a.weyl_tolerance,
            "pass": pass,
            "fit": estimate,
            "trace_constant": trace_constant(c_analytic, 2, 1),
            "tauberian": match &tauberian {
                Ok(r) => serde_json::to_value(r).map_err(std::io::Error::other)?,
                Err(e) => json!({ "error": e.to_string() }),
            },
            "total_eigenvalues": spectrum.total(),
        }),
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct ResolventReport {
    scans: Vec<ResolventScan>,
    slope_tolerance: f64,
    pass: bool,
}

fn slope_ok(slope: Option<f64>, target: f64, tolerance: f64) -> bool {
    slope.is_some_and(|s| (s - target).abs() <= tolerance)
}

pub fn resolvent(ctx: &mut Context) -> Outcome {
    let (_, _, pencil) = build_pencil(ctx.config)?;
    let a = &ctx.config.analysis;
    let grid = log_grid(a.resolvent_t[0], a.resolvent_t[1], a.resolvent_points);
    let options = ResolventScanOptions {
        power_iterations: a.power_iterations,
        restarts: a.power_restarts,
        seed: ctx.config.seed,
        eps0: ctx.config.solver.eps0,
        lambda0: ctx.config.solver.big_lambda0,
        ..ResolventScanOptions::default()
    };
    let rays = &ctx.config.solver.rays;
    let chunk = rays.len().div_ceil(ctx.threads.max(1)).max(1);
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = rays
            .chunks(chunk)
            .map(|group| {
                let (pencil, grid) = (&pencil, &grid);
                scope.spawn(move || group.iter().map(|&theta| resolvent_norm_scan(pencil, theta, grid, &options)).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("resolvent worker panicked")).collect()
    });
    let scans = results.into_iter().collect::<Result<Vec<_>, _>>().map_err(analysis)?;

    let mut csv = String::from("theta,t,lambda_re,lambda_im,operator_norm,gradient_norm,sup_ratio,flag\n");
    let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
    for s in &scans {
        for p in &s.points {
            csv.push_str(&format!(
                "{:?},{:?},{:?},{:?},{},{},{},{}\n",
                s.theta,
                p.t,
                p.lambda.re,
                p.lambda.im,
                cell(p.operator_norm),
                cell(p.gradient_norm),
                cell(p.sup_ratio),
                p.flag.as_deref().unwrap_or("").replace(',', ";")
            ));
        }
    }
    ctx.out.write_commented("resolvent.csv", csv.as_bytes())?;
    let tol = a.slope_tolerance;
    let pass = scans.iter().all(|s| slope_ok(s.operator_slope, -1.0, tol) && slope_ok(s.gradient_slope, -0.5, tol));
    ctx.out.write_json("resolvent.json", &ResolventReport { scans, slope_tolerance: tol, pass })?;
    Ok(pass)
}

pub fn trace(ctx: &mut Context) -> Outcome {
    let (_, _, pencil) = build_pencil(ctx.config)?;
    let options = TraceOptions { dense_cap: ctx.config.solver.dense_cap, ..TraceOptions::default() };
    let a = &ctx.config.analysis;
    let report = trace_identity_check(&pencil, a.trace_t, ctx.config.solver.big_lambda0, &options).map_err(analysis)?;
    let pass = report.rel_gap <= a.trace_tolerance;
    ctx.out.write_json("trace.json", &json!({ "report": report, "tolerance": a.trace_tolerance, "pass": pass }))?;
    Ok(pass)
}

pub fn oracle(ctx: &mut Context) -> Outcome {
    let m = &ctx.config.media;
    let constant = |f: &FieldSpec| (f.kind == FieldKind::Constant).then(|| f.values.clone());
    let scalar = |v: Vec<f64>| (v[1] == 0.0 && v[0] == v[2]).then_some(v[0]);
    let setup = (constant(&m.a1).and_then(scalar), constant(&m.a2).and_then(scalar), constant(&m.sigma1), constant(&m.sigma2));
    let (c, sigma1, sigma2) = match setup {
        (Some(c1), Some(c2), Some(s1), Some(s2)) if c1 == c2 && matches!(ctx.config.domain, Domain::Disk { .. }) => {
            (c1, s1[0], s2[0])
        }
        _ => {
            return Err(RunError::Input(
                "the disk oracle needs a disk domain, constant densities and equal scalar matrices a1 = a2 = c I".into(),
            ))
        }
    };
    let n = sigma2 / sigma1;
    let a = &ctx.config.analysis;
    let oracle = disk_eigenvalues(n, a.oracle_modes, a.oracle_k_max, 0.01).map_err(analysis)?;
    let mut csv = String::from("m,k,lambda,multiplicity,determinant\n");
    for r in &oracle.roots {
        let lambda = -c * r.k * r.k / sigma1;
        csv.push_str(&format!("{},{:?},{:?},{},{:e}\n", r.m, r.k, lambda, r.multiplicity, r.determinant));
    }
    ctx.out.write_commented("oracle.csv", csv.as_bytes())?;
    Ok(true)
}
