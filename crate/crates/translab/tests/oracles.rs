//! Closed-form and frozen reference values.

use std::f64::consts::PI;

use translab::analytic_oracles::{
    disk_determinant, disk_eigenvalues, halfspace_solve_2d, mode_residual, multiplier_mode_solve, verify_halfspace, ModeProblem,
    OracleError,
};
use translab::geometry::Point2;
use translab::media::{MediumPair, SymMat2};
use translab::spectral_analysis::{
    kernel_diag_asymptotic, stieltjes_normalization, trace_constant, unit_ball_volume, weyl_constant, KernelOptions,
};
use translab::C64;

// Roots of J_m(k) 2 J_m'(2k) - J_m'(k) J_m(2k), computed with scipy's Bessel functions and brentq.
const DISK_CONTRAST_4: [(u32, f64); 4] = [
    (1, -8.425133522186034),
    (0, -11.452774711970342),
    (2, -11.642112168627744),
    (3, -15.812330454268041),
];

#[test]
fn disk_roots_match_independent_values() {
    let oracle = disk_eigenvalues(4.0, 10, 4.5, 0.01).unwrap();
    for (root, &(m, lambda)) in oracle.roots.iter().zip(&DISK_CONTRAST_4) {
        assert_eq!(root.m, m);
        assert!((root.lambda - lambda).abs() <= 1e-9 * lambda.abs(), "m = {m}: {} vs {lambda}", root.lambda);
        assert_eq!(root.multiplicity, if m == 0 { 1 } else { 2 });
        assert!(disk_determinant(m, root.k, 4.0).unwrap().abs() <= 1e-10);
    }
    assert_eq!(oracle.count(12.0), 5);
}

#[test]
fn unit_contrast_is_rejected() {
    assert!(disk_eigenvalues(1.0, 4, 5.0, 0.01).is_err());
}

#[test]
fn multiplier_examples() {
    let base = ModeProblem {
        a: SymMat2::IDENTITY,
        sigma: 1.0,
        lambda: C64::new(0.0, 1.0),
        xi: [1.0, 0.0],
        amplitude: C64::new(1.0, 0.0),
    };
    let c = multiplier_mode_solve(&base).unwrap();
    assert!((c + 1.0 / C64::new(1.0, 1.0)).norm() < 1e-15);
    assert!(mode_residual(&base, c).norm() < 1e-15);

    let zero = ModeProblem { xi: [0.0, 0.0], lambda: C64::new(2.0, 3.0), sigma: 2.0, ..base };
    let c = multiplier_mode_solve(&zero).unwrap();
    assert!((c + 1.0 / (C64::new(2.0, 3.0) * 2.0)).norm() < 1e-15);

    let resonant = ModeProblem { lambda: C64::new(-1.0, 0.0), ..base };
    assert!(matches!(multiplier_mode_solve(&resonant), Err(OracleError::SymbolVanishes(_))));
}

#[test]
fn halfspace_isotropic_closed_form() {
    // A_j = a_j I, xi' = 0: sqrt(Delta_j) = a_j^{1/2} (lambda Sigma_j)^{1/2}.
    let lambda = C64::new(0.0, 5.0);
    let sol = halfspace_solve_2d(SymMat2::IDENTITY, SymMat2::scaled_identity(3.0), 1.0, 2.0, lambda, 0.0, C64::new(1.0, 0.0)).unwrap();
    let r1 = lambda.sqrt();
    let r2 = (lambda * 6.0).sqrt();
    assert!((sol.media[0].sqrt_delta - r1).norm() < 1e-13);
    assert!((sol.media[1].sqrt_delta - r2).norm() < 1e-13);
    assert!((sol.media[0].alpha - r2 / (r2 - r1)).norm() < 1e-13);
    let check = verify_halfspace(&sol, &[0.0, 0.5, 2.0]);
    assert!(check.ode < 1e-14 && check.jump < 1e-14 && check.flux < 1e-14);
    assert!(check.branch_ok && check.decay_ok);
}

#[test]
fn halfspace_equal_media_is_degenerate() {
    let err = halfspace_solve_2d(SymMat2::IDENTITY, SymMat2::IDENTITY, 1.0, 1.0, C64::new(0.0, 3.0), 1.0, C64::new(1.0, 0.0));
    assert!(matches!(err, Err(OracleError::DegenerateContrast(_))));
}

#[test]
fn weyl_constant_of_the_disk_fixture() {
    let mesh = translab::geometry::mesh_unit_disk(4).unwrap();
    let pair = MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::IDENTITY, 4.0, 10.0).unwrap();
    let c = weyl_constant(&mesh, &pair).unwrap();
    assert!((c - 1.25).abs() / 1.25 < 5e-3, "{c}");
    assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
    assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
}

#[test]
fn trace_constant_magnitude() {
    // alpha = d / (4 (k + 1)) = 1/4: |c_trace| = c (pi/4) / sin(pi/4).
    let c = trace_constant(1.25, 2, 1);
    assert!((c.norm() - 1.25 * (PI / 4.0) / (PI / 4.0).sin()).abs() < 1e-14);
}

#[test]
fn stieltjes_normalization_matches_beta_integral() {
    for a in [0.1, 0.125, 0.25, 0.5, 0.8] {
        let exact = PI / (PI * a).sin();
        assert!((stieltjes_normalization(a).unwrap() - exact).abs() < 1e-9 * exact, "a = {a}");
    }
    assert!(stieltjes_normalization(0.0).is_err());
    assert!(stieltjes_normalization(1.0).is_err());
}

// (1 / 4 pi^2) t^{-3} pi int_0^inf dw / (w^4 - i) at t = 1000, evaluated with mpmath.
const LEADING_UNIT_MEDIUM_T1000: (f64, f64) = (3.3824756259137312e-11, 8.1660185304773533e-11);

fn unit_pair(a2: SymMat2, sigma2: f64) -> MediumPair {
    MediumPair::constant(SymMat2::IDENTITY, 1.0, a2, sigma2, 10.0).unwrap()
}

#[test]
fn kernel_leading_term_matches_closed_form() {
    let options = KernelOptions { lambda0: C64::new(0.0, 0.0), ..KernelOptions::default() };
    let diag = kernel_diag_asymptotic(Point2::new(0.1, 0.2), &unit_pair(SymMat2::IDENTITY, 2.0), 1000.0, &options).unwrap();
    let expected = C64::new(LEADING_UNIT_MEDIUM_T1000.0, LEADING_UNIT_MEDIUM_T1000.1);
    let medium = &diag.media[0];
    assert!((medium.leading - expected).norm() <= 1e-6 * expected.norm());
    assert!((medium.full - expected).norm() <= 1e-6 * expected.norm());
    assert!(medium.tail_ratio <= 1e-10);
}

#[test]
fn kernel_ratio_approaches_one() {
    let pair = unit_pair(SymMat2::IDENTITY, 4.0);
    let mut last = f64::INFINITY;
    for t in [1e3, 1e4, 1e5] {
        let diag = kernel_diag_asymptotic(Point2::new(0.0, 0.0), &pair, t, &KernelOptions::default()).unwrap();
        let distance = (diag.ratio - 1.0).norm();
        assert!(diag.ratio.re >= 0.9 && diag.ratio.re <= 1.1 && distance <= 0.1, "t = {t}: {}", diag.ratio);
        assert!(distance < last);
        last = distance;
    }
}

#[test]
fn kernel_scaling_by_four_divides_leading_term() {
    let options = KernelOptions::default();
    let base = kernel_diag_asymptotic(Point2::new(0.0, 0.0), &unit_pair(SymMat2::IDENTITY, 1.5), 2e3, &options).unwrap();
    let scaled = kernel_diag_asymptotic(Point2::new(0.0, 0.0), &unit_pair(SymMat2::scaled_identity(4.0), 1.5), 2e3, &options).unwrap();
    let ratio = base.media[1].leading / scaled.media[1].leading;
    assert!((ratio - 4.0).norm() < 1e-12, "{ratio}");
}

#[test]
fn kernel_rejects_small_t() {
    let pair = unit_pair(SymMat2::IDENTITY, 4.0);
    assert!(kernel_diag_asymptotic(Point2::new(0.0, 0.0), &pair, 10.0, &KernelOptions::default()).is_err());
}
