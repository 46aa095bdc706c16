//! Coefficient fields of the two media and the pointwise hypothesis checks on them.

use std::fmt::Debug;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{doubled_signed_area, BoundaryFrame, Point2, TriMesh};

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("contrast constant must satisfy lambda >= 1, got {0}")]
    LambdaBelowOne(f64),
    #[error("radial field needs at least one coefficient")]
    EmptyRadial,
    #[error("table field has {values} values for a mesh with {vertices} vertices")]
    TableSize { values: usize, vertices: usize },
}

/// Symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        Self { a11, a12: 0.0, a22 }
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::diag(s, s)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let radius = (0.5 * (self.a11 - self.a22)).hypot(self.a12);
        (mean - radius, mean + radius)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    /// Bilinear form `<A u, v>`.
    pub fn form(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let au = self.apply(u);
        au[0] * v[0] + au[1] * v[1]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.a11, s * self.a12, s * self.a22)
    }
}

/// Values a coefficient field can carry: closed under sums and real scaling.
pub trait FieldValue: Copy + Debug + Send + Sync {
    fn zero() -> Self;
    fn plus(self, other: Self) -> Self;
    fn times(self, s: f64) -> Self;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn times(self, s: f64) -> Self {
        self * s
    }
}

impl FieldValue for SymMat2 {
    fn zero() -> Self {
        SymMat2::new(0.0, 0.0, 0.0)
    }
    fn plus(self, other: Self) -> Self {
        SymMat2::new(self.a11 + other.a11, self.a12 + other.a12, self.a22 + other.a22)
    }
    fn times(self, s: f64) -> Self {
        self.scale(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Constant,
    Radial,
    Table,
}

/// Nodal values on a triangulation, interpolated linearly on the triangle containing
/// the query point (or the nearest one, with clamped barycentric weights).
#[derive(Debug)]
pub struct TableField<T> {
    mesh: TriMesh,
    values: Vec<T>,
    grid: BucketGrid,
}

#[derive(Debug)]
struct BucketGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(mesh: &TriMesh) -> Self {
        let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
        for p in mesh.vertices() {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let side = ((mesh.triangles().len() as f64).sqrt().ceil() as usize).max(1);
        let cell = ((hi.x - lo.x).max(hi.y - lo.y) / side as f64).max(f64::MIN_POSITIVE);
        let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.triangles().len() {
            let pts = mesh.triangle_points(t);
            let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in pts {
                x0 = x0.min(p.x);
                x1 = x1.max(p.x);
                y0 = y0.min(p.y);
                y1 = y1.max(p.y);
            }
            let (i0, i1) = (Self::index(x0, lo.x, cell, nx), Self::index(x1, lo.x, cell, nx));
            let (j0, j1) = (Self::index(y0, lo.y, cell, ny), Self::index(y1, lo.y, cell, ny));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self { origin: lo, cell, nx, ny, buckets }
    }

    fn index(v: f64, origin: f64, cell: f64, n: usize) -> usize {
        (((v - origin) / cell).floor().max(0.0) as usize).min(n - 1)
    }

    fn candidates(&self, p: Point2) -> &[usize] {
        let i = Self::index(p.x, self.origin.x, self.cell, self.nx);
        let j = Self::index(p.y, self.origin.y, self.cell, self.ny);
        &self.buckets[j * self.nx + i]
    }
}

fn barycentric(pts: [Point2; 3], p: Point2) -> [f64; 3] {
    let total = doubled_signed_area(pts[0], pts[1], pts[2]);
    let w0 = doubled_signed_area(p, pts[1], pts[2]) / total;
    let w1 = doubled_signed_area(pts[0], p, pts[2]) / total;
    [w0, w1, 1.0 - w0 - w1]
}

impl<T: FieldValue> TableField<T> {
    pub fn new(mesh: TriMesh, values: Vec<T>) -> Result<Self, MediaError> {
        if values.len() != mesh.vertices().len() {
            return Err(MediaError::TableSize { values: values.len(), vertices: mesh.vertices().len() });
        }
        let grid = BucketGrid::new(&mesh);
        Ok(Self { mesh, values, grid })
    }

    pub fn eval(&self, p: Point2) -> T {
        let scan = |best: &mut (f64, usize, [f64; 3]), t: usize| {
            let w = barycentric(self.mesh.triangle_points(t), p);
            let worst = w[0].min(w[1]).min(w[2]);
            if worst > best.0 {
                *best = (worst, t, w);
            }
        };
        let mut best = (f64::NEG_INFINITY, 0usize, [0.0; 3]);
        for &t in self.grid.candidates(p) {
            scan(&mut best, t);
        }
        if best.0 < -1e-12 {
            for t in 0..self.mesh.triangles().len() {
                scan(&mut best, t);
            }
        }
        let (_, t, w) = best;
        let w = w.map(|x| x.max(0.0));
        let total: f64 = w.iter().sum();
        let tri = self.mesh.triangles()[t];
        (0..3).fold(T::zero(), |acc, k| acc.plus(self.values[tri[k]].times(w[k] / total)))
    }
}

/// Coefficient field: constant, polynomial in `|x|^2`, or an interpolated nodal table.
#[derive(Debug, Clone)]
pub enum Field<T> {
    Constant(T),
    /// `sum_k c_k |x|^(2k)`.
    Radial(Vec<T>),
    Table(Arc<TableField<T>>),
}

pub type MatrixField = Field<SymMat2>;
pub type ScalarField = Field<f64>;

impl<T: FieldValue> Field<T> {
    pub fn radial(coefficients: Vec<T>) -> Result<Self, MediaError> {
        if coefficients.is_empty() {
            return Err(MediaError::EmptyRadial);
        }
        Ok(Field::Radial(coefficients))
    }

    pub fn table(mesh: TriMesh, values: Vec<T>) -> Result<Self, MediaError> {
        Ok(Field::Table(Arc::new(TableField::new(mesh, values)?)))
    }

    pub fn eval(&self, p: Point2) -> T {
        match self {
            Field::Constant(v) => *v,
            Field::Radial(coefficients) => {
                let r2 = p.norm_sq();
                coefficients.iter().rev().fold(T::zero(), |acc, c| acc.times(r2).plus(*c))
            }
            Field::Table(table) => table.eval(p),
        }
    }

    pub fn kind(&self) -> FieldKind {
        match self {
            Field::Constant(_) => FieldKind::Constant,
            Field::Radial(_) => FieldKind::Radial,
            Field::Table(_) => FieldKind::Table,
        }
    }
}

/// The two media `(A1, Sigma1)`, `(A2, Sigma2)` and the contrast constant.
#[derive(Debug, Clone)]
pub struct MediumPair {
    pub a1: MatrixField,
    pub sigma1: ScalarField,
    pub a2: MatrixField,
    pub sigma2: ScalarField,
    lambda: f64,
}

impl MediumPair {
    pub fn new(
        a1: MatrixField,
        sigma1: ScalarField,
        a2: MatrixField,
        sigma2: ScalarField,
        lambda: f64,
    ) -> Result<Self, MediaError> {
        if !(lambda >= 1.0) {
            return Err(MediaError::LambdaBelowOne(lambda));
        }
        Ok(Self { a1, sigma1, a2, sigma2, lambda })
    }

    /// Constant media.
    pub fn constant(a1: SymMat2, sigma1: f64, a2: SymMat2, sigma2: f64, lambda: f64) -> Result<Self, MediaError> {
        Self::new(Field::Constant(a1), Field::Constant(sigma1), Field::Constant(a2), Field::Constant(sigma2), lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Coefficients of medium `j` (1 or 2) at `p`.
    pub fn medium(&self, j: usize, p: Point2) -> (SymMat2, f64) {
        match j {
            1 => (self.a1.eval(p), self.sigma1.eval(p)),
            _ => (self.a2.eval(p), self.sigma2.eval(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    /// Eigenvalues of both matrices within `[1/Lambda, Lambda]`.
    Ellipticity,
    /// Both densities within `[1/Lambda, Lambda]`.
    DensityBounds,
    /// Complementing contrast between the two media on the boundary.
    Complementing,
    /// Normal-flux contrast between the two media on the boundary.
    Jump,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    /// Worst signed margin; negative values violate the condition.
    pub margin: f64,
    pub location: Point2,
    pub samples: usize,
    pub pass: bool,
    /// Smallest and largest value of the checked quantity over the samples.
    pub range: (f64, f64),
}

struct Fold {
    margin: f64,
    location: Point2,
    range: (f64, f64),
    samples: usize,
}

impl Fold {
    fn new() -> Self {
        Self { margin: f64::INFINITY, location: Point2::default(), range: (f64::INFINITY, f64::NEG_INFINITY), samples: 0 }
    }

    fn push(&mut self, at: Point2, margin: f64, values: &[f64]) {
        if margin < self.margin || self.samples == 0 {
            self.margin = margin;
            self.location = at;
        }
        for &v in values {
            self.range = (self.range.0.min(v), self.range.1.max(v));
        }
        self.samples += 1;
    }

    fn finish(self, condition: ConditionId) -> ConditionReport {
        ConditionReport {
            condition,
            margin: self.margin,
            location: self.location,
            samples: self.samples,
            pass: self.margin >= 0.0,
            range: self.range,
        }
    }
}

/// Vertices and triangle centroids of a mesh.
pub fn mesh_samples(mesh: &TriMesh) -> Vec<Point2> {
    let mut samples = mesh.vertices().to_vec();
    samples.extend((0..mesh.triangles().len()).map(|t| mesh.centroid(t)));
    samples
}

/// Ellipticity of both matrices and bounds on both densities, each as a signed
/// distance to the band `[1/Lambda, Lambda]`.
pub fn check_ellipticity(pair: &MediumPair, samples: &[Point2]) -> [ConditionReport; 2] {
    let (lo, hi) = (1.0 / pair.lambda, pair.lambda);
    let band = |v: f64| (v - lo).min(hi - v);
    let mut matrices = Fold::new();
    let mut densities = Fold::new();
    for &p in samples {
        let (a1, s1) = pair.medium(1, p);
        let (a2, s2) = pair.medium(2, p);
        let (e1, e2) = (a1.eigenvalues(), a2.eigenvalues());
        let eigs = [e1.0, e1.1, e2.0, e2.1];
        matrices.push(p, eigs.iter().map(|&e| band(e)).fold(f64::INFINITY, f64::min), &eigs);
        densities.push(p, band(s1).min(band(s2)), &[s1, s2]);
    }
    [matrices.finish(ConditionId::Ellipticity), densities.finish(ConditionId::DensityBounds)]
}

/// `<A nu, nu><A xi, xi> - <A nu, xi>^2`, evaluated from the quadratic forms.
pub fn complementing_quantity(a: &SymMat2, normal: [f64; 2], tangent: [f64; 2]) -> f64 {
    a.form(normal, normal) * a.form(tangent, tangent) - a.form(normal, tangent).powi(2)
}

pub fn complementing_gap(a1: &SymMat2, a2: &SymMat2, frame: &BoundaryFrame) -> f64 {
    (complementing_quantity(a2, frame.normal, frame.tangent) - complementing_quantity(a1, frame.normal, frame.tangent))
        .abs()
}

pub fn check_complementing(pair: &MediumPair, frames: &[BoundaryFrame]) -> ConditionReport {
    let threshold = 1.0 / pair.lambda;
    let mut fold = Fold::new();
    for f in frames {
        let gap = complementing_gap(&pair.a1.eval(f.midpoint), &pair.a2.eval(f.midpoint), f);
        fold.push(f.midpoint, gap - threshold, &[gap]);
    }
    fold.finish(ConditionId::Complementing)
}

pub fn jump_gap(a1: &SymMat2, sigma1: f64, a2: &SymMat2, sigma2: f64, normal: [f64; 2]) -> f64 {
    (a2.form(normal, normal) * sigma2 - a1.form(normal, normal) * sigma1).abs()
}

pub fn check_jump(pair: &MediumPair, frames: &[BoundaryFrame]) -> ConditionReport {
    let threshold = 1.0 / pair.lambda;
    let mut fold = Fold::new();
    for f in frames {
        let (a1, s1) = pair.medium(1, f.midpoint);
        let (a2, s2) = pair.medium(2, f.midpoint);
        let gap = jump_gap(&a1, s1, &a2, s2, f.normal);
        fold.push(f.midpoint, gap - threshold, &[gap]);
    }
    fold.finish(ConditionId::Jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_frames, mesh_unit_disk};

    fn frames() -> Vec<BoundaryFrame> {
        boundary_frames(&mesh_unit_disk(2).unwrap())
    }

    #[test]
    fn identity_media_are_elliptic() {
        let pair = MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::IDENTITY, 1.0, 2.0).unwrap();
        let [m, s] = check_ellipticity(&pair, &[Point2::new(0.1, 0.2)]);
        assert!(m.pass && s.pass);
        assert_eq!(m.range, (1.0, 1.0));
    }

    #[test]
    fn stretched_matrix_fails_with_margin_one() {
        let pair =
            MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::diag(3.0, 1.0 / 3.0), 1.0, 2.0).unwrap();
        let [m, _] = check_ellipticity(&pair, &[Point2::new(0.0, 0.0)]);
        assert!(!m.pass);
        assert!((m.margin + 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_field_peaks_on_boundary() {
        let a = Field::radial(vec![SymMat2::IDENTITY, SymMat2::scaled_identity(0.5)]).unwrap();
        let pair = MediumPair::new(a.clone(), Field::Constant(1.0), a, Field::Constant(1.0), 2.0).unwrap();
        let samples = mesh_samples(&mesh_unit_disk(3).unwrap());
        let [m, _] = check_ellipticity(&pair, &samples);
        assert!(m.pass);
        assert!((m.range.1 - 1.5).abs() < 1e-14);
        assert!((m.range.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complementing_gap_examples() {
        let f = frames();
        let two = SymMat2::scaled_identity(2.0);
        for fr in &f {
            assert!((complementing_gap(&SymMat2::IDENTITY, &two, fr) - 3.0).abs() < 1e-13);
            assert_eq!(complementing_gap(&two, &two, fr), 0.0);
            assert!(complementing_gap(&SymMat2::IDENTITY, &SymMat2::diag(2.0, 0.5), fr) < 1e-13);
        }
    }

    #[test]
    fn complementing_reports() {
        let f = frames();
        let pass = MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::scaled_identity(2.0), 1.0, 2.0).unwrap();
        let r = check_complementing(&pass, &f);
        assert!(r.pass && (r.margin - 2.5).abs() < 1e-13);
        let same = MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::IDENTITY, 4.0, 2.0).unwrap();
        assert!(!check_complementing(&same, &f).pass);
        let equal_det = MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::diag(2.0, 0.5), 1.0, 2.0).unwrap();
        assert!(!check_complementing(&equal_det, &f).pass);
    }

    #[test]
    fn jump_reports() {
        let f = frames();
        let fixture = MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::IDENTITY, 4.0, 2.0).unwrap();
        let r = check_jump(&fixture, &f);
        assert!(r.pass);
        assert!((r.range.0 - 3.0).abs() < 1e-13 && (r.range.1 - 3.0).abs() < 1e-13);
        let balanced =
            MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::scaled_identity(2.0), 0.5, 2.0).unwrap();
        let r = check_jump(&balanced, &f);
        assert!(!r.pass && r.range.1 < 1e-13);
    }

    #[test]
    fn lambda_below_one_rejected() {
        assert!(MediumPair::constant(SymMat2::IDENTITY, 1.0, SymMat2::IDENTITY, 1.0, 0.5).is_err());
    }

    #[test]
    fn table_field_reproduces_linear_data() {
        let mesh = mesh_unit_disk(2).unwrap();
        let values: Vec<f64> = mesh.vertices().iter().map(|p| 1.0 + 2.0 * p.x - p.y).collect();
        let field = Field::table(mesh, values).unwrap();
        for p in [Point2::new(0.1, 0.3), Point2::new(-0.5, 0.2), Point2::new(0.0, -0.9)] {
            assert!((field.eval(p) - (1.0 + 2.0 * p.x - p.y)).abs() < 1e-12);
        }
    }
}
