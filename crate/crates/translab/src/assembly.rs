//! Piecewise-linear discretization of the coupled problem on the trace-glued space.
//!
//! Medium 1 and medium 2 each carry a full nodal P1 field; the two fields share their
//! boundary values. With stiffness `S_j` and mass `W_j` of medium `j`, the pencil is
//! `K = -S_1 + S_2` and `M = W_1 - W_2`, glued along the boundary.

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{boundary_frames, doubled_signed_area, Point2, TriMesh};
use crate::linalg::{lu_factor, ComplexLu, LinalgError, SparseSym, C64};
use crate::media::{check_complementing, check_ellipticity, check_jump, mesh_samples, MediumPair, SymMat2};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("triangle with vertices {0:?} is degenerate")]
    DegenerateTriangle([Point2; 3]),
    #[error("coefficient of medium {medium} is not finite at triangle {triangle}")]
    BadCoefficient { medium: usize, triangle: usize },
    #[error("expected nodal data of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Exact P1 stiffness matrix `int A grad(phi_i) . grad(phi_j)` for constant `A`.
pub fn element_stiffness(pts: [Point2; 3], a: &SymMat2) -> Result<[[f64; 3]; 3], AssemblyError> {
    let doubled = doubled_signed_area(pts[0], pts[1], pts[2]);
    if !(doubled.abs() > 0.0) {
        return Err(AssemblyError::DegenerateTriangle(pts));
    }
    let grads: [[f64; 2]; 3] = std::array::from_fn(|i| {
        let (pj, pk) = (pts[(i + 1) % 3], pts[(i + 2) % 3]);
        [(pj.y - pk.y) / doubled, (pk.x - pj.x) / doubled]
    });
    let area = 0.5 * doubled.abs();
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| area * a.form(grads[i], grads[j]))))
}

/// Consistent P1 mass matrix for constant density.
pub fn element_mass(pts: [Point2; 3], sigma: f64) -> Result<[[f64; 3]; 3], AssemblyError> {
    let doubled = doubled_signed_area(pts[0], pts[1], pts[2]);
    if !(doubled.abs() > 0.0) {
        return Err(AssemblyError::DegenerateTriangle(pts));
    }
    let s = sigma * 0.5 * doubled.abs() / 12.0;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 2.0 * s } else { s })))
}

/// Vertex-to-DOF maps of the two media. Boundary vertices share one DOF.
#[derive(Debug, Clone)]
pub struct DofMap {
    medium1: Vec<usize>,
    medium2: Vec<usize>,
    boundary: Vec<bool>,
    n_dofs: usize,
}

impl DofMap {
    /// Medium 1 takes DOFs `0..V` in vertex order; interior vertices of medium 2 follow.
    pub fn new(mesh: &TriMesh) -> Self {
        let boundary = mesh.boundary_vertex_mask();
        let nv = boundary.len();
        let medium1: Vec<usize> = (0..nv).collect();
        let mut next = nv;
        let medium2 = boundary
            .iter()
            .enumerate()
            .map(|(v, &on)| {
                if on {
                    v
                } else {
                    next += 1;
                    next - 1
                }
            })
            .collect();
        Self { medium1, medium2, boundary, n_dofs: next }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn medium(&self, j: usize) -> &[usize] {
        if j == 1 {
            &self.medium1
        } else {
            &self.medium2
        }
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn shared_dofs(&self) -> Vec<usize> {
        (0..self.boundary.len()).filter(|&v| self.boundary[v]).collect()
    }

    /// `P^T (x1, x2)`: accumulates two nodal fields onto the glued space.
    pub fn gather(&self, x1: &[C64], x2: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n_dofs];
        for v in 0..self.boundary.len() {
            y[self.medium1[v]] += x1[v];
            y[self.medium2[v]] += x2[v];
        }
        y
    }

    /// `P y`: the two nodal fields encoded by a glued vector.
    pub fn scatter(&self, y: &[C64]) -> (Vec<C64>, Vec<C64>) {
        (self.medium1.iter().map(|&d| y[d]).collect(), self.medium2.iter().map(|&d| y[d]).collect())
    }
}

/// Sparse pencil `(K, M)` together with the unsigned matrices that define norms.
#[derive(Debug, Clone)]
pub struct TransmissionPencil {
    pub k: SparseSym,
    pub m: SparseSym,
    /// Glued `S_1 + S_2`.
    pub stiffness_abs: SparseSym,
    /// Glued `W_1 + W_2`.
    pub mass_abs: SparseSym,
    /// Nodal mass matrices `W_1`, `W_2` of the two media.
    pub mass1: SparseSym,
    pub mass2: SparseSym,
    pub stiffness1: SparseSym,
    pub stiffness2: SparseSym,
    pub dof_map: DofMap,
    pub mesh: Arc<TriMesh>,
    pub pair: Arc<MediumPair>,
    pub warnings: Vec<String>,
}

/// Per-medium stiffness and mass over the nodal space of the mesh, coefficients at centroids.
fn medium_matrices(mesh: &TriMesh, pair: &MediumPair, j: usize) -> Result<(SparseSym, SparseSym), AssemblyError> {
    let nv = mesh.vertices().len();
    let mut s = Vec::with_capacity(9 * mesh.triangles().len());
    let mut w = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (a, sigma) = pair.medium(j, mesh.centroid(t));
        if ![a.a11, a.a12, a.a22, sigma].iter().all(|v| v.is_finite()) {
            return Err(AssemblyError::BadCoefficient { medium: j, triangle: t });
        }
        let pts = mesh.triangle_points(t);
        let ke = element_stiffness(pts, &a)?;
        let me = element_mass(pts, sigma)?;
        for r in 0..3 {
            for c in 0..3 {
                s.push((tri[r], tri[c], ke[r][c]));
                w.push((tri[r], tri[c], me[r][c]));
            }
        }
    }
    Ok((SparseSym::from_triplets(nv, &s), SparseSym::from_triplets(nv, &w)))
}

fn glue(dofs: &DofMap, a: &SparseSym, alpha: f64, b: &SparseSym, beta: f64) -> SparseSym {
    let mut t = Vec::with_capacity(a.nnz() + b.nnz());
    let (d1, d2) = (dofs.medium(1), dofs.medium(2));
    t.extend(a.iter().map(|(i, j, v)| (d1[i], d1[j], alpha * v)));
    t.extend(b.iter().map(|(i, j, v)| (d2[i], d2[j], beta * v)));
    SparseSym::from_triplets(dofs.n_dofs(), &t)
}

pub fn assemble_pencil(mesh: &TriMesh, pair: &MediumPair) -> Result<TransmissionPencil, AssemblyError> {
    let (s1, w1) = medium_matrices(mesh, pair, 1)?;
    let (s2, w2) = medium_matrices(mesh, pair, 2)?;
    let dof_map = DofMap::new(mesh);

    let mut warnings = Vec::new();
    let frames = boundary_frames(mesh);
    for report in check_ellipticity(pair, &mesh_samples(mesh))
        .into_iter()
        .chain([check_complementing(pair, &frames), check_jump(pair, &frames)])
    {
        if !report.pass {
            warnings.push(format!(
                "condition {:?} fails: margin {:.3e} at ({:.4}, {:.4})",
                report.condition, report.margin, report.location.x, report.location.y
            ));
        }
    }

    Ok(TransmissionPencil {
        k: glue(&dof_map, &s1, -1.0, &s2, 1.0),
        m: glue(&dof_map, &w1, 1.0, &w2, -1.0),
        stiffness_abs: glue(&dof_map, &s1, 1.0, &s2, 1.0),
        mass_abs: glue(&dof_map, &w1, 1.0, &w2, 1.0),
        mass1: w1,
        mass2: w2,
        stiffness1: s1,
        stiffness2: s2,
        dof_map,
        mesh: Arc::new(mesh.clone()),
        pair: Arc::new(pair.clone()),
        warnings,
    })
}

impl TransmissionPencil {
    pub fn n_dofs(&self) -> usize {
        self.dof_map.n_dofs()
    }

    pub fn n_vertices(&self) -> usize {
        self.dof_map.n_vertices()
    }

    /// Load vector `P^T (W_1 f_1 - W_2 f_2)`.
    pub fn source_rhs(&self, f1: &[C64], f2: &[C64]) -> Result<Vec<C64>, AssemblyError> {
        let nv = self.n_vertices();
        for f in [f1, f2] {
            if f.len() != nv {
                return Err(AssemblyError::Dimension { expected: nv, got: f.len() });
            }
        }
        let g1 = self.mass1.mul_complex(f1);
        let g2: Vec<C64> = self.mass2.mul_complex(f2).into_iter().map(|z| -z).collect();
        Ok(self.dof_map.gather(&g1, &g2))
    }
}

/// Right-hand side of the source problem with densities `Sigma_j f_j`.
pub fn assemble_source_rhs(pencil: &TransmissionPencil, f1: &[C64], f2: &[C64]) -> Result<Vec<C64>, AssemblyError> {
    pencil.source_rhs(f1, f2)
}

/// Factored `K - lambda M` acting as the solution operator of the source problem.
#[derive(Debug)]
pub struct DiscreteResolvent<'a> {
    pencil: &'a TransmissionPencil,
    lu: ComplexLu,
    lambda: C64,
}

pub fn make_resolvent(pencil: &TransmissionPencil, lambda: C64) -> Result<DiscreteResolvent<'_>, AssemblyError> {
    let lu = lu_factor(&pencil.k, &pencil.m, lambda)?;
    Ok(DiscreteResolvent { pencil, lu, lambda })
}

impl<'a> DiscreteResolvent<'a> {
    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn pencil(&self) -> &'a TransmissionPencil {
        self.pencil
    }

    pub fn lu(&self) -> &ComplexLu {
        &self.lu
    }

    /// Nodal solution pair `(u_1, u_2)` for sources `(f_1, f_2)`.
    pub fn apply(&self, f1: &[C64], f2: &[C64]) -> Result<(Vec<C64>, Vec<C64>), AssemblyError> {
        let rhs = self.pencil.source_rhs(f1, f2)?;
        let x = self.lu.solve(&rhs)?;
        Ok(self.pencil.dof_map.scatter(&x))
    }

    /// Glued solution of `(K - lambda M) x = rhs`.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>, AssemblyError> {
        Ok(self.lu.solve(rhs)?)
    }

    /// Glued solution of `(K - conj(lambda) M) x = rhs`.
    pub fn solve_adjoint_shift(&self, rhs: &[C64]) -> Result<Vec<C64>, AssemblyError> {
        Ok(self.lu.solve_conjugate_shift(rhs)?)
    }
}

/// Single-medium Dirichlet problem on interior vertices: returns stiffness and mass
/// restricted to the interior, so that `-S u = lambda W u` discretizes
/// `div(A grad u) = lambda Sigma u` with zero boundary values.
pub fn single_medium_dirichlet(mesh: &TriMesh, a: SymMat2, sigma: f64) -> Result<(SparseSym, SparseSym), AssemblyError> {
    let pair = MediumPair::constant(a, sigma, a, sigma, 1.0).expect("lambda = 1 is admissible");
    let (s, w) = medium_matrices(mesh, &pair, 1)?;
    let mask = mesh.boundary_vertex_mask();
    let mut index = vec![usize::MAX; mask.len()];
    let mut n = 0;
    for (v, &on) in mask.iter().enumerate() {
        if !on {
            index[v] = n;
            n += 1;
        }
    }
    let restrict = |m: &SparseSym| {
        let t: Vec<_> = m
            .iter()
            .filter(|&(i, j, _)| !mask[i] && !mask[j])
            .map(|(i, j, v)| (index[i], index[j], v))
            .collect();
        SparseSym::from_triplets(n, &t)
    };
    Ok((restrict(&s), restrict(&w)))
}
