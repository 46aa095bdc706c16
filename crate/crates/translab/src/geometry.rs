//! Triangular meshes of planar domains with oriented boundary data.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

/// Default cap on [`mesh_unit_disk`] refinement.
pub const DEFAULT_LEVEL_CAP: u32 = 9;

/// Default angular jitter of the disk mesh, as a fraction of the ring spacing.
pub const DEFAULT_DISK_JITTER: f64 = 0.05;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("refinement level {level} exceeds the configured cap {cap}")]
    LevelCap { level: u32, cap: u32 },
    #[error("degenerate rectangle: width {width}, height {height}")]
    DegenerateRectangle { width: f64, height: f64 },
    #[error("rectangle needs at least one cell per direction (nx = {nx}, ny = {ny})")]
    EmptyGrid { nx: usize, ny: usize },
    #[error("triangle {index} has non-positive signed area {area:e}")]
    InvertedTriangle { index: usize, area: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        self.sub(other).norm()
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
pub fn doubled_signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    /// The unique triangle containing this edge.
    pub triangle: usize,
}

/// A validated, counter-clockwise oriented triangulation of a simply connected domain.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    characteristic_h: f64,
}

impl TriMesh {
    /// Validates connectivity and orientation. Boundary edges are matched against
    /// the edges that belong to exactly one triangle.
    pub fn new(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(MeshError::Invalid("mesh has no triangles".into()));
        }
        if let Some(i) = vertices.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(MeshError::Invalid(format!("vertex {i} is not finite")));
        }
        let mut referenced = vec![false; nv];
        for (index, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::Invalid(format!(
                        "triangle {index} references vertex {v} but only {nv} vertices exist"
                    )));
                }
                referenced[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Invalid(format!("triangle {index} repeats a vertex")));
            }
            let area = 0.5 * doubled_signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(MeshError::InvertedTriangle { index, area });
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(MeshError::Invalid(format!("vertex {v} is not referenced by any triangle")));
        }

        let mut edge_owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut characteristic_h: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_owners.entry(key(a, b)).or_default().push(t);
                characteristic_h = characteristic_h.max(vertices[a].dist(vertices[b]));
            }
        }
        let mut open_edges = 0usize;
        for (&(a, b), owners) in &edge_owners {
            match owners.len() {
                1 => open_edges += 1,
                2 => {}
                n => {
                    return Err(MeshError::Invalid(format!(
                        "edge ({a}, {b}) is shared by {n} triangles"
                    )))
                }
            }
        }
        let euler = nv as i64 - edge_owners.len() as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(MeshError::Invalid(format!(
                "Euler characteristic V - E + F = {euler}, expected 1"
            )));
        }
        if boundary.len() != open_edges {
            return Err(MeshError::Invalid(format!(
                "{} boundary edges listed but the triangulation has {open_edges}",
                boundary.len()
            )));
        }
        let mut seen = HashMap::new();
        for (i, e) in boundary.iter().enumerate() {
            let owners = edge_owners.get(&key(e.a, e.b)).ok_or_else(|| {
                MeshError::Invalid(format!("boundary edge {i} ({}, {}) is not a mesh edge", e.a, e.b))
            })?;
            if owners.as_slice() != [e.triangle] {
                return Err(MeshError::Invalid(format!(
                    "boundary edge {i} ({}, {}) does not belong to exactly triangle {}",
                    e.a, e.b, e.triangle
                )));
            }
            if seen.insert(key(e.a, e.b), i).is_some() {
                return Err(MeshError::Invalid(format!("boundary edge {i} is listed twice")));
            }
        }
        check_single_loop(&boundary)?;

        Ok(Self { vertices, triangles, boundary, characteristic_h })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Longest edge length.
    pub fn characteristic_h(&self) -> f64 {
        self.characteristic_h
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * doubled_signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.triangle_points(t);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                edges.insert(key(tri[k], tri[(k + 1) % 3]));
            }
        }
        edges.len()
    }

    /// Flags for vertices lying on the boundary loop.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in &self.boundary {
            mask[e.a] = true;
            mask[e.b] = true;
        }
        mask
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_single_loop(boundary: &[BoundaryEdge]) -> Result<(), MeshError> {
    if boundary.len() < 3 {
        return Err(MeshError::Invalid("boundary has fewer than 3 edges".into()));
    }
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for e in boundary {
        adjacency.entry(e.a).or_default().push(e.b);
        adjacency.entry(e.b).or_default().push(e.a);
    }
    if let Some((v, n)) = adjacency.iter().find(|(_, n)| n.len() != 2) {
        return Err(MeshError::Invalid(format!(
            "boundary vertex {v} has {} boundary neighbours, expected 2",
            n.len()
        )));
    }
    let start = boundary[0].a;
    let (mut prev, mut cur) = (start, boundary[0].b);
    let mut steps = 1;
    while cur != start {
        let n = &adjacency[&cur];
        let next = if n[0] == prev { n[1] } else { n[0] };
        prev = cur;
        cur = next;
        steps += 1;
        if steps > boundary.len() {
            break;
        }
    }
    if steps != boundary.len() {
        return Err(MeshError::Invalid(format!(
            "boundary splits into several loops (first loop has {steps} of {} edges)",
            boundary.len()
        )));
    }
    Ok(())
}

fn boundary_from_triangles(triangles: &[[usize; 3]]) -> Vec<BoundaryEdge> {
    let mut owners: HashMap<(usize, usize), (usize, usize, usize, u8)> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            owners
                .entry(key(a, b))
                .and_modify(|e| e.3 += 1)
                .or_insert((a, b, t, 1));
        }
    }
    let mut edges: Vec<BoundaryEdge> = owners
        .into_values()
        .filter(|e| e.3 == 1)
        .map(|(a, b, triangle, _)| BoundaryEdge { a, b, triangle })
        .collect();
    edges.sort_by_key(|e| (e.triangle, e.a, e.b));
    edges
}

/// Uniform value in `[-1, 1]` from a counter, used for the reproducible angular jitter.
fn hashed_unit(ring: u64, index: u64) -> f64 {
    let mut z = ring.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Concentric-ring mesh of the unit disk with the default cap and jitter.
pub fn mesh_unit_disk(refinement_level: u32) -> Result<TriMesh, MeshError> {
    mesh_unit_disk_with(refinement_level, DEFAULT_LEVEL_CAP, DEFAULT_DISK_JITTER)
}

/// Ring `r` of `R = 2^level` rings carries `6r` vertices at radius `r / R`, except that the
/// innermost ring of a multi-ring mesh sits at `1.18 / R`. Neighbouring rings are stitched
/// by an advancing front that always takes the shorter diagonal. Vertices of interior rings
/// beyond the first are shifted in angle by a deterministic fraction (at most `jitter`) of
/// the ring spacing, which breaks the six-fold symmetry of the construction.
pub fn mesh_unit_disk_with(refinement_level: u32, cap: u32, jitter: f64) -> Result<TriMesh, MeshError> {
    if refinement_level > cap {
        return Err(MeshError::LevelCap { level: refinement_level, cap });
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(MeshError::Invalid(format!("disk jitter {jitter} must lie in [0, 0.5)")));
    }
    let rings = 1usize << refinement_level;
    let mut vertices = vec![Point2::new(0.0, 0.0)];
    let mut ring_start = vec![0usize];
    for r in 1..=rings {
        ring_start.push(vertices.len());
        let count = 6 * r;
        let spacing = 2.0 * PI / count as f64;
        let radius = if r == 1 && rings > 1 { 1.18 } else { r as f64 } / rings as f64;
        for k in 0..count {
            let shake = if r == 1 || r == rings { 0.0 } else { jitter * hashed_unit(r as u64, k as u64) };
            let phi = spacing * (k as f64 + shake);
            let (s, c) = phi.sin_cos();
            if r == rings {
                vertices.push(Point2::new(c, s));
            } else {
                vertices.push(Point2::new(radius * c, radius * s));
            }
        }
    }

    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for k in 0..6 {
        triangles.push([0, ring_start[1] + k, ring_start[1] + (k + 1) % 6]);
    }
    for r in 2..=rings {
        let (n0, n1) = (6 * (r - 1), 6 * r);
        let (s0, s1) = (ring_start[r - 1], ring_start[r]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < n0 || j < n1 {
            let advance_outer = if i == n0 {
                true
            } else if j == n1 {
                false
            } else {
                let outer_diagonal = vertices[s0 + i % n0].dist(vertices[s1 + (j + 1) % n1]);
                let inner_diagonal = vertices[s0 + (i + 1) % n0].dist(vertices[s1 + j % n1]);
                outer_diagonal <= inner_diagonal
            };
            if advance_outer {
                triangles.push([s0 + i % n0, s1 + j % n1, s1 + (j + 1) % n1]);
                j += 1;
            } else {
                triangles.push([s0 + i % n0, s1 + j % n1, s0 + (i + 1) % n0]);
                i += 1;
            }
        }
    }
    let boundary = boundary_from_triangles(&triangles);
    TriMesh::new(vertices, triangles, boundary)
}

/// Structured mesh of the axis-aligned rectangle spanned by two opposite corners.
pub fn mesh_rectangle(nx: usize, ny: usize, corners: (Point2, Point2)) -> Result<TriMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::EmptyGrid { nx, ny });
    }
    let (p, q) = corners;
    let (x0, x1) = (p.x.min(q.x), p.x.max(q.x));
    let (y0, y1) = (p.y.min(q.y), p.y.max(q.y));
    let (width, height) = (x1 - x0, y1 - y0);
    if !(width > 0.0 && height > 0.0) {
        return Err(MeshError::DegenerateRectangle { width, height });
    }
    let (dx, dy) = (width / nx as f64, height / ny as f64);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point2::new(x0 + i as f64 * dx, y0 + j as f64 * dy));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let boundary = boundary_from_triangles(&triangles);
    TriMesh::new(vertices, triangles, boundary)
}

/// Writes the `tmesh 1` ASCII format. Coordinates use the shortest round-trip representation.
pub fn save_mesh<W: Write>(mesh: &TriMesh, mut sink: W) -> Result<(), MeshError> {
    writeln!(sink, "tmesh 1")?;
    writeln!(sink, "{} {} {}", mesh.vertices.len(), mesh.triangles.len(), mesh.boundary.len())?;
    for p in &mesh.vertices {
        writeln!(sink, "{:?} {:?}", p.x, p.y)?;
    }
    for [a, b, c] in &mesh.triangles {
        writeln!(sink, "{a} {b} {c}")?;
    }
    for e in &mesh.boundary {
        writeln!(sink, "{} {} {}", e.a, e.b, e.triangle)?;
    }
    Ok(())
}

pub fn load_mesh<R: BufRead>(source: R) -> Result<TriMesh, MeshError> {
    let mut lines = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim().to_string();
        if !content.is_empty() {
            lines.push((i + 1, content));
        }
    }
    let mut cursor = lines.iter();
    let last_line = lines.last().map_or(0, |l| l.0);
    let mut next = |what: &str| {
        cursor.next().ok_or_else(|| MeshError::Parse {
            line: last_line + 1,
            message: format!("unexpected end of file while reading {what}"),
        })
    };

    let (line, header) = next("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["tmesh", "1"] {
        return Err(MeshError::Parse { line: *line, message: format!("expected `tmesh 1`, found `{header}`") });
    }
    let (line, counts) = next("counts")?;
    let counts: Vec<usize> = parse_fields(*line, counts, 3)?;
    let (nv, nt, nb) = (counts[0], counts[1], counts[2]);

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let (line, text) = next(&format!("vertex {i}"))?;
        let xy: Vec<f64> = parse_fields(*line, text, 2)?;
        vertices.push(Point2::new(xy[0], xy[1]));
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut triangle_lines = Vec::with_capacity(nt);
    for t in 0..nt {
        let (line, text) = next(&format!("triangle {t}"))?;
        let ids: Vec<usize> = parse_fields(*line, text, 3)?;
        if let Some(&v) = ids.iter().find(|&&v| v >= nv) {
            return Err(MeshError::Parse { line: *line, message: format!("triangle {t} references missing vertex {v}") });
        }
        triangles.push([ids[0], ids[1], ids[2]]);
        triangle_lines.push(*line);
    }
    let mut boundary = Vec::with_capacity(nb);
    for e in 0..nb {
        let (line, text) = next(&format!("boundary edge {e}"))?;
        let ids: Vec<usize> = parse_fields(*line, text, 3)?;
        if ids[0] >= nv || ids[1] >= nv || ids[2] >= nt {
            return Err(MeshError::Parse { line: *line, message: format!("boundary edge {e} has an out-of-range index") });
        }
        boundary.push(BoundaryEdge { a: ids[0], b: ids[1], triangle: ids[2] });
    }
    if let Some((line, text)) = cursor.next() {
        return Err(MeshError::Parse { line: *line, message: format!("trailing content `{text}`") });
    }
    TriMesh::new(vertices, triangles, boundary).map_err(|err| match err {
        MeshError::InvertedTriangle { index, area } => MeshError::Parse {
            line: triangle_lines[index],
            message: format!("triangle {index} is clockwise or degenerate (signed area {area:e})"),
        },
        other => other,
    })
}

fn parse_fields<T: std::str::FromStr>(line: usize, text: &str, expected: usize) -> Result<Vec<T>, MeshError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != expected {
        return Err(MeshError::Parse {
            line,
            message: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| f.parse::<T>().map_err(|_| MeshError::Parse { line, message: format!("cannot parse `{f}`") }))
        .collect()
}

/// Outward unit normal and unit tangent at a boundary edge midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryFrame {
    pub midpoint: Point2,
    pub normal: [f64; 2],
    /// `normal` rotated by +90 degrees.
    pub tangent: [f64; 2],
    pub edge: usize,
}

pub fn boundary_frames(mesh: &TriMesh) -> Vec<BoundaryFrame> {
    mesh.boundary
        .iter()
        .enumerate()
        .map(|(edge, e)| {
            let (pa, pb) = (mesh.vertices[e.a], mesh.vertices[e.b]);
            let midpoint = Point2::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y));
            let d = pb.sub(pa);
            let len = d.norm();
            let mut normal = [d.y / len, -d.x / len];
            let outward = midpoint.sub(mesh.centroid(e.triangle));
            if normal[0] * outward.x + normal[1] * outward.y < 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            let tangent = [-normal[1], normal[0]];
            BoundaryFrame { midpoint, normal, tangent, edge }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_disk_is_a_hexagon_fan() {
        let m = mesh_unit_disk(0).unwrap();
        assert_eq!(m.vertices().len(), 7);
        assert_eq!(m.triangles().len(), 6);
        assert_eq!(m.boundary_edges().len(), 6);
    }

    #[test]
    fn disk_counts_follow_ring_formula() {
        for level in 0..5 {
            let m = mesh_unit_disk(level).unwrap();
            let rings = 1usize << level;
            assert_eq!(m.vertices().len(), 1 + 3 * rings * (rings + 1));
            assert_eq!(m.triangles().len(), 6 * rings * rings);
            let v = m.vertices().len() as i64;
            assert_eq!(v - m.edge_count() as i64 + m.triangles().len() as i64, 1);
        }
    }

    #[test]
    fn disk_boundary_on_circle() {
        let m = mesh_unit_disk(3).unwrap();
        let mask = m.boundary_vertex_mask();
        for (p, on) in m.vertices().iter().zip(mask) {
            if on {
                assert!((p.norm_sq() - 1.0).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn level_cap_is_enforced() {
        assert!(matches!(mesh_unit_disk(10), Err(MeshError::LevelCap { level: 10, cap: 9 })));
        assert!(mesh_unit_disk_with(3, 2, 0.0).is_err());
    }

    #[test]
    fn refinement_shrinks_h() {
        let mut prev = mesh_unit_disk(0).unwrap().characteristic_h();
        for level in 1..6 {
            let h = mesh_unit_disk(level).unwrap().characteristic_h();
            assert!(h <= 0.6 * prev, "level {level}: {h} vs {prev}");
            prev = h;
        }
    }

    #[test]
    fn rectangle_counts_and_areas() {
        let unit = (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let m = mesh_rectangle(1, 1, unit).unwrap();
        assert_eq!((m.vertices().len(), m.triangles().len()), (4, 2));
        let m = mesh_rectangle(2, 2, unit).unwrap();
        assert_eq!((m.vertices().len(), m.triangles().len()), (9, 8));
        let m = mesh_rectangle(3, 5, (Point2::new(-1.0, 0.0), Point2::new(2.0, 0.5))).unwrap();
        let expected = (3.0 / 3.0) * (0.5 / 5.0) / 2.0;
        for t in 0..m.triangles().len() {
            assert!((m.triangle_area(t) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_rectangle_rejected() {
        let flat = (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        assert!(matches!(mesh_rectangle(2, 2, flat), Err(MeshError::DegenerateRectangle { .. })));
        assert!(mesh_rectangle(0, 2, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))).is_err());
    }

    #[test]
    fn square_bottom_edge_frame() {
        let m = mesh_rectangle(1, 1, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))).unwrap();
        let frames = boundary_frames(&m);
        let bottom = frames.iter().find(|f| f.midpoint.y.abs() < 1e-15).unwrap();
        assert_eq!(bottom.normal, [0.0, -1.0]);
        assert_eq!(bottom.tangent, [1.0, 0.0]);
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let v = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let err = TriMesh::new(v, vec![[0, 2, 1]], vec![]).unwrap_err();
        assert!(matches!(err, MeshError::InvertedTriangle { index: 0, .. }));
    }
}
