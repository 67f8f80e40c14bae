//! Structured Freudenthal (Kuhn) triangulation of the flat torus
//! `(ℝ/l₁ℤ) × (ℝ/l₂ℤ) × (ℝ/l₃ℤ)`.
//!
//! Every grid cell is split into six tetrahedra sharing the main diagonal.
//! Each tetrahedron is a chain `p ≤ p + a ≤ p + a + b ≤ p + (1,1,1)` in the
//! componentwise lattice order, so every simplex is keyed by its lowest
//! lattice point (wrapped into the fundamental domain) and its 0/1 offset
//! steps. Geometry is always evaluated on the lifted representative in ℝ³;
//! periodicity only enters through vertex identification.
//!
//! Edges are oriented from the lower to the higher chain endpoint, which makes
//! `y_e - x_e` a nonnegative combination of the cell spacings.

use crate::error::{Error, Result};
use crate::sym::{Mat3, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance for orthonormality checks of unit-scale frames.
pub const FRAME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl TorusGeometry {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        let g = TorusGeometry { l1, l2, l3 };
        g.validate()?;
        Ok(g)
    }

    /// The cube `(2π)³`.
    pub fn cube_2pi() -> Self {
        TorusGeometry {
            l1: 2.0 * PI,
            l2: 2.0 * PI,
            l3: 2.0 * PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sides();
        if s.iter().all(|l| l.is_finite() && *l > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidGeometry(s))
        }
    }

    pub fn sides(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn volume(&self) -> f64 {
        self.l1 * self.l2 * self.l3
    }

    /// Reduces a point into the fundamental domain `[0, l₁) × [0, l₂) × [0, l₃)`.
    pub fn wrap(&self, x: &Vec3) -> Vec3 {
        let s = self.sides();
        Vec3::from_fn(|i, _| x[i].rem_euclid(s[i]))
    }
}

/// The seven positive lattice steps an edge can take, in canonical order.
pub const EDGE_STEPS: [[i64; 3]; 7] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Axis orderings of the six tetrahedra in a cell.
pub const TET_PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Local vertex pairs of the six edges of a tetrahedron (tail, head).
pub const TET_EDGE_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local vertex pairs of the three edges of a triangle.
pub const FACE_EDGE_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

const UNIT: [[i64; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

/// The twelve (first step, second step) pairs of disjoint nonzero 0/1 steps
/// that describe a triangle `q, q + d₁, q + d₁ + d₂`.
fn face_step_pairs() -> Vec<([i64; 3], [i64; 3])> {
    let mut out = Vec::with_capacity(12);
    for a in 1..8u8 {
        for b in 1..8u8 {
            if a & b == 0 {
                let bits = |m: u8| [(m & 1) as i64, ((m >> 1) & 1) as i64, ((m >> 2) & 1) as i64];
                out.push((bits(a), bits(b)));
            }
        }
    }
    out
}

fn add(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[derive(Debug, Clone, Serialize)]
pub struct Tet {
    /// Vertex ids in chain order.
    pub vertices: [usize; 4],
    /// Periodic wrap of each lifted vertex, in cells.
    pub shifts: [[i64; 3]; 4],
    /// Lifted vertex coordinates.
    pub lifted: [Vec3; 4],
    /// Edge ids for [`TET_EDGE_PAIRS`].
    pub edges: [usize; 6],
    /// `faces[k]` is the face opposite local vertex `k`.
    pub faces: [usize; 4],
    pub volume: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [Vec3; 4],
}

impl Tet {
    /// Local index of vertex id `v` whose lifted position is `p`.
    fn local_of_point(&self, p: &Vec3) -> Option<usize> {
        self.lifted
            .iter()
            .position(|q| (q - p).norm() < 1e-9 * (1.0 + p.norm()))
    }

    pub fn centroid(&self) -> Vec3 {
        (self.lifted[0] + self.lifted[1] + self.lifted[2] + self.lifted[3]) / 4.0
    }
}

/// One entry of the cyclic star of an edge: the face, its frame, and the
/// tetrahedron swept next when turning counter-clockwise around `t_e`.
#[derive(Debug, Clone, Serialize)]
pub struct StarSector {
    pub face: usize,
    /// Unit vector in the face, orthogonal to the edge, pointing into the face.
    pub m: Vec3,
    /// Unit face normal with `(m, n, t)` right-handed.
    pub n: Vec3,
    /// Tetrahedron between this face and the next one in the star.
    pub tet: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    /// Lattice step from tail to head.
    pub step: [i64; 3],
    /// Lifted tail (inside the fundamental domain).
    pub x: Vec3,
    /// Lifted head `x + step · h`.
    pub y: Vec3,
    pub tangent: Vec3,
    pub length: f64,
    pub faces: Vec<usize>,
    pub tets: Vec<usize>,
    /// Counter-clockwise star around `tangent`.
    pub star: Vec<StarSector>,
}

impl Edge {
    /// `y_e - x_e`.
    pub fn vector(&self) -> Vec3 {
        self.y - self.x
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Face {
    pub vertices: [usize; 3],
    pub lifted: [Vec3; 3],
    /// Edge ids for [`FACE_EDGE_PAIRS`].
    pub edges: [usize; 3],
    /// Unit normal `(p₁ - p₀) × (p₂ - p₀)` normalized.
    pub normal: Vec3,
    /// `tets[0]` lies on the side `normal` points into, `tets[1]` on the other.
    pub tets: [usize; 2],
    pub area: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicMesh {
    pub geometry: TorusGeometry,
    pub grid: [usize; 3],
    /// Cell spacing per axis.
    pub spacing: [f64; 3],
    /// Lattice coordinates of each vertex.
    pub vertices: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    pub tets: Vec<Tet>,
    /// Edges incident to each vertex.
    pub vertex_edges: Vec<Vec<usize>>,
}

impl PeriodicMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Largest simplex diameter (the cell diagonal).
    pub fn mesh_width(&self) -> f64 {
        self.spacing.iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    pub fn vertex_id(&self, lattice: [i64; 3]) -> usize {
        vertex_id(self.grid, lattice)
    }

    /// Lifted coordinates of a lattice point.
    pub fn point(&self, lattice: [i64; 3]) -> Vec3 {
        Vec3::new(
            lattice[0] as f64 * self.spacing[0],
            lattice[1] as f64 * self.spacing[1],
            lattice[2] as f64 * self.spacing[2],
        )
    }

    pub fn vertex_position(&self, v: usize) -> Vec3 {
        let p = self.vertices[v];
        self.point([p[0] as i64, p[1] as i64, p[2] as i64])
    }

    pub fn check_edge(&self, e: usize) -> Result<()> {
        if e < self.edges.len() {
            Ok(())
        } else {
            Err(Error::InvalidId {
                what: "edge",
                id: e,
                count: self.edges.len(),
            })
        }
    }

    /// Cyclic star of `e`, counter-clockwise around `t_e`.
    pub fn edge_star(&self, e: usize) -> Result<&[StarSector]> {
        self.check_edge(e)?;
        Ok(&self.edges[e].star)
    }

    /// Position of local edge `e` inside tet `t`, if any.
    pub fn local_edge(&self, t: usize, e: usize) -> Option<usize> {
        self.tets[t].edges.iter().position(|&x| x == e)
    }

    /// The tetrahedron containing point `x` (any representative of it).
    pub fn locate(&self, x: &Vec3) -> usize {
        self.locator().locate(x)
    }

    pub fn locator(&self) -> Locator {
        Locator {
            geometry: self.geometry,
            grid: self.grid,
            spacing: self.spacing,
        }
    }

    /// Counts and geometry as JSON; incidence tables when `full`.
    pub fn summary_json(&self, full: bool) -> serde_json::Value {
        let mut v = serde_json::json!({
            "geometry": self.geometry,
            "grid": self.grid,
            "spacing": self.spacing,
            "mesh_width": self.mesh_width(),
            "counts": {
                "vertices": self.n_vertices(),
                "edges": self.n_edges(),
                "faces": self.n_faces(),
                "tets": self.n_tets(),
                "euler": self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
                    - self.n_tets() as i64,
            },
        });
        if full {
            v["incidence"] = serde_json::json!({
                "vertices": self.vertices,
                "edges": self.edges.iter().map(|e| serde_json::json!({
                    "tail": e.tail, "head": e.head, "step": e.step,
                    "length": e.length, "faces": e.faces, "tets": e.tets,
                })).collect::<Vec<_>>(),
                "faces": self.faces.iter().map(|f| serde_json::json!({
                    "vertices": f.vertices, "edges": f.edges, "tets": f.tets,
                })).collect::<Vec<_>>(),
                "tets": self.tets.iter().map(|t| serde_json::json!({
                    "vertices": t.vertices, "shifts": t.shifts, "edges": t.edges, "faces": t.faces,
                })).collect::<Vec<_>>(),
            });
        }
        v
    }
}

/// Point location without borrowing the mesh.
#[derive(Debug, Clone, Copy)]
pub struct Locator {
    geometry: TorusGeometry,
    grid: [usize; 3],
    spacing: [f64; 3],
}

impl Locator {
    pub fn locate(&self, x: &Vec3) -> usize {
        let w = self.geometry.wrap(x);
        let mut cell = [0i64; 3];
        let mut frac = [0.0; 3];
        for i in 0..3 {
            let s = w[i] / self.spacing[i];
            let c = (s.floor() as i64).clamp(0, self.grid[i] as i64 - 1);
            cell[i] = c;
            frac[i] = s - c as f64;
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]));
        let perm = TET_PERMS.iter().position(|p| *p == order).unwrap_or(0);
        6 * vertex_id(self.grid, cell) + perm
    }
}

fn vertex_id(grid: [usize; 3], p: [i64; 3]) -> usize {
    let w = |i: usize| p[i].rem_euclid(grid[i] as i64) as usize;
    w(0) + grid[0] * (w(1) + grid[1] * w(2))
}

fn shift_of(grid: [usize; 3], p: [i64; 3]) -> [i64; 3] {
    [
        p[0].div_euclid(grid[0] as i64),
        p[1].div_euclid(grid[1] as i64),
        p[2].div_euclid(grid[2] as i64),
    ]
}

fn edge_id(grid: [usize; 3], tail: [i64; 3], step: [i64; 3]) -> usize {
    let k = EDGE_STEPS
        .iter()
        .position(|s| *s == step)
        .expect("edge step is a nonzero 0/1 vector");
    7 * vertex_id(grid, tail) + k
}

/// Counter-clockwise order (around `t`) of in-plane unit vectors `ms`,
/// starting from index 0.
pub fn cyclic_order(t: &Vec3, ms: &[Vec3]) -> Vec<usize> {
    if ms.is_empty() {
        return Vec::new();
    }
    let u1 = ms[0];
    let u2 = t.cross(&u1);
    let angle = |m: &Vec3| {
        let a = m.dot(&u2).atan2(m.dot(&u1));
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    };
    let mut idx: Vec<usize> = (0..ms.len()).collect();
    idx.sort_by(|&a, &b| angle(&ms[a]).total_cmp(&angle(&ms[b])));
    idx
}

/// Builds the Freudenthal triangulation with `grid` cells per axis.
pub fn build_torus_mesh(geometry: TorusGeometry, grid: [usize; 3]) -> Result<PeriodicMesh> {
    geometry.validate()?;
    if grid.iter().any(|&n| n < 2) {
        return Err(Error::GridTooCoarse(grid));
    }
    let sides = geometry.sides();
    let spacing = [
        sides[0] / grid[0] as f64,
        sides[1] / grid[1] as f64,
        sides[2] / grid[2] as f64,
    ];
    let n_cells = grid[0] * grid[1] * grid[2];
    let point = |p: [i64; 3]| {
        Vec3::new(
            p[0] as f64 * spacing[0],
            p[1] as f64 * spacing[1],
            p[2] as f64 * spacing[2],
        )
    };

    let mut vertices = Vec::with_capacity(n_cells);
    for k in 0..grid[2] {
        for j in 0..grid[1] {
            for i in 0..grid[0] {
                vertices.push([i, j, k]);
            }
        }
    }

    // Edges: one per (vertex, step).
    let mut edges = Vec::with_capacity(7 * n_cells);
    for v in &vertices {
        let tail = [v[0] as i64, v[1] as i64, v[2] as i64];
        for step in EDGE_STEPS {
            let head = add(tail, step);
            let x = point(tail);
            let y = point(head);
            let d = y - x;
            let length = d.norm();
            edges.push(Edge {
                tail: vertex_id(grid, tail),
                head: vertex_id(grid, head),
                step,
                x,
                y,
                tangent: d / length,
                length,
                faces: Vec::new(),
                tets: Vec::new(),
                star: Vec::new(),
            });
        }
    }

    // Faces: one per (vertex, first step, second step).
    let pairs = face_step_pairs();
    let mut faces = Vec::with_capacity(12 * n_cells);
    for v in &vertices {
        let q0 = [v[0] as i64, v[1] as i64, v[2] as i64];
        for &(d1, d2) in &pairs {
            let q1 = add(q0, d1);
            let q2 = add(q1, d2);
            let lifted = [point(q0), point(q1), point(q2)];
            let cross = (lifted[1] - lifted[0]).cross(&(lifted[2] - lifted[0]));
            let area = 0.5 * cross.norm();
            faces.push(Face {
                vertices: [
                    vertex_id(grid, q0),
                    vertex_id(grid, q1),
                    vertex_id(grid, q2),
                ],
                lifted,
                edges: [
                    edge_id(grid, q0, d1),
                    edge_id(grid, q0, add(d1, d2)),
                    edge_id(grid, q1, d2),
                ],
                normal: cross / (2.0 * area),
                tets: [usize::MAX; 2],
                area,
            });
        }
    }
    let face_id = |q0: [i64; 3], q1: [i64; 3], q2: [i64; 3]| {
        let key = (sub(q1, q0), sub(q2, q1));
        let k = pairs
            .iter()
            .position(|p| *p == key)
            .expect("tet faces are chains");
        12 * vertex_id(grid, q0) + k
    };

    // Tets: six per cell.
    let mut tets = Vec::with_capacity(6 * n_cells);
    for v in &vertices {
        let p0 = [v[0] as i64, v[1] as i64, v[2] as i64];
        for perm in TET_PERMS {
            let p1 = add(p0, UNIT[perm[0]]);
            let p2 = add(p1, UNIT[perm[1]]);
            let p3 = add(p2, UNIT[perm[2]]);
            let pts = [p0, p1, p2, p3];
            let lifted = pts.map(point);
            let d = Mat3::from_columns(&[
                lifted[1] - lifted[0],
                lifted[2] - lifted[0],
                lifted[3] - lifted[0],
            ]);
            let det = d.determinant();
            let inv = d.try_inverse().expect("Kuhn simplices are nondegenerate");
            let g1 = inv.row(0).transpose();
            let g2 = inv.row(1).transpose();
            let g3 = inv.row(2).transpose();
            let g0 = -(g1 + g2 + g3);
            let edges_local =
                TET_EDGE_PAIRS.map(|(a, b)| edge_id(grid, pts[a], sub(pts[b], pts[a])));
            let opp = |k: usize| {
                let rest: Vec<[i64; 3]> = (0..4).filter(|&i| i != k).map(|i| pts[i]).collect();
                face_id(rest[0], rest[1], rest[2])
            };
            tets.push(Tet {
                vertices: pts.map(|p| vertex_id(grid, p)),
                shifts: pts.map(|p| shift_of(grid, p)),
                lifted,
                edges: edges_local,
                faces: [opp(0), opp(1), opp(2), opp(3)],
                volume: det.abs() / 6.0,
                grad_lambda: [g0, g1, g2, g3],
            });
        }
    }

    // Incidences.
    let mut vertex_edges = vec![Vec::new(); vertices.len()];
    for (ei, e) in edges.iter().enumerate() {
        vertex_edges[e.tail].push(ei);
        vertex_edges[e.head].push(ei);
    }
    for (fi, f) in faces.iter().enumerate() {
        for &e in &f.edges {
            edges[e].faces.push(fi);
        }
    }
    let mut face_sides: Vec<Vec<(usize, bool)>> = vec![Vec::new(); faces.len()];
    for (ti, t) in tets.iter().enumerate() {
        for &e in &t.edges {
            edges[e].tets.push(ti);
        }
        for k in 0..4 {
            let f = &faces[t.faces[k]];
            // Orientation of the opposite vertex relative to the face normal,
            // measured inside this tet's own lifting.
            let base = (0..4).find(|&i| i != k).unwrap();
            let plus = (t.lifted[k] - t.lifted[base]).dot(&f.normal) > 0.0;
            face_sides[t.faces[k]].push((ti, plus));
        }
    }
    for (fi, sides) in face_sides.iter().enumerate() {
        assert_eq!(sides.len(), 2, "face {fi} must have exactly two tets");
        assert_ne!(sides[0].1, sides[1].1, "face {fi} tets on the same side");
        let (plus, minus) = if sides[0].1 {
            (sides[0].0, sides[1].0)
        } else {
            (sides[1].0, sides[0].0)
        };
        faces[fi].tets = [plus, minus];
    }

    // Frames and cyclic stars.
    for ei in 0..edges.len() {
        let t = edges[ei].tangent;
        let mut frames = Vec::with_capacity(edges[ei].faces.len());
        for &fi in &edges[ei].faces {
            let f = &faces[fi];
            let local = f.edges.iter().position(|&x| x == ei).unwrap();
            let (a, b) = FACE_EDGE_PAIRS[local];
            let c = 3 - a - b;
            let w = f.lifted[c] - f.lifted[a];
            let m = (w - t * t.dot(&w)).normalize();
            let n = t.cross(&m);
            frames.push((fi, m, n));
        }
        let ms: Vec<Vec3> = frames.iter().map(|f| f.1).collect();
        let order = cyclic_order(&t, &ms);
        let ordered: Vec<(usize, Vec3, Vec3)> = order.iter().map(|&i| frames[i]).collect();
        let k = ordered.len();
        let mut star = Vec::with_capacity(k);
        for i in 0..k {
            let (fa, m, n) = ordered[i];
            let fb = ordered[(i + 1) % k].0;
            let shared = faces[fa]
                .tets
                .iter()
                .copied()
                .find(|tt| faces[fb].tets.contains(tt))
                .expect("consecutive star faces bound a common tet");
            star.push(StarSector {
                face: fa,
                m,
                n,
                tet: shared,
            });
        }
        edges[ei].star = star;
    }

    Ok(PeriodicMesh {
        geometry,
        grid,
        spacing,
        vertices,
        edges,
        faces,
        tets,
        vertex_edges,
    })
}

impl PeriodicMesh {
    /// Lifted coordinates of edge `e`'s endpoints as seen inside tet `t`
    /// (local vertex indices), if `e` belongs to `t`.
    pub fn edge_in_tet(&self, t: usize, e: usize) -> Option<(usize, usize)> {
        self.local_edge(t, e).map(|k| TET_EDGE_PAIRS[k])
    }

    /// Dihedral angle of tet `t` at its edge `e` in the Euclidean metric.
    pub fn euclidean_dihedral(&self, t: usize, e: usize) -> Option<f64> {
        let (a, b) = self.edge_in_tet(t, e)?;
        let tet = &self.tets[t];
        let others: Vec<usize> = (0..4).filter(|&i| i != a && i != b).collect();
        let ga = tet.grad_lambda[others[0]];
        let gb = tet.grad_lambda[others[1]];
        Some(
            (-ga.dot(&gb) / (ga.norm() * gb.norm()))
                .clamp(-1.0, 1.0)
                .acos(),
        )
    }

    /// Index of lifted point `p` among tet `t`'s local vertices.
    pub fn local_vertex_at(&self, t: usize, p: &Vec3) -> Option<usize> {
        self.tets[t].local_of_point(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn mesh(n: usize) -> PeriodicMesh {
        build_torus_mesh(TorusGeometry::cube_2pi(), [n, n, n]).unwrap()
    }

    #[test]
    fn counts_grid_2() {
        let m = mesh(2);
        assert_eq!(
            (m.n_vertices(), m.n_edges(), m.n_faces(), m.n_tets()),
            (8, 56, 96, 48)
        );
    }

    #[test]
    fn counts_by_explicit_enumeration() {
        // Count distinct simplices by collecting lifted simplices modulo the lattice.
        let m = build_torus_mesh(TorusGeometry::new(1.0, 2.0, 3.0).unwrap(), [2, 3, 4]).unwrap();
        let n = 24;
        let canon = |pts: &mut Vec<[i64; 3]>| {
            pts.sort();
            let g = [2i64, 3, 4];
            let base = pts[0];
            let shift = [
                base[0].div_euclid(g[0]) * g[0],
                base[1].div_euclid(g[1]) * g[1],
                base[2].div_euclid(g[2]) * g[2],
            ];
            pts.iter().map(|p| sub(*p, shift)).collect::<Vec<_>>()
        };
        let mut e_set = BTreeSet::new();
        let mut f_set = BTreeSet::new();
        let mut t_set = BTreeSet::new();
        for t in &m.tets {
            let pts: Vec<[i64; 3]> = t
                .lifted
                .iter()
                .map(|x| {
                    [
                        (x[0] / m.spacing[0]).round() as i64,
                        (x[1] / m.spacing[1]).round() as i64,
                        (x[2] / m.spacing[2]).round() as i64,
                    ]
                })
                .collect();
            t_set.insert(canon(&mut pts.clone()));
            for (a, b) in TET_EDGE_PAIRS {
                e_set.insert(canon(&mut vec![pts[a], pts[b]]));
            }
            for k in 0..4 {
                let mut f: Vec<_> = (0..4).filter(|&i| i != k).map(|i| pts[i]).collect();
                f_set.insert(canon(&mut f));
            }
        }
        assert_eq!(t_set.len(), 6 * n);
        assert_eq!(f_set.len(), 12 * n);
        assert_eq!(e_set.len(), 7 * n);
        assert_eq!(m.n_vertices() + m.n_faces(), m.n_edges() + m.n_tets());
    }

    #[test]
    fn rejects_coarse_grid() {
        let err = build_torus_mesh(TorusGeometry::cube_2pi(), [1, 1, 1]).unwrap_err();
        assert!(err
            .to_string()
            .contains("grid too coarse for periodic identification"));
        assert!(build_torus_mesh(TorusGeometry::cube_2pi(), [3, 1, 3]).is_err());
        assert!(TorusGeometry::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn tets_have_equal_volume() {
        let m = mesh(3);
        let h = 2.0 * PI / 3.0;
        for t in &m.tets {
            assert!((t.volume - h * h * h / 6.0).abs() < 1e-12);
        }
        let total: f64 = m.tets.iter().map(|t| t.volume).sum();
        assert!((total - m.geometry.volume()).abs() < 1e-10);
    }

    #[test]
    fn lifted_offsets_are_unit_cell_steps() {
        let m = build_torus_mesh(TorusGeometry::new(1.0, 2.0, 0.5).unwrap(), [2, 3, 2]).unwrap();
        for t in &m.tets {
            for p in &t.lifted[1..] {
                let d = p - t.lifted[0];
                for i in 0..3 {
                    let s = d[i] / m.spacing[i];
                    assert!(
                        (s - s.round()).abs() < 1e-12 && (s.round() == 0.0 || s.round() == 1.0)
                    );
                }
            }
            // Vertex id and shift reproduce the lifted point.
            for k in 0..4 {
                let lattice = m.vertices[t.vertices[k]];
                for i in 0..3 {
                    let c = lattice[i] as i64 + t.shifts[k][i] * m.grid[i] as i64;
                    assert!((c as f64 * m.spacing[i] - t.lifted[k][i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn frames_are_right_handed_orthonormal() {
        let m = build_torus_mesh(TorusGeometry::new(2.0, 3.0, 5.0).unwrap(), [2, 3, 2]).unwrap();
        for e in &m.edges {
            let t = e.tangent;
            for s in &e.star {
                assert!((s.m.norm() - 1.0).abs() < FRAME_TOL);
                assert!((s.n.norm() - 1.0).abs() < FRAME_TOL);
                assert!((t.norm() - 1.0).abs() < FRAME_TOL);
                assert!(s.m.dot(&t).abs() < FRAME_TOL);
                assert!(s.n.dot(&t).abs() < FRAME_TOL);
                assert!(s.m.dot(&s.n).abs() < FRAME_TOL);
                let det = Mat3::from_columns(&[s.m, s.n, t]).determinant();
                assert!((det - 1.0).abs() < FRAME_TOL);
                // n is a face normal, up to sign.
                let fnorm = m.faces[s.face].normal;
                assert!((s.n.dot(&fnorm).abs() - 1.0).abs() < FRAME_TOL);
                // m points into the face: the third face vertex lies on the m side.
                let f = &m.faces[s.face];
                let centroid = (f.lifted[0] + f.lifted[1] + f.lifted[2]) / 3.0;
                let local = f
                    .edges
                    .iter()
                    .position(|&x| x == m.edges.iter().position(|q| std::ptr::eq(q, e)).unwrap())
                    .unwrap();
                let (a, _) = FACE_EDGE_PAIRS[local];
                assert!((centroid - f.lifted[a]).dot(&s.m) > 0.0);
            }
        }
    }

    #[test]
    fn every_face_has_two_tets_on_opposite_sides() {
        let m = mesh(2);
        for f in &m.faces {
            assert_ne!(f.tets[0], f.tets[1]);
            for (k, &t) in f.tets.iter().enumerate() {
                let tet = &m.tets[t];
                let local = tet
                    .faces
                    .iter()
                    .position(|&x| x == m.faces.iter().position(|g| std::ptr::eq(g, f)).unwrap())
                    .unwrap();
                let base = (0..4).find(|&i| i != local).unwrap();
                let side = (tet.lifted[local] - tet.lifted[base]).dot(&f.normal);
                assert!(if k == 0 { side > 0.0 } else { side < 0.0 });
            }
        }
    }

    #[test]
    fn star_sizes_by_direction() {
        let m = mesh(3);
        for e in &m.edges {
            let expected = match e.step.iter().sum::<i64>() {
                1 | 3 => 6,
                _ => 4,
            };
            assert_eq!(e.star.len(), expected);
            assert_eq!(e.tets.len(), expected);
            assert_eq!(e.faces.len(), expected);
        }
        // Body diagonal.
        assert_eq!(m.edge_star(6).unwrap().len(), 6);
        assert!(m.edge_star(m.n_edges()).is_err());
    }

    #[test]
    fn star_is_counter_clockwise_and_consistent() {
        let m = build_torus_mesh(TorusGeometry::new(1.0, 1.5, 2.0).unwrap(), [3, 2, 2]).unwrap();
        for e in &m.edges {
            let star = &e.star;
            let k = star.len();
            let u1 = star[0].m;
            let u2 = e.tangent.cross(&u1);
            let mut prev = -1.0;
            for (i, s) in star.iter().enumerate() {
                let mut a = s.m.dot(&u2).atan2(s.m.dot(&u1));
                if a < 0.0 {
                    a += 2.0 * PI;
                }
                if i == 0 {
                    assert!(a.abs() < 1e-12);
                }
                assert!(a > prev);
                prev = a;
                // The sector tet is bounded by this face and the next one.
                let next = star[(i + 1) % k].face;
                assert!(m.faces[s.face].tets.contains(&s.tet));
                assert!(m.faces[next].tets.contains(&s.tet));
                // n points into the sector tet.
                let tet = &m.tets[s.tet];
                let c = tet.centroid();
                let ei = m.edges.iter().position(|q| std::ptr::eq(q, e)).unwrap();
                let (a_loc, _) = m.edge_in_tet(s.tet, ei).unwrap();
                assert!((c - tet.lifted[a_loc]).dot(&s.n) > 0.0);
            }
        }
    }

    #[test]
    fn reversed_tangent_reverses_cyclic_order() {
        let m = mesh(2);
        for e in m.edges.iter().take(14) {
            let ms: Vec<Vec3> = e.star.iter().map(|s| s.m).collect();
            let fwd = cyclic_order(&e.tangent, &ms);
            let bwd = cyclic_order(&(-e.tangent), &ms);
            let k = ms.len();
            assert_eq!(fwd, (0..k).collect::<Vec<_>>());
            let expected: Vec<usize> = std::iter::once(0).chain((1..k).rev()).collect();
            assert_eq!(bwd, expected);
        }
    }

    #[test]
    fn dihedral_angles_sum_to_two_pi() {
        let m = build_torus_mesh(TorusGeometry::new(1.0, 2.0, 3.0).unwrap(), [2, 2, 3]).unwrap();
        for (ei, e) in m.edges.iter().enumerate() {
            let sum: f64 = e
                .tets
                .iter()
                .map(|&t| m.euclidean_dihedral(t, ei).unwrap())
                .sum();
            assert!((sum - 2.0 * PI).abs() < 1e-10, "edge {ei}: {sum}");
        }
    }

    #[test]
    fn normal_sign_flips_only() {
        let m = mesh(2);
        for f in &m.faces {
            let fi = m.faces.iter().position(|g| std::ptr::eq(g, f)).unwrap();
            let mut ns = Vec::new();
            for &e in &f.edges {
                let s = m.edges[e].star.iter().find(|s| s.face == fi).unwrap();
                ns.push(s.n);
            }
            for n in &ns {
                assert!((n.dot(&ns[0]).abs() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invariant_under_cell_translation() {
        let m = build_torus_mesh(TorusGeometry::cube_2pi(), [3, 2, 2]).unwrap();
        let g = m.grid;
        for axis in 0..3 {
            let relabel = |v: usize| {
                let mut p = m.vertices[v].map(|c| c as i64);
                p[axis] += 1;
                vertex_id(g, p)
            };
            let set: BTreeSet<Vec<(usize, [i64; 3])>> = m
                .tets
                .iter()
                .map(|t| {
                    // Relative lattice offsets are translation invariant.
                    (0..4)
                        .map(|k| (t.vertices[k], sub(t.shifts[k], t.shifts[0])))
                        .collect()
                })
                .collect();
            let moved: BTreeSet<Vec<(usize, [i64; 3])>> = m
                .tets
                .iter()
                .map(|t| {
                    (0..4)
                        .map(|k| {
                            let lat = |j: usize| {
                                let mut p = m.vertices[t.vertices[j]].map(|c| c as i64);
                                for i in 0..3 {
                                    p[i] += t.shifts[j][i] * g[i] as i64;
                                }
                                p[axis] += 1;
                                p
                            };
                            let s0 = shift_of(g, lat(0));
                            (relabel(t.vertices[k]), sub(shift_of(g, lat(k)), s0))
                        })
                        .collect()
                })
                .collect();
            assert_eq!(set, moved);
        }
    }

    #[test]
    fn locate_finds_containing_tet() {
        let m = build_torus_mesh(TorusGeometry::new(1.0, 2.0, 3.0).unwrap(), [2, 3, 2]).unwrap();
        for (ti, t) in m.tets.iter().enumerate() {
            let c = t.centroid();
            assert_eq!(m.locate(&c), ti);
            let moved = c + Vec3::new(-1.0, 4.0, 6.0);
            assert_eq!(m.locate(&moved), ti);
        }
    }

    #[test]
    fn summary_has_counts() {
        let m = mesh(2);
        let s = m.summary_json(false);
        assert_eq!(s["counts"]["edges"], 56);
        assert_eq!(s["counts"]["euler"], 0);
        assert!(s.get("incidence").is_none());
        let full = m.summary_json(true);
        assert_eq!(full["incidence"]["tets"].as_array().unwrap().len(), 48);
    }
}
