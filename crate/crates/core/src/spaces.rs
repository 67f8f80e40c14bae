//! The discrete elasticity complex `X⁰ → X¹ → X² → X³` on a periodic mesh.
//!
//! * `X⁰`: continuous piecewise affine vector fields, one vector per vertex.
//! * `X¹`: Regge metrics, one coefficient per edge in the basis `ρ_e`.
//! * `X²`: edge measures `Σ u_e t_e t_eᵀ δ_e`, one coefficient per edge.
//! * `X³`: vertex measures `Σ u_x δ_x`, one vector per vertex.
//!
//! The basis `ρ_e` is normalised against the edge degrees of freedom
//! `μ_e(u) = ∫₀¹ (y - x)ᵀ u(x + s(y - x)) (y - x) ds`, so that
//! `μ_e(ρ_e') = δ_ee'`. On a tet with barycentric coordinates `λ` this gives
//! `ρ_e = -½ (∇λ_x ∇λ_yᵀ + ∇λ_y ∇λ_xᵀ)`.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{Locator, PeriodicMesh, TET_EDGE_PAIRS};
use crate::quadrature::{GaussLegendre, TetRule};
use crate::sym::{Mat3, SymMat3, Vec3};
use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

/// Element of `X⁰`: coefficients `v_x` of `Σ v_x λ_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexVectorField(pub Vec<Vec3>);

/// Element of `X¹`: coefficients `c_e` of `Σ c_e ρ_e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReggeField(pub Vec<f64>);

/// Element of `X²`: coefficients `u_e` of `Σ u_e t_e t_eᵀ δ_e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMeasure(pub Vec<f64>);

/// Element of `X³`: coefficients `u_x` of `Σ u_x δ_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexVectorMeasure(pub Vec<Vec3>);

fn scalar_csv(values: &[f64]) -> String {
    let mut s = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{v:.16e}");
    }
    s
}

fn vector_csv(values: &[Vec3]) -> String {
    let mut s = String::from("index,x,y,z\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{:.16e},{:.16e},{:.16e}", v[0], v[1], v[2]);
    }
    s
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn max_abs_vec(values: &[Vec3]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.amax()))
}

impl VertexVectorField {
    pub fn zeros(n: usize) -> Self {
        VertexVectorField(vec![Vec3::zeros(); n])
    }
    pub fn to_csv(&self) -> String {
        vector_csv(&self.0)
    }
}

impl ReggeField {
    pub fn zeros(n: usize) -> Self {
        ReggeField(vec![0.0; n])
    }
    /// Coefficient vector of the basis function `ρ_e`.
    pub fn basis(n: usize, e: usize) -> Self {
        let mut c = vec![0.0; n];
        c[e] = 1.0;
        ReggeField(c)
    }
    /// Coefficients of a constant metric `g`: `c_e = (y - x)ᵀ g (y - x)`.
    pub fn constant(mesh: &PeriodicMesh, g: &SymMat3) -> Self {
        ReggeField(mesh.edges.iter().map(|e| g.quad(&e.vector())).collect())
    }
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
    pub fn to_csv(&self) -> String {
        scalar_csv(&self.0)
    }
}

impl EdgeMeasure {
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
    pub fn to_csv(&self) -> String {
        scalar_csv(&self.0)
    }
}

impl VertexVectorMeasure {
    pub fn max_abs(&self) -> f64 {
        max_abs_vec(&self.0)
    }
    pub fn to_csv(&self) -> String {
        vector_csv(&self.0)
    }
}

/// Declared regularity of an analytic field; it selects quadrature orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Smoothness {
    /// Polynomial of the given total degree (on each lifted tet).
    Polynomial(usize),
    /// Trigonometric with the given largest angular frequency.
    Trigonometric(f64),
    /// Constant on each tetrahedron.
    PiecewiseConstant,
}

/// Quadrature choice for a [`SmoothField`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOrder {
    /// Gauss points on an edge.
    pub edge_points: usize,
    /// Gauss points per collapsed direction on a tet.
    pub tet_points: usize,
}

impl Smoothness {
    pub fn quadrature(self) -> QuadratureOrder {
        match self {
            Smoothness::Polynomial(d) => QuadratureOrder {
                edge_points: (d + 1).div_ceil(2).max(1),
                // One extra degree for the barycentric weight in I³.
                tet_points: (d + 4).div_ceil(2).max(2),
            },
            Smoothness::Trigonometric(freq) => {
                let boost = (freq.max(1.0).log2().ceil() as usize) * 4;
                QuadratureOrder {
                    edge_points: 16 + boost,
                    tet_points: 10 + boost,
                }
            }
            // The collapsed rule needs two points per direction for constants.
            Smoothness::PiecewiseConstant => QuadratureOrder {
                edge_points: 1,
                tet_points: 2,
            },
        }
    }
}

impl Default for QuadratureOrder {
    fn default() -> Self {
        QuadratureOrder {
            edge_points: 8,
            tet_points: 5,
        }
    }
}

type FieldFn<T> = dyn Fn(&Vec3) -> T + Send + Sync;

/// An analytic (periodic) field on the torus, evaluated at lifted points.
#[derive(Clone)]
pub struct SmoothField<T> {
    f: Arc<FieldFn<T>>,
    pub smoothness: Smoothness,
    pub quadrature: QuadratureOrder,
}

pub type SymField = SmoothField<SymMat3>;
pub type VecField = SmoothField<Vec3>;

impl<T> std::fmt::Debug for SmoothField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothField")
            .field("smoothness", &self.smoothness)
            .field("quadrature", &self.quadrature)
            .finish()
    }
}

impl<T> SmoothField<T> {
    pub fn new<F>(smoothness: Smoothness, f: F) -> Self
    where
        F: Fn(&Vec3) -> T + Send + Sync + 'static,
    {
        SmoothField {
            f: Arc::new(f),
            smoothness,
            quadrature: smoothness.quadrature(),
        }
    }

    pub fn with_quadrature(mut self, q: QuadratureOrder) -> Self {
        self.quadrature = q;
        self
    }

    #[inline]
    pub fn eval(&self, x: &Vec3) -> T {
        (self.f)(x)
    }
}

impl SymField {
    pub fn constant(g: SymMat3) -> Self {
        SmoothField::new(Smoothness::Polynomial(0), move |_| g)
    }
}

impl VecField {
    pub fn constant(v: Vec3) -> Self {
        SmoothField::new(Smoothness::Polynomial(0), move |_| v)
    }
}

/// Per-tet values of the six basis functions `ρ_e`, in [`TET_EDGE_PAIRS`] order.
pub fn tet_basis(mesh: &PeriodicMesh, t: usize) -> [SymMat3; 6] {
    let g = &mesh.tets[t].grad_lambda;
    TET_EDGE_PAIRS.map(|(a, b)| -SymMat3::sym_outer(&g[a], &g[b]))
}

/// Basis tables for every tet.
pub fn basis_tables(mesh: &PeriodicMesh) -> Vec<[SymMat3; 6]> {
    (0..mesh.n_tets()).map(|t| tet_basis(mesh, t)).collect()
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}

/// Constant matrix of a Regge field on each tet.
pub fn regge_to_tet_matrices(mesh: &PeriodicMesh, u: &ReggeField) -> Result<Vec<SymMat3>> {
    check_len("Regge field", mesh.n_edges(), u.0.len())?;
    Ok(mesh
        .tets
        .iter()
        .enumerate()
        .map(|(t, tet)| {
            let basis = tet_basis(mesh, t);
            let mut m = SymMat3::ZERO;
            for (k, &e) in tet.edges.iter().enumerate() {
                m += u.0[e] * basis[k];
            }
            m
        })
        .collect())
}

/// Wraps a Regge field as a piecewise-constant [`SymField`].
pub fn regge_as_smooth(mesh: &PeriodicMesh, u: &ReggeField) -> Result<SymField> {
    let mats = regge_to_tet_matrices(mesh, u)?;
    let loc: Locator = mesh.locator();
    Ok(SmoothField::new(Smoothness::PiecewiseConstant, move |x| {
        mats[loc.locate(x)]
    }))
}

/// Edge degree of freedom `μ_e` of an analytic metric, by Gauss–Legendre
/// quadrature along the lifted edge.
pub fn dof_mu_e(mesh: &PeriodicMesh, e: usize, u: &SymField) -> Result<f64> {
    mesh.check_edge(e)?;
    let rule = GaussLegendre::new(u.quadrature.edge_points);
    Ok(dof_with_rule(mesh, e, u, &rule))
}

fn dof_with_rule(mesh: &PeriodicMesh, e: usize, u: &SymField, rule: &GaussLegendre) -> f64 {
    let edge = &mesh.edges[e];
    let d = edge.vector();
    rule.integrate(|s| u.eval(&(edge.x + d * s)).quad(&d))
}

/// `μ_e` of a Regge field, exactly, from the matrix on an incident tet.
pub fn dof_mu_e_regge(mesh: &PeriodicMesh, e: usize, u: &ReggeField) -> Result<f64> {
    mesh.check_edge(e)?;
    check_len("Regge field", mesh.n_edges(), u.0.len())?;
    let t = mesh.edges[e].tets[0];
    let basis = tet_basis(mesh, t);
    let tet = &mesh.tets[t];
    let mut m = SymMat3::ZERO;
    for (k, &edge) in tet.edges.iter().enumerate() {
        m += u.0[edge] * basis[k];
    }
    let (a, b) = mesh
        .edge_in_tet(t, e)
        .expect("incident tet contains the edge");
    Ok(m.quad(&(tet.lifted[b] - tet.lifted[a])))
}

/// `I¹_h`: coefficients `c_e = μ_e(u)`.
pub fn interpolate_1(mesh: &PeriodicMesh, u: &SymField) -> ReggeField {
    interpolate_1_with(mesh, u, Execution::default())
}

pub fn interpolate_1_with(mesh: &PeriodicMesh, u: &SymField, exec: Execution) -> ReggeField {
    let rule = GaussLegendre::new(u.quadrature.edge_points);
    ReggeField(exec.map_range(mesh.n_edges(), |e| dof_with_rule(mesh, e, u, &rule)))
}

/// `I⁰_h`: nodal values.
pub fn interpolate_0(mesh: &PeriodicMesh, v: &VecField) -> VertexVectorField {
    VertexVectorField(
        (0..mesh.n_vertices())
            .map(|x| v.eval(&mesh.vertex_position(x)))
            .collect(),
    )
}

/// Discrete `def`: `c_e = (y_e - x_e)ᵀ (v_{y_e} - v_{x_e})`.
pub fn deformation(mesh: &PeriodicMesh, v: &VertexVectorField) -> Result<ReggeField> {
    check_len("vertex field", mesh.n_vertices(), v.0.len())?;
    Ok(ReggeField(
        mesh.edges
            .iter()
            .map(|e| e.vector().dot(&(v.0[e.head] - v.0[e.tail])))
            .collect(),
    ))
}

/// `I²_h`: `c_e = l_e ∫ u : ρ_e`, from per-tet quadrature.
pub fn interpolate_2(mesh: &PeriodicMesh, u: &SymField) -> EdgeMeasure {
    interpolate_2_with(mesh, u, Execution::default())
}

pub fn interpolate_2_with(mesh: &PeriodicMesh, u: &SymField, exec: Execution) -> EdgeMeasure {
    let rule = TetRule::new(u.quadrature.tet_points);
    let integrals = exec.map_slice(&mesh.tets, |tet| {
        rule.integrate(&tet.lifted, tet.volume, SymMat3::ZERO, |x, _| u.eval(x))
    });
    let mut c = vec![0.0; mesh.n_edges()];
    for (t, tet) in mesh.tets.iter().enumerate() {
        let basis = tet_basis(mesh, t);
        for (k, &e) in tet.edges.iter().enumerate() {
            c[e] += integrals[t].frobenius(&basis[k]);
        }
    }
    for (ce, e) in c.iter_mut().zip(&mesh.edges) {
        *ce *= e.length;
    }
    EdgeMeasure(c)
}

/// `I³_h`: `u_x = ∫ u λ_x`, from per-tet quadrature.
pub fn interpolate_3(mesh: &PeriodicMesh, u: &VecField) -> VertexVectorMeasure {
    interpolate_3_with(mesh, u, Execution::default())
}

pub fn interpolate_3_with(
    mesh: &PeriodicMesh,
    u: &VecField,
    exec: Execution,
) -> VertexVectorMeasure {
    let rule = TetRule::new(u.quadrature.tet_points);
    let local = exec.map_slice(&mesh.tets, |tet| {
        let mut acc = [Vec3::zeros(); 4];
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let x = tet.lifted[0] * bary[0]
                + tet.lifted[1] * bary[1]
                + tet.lifted[2] * bary[2]
                + tet.lifted[3] * bary[3];
            let val = u.eval(&x) * (w * tet.volume);
            for k in 0..4 {
                acc[k] += val * bary[k];
            }
        }
        acc
    });
    let mut out = vec![Vec3::zeros(); mesh.n_vertices()];
    for (tet, acc) in mesh.tets.iter().zip(&local) {
        for k in 0..4 {
            out[tet.vertices[k]] += acc[k];
        }
    }
    VertexVectorMeasure(out)
}

/// Distributional divergence `X² → X³`:
/// `div(t_e t_eᵀ δ_e) = t_e (δ_{x_e} - δ_{y_e})`.
///
/// The sign is the one of `⟨div w, v⟩ = -⟨w, ∇v⟩`, which is what makes
/// `I³ ∘ div = div ∘ I²` hold.
pub fn divergence_x2(mesh: &PeriodicMesh, u: &EdgeMeasure) -> Result<VertexVectorMeasure> {
    check_len("edge measure", mesh.n_edges(), u.0.len())?;
    let mut out = vec![Vec3::zeros(); mesh.n_vertices()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        let w = edge.tangent * u.0[e];
        out[edge.tail] += w;
        out[edge.head] -= w;
    }
    Ok(VertexVectorMeasure(out))
}

/// The unique constant metric on a tet whose edge DOFs are the given squared
/// lengths (edges in [`TET_EDGE_PAIRS`] order). No positivity is required.
pub fn metric_from_edge_lengths(lifted: &[Vec3; 4], squared: &[f64; 6]) -> Result<SymMat3> {
    // Unknowns (g11, g12, g13, g22, g23, g33).
    let mut sys = Matrix6::zeros();
    for (row, &(a, b)) in TET_EDGE_PAIRS.iter().enumerate() {
        let d = lifted[b] - lifted[a];
        let coeffs = [
            d[0] * d[0],
            2.0 * d[0] * d[1],
            2.0 * d[0] * d[2],
            d[1] * d[1],
            2.0 * d[1] * d[2],
            d[2] * d[2],
        ];
        for (col, c) in coeffs.iter().enumerate() {
            sys[(row, col)] = *c;
        }
    }
    let rhs = Vector6::from_column_slice(squared);
    let scale = sys.amax().max(f64::MIN_POSITIVE);
    let lu = (sys / scale).lu();
    let sol = lu
        .solve(&(rhs / scale))
        .filter(|_| (sys / scale).determinant().abs() > 1e-12)
        .ok_or(Error::MalformedTet { tet: usize::MAX })?;
    Ok(SymMat3([sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]]))
}

/// `L²` inner product of two Regge fields.
pub fn l2_inner(mesh: &PeriodicMesh, u: &ReggeField, v: &ReggeField) -> Result<f64> {
    let a = regge_to_tet_matrices(mesh, u)?;
    let b = regge_to_tet_matrices(mesh, v)?;
    Ok(mesh
        .tets
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(t, (x, y))| t.volume * x.frobenius(y))
        .sum())
}

/// Duality `⟨u, v⟩` on `X² × X¹`: `Σ_e u_e μ_e(v) / l_e`.
pub fn pair_x2_x1(mesh: &PeriodicMesh, u: &EdgeMeasure, v: &ReggeField) -> f64 {
    mesh.edges
        .iter()
        .enumerate()
        .map(|(e, edge)| u.0[e] * v.0[e] / edge.length)
        .sum()
}

/// `⟨u, w⟩` for a measure `u ∈ X²` and an analytic metric `w`:
/// `Σ_e u_e ∫_e t_eᵀ w t_e`.
pub fn pair_x2_smooth(mesh: &PeriodicMesh, u: &EdgeMeasure, w: &SymField) -> f64 {
    let rule = GaussLegendre::new(w.quadrature.edge_points);
    mesh.edges
        .iter()
        .enumerate()
        .map(|(e, edge)| u.0[e] * dof_with_rule(mesh, e, w, &rule) / edge.length)
        .sum()
}

/// `∫ u : w` for an analytic `u` and a Regge field `w`.
pub fn integrate_against_regge(mesh: &PeriodicMesh, u: &SymField, w: &ReggeField) -> Result<f64> {
    let mats = regge_to_tet_matrices(mesh, w)?;
    let rule = TetRule::new(u.quadrature.tet_points);
    Ok(mesh
        .tets
        .iter()
        .zip(&mats)
        .map(|(tet, m)| rule.integrate(&tet.lifted, tet.volume, 0.0, |x, _| u.eval(x).frobenius(m)))
        .sum())
}

/// Symmetric gradient of the affine field `x ↦ A x`.
pub fn sym_part(a: &Mat3) -> SymMat3 {
    SymMat3::from_mat(a)
}
