//! Invariant suites run by `linregge verify`.
//!
//! Every check returns a measured quantity and the bound it is held to.

use crate::error::Result;
use crate::mesh::{build_torus_mesh, PeriodicMesh, TorusGeometry};
use crate::regge_action::{
    deficit_angle_dihedral, deficit_angle_holonomy, deficit_derivative_dihedral,
    deficit_derivative_holonomy, linearized_deficit, log_schedule, schlafli_check,
    second_variation_check, EdgeLengthConfig, EdgeSector,
};
use crate::saint_venant::{apply_ctc, assemble_mass, assemble_stiffness, edge_jump_scalar};
use crate::sample::{
    random_regge_field, random_symmetric, random_vertex_field, rng, uniform_coefficients,
};
use crate::spaces::{
    deformation, divergence_x2, integrate_against_regge, interpolate_0, interpolate_1,
    interpolate_2, interpolate_3, l2_inner, pair_x2_smooth, pair_x2_x1, regge_as_smooth,
    ReggeField, Smoothness, SymField, VecField,
};
use crate::spectrum::{kernel_dimension, solve_pencil, KERNEL_REL_THRESHOLD};
use crate::sym::{skew, SymMat3, Vec3};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub note: String,
}

impl Check {
    fn below(name: &str, measured: f64, bound: f64, note: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: measured <= bound,
            measured,
            bound,
            note: note.into(),
        }
    }

    fn at_least(name: &str, measured: f64, bound: f64, note: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: measured >= bound,
            measured,
            bound,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:<36} measured {:>11.3e}  bound {:>10.3e}  {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.bound,
                c.note
            ));
        }
        s.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            self.failures()
        ));
        s
    }
}

/// `a sin(ξ·x)` as a symmetric field.
pub fn sym_mode(a: SymMat3, xi: Vec3) -> SymField {
    SymField::new(Smoothness::Trigonometric(xi.norm()), move |x| {
        a * xi.dot(x).sin()
    })
}

/// `curlᵀcurl (a sin(ξ·x)) = Skew(ξ) a Skew(ξ) sin(ξ·x)`.
pub fn ctc_of_sym_mode(a: SymMat3, xi: Vec3) -> SymField {
    let s = skew(&xi);
    let b = SymMat3::from_mat(&(s * a.to_mat() * s));
    sym_mode(b, xi)
}

/// Row-wise divergence of `a sin(ξ·x)`: `a ξ cos(ξ·x)`.
pub fn div_of_sym_mode(a: SymMat3, xi: Vec3) -> VecField {
    let v = a.mul_vec(&xi);
    VecField::new(Smoothness::Trigonometric(xi.norm()), move |x| {
        v * xi.dot(x).cos()
    })
}

/// `b sin(ξ·x)` as a vector field.
pub fn vec_mode(b: Vec3, xi: Vec3) -> VecField {
    VecField::new(Smoothness::Trigonometric(xi.norm()), move |x| {
        b * xi.dot(x).sin()
    })
}

/// `def (b sin(ξ·x)) = sym(b ξᵀ) cos(ξ·x)`.
pub fn def_of_vec_mode(b: Vec3, xi: Vec3) -> SymField {
    let s = SymMat3::sym_outer(&b, &xi);
    SymField::new(Smoothness::Trigonometric(xi.norm()), move |x| {
        s * xi.dot(x).cos()
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Smallest lattice frequency of the torus along each axis.
fn axis_frequencies(g: &TorusGeometry) -> [Vec3; 3] {
    let s = g.sides();
    [
        Vec3::new(2.0 * std::f64::consts::PI / s[0], 0.0, 0.0),
        Vec3::new(0.0, 2.0 * std::f64::consts::PI / s[1], 0.0),
        Vec3::new(0.0, 0.0, 2.0 * std::f64::consts::PI / s[2]),
    ]
}

pub fn complex_checks(mesh: &PeriodicMesh, seed: u64) -> Result<Vec<Check>> {
    let mut r = rng(seed);
    let a = assemble_stiffness(mesh);
    let a_norm =
        a.0.rows
            .iter()
            .map(|row| row.iter().map(|x| x.1.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let c = deformation(mesh, &random_vertex_field(mesh, &mut r))?;
        let ac = a.0.mul_vec(&c.0);
        let rel = ac.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / (a_norm * c.max_abs());
        worst = worst.max(rel);
    }
    let mut div_worst = 0.0_f64;
    for e in 0..mesh.n_edges() {
        let d = divergence_x2(
            mesh,
            &apply_ctc(mesh, &ReggeField::basis(mesh.n_edges(), e))?,
        )?;
        div_worst = div_worst.max(d.max_abs());
    }
    let mut const_worst = 0.0_f64;
    for _ in 0..5 {
        let c = ReggeField::constant(mesh, &random_symmetric(&mut r));
        const_worst = const_worst.max(
            a.0.mul_vec(&c.0)
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs())),
        );
    }
    let mass = assemble_mass(mesh);
    let spd = mass.0.to_dense().cholesky().is_some();
    Ok(vec![
        Check::below(
            "curlTcurl o def = 0",
            worst,
            1e-10,
            "relative to |A| |c|, 10 random v",
        ),
        Check::below(
            "div o curlTcurl = 0",
            div_worst,
            1e-12,
            "every basis function",
        ),
        Check::below(
            "constant metrics in kernel",
            const_worst,
            1e-12,
            "5 random constant metrics",
        ),
        Check::below(
            "stiffness symmetry",
            a.0.symmetry_residual(),
            1e-10,
            "relative",
        ),
        Check {
            name: "mass matrix SPD".into(),
            passed: spd,
            measured: if spd { 1.0 } else { 0.0 },
            bound: 1.0,
            note: "Cholesky".into(),
        },
    ])
}

pub fn commuting_checks(mesh: &PeriodicMesh, seed: u64) -> Result<Vec<Check>> {
    let mut r = rng(seed ^ 0x5eed);
    let mut sq1 = 0.0_f64;
    let mut sq2 = 0.0_f64;
    let mut sq3 = 0.0_f64;
    let mut dual = 0.0_f64;
    let mut adj = 0.0_f64;
    for xi in axis_frequencies(&mesh.geometry) {
        let b = Vec3::from_iterator(uniform_coefficients(&mut r, 3));
        let lhs = interpolate_1(mesh, &def_of_vec_mode(b, xi));
        let rhs = deformation(mesh, &interpolate_0(mesh, &vec_mode(b, xi)))?;
        sq1 = sq1.max(max_diff(&lhs.0, &rhs.0));

        let a = random_symmetric(&mut r);
        // The assembled operator is -curlᵀcurl on smooth fields.
        let lhs = interpolate_2(mesh, &ctc_of_sym_mode(a, xi));
        let rhs = apply_ctc(mesh, &interpolate_1(mesh, &sym_mode(a, xi)))?;
        let sum: Vec<f64> = lhs.0.iter().zip(&rhs.0).map(|(x, y)| x + y).collect();
        sq2 = sq2.max(sum.iter().fold(0.0_f64, |m, v| m.max(v.abs())));

        let lhs = interpolate_3(mesh, &div_of_sym_mode(a, xi));
        let rhs = divergence_x2(mesh, &interpolate_2(mesh, &sym_mode(a, xi)))?;
        for (x, y) in lhs.0.iter().zip(&rhs.0) {
            sq3 = sq3.max((x - y).amax());
        }

        let w = random_regge_field(mesh, &mut r);
        let u = sym_mode(a, xi);
        let left = pair_x2_x1(mesh, &interpolate_2(mesh, &u), &w);
        let right = integrate_against_regge(mesh, &u, &w)?;
        dual = dual.max((left - right).abs());

        // I¹ and I² are adjoint: <I² w, v> = (w, I¹ v) for piecewise-constant w.
        let left = pair_x2_smooth(mesh, &interpolate_2(mesh, &regge_as_smooth(mesh, &w)?), &u);
        let right = l2_inner(mesh, &w, &interpolate_1(mesh, &u))?;
        adj = adj.max((left - right).abs());
    }
    Ok(vec![
        Check::below("commuting square def", sq1, 1e-9, "I1 def = def I0"),
        Check::below(
            "commuting square curlTcurl",
            sq2,
            1e-9,
            "I2 curlTcurl = -A I1 (sign of the jump orientation)",
        ),
        Check::below("commuting square div", sq3, 1e-9, "I3 div = div I2"),
        Check::below(
            "I2 dual to the inclusion of X1",
            dual,
            1e-9,
            "<I2 u, w> = (u, w) for w in X1",
        ),
        Check::below(
            "adjointness of I1 and I2",
            adj,
            1e-9,
            "<I2 w, v> = (w, I1 v), w piecewise constant",
        ),
    ])
}

pub fn kernel_checks(mesh: &PeriodicMesh) -> Result<Vec<Check>> {
    let sol = solve_pencil(&assemble_stiffness(mesh), &assemble_mass(mesh))?;
    let k = kernel_dimension(&sol.eigenvalues, KERNEL_REL_THRESHOLD);
    let stable = [1e-10, 1e-6]
        .iter()
        .all(|&t| kernel_dimension(&sol.eigenvalues, t) == k);
    Ok(vec![
        Check::at_least(
            "kernel dimension >= 3V - 3",
            k as f64,
            (3 * mesh.n_vertices() - 3) as f64,
            format!("measured {k}"),
        ),
        Check {
            name: "kernel threshold stability".into(),
            passed: stable,
            measured: k as f64,
            bound: k as f64,
            note: "same count for tau in [1e-10, 1e-6] max|lambda|".into(),
        },
        Check::below(
            "pencil residual",
            sol.max_residual,
            1e-8,
            "max |Ax - lambda Mx| / |x|_M",
        ),
    ])
}

pub fn action_checks(mesh: &PeriodicMesh, seed: u64) -> Result<Vec<Check>> {
    let mut r = rng(seed ^ 0xac7);
    // Perturbations of squared lengths, scaled to the shortest edge.
    let scale = 0.1
        * mesh
            .edges
            .iter()
            .map(|e| e.length * e.length)
            .fold(f64::INFINITY, f64::min);
    let field = |r: &mut _| {
        ReggeField(
            random_regge_field(mesh, r)
                .0
                .iter()
                .map(|c| c * scale)
                .collect(),
        )
    };
    let mut dual = 0.0_f64;
    for _ in 0..5 {
        let u = field(&mut r);
        let l = EdgeLengthConfig::perturbed(mesh, &u, 0.2)?;
        for e in 0..mesh.n_edges() {
            let d = deficit_angle_dihedral(mesh, e, &l)?;
            let h = deficit_angle_holonomy(&EdgeSector::from_lengths(mesh, e, &l)?)?;
            dual = dual.max((d - h).abs());
        }
    }
    let u = field(&mut r);
    let mut bridge = 0.0_f64;
    let mut fd = 0.0_f64;
    for e in 0..mesh.n_edges() {
        let lin = linearized_deficit(mesh, e, &u)?;
        bridge = bridge.max((lin - 0.5 * edge_jump_scalar(mesh, &u, e)?).abs());
        if e % 7 == 0 {
            fd = fd.max((lin - deficit_derivative_dihedral(mesh, e, &u)?).abs());
            fd = fd.max((lin - deficit_derivative_holonomy(mesh, e, &u)?).abs());
        }
    }
    let sv = second_variation_check(mesh, &u, &log_schedule(1e-2, 1e-1, 4))?;
    let base = EdgeLengthConfig::perturbed(mesh, &field(&mut r), 0.5)?;
    let dir: Vec<f64> = uniform_coefficients(&mut r, mesh.n_edges())
        .iter()
        .map(|d| d * scale.sqrt())
        .collect();
    let sch = schlafli_check(mesh, &base, &dir, 1e-4)?;
    Ok(vec![
        Check::below(
            "holonomy = dihedral deficit",
            dual,
            1e-9,
            "5 random configurations",
        ),
        Check::below("linearized deficit = jump / 2", bridge, 1e-12, "every edge"),
        Check::below(
            "linearized deficit = FD",
            fd,
            1e-7,
            "Richardson, both paths",
        ),
        Check::below(
            "second variation",
            sv.relative_error,
            1e-2,
            format!("target {:.6e}", sv.target),
        ),
        Check::at_least(
            "second variation remainder slope",
            sv.remainder_slope,
            2.7,
            "eps in [1e-2, 1e-1]",
        ),
        Check::below(
            "Schlafli identity",
            sch.residual,
            1e-6 * sch.sum_theta_dl.abs() + 1e-10,
            "step 1e-4",
        ),
    ])
}

/// The full suite on one mesh.
pub fn run_all(geometry: TorusGeometry, grid: [usize; 3], seed: u64) -> Result<Report> {
    let mesh = build_torus_mesh(geometry, grid)?;
    let mut checks = complex_checks(&mesh, seed)?;
    checks.extend(commuting_checks(&mesh, seed)?);
    checks.extend(kernel_checks(&mesh)?);
    checks.extend(action_checks(&mesh, seed)?);
    Ok(Report { checks })
}
