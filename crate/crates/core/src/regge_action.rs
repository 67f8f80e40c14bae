//! Deficit angles, the Regge action `R = Σ_e θ_e l_e` and its expansion
//! around the flat metric.
//!
//! A configuration is one squared length per edge. On each tet the lengths
//! fix a constant metric; the mesh combinatorics never change. Deficits are
//! computed either from dihedral angles of the tets realised by their edge
//! lengths, or from the holonomy of the piecewise constant metric around the
//! edge. Both use the convention that a cone angle below `2π` gives a
//! positive deficit.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{PeriodicMesh, TET_EDGE_PAIRS};
use crate::saint_venant::assemble_stiffness;
use crate::spaces::{metric_from_edge_lengths, regge_to_tet_matrices, ReggeField};
use crate::sym::{Mat3, SymMat3, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Relative Cayley–Menger threshold for realizability.
pub const REALIZABILITY_TOL: f64 = 1e-14;

/// Squared edge lengths, in canonical edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLengthConfig(pub Vec<f64>);

impl EdgeLengthConfig {
    /// The flat background.
    pub fn euclidean(mesh: &PeriodicMesh) -> Self {
        EdgeLengthConfig(mesh.edges.iter().map(|e| e.length * e.length).collect())
    }

    /// Squared lengths of the metric `I + ε u'`: `l_e² + ε c_e`.
    pub fn perturbed(mesh: &PeriodicMesh, u_prime: &ReggeField, eps: f64) -> Result<Self> {
        check_len("Regge field", mesh.n_edges(), u_prime.0.len())?;
        Ok(EdgeLengthConfig(
            mesh.edges
                .iter()
                .zip(&u_prime.0)
                .map(|(e, c)| e.length * e.length + eps * c)
                .collect(),
        ))
    }

    /// From (unsquared) lengths.
    pub fn from_lengths(lengths: &[f64]) -> Self {
        EdgeLengthConfig(lengths.iter().map(|l| l * l).collect())
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.sqrt()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        EdgeLengthConfig(self.0.iter().map(|v| v * s * s).collect())
    }

    fn tet_squared(&self, mesh: &PeriodicMesh, t: usize) -> [f64; 6] {
        mesh.tets[t].edges.map(|e| self.0[e])
    }
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

/// One sector of an edge star with its constant metric.
#[derive(Debug, Clone, Serialize)]
pub struct SectorMetric {
    pub face: usize,
    pub m: Vec3,
    pub n: Vec3,
    pub tet: usize,
    /// Metric on the sector between this face and the next one.
    pub metric: SymMat3,
}

/// Everything needed to transport around one edge.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeSector {
    pub edge: usize,
    pub tangent: Vec3,
    pub sectors: Vec<SectorMetric>,
}

impl EdgeSector {
    /// Sectors of `e` with per-tet metrics supplied by the caller.
    pub fn with_metrics(mesh: &PeriodicMesh, e: usize, tet_metrics: &[SymMat3]) -> Result<Self> {
        let star = mesh.edge_star(e)?;
        check_len("tet metrics", mesh.n_tets(), tet_metrics.len())?;
        Ok(EdgeSector {
            edge: e,
            tangent: mesh.edges[e].tangent,
            sectors: star
                .iter()
                .map(|s| SectorMetric {
                    face: s.face,
                    m: s.m,
                    n: s.n,
                    tet: s.tet,
                    metric: tet_metrics[s.tet],
                })
                .collect(),
        })
    }

    /// Sectors of `e` with metrics reconstructed from squared lengths.
    pub fn from_lengths(mesh: &PeriodicMesh, e: usize, lengths: &EdgeLengthConfig) -> Result<Self> {
        check_len("edge lengths", mesh.n_edges(), lengths.0.len())?;
        let star = mesh.edge_star(e)?;
        let sectors = star
            .iter()
            .map(|s| {
                let tet = &mesh.tets[s.tet];
                let metric =
                    metric_from_edge_lengths(&tet.lifted, &lengths.tet_squared(mesh, s.tet))
                        .map_err(|_| Error::MalformedTet { tet: s.tet })?;
                Ok(SectorMetric {
                    face: s.face,
                    m: s.m,
                    n: s.n,
                    tet: s.tet,
                    metric,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeSector {
            edge: e,
            tangent: mesh.edges[e].tangent,
            sectors,
        })
    }
}

/// `G`-unit normal of the plane `span(t, m)`, on the side of `n`.
fn unit_normal(g: &Mat3, g_inv: &Mat3, n: &Vec3) -> Vec3 {
    let k = g_inv * n;
    k / (k.dot(&(g * k))).sqrt()
}

/// Deficit angle from the holonomy of the sector metrics around the edge.
///
/// Crossing face `f` from sector `f-½` into sector `f+½` uses the map that
/// fixes `t` and `m_f` and sends the unit normal of the face in the metric
/// behind it to the unit normal in the metric ahead of it. The composite
/// around the star is a rotation about `t`; its angle, measured in a
/// metric-orthonormal frame, is the deficit.
pub fn deficit_angle_holonomy(sector: &EdgeSector) -> Result<f64> {
    let k = sector.sectors.len();
    let mut mats = Vec::with_capacity(k);
    let mut invs = Vec::with_capacity(k);
    for (i, s) in sector.sectors.iter().enumerate() {
        let g = s.metric.to_mat();
        if g.cholesky().is_none() {
            return Err(Error::DegenerateMetric { sector: i });
        }
        invs.push(
            g.try_inverse()
                .ok_or(Error::DegenerateMetric { sector: i })?,
        );
        mats.push(g);
    }
    let t = sector.tangent;
    // Start in the sector behind face 0.
    let mut hol = Mat3::identity();
    for i in 0..k {
        let behind = (i + k - 1) % k;
        let s = &sector.sectors[i];
        let k_minus = unit_normal(&mats[behind], &invs[behind], &s.n);
        let k_plus = unit_normal(&mats[i], &invs[i], &s.n);
        let from = Matrix3::from_columns(&[s.m, k_minus, t]);
        let to = Matrix3::from_columns(&[s.m, k_plus, t]);
        let cross = to
            * from
                .try_inverse()
                .ok_or(Error::DegenerateMetric { sector: i })?;
        hol = cross * hol;
    }
    let g = &mats[k - 1];
    let g_inv = &invs[k - 1];
    // Metric-orthonormal frame (e1, e2) of the plane orthogonal to t.
    let m0 = sector.sectors[0].m;
    let t_g = t / t.dot(&(g * t));
    let e1 = m0 - t_g * t.dot(&(g * m0));
    let e1 = e1 / (e1.dot(&(g * e1))).sqrt();
    let e2 = unit_normal(g, g_inv, &sector.sectors[0].n);
    let basis = Matrix3::from_columns(&[e1, e2, t]);
    let local = basis
        .try_inverse()
        .ok_or(Error::DegenerateMetric { sector: k - 1 })?
        * hol
        * basis;
    Ok((local[(1, 0)] - local[(0, 1)]).atan2(local[(0, 0)] + local[(1, 1)]))
}

/// The six dihedral angles (in [`TET_EDGE_PAIRS`] order) of the simplex with
/// the given squared edge lengths.
pub fn tet_dihedral_angles(squared: &[f64; 6]) -> Option<[f64; 6]> {
    // Squared distances d[i][j].
    let mut d = [[0.0; 4]; 4];
    for (k, &(a, b)) in TET_EDGE_PAIRS.iter().enumerate() {
        d[a][b] = squared[k];
        d[b][a] = squared[k];
    }
    let gram = Matrix3::from_fn(|i, j| 0.5 * (d[0][i + 1] + d[0][j + 1] - d[i + 1][j + 1]));
    let scale = squared.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // Cayley–Menger determinant = 8 det(Gram).
    if !(8.0 * gram.determinant() > REALIZABILITY_TOL * scale.powi(3)) || gram.cholesky().is_none()
    {
        return None;
    }
    let inv = gram.try_inverse()?;
    // ⟨∇λ_i, ∇λ_j⟩ for i, j in 0..4, with ∇λ_0 = -Σ ∇λ_k.
    let ip = |i: usize, j: usize| -> f64 {
        let coef = |v: usize| -> [f64; 3] {
            let mut c = [0.0; 3];
            if v == 0 {
                c = [-1.0; 3];
            } else {
                c[v - 1] = 1.0;
            }
            c
        };
        let (ci, cj) = (coef(i), coef(j));
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += ci[a] * inv[(a, b)] * cj[b];
            }
        }
        s
    };
    Some(TET_EDGE_PAIRS.map(|(a, b)| {
        let o: Vec<usize> = (0..4).filter(|&i| i != a && i != b).collect();
        let (k, l) = (o[0], o[1]);
        let c = -ip(k, l) / (ip(k, k) * ip(l, l)).sqrt();
        c.clamp(-1.0, 1.0).acos()
    }))
}

fn dihedrals_of(
    mesh: &PeriodicMesh,
    t: usize,
    lengths: &EdgeLengthConfig,
    edge: usize,
) -> Result<[f64; 6]> {
    tet_dihedral_angles(&lengths.tet_squared(mesh, t)).ok_or(Error::Unrealizable { tet: t, edge })
}

/// `2π - Σ_T θ_T(e)`, each tet realised from its six edge lengths.
pub fn deficit_angle_dihedral(
    mesh: &PeriodicMesh,
    e: usize,
    lengths: &EdgeLengthConfig,
) -> Result<f64> {
    mesh.check_edge(e)?;
    check_len("edge lengths", mesh.n_edges(), lengths.0.len())?;
    let mut sum = 0.0;
    for &t in &mesh.edges[e].tets {
        let k = mesh.local_edge(t, e).expect("star tet contains the edge");
        sum += dihedrals_of(mesh, t, lengths, e)?[k];
    }
    Ok(2.0 * PI - sum)
}

/// All deficits through the dihedral path.
pub fn deficits(
    mesh: &PeriodicMesh,
    lengths: &EdgeLengthConfig,
    exec: Execution,
) -> Result<Vec<f64>> {
    check_len("edge lengths", mesh.n_edges(), lengths.0.len())?;
    let angles = exec.try_map_range(mesh.n_tets(), |t| {
        dihedrals_of(mesh, t, lengths, mesh.tets[t].edges[0])
    })?;
    Ok(exec.map_range(mesh.n_edges(), |e| {
        let sum: f64 = mesh.edges[e]
            .tets
            .iter()
            .map(|&t| angles[t][mesh.local_edge(t, e).expect("star tet contains the edge")])
            .sum();
        2.0 * PI - sum
    }))
}

/// All deficits through the holonomy path.
pub fn deficits_holonomy(
    mesh: &PeriodicMesh,
    lengths: &EdgeLengthConfig,
    exec: Execution,
) -> Result<Vec<f64>> {
    exec.try_map_range(mesh.n_edges(), |e| {
        deficit_angle_holonomy(&EdgeSector::from_lengths(mesh, e, lengths)?)
    })
}

/// `θ'_e = ½ Σ_f m_fᵀ (u'_{f+½} - u'_{f-½}) n_f`.
pub fn linearized_deficit(mesh: &PeriodicMesh, e: usize, u_prime: &ReggeField) -> Result<f64> {
    let star = mesh.edge_star(e)?;
    let mats = regge_to_tet_matrices(mesh, u_prime)?;
    let k = star.len();
    Ok(0.5
        * (0..k)
            .map(|i| {
                let ahead = mats[star[i].tet];
                let behind = mats[star[(i + k - 1) % k].tet];
                (ahead - behind).bilinear(&star[i].m, &star[i].n)
            })
            .sum::<f64>())
}

/// `R = Σ_e θ_e l_e`.
pub fn regge_action(mesh: &PeriodicMesh, lengths: &EdgeLengthConfig) -> Result<f64> {
    regge_action_with(mesh, lengths, Execution::default())
}

pub fn regge_action_with(
    mesh: &PeriodicMesh,
    lengths: &EdgeLengthConfig,
    exec: Execution,
) -> Result<f64> {
    let theta = deficits(mesh, lengths, exec)?;
    Ok(exec.sum_range(mesh.n_edges(), |e| theta[e] * lengths.0[e].sqrt()))
}

/// Whether every tet is realizable.
pub fn is_realizable(mesh: &PeriodicMesh, lengths: &EdgeLengthConfig) -> bool {
    (0..mesh.n_tets()).all(|t| tet_dihedral_angles(&lengths.tet_squared(mesh, t)).is_some())
}

#[derive(Debug, Clone, Serialize)]
pub struct SchlafliReport {
    pub step: f64,
    /// Central difference of `R(l + τ d)` at `τ = 0`.
    pub dr: f64,
    /// `Σ_e θ_e d_e`.
    pub sum_theta_dl: f64,
    pub residual: f64,
}

impl SchlafliReport {
    /// `residual ≤ 1e-6 |Σ θ d| + 1e-10`.
    pub fn passes(&self) -> bool {
        self.residual <= 1e-6 * self.sum_theta_dl.abs() + 1e-10
    }
}

/// Compares `dR/dτ` along `l_e + τ d_e` with `Σ_e θ_e d_e`.
pub fn schlafli_check(
    mesh: &PeriodicMesh,
    lengths: &EdgeLengthConfig,
    direction: &[f64],
    step: f64,
) -> Result<SchlafliReport> {
    check_len("direction", mesh.n_edges(), direction.len())?;
    let l = lengths.lengths();
    let at = |tau: f64| -> Result<f64> {
        let moved: Vec<f64> = l.iter().zip(direction).map(|(a, d)| a + tau * d).collect();
        regge_action(mesh, &EdgeLengthConfig::from_lengths(&moved))
    };
    let dr = (at(step)? - at(-step)?) / (2.0 * step);
    let theta = deficits(mesh, lengths, Execution::default())?;
    let sum_theta_dl: f64 = theta.iter().zip(direction).map(|(t, d)| t * d).sum();
    Ok(SchlafliReport {
        step,
        dr,
        sum_theta_dl,
        residual: (dr - sum_theta_dl).abs(),
    })
}

/// Value at zero of the polynomial through `(x_i, y_i)` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Derivative at zero of `f` by central differences at the given steps,
/// extrapolated in `ε²`.
pub fn richardson_derivative<F>(f: F, steps: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut xs = Vec::with_capacity(steps.len());
    let mut ys = Vec::with_capacity(steps.len());
    for &h in steps {
        xs.push(h * h);
        ys.push((f(h)? - f(-h)?) / (2.0 * h));
    }
    Ok(extrapolate_to_zero(&xs, &ys))
}

/// Steps used for finite-difference derivatives of deficits.
pub const DEFICIT_FD_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// `dθ_e/dε` at `ε = 0` along `l² + ε c`, by the dihedral path.
pub fn deficit_derivative_dihedral(
    mesh: &PeriodicMesh,
    e: usize,
    u_prime: &ReggeField,
) -> Result<f64> {
    richardson_derivative(
        |eps| deficit_angle_dihedral(mesh, e, &EdgeLengthConfig::perturbed(mesh, u_prime, eps)?),
        &DEFICIT_FD_STEPS,
    )
}

/// `dθ_e/dε` at `ε = 0` along `l² + ε c`, by the holonomy path.
pub fn deficit_derivative_holonomy(
    mesh: &PeriodicMesh,
    e: usize,
    u_prime: &ReggeField,
) -> Result<f64> {
    richardson_derivative(
        |eps| {
            let lengths = EdgeLengthConfig::perturbed(mesh, u_prime, eps)?;
            deficit_angle_holonomy(&EdgeSector::from_lengths(mesh, e, &lengths)?)
        },
        &DEFICIT_FD_STEPS,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondVariationReport {
    pub epsilons: Vec<f64>,
    pub actions: Vec<f64>,
    /// `R(ε) / ε²`.
    pub ratios: Vec<f64>,
    /// Polynomial extrapolation of the ratios to `ε = 0`.
    pub extrapolated: f64,
    /// `cᵀ A c / 8`.
    pub target: f64,
    pub relative_error: f64,
    /// Slope of `log |R(ε) - ε² target|` against `log ε`.
    pub remainder_slope: f64,
    /// Largest `ε` found realizable by bisection (capped at the largest request).
    pub eps_max: f64,
    pub warnings: Vec<String>,
}

impl SecondVariationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Largest `ε ≤ hi` with `l² + ε c` realizable, by bisection.
pub fn realizable_eps_max(mesh: &PeriodicMesh, u_prime: &ReggeField, hi: f64) -> Result<f64> {
    let ok = |eps: f64| -> Result<bool> {
        Ok(is_realizable(
            mesh,
            &EdgeLengthConfig::perturbed(mesh, u_prime, eps)?,
        ))
    };
    if ok(hi)? {
        return Ok(hi);
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..60 {
        let mid = 0.5 * (lo + up);
        if ok(mid)? {
            lo = mid;
        } else {
            up = mid;
        }
    }
    Ok(lo)
}

/// Compares `R(l² + ε c)` with `ε² cᵀ A c / 8`.
pub fn second_variation_check(
    mesh: &PeriodicMesh,
    u_prime: &ReggeField,
    epsilons: &[f64],
) -> Result<SecondVariationReport> {
    check_len("Regge field", mesh.n_edges(), u_prime.0.len())?;
    if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidInput(
            "epsilons must be positive and nonempty".into(),
        ));
    }
    let hi = epsilons.iter().cloned().fold(0.0, f64::max);
    let eps_max = realizable_eps_max(mesh, u_prime, hi)?;
    let mut warnings = Vec::new();
    let mut eps_used = Vec::new();
    for &e in epsilons {
        if e <= eps_max && is_realizable(mesh, &EdgeLengthConfig::perturbed(mesh, u_prime, e)?) {
            eps_used.push(e);
        } else {
            warnings.push(format!("epsilon {e:e} is not realizable and was dropped"));
        }
    }
    if eps_used.is_empty() {
        return Err(Error::InvalidInput("no realizable epsilon".into()));
    }
    let a = assemble_stiffness(mesh);
    let target = a.0.bilinear(&u_prime.0, &u_prime.0) / 8.0;
    let actions = eps_used
        .iter()
        .map(|&e| regge_action(mesh, &EdgeLengthConfig::perturbed(mesh, u_prime, e)?))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = actions
        .iter()
        .zip(&eps_used)
        .map(|(r, e)| r / (e * e))
        .collect();
    let extrapolated = extrapolate_to_zero(&eps_used, &ratios);
    let remainders: Vec<f64> = actions
        .iter()
        .zip(&eps_used)
        .map(|(r, e)| (r - e * e * target).abs())
        .collect();
    let relative_error = if target != 0.0 {
        (extrapolated - target).abs() / target.abs()
    } else {
        extrapolated.abs()
    };
    Ok(SecondVariationReport {
        remainder_slope: if eps_used.len() >= 2 {
            loglog_slope(&eps_used, &remainders)
        } else {
            f64::NAN
        },
        epsilons: eps_used,
        actions,
        ratios,
        extrapolated,
        target,
        relative_error,
        eps_max,
        warnings,
    })
}

/// Logarithmic grid of `n` points from `lo` to `hi`, descending.
pub fn log_schedule(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    (0..n)
        .map(|i| match i {
            0 => hi,
            i if i == n - 1 => lo,
            _ => (hi.ln() + (lo.ln() - hi.ln()) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Per-edge deficits as CSV.
pub fn deficits_csv(mesh: &PeriodicMesh, lengths: &EdgeLengthConfig, theta: &[f64]) -> String {
    let mut s = String::from("edge,tail,head,length,deficit\n");
    for (e, edge) in mesh.edges.iter().enumerate() {
        let _ = writeln!(
            s,
            "{e},{},{},{:.16e},{:.16e}",
            edge.tail,
            edge.head,
            lengths.0[e].sqrt(),
            theta[e]
        );
    }
    s
}
