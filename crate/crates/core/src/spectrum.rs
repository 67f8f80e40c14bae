//! The generalized eigenproblem `A x = λ M x` and its comparison with the
//! exact spectrum of `curlᵀcurl` on the flat torus.
//!
//! For `u = a F(ξ)` one has `curlᵀcurl u = Skew(ξ) a Skew(ξ) F(ξ)`. On the
//! symmetric matrices with `a ξ = 0` the map `a ↦ Skew(ξ) a Skew(ξ)` has
//! eigenvalue `-|ξ|²` on `ξ₁ξ₁ᵀ + ξ₂ξ₂ᵀ` and `+|ξ|²` on both
//! `ξ₁ξ₂ᵀ + ξ₂ξ₁ᵀ` and `ξ₁ξ₁ᵀ - ξ₂ξ₂ᵀ`; it vanishes on `bξᵀ + ξbᵀ`.
//!
//! The assembled stiffness matrix uses the face-jump orientation in which
//! `cᵀAc/8` is the second-order term of the Regge action, and this is
//! `-curlᵀcurl` on smooth fields (see [`crate::saint_venant`]). The oracle
//! therefore lists the spectrum of `-curlᵀcurl`: per frequency pair
//! `{k, -k}`, `-|k|²` with four real modes and `+|k|²` with two.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{build_torus_mesh, TorusGeometry};
use crate::saint_venant::{assemble_mass, assemble_stiffness, MassMatrix, StiffnessMatrix};
use crate::sym::{skew, SymMat3, Vec3};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Relative tolerance used to merge equal `|k|²` values.
const MERGE_TOL: f64 = 1e-10;

/// Kernel threshold relative to `max |λ|`.
pub const KERNEL_REL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierEigenvalue {
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

/// Nonzero eigenvalues of the continuous operator (`-curlᵀcurl`) with `|λ| ≤ cutoff`,
/// sorted ascending. Zero is always an eigenvalue of infinite multiplicity
/// and is not listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    pub geometry: TorusGeometry,
    pub cutoff: f64,
    pub entries: Vec<FourierEigenvalue>,
}

impl FourierSpectrum {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eigenvalue,multiplicity\n");
        for e in &self.entries {
            let _ = writeln!(s, "{:.16e},{}", e.eigenvalue, e.multiplicity);
        }
        s
    }

    /// Distinct values sorted by magnitude, negative first on ties.
    pub fn by_magnitude(&self) -> Vec<FourierEigenvalue> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| {
            a.eigenvalue
                .abs()
                .total_cmp(&b.eigenvalue.abs())
                .then(a.eigenvalue.total_cmp(&b.eigenvalue))
        });
        v
    }
}

/// Exact spectrum of `-curlᵀcurl` up to `|λ| ≤ cutoff`.
pub fn fourier_oracle(geometry: &TorusGeometry, cutoff: f64) -> Result<FourierSpectrum> {
    geometry.validate()?;
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    let sides = geometry.sides();
    let bound = sides.map(|l| (cutoff.sqrt() * l / (2.0 * PI)).floor() as i64);
    let mut pairs: Vec<f64> = Vec::new();
    for n1 in -bound[0]..=bound[0] {
        for n2 in -bound[1]..=bound[1] {
            for n3 in -bound[2]..=bound[2] {
                let n = [n1, n2, n3];
                // One representative of each pair {k, -k}.
                let first = n.iter().find(|&&c| c != 0);
                if first.is_none_or(|&c| c < 0) {
                    continue;
                }
                let k2 = wave_vector(geometry, n).norm_squared();
                if k2 <= cutoff * (1.0 + MERGE_TOL) {
                    pairs.push(k2);
                }
            }
        }
    }
    pairs.sort_by(f64::total_cmp);
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for k2 in pairs {
        match groups.last_mut() {
            Some((v, c)) if (k2 - *v).abs() <= MERGE_TOL * k2 => *c += 1,
            _ => groups.push((k2, 1)),
        }
    }
    let mut entries: Vec<FourierEigenvalue> = groups
        .iter()
        .flat_map(|&(k2, c)| {
            [
                FourierEigenvalue {
                    eigenvalue: -k2,
                    multiplicity: 4 * c,
                },
                FourierEigenvalue {
                    eigenvalue: k2,
                    multiplicity: 2 * c,
                },
            ]
        })
        .collect();
    entries.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    Ok(FourierSpectrum {
        geometry: *geometry,
        cutoff,
        entries,
    })
}

/// `k = 2π (n₁/l₁, n₂/l₂, n₃/l₃)`.
pub fn wave_vector(geometry: &TorusGeometry, n: [i64; 3]) -> Vec3 {
    let s = geometry.sides();
    Vec3::from_fn(|i, _| 2.0 * PI * n[i] as f64 / s[i])
}

/// The matrices `(ξ₁ξ₁ᵀ + ξ₂ξ₂ᵀ, ξ₁ξ₂ᵀ + ξ₂ξ₁ᵀ, ξ₁ξ₁ᵀ - ξ₂ξ₂ᵀ)` for an oriented
/// orthonormal basis `(ξ/|ξ|, ξ₁, ξ₂)`.
pub fn sigma_modes(xi: &Vec3) -> [SymMat3; 3] {
    let t = xi.normalize();
    let helper = if t[0].abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let x1 = (helper - t * t.dot(&helper)).normalize();
    let x2 = t.cross(&x1);
    let p = SymMat3::outer(&x1);
    let q = SymMat3::outer(&x2);
    [p + q, 2.0 * SymMat3::sym_outer(&x1, &x2), p - q]
}

/// Rayleigh quotients `-(Skew(ξ) σ Skew(ξ)) : σ / (σ : σ)` of the three
/// modes, i.e. the symbol of the operator the oracle describes.
pub fn sigma_rayleigh(xi: &Vec3) -> [f64; 3] {
    let s = skew(xi);
    sigma_modes(xi).map(|sig| {
        let image = SymMat3::from_mat(&(s * sig.to_mat() * s));
        -image.frobenius(&sig) / sig.frobenius(&sig)
    })
}

/// Full spectrum of a pencil.
#[derive(Debug, Clone)]
pub struct PencilSolution {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal eigenvectors as columns, in the same order.
    pub eigenvectors: DMatrix<f64>,
    /// `max_i ‖A x_i - λ_i M x_i‖ / ‖x_i‖_M`.
    pub max_residual: f64,
}

/// Solves `A x = λ M x` by Cholesky reduction to a dense symmetric problem.
pub fn solve_pencil(a: &StiffnessMatrix, m: &MassMatrix) -> Result<PencilSolution> {
    let ad = a.0.to_dense();
    let md = m.0.to_dense();
    let chol = md.clone().cholesky().ok_or(Error::MassNotSpd)?;
    let l = chol.l();
    let x = l.solve_lower_triangular(&ad).ok_or(Error::MassNotSpd)?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::MassNotSpd)?;
    let c = (&c + c.transpose()) * 0.5;
    let n = c.nrows();
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(n, order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    let lt = l.transpose();
    let vecs = lt.solve_upper_triangular(&y).ok_or(Error::MassNotSpd)?;
    let r = &ad * &vecs
        - &md * &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues.clone()));
    let max_residual = (0..r.ncols())
        .map(|k| {
            r.column(k).norm() / (vecs.column(k).transpose() * &md * vecs.column(k))[(0, 0)].sqrt()
        })
        .fold(0.0_f64, f64::max);
    Ok(PencilSolution {
        eigenvalues,
        eigenvectors: vecs,
        max_residual,
    })
}

/// Number of eigenvalues with `|λ| < rel · max |λ|`.
pub fn kernel_dimension(eigenvalues: &[f64], rel: f64) -> usize {
    let max = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    eigenvalues.iter().filter(|v| v.abs() < rel * max).count()
}

/// An oracle target with its matching window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// Half the distance to the nearest other oracle value (zero included).
    pub window: f64,
}

/// The `n` oracle values of smallest magnitude with their windows.
pub fn oracle_targets(geometry: &TorusGeometry, n: usize) -> Result<Vec<Target>> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "at least one target is required".into(),
        ));
    }
    let s = geometry.sides();
    let kmin = s
        .iter()
        .map(|l| (2.0 * PI / l).powi(2))
        .fold(f64::INFINITY, f64::min);
    let mut cutoff = 2.0 * kmin;
    loop {
        let oracle = fourier_oracle(geometry, cutoff)?;
        let sorted = oracle.by_magnitude();
        // Need one more magnitude than requested so windows are not truncated.
        if sorted.get(n).is_some_and(|e| e.eigenvalue.abs() < cutoff) {
            let mut values: Vec<f64> = oracle.entries.iter().map(|e| e.eigenvalue).collect();
            values.push(0.0);
            return Ok(sorted[..n]
                .iter()
                .map(|e| {
                    let gap = values
                        .iter()
                        .filter(|&&v| (v - e.eigenvalue).abs() > MERGE_TOL * e.eigenvalue.abs())
                        .map(|v| (v - e.eigenvalue).abs())
                        .fold(f64::INFINITY, f64::min);
                    Target {
                        eigenvalue: e.eigenvalue,
                        multiplicity: e.multiplicity,
                        window: 0.5 * gap,
                    }
                })
                .collect());
        }
        cutoff *= 2.0;
    }
}

/// Discrete eigenvalues assigned to one oracle target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub target: f64,
    pub multiplicity: usize,
    pub window: f64,
    /// Indices into the ascending eigenvalue list.
    pub members: Vec<usize>,
    pub mean: f64,
    pub relative_error: f64,
    /// All `multiplicity` members exist and lie inside the window.
    pub matched: bool,
}

/// Greedy matching: nonzero eigenvalues of each sign are taken in order of
/// increasing magnitude and handed out to the targets of that sign, also in
/// order of increasing magnitude, `multiplicity` at a time.
pub fn match_clusters(
    eigenvalues: &[f64],
    kernel_threshold: f64,
    targets: &[Target],
) -> Vec<Cluster> {
    let mut out = Vec::with_capacity(targets.len());
    for sign in [-1.0, 1.0] {
        let mut pool: Vec<usize> = (0..eigenvalues.len())
            .filter(|&i| eigenvalues[i].abs() >= kernel_threshold && eigenvalues[i] * sign > 0.0)
            .collect();
        pool.sort_by(|&i, &j| eigenvalues[i].abs().total_cmp(&eigenvalues[j].abs()));
        let mut mine: Vec<&Target> = targets
            .iter()
            .filter(|t| t.eigenvalue * sign > 0.0)
            .collect();
        mine.sort_by(|a, b| a.eigenvalue.abs().total_cmp(&b.eigenvalue.abs()));
        let mut next = 0;
        for t in mine {
            let end = (next + t.multiplicity).min(pool.len());
            let members: Vec<usize> = pool[next..end].to_vec();
            next = end;
            let mean = if members.is_empty() {
                f64::NAN
            } else {
                members.iter().map(|&i| eigenvalues[i]).sum::<f64>() / members.len() as f64
            };
            let matched = members.len() == t.multiplicity
                && members
                    .iter()
                    .all(|&i| (eigenvalues[i] - t.eigenvalue).abs() <= t.window);
            out.push(Cluster {
                target: t.eigenvalue,
                multiplicity: t.multiplicity,
                window: t.window,
                members,
                mean,
                relative_error: (mean - t.eigenvalue).abs() / t.eigenvalue.abs(),
                matched,
            });
        }
    }
    out.sort_by(|a, b| {
        a.target
            .abs()
            .total_cmp(&b.target.abs())
            .then(a.target.total_cmp(&b.target))
    });
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub geometry: TorusGeometry,
    pub grid: [usize; 3],
    pub n_vertices: usize,
    pub n_edges: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
    pub kernel_dim: usize,
    pub max_residual: f64,
    pub clusters: Vec<Cluster>,
    /// Cluster index of each eigenvalue, if any.
    pub assignment: Vec<Option<usize>>,
}

impl SpectrumResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue,cluster,target,error\n");
        for (i, &v) in self.eigenvalues.iter().enumerate() {
            match self.assignment[i] {
                Some(c) => {
                    let t = self.clusters[c].target;
                    let _ = writeln!(
                        s,
                        "{i},{v:.16e},{c},{t:.16e},{:.16e}",
                        (v - t).abs() / t.abs()
                    );
                }
                None => {
                    let _ = writeln!(s, "{i},{v:.16e},,,");
                }
            }
        }
        s
    }

    /// Summary without the eigenvalue list.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "geometry": self.geometry,
            "grid": self.grid,
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
            "kernel_dim": self.kernel_dim,
            "deformation_rank": 3 * self.n_vertices - 3,
            "threshold": self.threshold,
            "max_residual": self.max_residual,
            "clusters": self.clusters,
        })
    }
}

/// Assembles and solves on one grid and matches the `n_targets` smallest
/// oracle values.
pub fn analyze(
    geometry: &TorusGeometry,
    grid: [usize; 3],
    n_targets: usize,
) -> Result<SpectrumResult> {
    let mesh = build_torus_mesh(*geometry, grid)?;
    let a = assemble_stiffness(&mesh);
    let m = assemble_mass(&mesh);
    let sol = solve_pencil(&a, &m)?;
    let max = sol
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = KERNEL_REL_THRESHOLD * max;
    let targets = oracle_targets(geometry, n_targets)?;
    let clusters = match_clusters(&sol.eigenvalues, threshold, &targets);
    let mut assignment = vec![None; sol.eigenvalues.len()];
    for (c, cl) in clusters.iter().enumerate() {
        for &i in &cl.members {
            assignment[i] = Some(c);
        }
    }
    Ok(SpectrumResult {
        geometry: *geometry,
        grid,
        n_vertices: mesh.n_vertices(),
        n_edges: mesh.n_edges(),
        kernel_dim: kernel_dimension(&sol.eigenvalues, KERNEL_REL_THRESHOLD),
        eigenvalues: sol.eigenvalues,
        threshold,
        max_residual: sol.max_residual,
        clusters,
        assignment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub grid: [usize; 3],
    pub target: f64,
    pub multiplicity: usize,
    pub mean: f64,
    pub relative_error: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub geometry: TorusGeometry,
    pub rows: Vec<ConvergenceRow>,
    /// Per target: whether the error strictly decreases along the grids.
    /// `None` for a single grid.
    pub monotone: Vec<(f64, Option<bool>)>,
    pub kernel_dims: Vec<usize>,
}

impl ConvergenceStudy {
    pub fn all_matched(&self) -> bool {
        self.rows.iter().all(|r| r.matched)
    }

    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|(_, m)| m.unwrap_or(true))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n1,n2,n3,target,multiplicity,mean,relative_error,matched\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.16e},{},{:.16e},{:.16e},{}",
                r.grid[0],
                r.grid[1],
                r.grid[2],
                r.target,
                r.multiplicity,
                r.mean,
                r.relative_error,
                r.matched
            );
        }
        s
    }
}

/// Cluster errors over a refinement sequence; grids are solved independently.
pub fn convergence_study(
    geometry: &TorusGeometry,
    grids: &[[usize; 3]],
    n_targets: usize,
    exec: Execution,
) -> Result<ConvergenceStudy> {
    if grids.is_empty() {
        return Err(Error::InvalidInput("grid list is empty".into()));
    }
    for w in grids.windows(2) {
        let grows = (0..3).all(|i| w[1][i] >= w[0][i]) && w[1] != w[0];
        if !grows {
            return Err(Error::InvalidInput(format!(
                "grids must be strictly increasing, got {:?} then {:?}",
                w[0], w[1]
            )));
        }
    }
    let results = exec.try_map_range(grids.len(), |g| analyze(geometry, grids[g], n_targets))?;
    let mut rows = Vec::new();
    for r in &results {
        for c in &r.clusters {
            rows.push(ConvergenceRow {
                grid: r.grid,
                target: c.target,
                multiplicity: c.multiplicity,
                mean: c.mean,
                relative_error: c.relative_error,
                matched: c.matched,
            });
        }
    }
    let monotone = results[0]
        .clusters
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let flag = (grids.len() > 1).then(|| {
                results
                    .windows(2)
                    .all(|w| w[1].clusters[k].relative_error < w[0].clusters[k].relative_error)
            });
            (c.target, flag)
        })
        .collect();
    Ok(ConvergenceStudy {
        geometry: *geometry,
        rows,
        monotone,
        kernel_dims: results.iter().map(|r| r.kernel_dim).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_oracle_lowest_values() {
        let oracle = fourier_oracle(&TorusGeometry::cube_2pi(), 1.5).unwrap();
        let got: Vec<(f64, usize)> = oracle
            .entries
            .iter()
            .map(|e| (e.eigenvalue, e.multiplicity))
            .collect();
        assert_eq!(got, vec![(-1.0, 12), (1.0, 6)]);
        assert!(oracle.entries.iter().all(|e| e.multiplicity % 2 == 0));
    }

    #[test]
    fn cutoff_below_first_frequency() {
        let oracle = fourier_oracle(&TorusGeometry::cube_2pi(), 0.5).unwrap();
        assert!(oracle.entries.is_empty());
        assert!(fourier_oracle(&TorusGeometry::cube_2pi(), 0.0).is_err());
    }

    #[test]
    fn anisotropic_oracle() {
        let g = TorusGeometry::new(2.0 * PI, PI, 2.0 * PI / 3.0).unwrap();
        let oracle = fourier_oracle(&g, 5.0).unwrap();
        let pos: Vec<f64> = oracle
            .entries
            .iter()
            .filter(|e| e.eigenvalue > 0.0)
            .map(|e| e.eigenvalue)
            .collect();
        assert!((pos[0] - 1.0).abs() < 1e-12);
        assert!((pos[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_counts_by_brute_force() {
        // Independent count over the full lattice (both k and -k).
        let g = TorusGeometry::new(2.0 * PI, 2.0 * PI, PI).unwrap();
        let cutoff = 6.5;
        let oracle = fourier_oracle(&g, cutoff).unwrap();
        let mut total = 0usize;
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                for c in -5i64..=5 {
                    let k2 = (a * a + b * b + 4 * c * c) as f64;
                    if k2 > 0.0 && k2 <= cutoff {
                        total += 3;
                    }
                }
            }
        }
        let listed: usize = oracle.entries.iter().map(|e| e.multiplicity).sum();
        assert_eq!(listed, total);
    }

    #[test]
    fn sigma_modes_are_eigenvectors() {
        for xi in [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 2.0, -0.5),
            Vec3::new(0.0, 0.3, 4.0),
        ] {
            let s = skew(&xi);
            let k2 = xi.norm_squared();
            let expect = [-k2, k2, k2];
            for (sig, lam) in sigma_modes(&xi).iter().zip(expect) {
                assert!((sig.mul_vec(&xi)).norm() < 1e-12);
                let image = SymMat3::from_mat(&(s * sig.to_mat() * s));
                assert!((image - lam * *sig).max_abs() < 1e-12);
            }
            let r = sigma_rayleigh(&xi);
            assert!(
                (r[0] - k2).abs() < 1e-12 && (r[1] + k2).abs() < 1e-12 && (r[2] + k2).abs() < 1e-12
            );
        }
    }

    #[test]
    fn targets_and_windows() {
        let t = oracle_targets(&TorusGeometry::cube_2pi(), 2).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].eigenvalue, t[0].multiplicity), (-1.0, 12));
        assert_eq!((t[1].eigenvalue, t[1].multiplicity), (1.0, 6));
        assert!((t[0].window - 0.5).abs() < 1e-12 && (t[1].window - 0.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_matching() {
        let targets = [
            Target {
                eigenvalue: -1.0,
                multiplicity: 2,
                window: 0.5,
            },
            Target {
                eigenvalue: 1.0,
                multiplicity: 2,
                window: 0.5,
            },
        ];
        let eigs = [-1.1, -0.9, 0.0, 0.8, 1.7, 2.0];
        let c = match_clusters(&eigs, 1e-9, &targets);
        assert!(c[0].matched && c[0].members == vec![1, 0]);
        assert!(!c[1].matched);
        assert!((c[1].mean - 1.25).abs() < 1e-15);
    }

    #[test]
    fn small_pencil_matches_direct_solve() {
        let mesh = build_torus_mesh(TorusGeometry::cube_2pi(), [2, 2, 2]).unwrap();
        let a = assemble_stiffness(&mesh);
        let m = assemble_mass(&mesh);
        let sol = solve_pencil(&a, &m).unwrap();
        assert_eq!(sol.eigenvalues.len(), mesh.n_edges());
        assert!(sol.max_residual < 1e-8);
        assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        // Trace of M⁻¹A equals the eigenvalue sum.
        let tr = (m.0.to_dense().try_inverse().unwrap() * a.0.to_dense()).trace();
        let sum: f64 = sol.eigenvalues.iter().sum();
        assert!((tr - sum).abs() < 1e-9 * (1.0 + tr.abs()));
        let k = kernel_dimension(&sol.eigenvalues, KERNEL_REL_THRESHOLD);
        assert!(k >= 3 * mesh.n_vertices() - 3);
        for rel in [1e-10, 1e-9, 1e-7, 1e-6] {
            assert_eq!(kernel_dimension(&sol.eigenvalues, rel), k);
        }
        assert!(
            sol.eigenvalues.iter().any(|&v| v > 1e-6) && sol.eigenvalues.iter().any(|&v| v < -1e-6)
        );
    }

    #[test]
    fn non_spd_mass_is_rejected() {
        let mesh = build_torus_mesh(TorusGeometry::cube_2pi(), [2, 2, 2]).unwrap();
        let a = assemble_stiffness(&mesh);
        let mut m = assemble_mass(&mesh);
        for row in &mut m.0.rows {
            for e in row.iter_mut() {
                e.1 = -e.1;
            }
        }
        assert!(matches!(solve_pencil(&a, &m), Err(Error::MassNotSpd)));
    }

    #[test]
    fn convergence_study_validation() {
        let g = TorusGeometry::cube_2pi();
        assert!(convergence_study(&g, &[], 2, Execution::Sequential).is_err());
        assert!(convergence_study(&g, &[[3, 3, 3], [2, 2, 2]], 2, Execution::Sequential).is_err());
        let single = convergence_study(&g, &[[2, 2, 2]], 2, Execution::Sequential).unwrap();
        assert_eq!(single.rows.len(), 2);
        assert!(single.monotone.iter().all(|(_, m)| m.is_none()));
    }
}
