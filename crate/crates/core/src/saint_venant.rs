//! Distributional `curlᵀcurl` of Regge metrics, the stiffness form `a_h` and
//! the mass matrix.
//!
//! For a Regge field `u`,
//! `curlᵀcurl u = Σ_e ⟦u⟧_e t_e t_eᵀ δ_e` with
//! `⟦u⟧_e = Σ_{f ∋ e} m_efᵀ [u]_ef n_ef`, where `[u]_ef = u_{T+} - u_{T-}`,
//! `T+` is the tetrahedron `n_ef` points into and `T-` the one behind `f`.
//!
//! With this orientation `½ ⟦u⟧_e` is the derivative of the deficit angle at
//! `e` along `I + εu`, so `cᵀ A c / 8` is the `ε²` coefficient of the Regge
//! action. Against the smooth operator (row-wise curl, transpose, row-wise
//! curl) the assembled one carries the opposite sign:
//! `apply_ctc(I¹ u) = -I²(curlᵀcurl u)`.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::PeriodicMesh;
use crate::spaces::{regge_to_tet_matrices, tet_basis, EdgeMeasure, ReggeField};
use crate::sym::SymMat3;
use std::fmt::Write as _;
use std::io::{self, Write};

/// Index of the sector of `e` whose face is `f`, and the tets on either side.
fn sector_of(mesh: &PeriodicMesh, e: usize, f: usize) -> Result<(usize, usize, usize)> {
    let star = mesh.edge_star(e)?;
    let i = star
        .iter()
        .position(|s| s.face == f)
        .ok_or_else(|| Error::InvalidInput(format!("edge {e} is not an edge of face {f}")))?;
    let prev = (i + star.len() - 1) % star.len();
    Ok((i, star[i].tet, star[prev].tet))
}

/// `[u]_ef = u_{T+} - u_{T-}` across face `f`, oriented by the frame of edge `e`.
pub fn jump_across_face(
    mesh: &PeriodicMesh,
    u: &ReggeField,
    f: usize,
    e: usize,
) -> Result<SymMat3> {
    let (_, plus, minus) = sector_of(mesh, e, f)?;
    Ok(tet_matrix(mesh, u, plus)? - tet_matrix(mesh, u, minus)?)
}

fn tet_matrix(mesh: &PeriodicMesh, u: &ReggeField, t: usize) -> Result<SymMat3> {
    if u.0.len() != mesh.n_edges() {
        return Err(Error::LengthMismatch {
            what: "Regge field",
            expected: mesh.n_edges(),
            got: u.0.len(),
        });
    }
    let basis = tet_basis(mesh, t);
    let mut m = SymMat3::ZERO;
    for (k, &e) in mesh.tets[t].edges.iter().enumerate() {
        m += u.0[e] * basis[k];
    }
    Ok(m)
}

/// `⟦u⟧_e`, summed over the faces around `e`.
pub fn edge_jump_scalar(mesh: &PeriodicMesh, u: &ReggeField, e: usize) -> Result<f64> {
    let star = mesh.edge_star(e)?;
    let mut s = 0.0;
    for (i, sec) in star.iter().enumerate() {
        let minus = star[(i + star.len() - 1) % star.len()].tet;
        let jump = tet_matrix(mesh, u, sec.tet)? - tet_matrix(mesh, u, minus)?;
        s += jump.bilinear(&sec.m, &sec.n);
    }
    Ok(s)
}

/// `curlᵀcurl u` as an edge measure with coefficients `⟦u⟧_e`.
pub fn apply_ctc(mesh: &PeriodicMesh, u: &ReggeField) -> Result<EdgeMeasure> {
    apply_ctc_with(mesh, u, Execution::default())
}

pub fn apply_ctc_with(mesh: &PeriodicMesh, u: &ReggeField, exec: Execution) -> Result<EdgeMeasure> {
    let mats = regge_to_tet_matrices(mesh, u)?;
    Ok(EdgeMeasure(exec.map_range(mesh.n_edges(), |e| {
        let star = &mesh.edges[e].star;
        star.iter()
            .enumerate()
            .map(|(i, sec)| {
                let minus = star[(i + star.len() - 1) % star.len()].tet;
                (mats[sec.tet] - mats[minus]).bilinear(&sec.m, &sec.n)
            })
            .sum()
    })))
}

/// Square sparse matrix stored as sorted rows of `(column, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    /// Builds a row from unsorted entries, merging duplicates.
    fn row_from(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
        entries.sort_by_key(|x| x.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (j, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => out.push((j, v)),
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |x| x.0)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `xᵀ S y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &(_, v)| m.max(v.abs()))
    }

    /// `max |S_ij - S_ji| / max |S_ij|`.
    pub fn symmetry_residual(&self) -> f64 {
        let mut r = 0.0_f64;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                r = r.max((v - self.get(j, i)).abs());
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            r / scale
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Coordinate text format: `rows cols nnz`, then 0-based `i j value`.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        let mut line = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                line.clear();
                let _ = write!(line, "{i} {j} {v:.16e}");
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }
}

/// `A[e, e'] = a_h(ρ_e', ρ_e) = ⟦ρ_e'⟧_e / l_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix(pub SparseMatrix);

/// `M[e, e'] = ∫ ρ_e : ρ_e'`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix(pub SparseMatrix);

pub fn assemble_stiffness(mesh: &PeriodicMesh) -> StiffnessMatrix {
    assemble_stiffness_with(mesh, Execution::default())
}

pub fn assemble_stiffness_with(mesh: &PeriodicMesh, exec: Execution) -> StiffnessMatrix {
    let rows = exec.map_range(mesh.n_edges(), |e| {
        let edge = &mesh.edges[e];
        let star = &edge.star;
        let mut entries = Vec::with_capacity(star.len() * 12);
        for (i, sec) in star.iter().enumerate() {
            let minus = star[(i + star.len() - 1) % star.len()].tet;
            for (t, sign) in [(sec.tet, 1.0), (minus, -1.0)] {
                let basis = tet_basis(mesh, t);
                for (k, &col) in mesh.tets[t].edges.iter().enumerate() {
                    entries.push((col, sign * basis[k].bilinear(&sec.m, &sec.n) / edge.length));
                }
            }
        }
        SparseMatrix::row_from(entries)
    });
    StiffnessMatrix(SparseMatrix {
        n: mesh.n_edges(),
        rows,
    })
}

pub fn assemble_mass(mesh: &PeriodicMesh) -> MassMatrix {
    assemble_mass_with(mesh, Execution::default())
}

pub fn assemble_mass_with(mesh: &PeriodicMesh, exec: Execution) -> MassMatrix {
    let rows = exec.map_range(mesh.n_edges(), |e| {
        let mut entries = Vec::with_capacity(mesh.edges[e].tets.len() * 6);
        for &t in &mesh.edges[e].tets {
            let basis = tet_basis(mesh, t);
            let tet = &mesh.tets[t];
            let k = mesh.local_edge(t, e).expect("star tet contains the edge");
            for (l, &col) in tet.edges.iter().enumerate() {
                entries.push((col, tet.volume * basis[k].frobenius(&basis[l])));
            }
        }
        SparseMatrix::row_from(entries)
    });
    MassMatrix(SparseMatrix {
        n: mesh.n_edges(),
        rows,
    })
}

/// `a_h(u, v) = Σ_e ⟦u⟧_e μ_e(v) / l_e`.
pub fn a_h(mesh: &PeriodicMesh, u: &ReggeField, v: &ReggeField) -> Result<f64> {
    let j = apply_ctc(mesh, u)?;
    Ok(mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| j.0[e] * v.0[e] / edge.length)
        .sum())
}
