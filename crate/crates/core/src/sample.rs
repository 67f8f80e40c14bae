//! Seeded random inputs for verification runs.

use crate::mesh::PeriodicMesh;
use crate::spaces::{ReggeField, VertexVectorField};
use crate::sym::{SymMat3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` i.i.d. values uniform in `[-1, 1]`.
pub fn uniform_coefficients(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn random_regge_field(mesh: &PeriodicMesh, rng: &mut ChaCha8Rng) -> ReggeField {
    ReggeField(uniform_coefficients(rng, mesh.n_edges()))
}

pub fn random_vertex_field(mesh: &PeriodicMesh, rng: &mut ChaCha8Rng) -> VertexVectorField {
    VertexVectorField(
        (0..mesh.n_vertices())
            .map(|_| Vec3::from_iterator(uniform_coefficients(rng, 3)))
            .collect(),
    )
}

pub fn random_symmetric(rng: &mut ChaCha8Rng) -> SymMat3 {
    let c = uniform_coefficients(rng, 6);
    SymMat3([c[0], c[1], c[2], c[3], c[4], c[5]])
}
