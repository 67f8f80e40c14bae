use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "grid too coarse for periodic identification: {0:?} (every axis needs at least 2 cells)"
    )]
    GridTooCoarse([usize; 3]),

    #[error("invalid torus geometry: side lengths must be positive and finite, got {0:?}")]
    InvalidGeometry([f64; 3]),

    #[error("invalid {what} id {id} (count {count})")]
    InvalidId {
        what: &'static str,
        id: usize,
        count: usize,
    },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("malformed tetrahedron {tet}: edge-length system is singular")]
    MalformedTet { tet: usize },

    #[error("degenerate metric in sector {sector}: not positive definite")]
    DegenerateMetric { sector: usize },

    #[error("unrealizable edge lengths in tetrahedron {tet} (edge {edge})")]
    Unrealizable { tet: usize, edge: usize },

    #[error("mass matrix not SPD")]
    MassNotSpd,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
