//! Linearized Regge calculus on periodic tetrahedral meshes of a flat 3-torus.
//!
//! The crate is organised along the discrete elasticity complex
//!
//! ```text
//!   X0 (vertex vectors) --def--> X1 (Regge metrics) --curlT curl--> X2 (edge measures) --div--> X3 (vertex measures)
//! ```
//!
//! * [`mesh`] builds the structured Freudenthal triangulation of the torus and
//!   all the frames needed downstream.
//! * [`spaces`] holds the four discrete spaces, their interpolators and the
//!   complex maps `def` and `div`.
//! * [`saint_venant`] assembles the distributional `curlT curl` operator from
//!   face jumps, together with the mass matrix.
//! * [`spectrum`] solves the generalized eigenproblem and compares it to the
//!   exact Fourier spectrum.
//! * [`regge_action`] evaluates deficit angles (holonomy and dihedral routes),
//!   the Regge action and its Taylor expansion around the flat metric.
//! * [`verify`] bundles the invariant suites used by the command-line tool.
//!
//! Data-parallel loops go through [`exec`]; they use rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

pub mod error;
pub mod exec;
pub mod mesh;
pub mod quadrature;
pub mod regge_action;
pub mod saint_venant;
pub mod sample;
pub mod spaces;
pub mod spectrum;
pub mod sym;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use mesh::{PeriodicMesh, TorusGeometry};
pub use sym::SymMat3;
