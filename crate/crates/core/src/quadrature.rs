//! Gauss–Legendre rules on segments and collapsed (conical product) rules on
//! tetrahedra.

use crate::sym::Vec3;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "at least one Gauss point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton on P_n starting from the Chebyshev-like guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map [-1, 1] -> [0, 1].
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫₀¹ f`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature on the reference tetrahedron `{x, y, z ≥ 0, x + y + z ≤ 1}`,
/// obtained by collapsing the unit cube. With `n` points per direction it is
/// exact for polynomials of total degree `2n - 3`.
#[derive(Debug, Clone)]
pub struct TetRule {
    /// Barycentric coordinates `(λ₀, λ₁, λ₂, λ₃)` of each point.
    pub points: Vec<[f64; 4]>,
    /// Weights summing to 1 (i.e. already divided by the reference volume).
    pub weights: Vec<f64>,
}

impl TetRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "the collapsed rule needs two points per direction");
        let g = GaussLegendre::new(n);
        let mut points = Vec::with_capacity(n * n * n);
        let mut weights = Vec::with_capacity(n * n * n);
        for (ia, &a) in g.nodes.iter().enumerate() {
            for (ib, &b) in g.nodes.iter().enumerate() {
                for (ic, &c) in g.nodes.iter().enumerate() {
                    let x = a;
                    let y = (1.0 - a) * b;
                    let z = (1.0 - a) * (1.0 - b) * c;
                    let jac = (1.0 - a) * (1.0 - a) * (1.0 - b);
                    points.push([1.0 - x - y - z, x, y, z]);
                    // Reference volume is 1/6.
                    weights.push(6.0 * jac * g.weights[ia] * g.weights[ib] * g.weights[ic]);
                }
            }
        }
        TetRule { points, weights }
    }

    /// Minimal points per direction for exactness at total degree `deg`.
    pub fn for_degree(deg: usize) -> Self {
        Self::new((deg + 3).div_ceil(2).max(1))
    }

    /// `∫_T f` over the tetrahedron with the given vertices; `f` receives the
    /// physical point and its barycentric coordinates.
    pub fn integrate<T, F>(&self, verts: &[Vec3; 4], volume: f64, zero: T, mut f: F) -> T
    where
        T: std::ops::AddAssign + std::ops::Mul<f64, Output = T> + Copy,
        F: FnMut(&Vec3, &[f64; 4]) -> T,
    {
        let mut acc = zero;
        for (bary, &w) in self.points.iter().zip(&self.weights) {
            let x =
                verts[0] * bary[0] + verts[1] * bary[1] + verts[2] * bary[2] + verts[3] * bary[3];
            acc += f(&x, bary) * (w * volume);
        }
        acc
    }
}
