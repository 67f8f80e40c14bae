//! Run configuration: JSON file, then command-line overrides, then validation.

use linregge::mesh::TorusGeometry;
use linregge::regge_action::log_schedule;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: TorusGeometry,
    pub grid: [usize; 3],
    /// Refinement sequence for `converge`.
    pub grids: Vec<[usize; 3]>,
    /// Oracle cutoff on `|λ|`.
    pub cutoff: f64,
    /// Number of oracle targets matched by `eigs` and `converge`.
    pub n_eigs: usize,
    /// Perturbation size for `action`; zero gives the flat lengths.
    pub eps: f64,
    /// Schedule for the second-variation check.
    pub epsilons: Vec<f64>,
    pub seed: u64,
    /// Emit incidence tables from `mesh`.
    pub full: bool,
    pub sequential: bool,
    /// Output file (or directory for `assemble`).
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: TorusGeometry::cube_2pi(),
            grid: [2, 2, 2],
            grids: vec![[2, 2, 2], [3, 3, 3], [4, 4, 4]],
            cutoff: 1.5,
            n_eigs: 2,
            eps: 0.1,
            epsilons: log_schedule(1e-2, 1e-1, 5),
            seed: 0,
            full: false,
            sequential: false,
            out: None,
        }
    }
}

/// Flag values that override the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub geometry: Option<[f64; 3]>,
    pub grid: Option<[usize; 3]>,
    pub grids: Option<Vec<[usize; 3]>>,
    pub cutoff: Option<f64>,
    pub n_eigs: Option<usize>,
    pub eps: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub full: bool,
    pub sequential: bool,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration:")?;
        for m in &self.0 {
            write!(f, "\n  {m}")?;
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    ConfigError(vec![format!("config: cannot read {}: {e}", p.display())])
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| ConfigError(vec![format!("config: {e}")]))?
            }
            None => RunConfig::default(),
        };
        cfg.apply(o);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some([a, b, c]) = o.geometry {
            self.geometry = TorusGeometry {
                l1: a,
                l2: b,
                l3: c,
            };
        }
        if let Some(g) = o.grid {
            self.grid = g;
        }
        if let Some(g) = &o.grids {
            self.grids = g.clone();
        }
        if let Some(c) = o.cutoff {
            self.cutoff = c;
        }
        if let Some(n) = o.n_eigs {
            self.n_eigs = n;
        }
        if let Some(e) = o.eps {
            self.eps = e;
        }
        if let Some(e) = &o.epsilons {
            self.epsilons = e.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        self.full |= o.full;
        self.sequential |= o.sequential;
        if o.out.is_some() {
            self.out = o.out.clone();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.geometry.validate().is_err() {
            errs.push(format!(
                "geometry: side lengths must be positive and finite, got {:?}",
                self.geometry.sides()
            ));
        }
        if self.grid.iter().any(|&n| n < 2) {
            errs.push(format!(
                "grid: every axis needs at least 2 cells, got {:?}",
                self.grid
            ));
        }
        if self.grids.is_empty() {
            errs.push("grids: must not be empty".into());
        }
        if let Some(g) = self.grids.iter().find(|g| g.iter().any(|&n| n < 2)) {
            errs.push(format!(
                "grids: every axis needs at least 2 cells, got {g:?}"
            ));
        }
        for w in self.grids.windows(2) {
            if !((0..3).all(|i| w[1][i] >= w[0][i]) && w[1] != w[0]) {
                errs.push(format!(
                    "grids: must be strictly increasing, got {:?} then {:?}",
                    w[0], w[1]
                ));
            }
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            errs.push(format!(
                "cutoff: must be positive and finite, got {}",
                self.cutoff
            ));
        }
        if self.n_eigs == 0 {
            errs.push("n_eigs: must be at least 1".into());
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            errs.push(format!(
                "eps: must be finite and non-negative, got {}",
                self.eps
            ));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            errs.push(format!(
                "epsilons: must be a nonempty list of positive values, got {:?}",
                self.epsilons
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// `"n"` or `"n1,n2,n3"`.
pub fn parse_grid(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|e| format!("bad grid entry {p:?}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match nums.as_slice() {
        [n] => Ok([*n; 3]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(format!("grid needs 1 or 3 entries, got {s:?}")),
    }
}

/// Grids separated by `;`, each as in [`parse_grid`].
pub fn parse_grids(s: &str) -> Result<Vec<[usize; 3]>, String> {
    s.split(';').map(parse_grid).collect()
}

/// `"a,b,c"` side lengths.
pub fn parse_geometry(s: &str) -> Result<[f64; 3], String> {
    let v = parse_floats(s)?;
    match v.as_slice() {
        [l] => Ok([*l; 3]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(format!("geometry needs 1 or 3 side lengths, got {s:?}")),
    }
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {p:?}: {e}"))
        })
        .collect()
}
