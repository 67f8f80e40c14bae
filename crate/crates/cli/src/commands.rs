use crate::config::{RunConfig, SCHEMA_VERSION};
use linregge::mesh::{build_torus_mesh, PeriodicMesh};
use linregge::regge_action::{
    deficits, deficits_csv, is_realizable, regge_action_with, second_variation_check,
    EdgeLengthConfig,
};
use linregge::saint_venant::{assemble_mass_with, assemble_stiffness_with, SparseMatrix};
use linregge::sample::{random_regge_field, random_symmetric, rng};
use linregge::spaces::ReggeField;
use linregge::spectrum::{analyze, convergence_study, fourier_oracle};
use linregge::{verify as suite, Execution};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CmdError {
    /// Exit code 1.
    Numerical(String),
    /// Exit code 2.
    Config(String),
}

impl CmdError {
    pub fn code(&self) -> u8 {
        match self {
            CmdError::Numerical(_) => 1,
            CmdError::Config(_) => 2,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Numerical(m) | CmdError::Config(m) => f.write_str(m),
        }
    }
}

impl From<linregge::Error> for CmdError {
    fn from(e: linregge::Error) -> Self {
        CmdError::Numerical(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CmdError>;

fn exec(cfg: &RunConfig) -> Execution {
    if cfg.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn build_mesh(cfg: &RunConfig) -> Result<PeriodicMesh> {
    Ok(build_torus_mesh(cfg.geometry, cfg.grid)?)
}

fn comment_header(prefix: &str, command: &str, cfg: &RunConfig) -> String {
    format!(
        "{prefix} schema={SCHEMA_VERSION}\n{prefix} command={command}\n{prefix} config={}\n",
        cfg.to_json_line()
    )
}

fn wrap_json(command: &str, cfg: &RunConfig, result: serde_json::Value) -> String {
    let v = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("json serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| CmdError::Config(format!("out: cannot write {}: {e}", path.display())))
}

/// Writes to `cfg.out` when set, otherwise to stdout.
fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(p) => write_file(Path::new(p), text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Secondary JSON output: next to `cfg.out` with a `.json` extension, or on stderr.
fn emit_summary(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(p) => write_file(&PathBuf::from(p).with_extension("json"), text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

pub fn mesh(cfg: &RunConfig) -> Result<()> {
    let m = build_mesh(cfg)?;
    emit(cfg, &wrap_json("mesh", cfg, m.summary_json(cfg.full)))
}

fn coo_text(cfg: &RunConfig, name: &str, m: &SparseMatrix) -> String {
    let mut buf = comment_header("%", &format!("assemble {name}"), cfg).into_bytes();
    m.write_coo(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

pub fn assemble(cfg: &RunConfig) -> Result<()> {
    let m = build_mesh(cfg)?;
    let ex = exec(cfg);
    let a = assemble_stiffness_with(&m, ex);
    let mass = assemble_mass_with(&m, ex);
    let dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CmdError::Config(format!("out: cannot create {}: {e}", dir.display())))?;
    write_file(&dir.join("A.coo"), &coo_text(cfg, "stiffness", &a.0))?;
    write_file(&dir.join("M.coo"), &coo_text(cfg, "mass", &mass.0))?;

    let mut r = rng(cfg.seed);
    let kernel_residual = (0..6)
        .map(|_| {
            let c = ReggeField::constant(&m, &random_symmetric(&mut r));
            a.0.mul_vec(&c.0)
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        })
        .fold(0.0, f64::max);
    let stats = serde_json::json!({
        "n_edges": m.n_edges(),
        "stiffness": { "nnz": a.0.nnz(), "symmetry_residual": a.0.symmetry_residual(), "trace": a.0.trace() },
        "mass": { "nnz": mass.0.nnz(), "symmetry_residual": mass.0.symmetry_residual(), "trace": mass.0.trace() },
        "constant_metric_residual": kernel_residual,
        "files": [dir.join("A.coo"), dir.join("M.coo")],
    });
    print!("{}", wrap_json("assemble", cfg, stats));
    Ok(())
}

pub fn eigs(cfg: &RunConfig) -> Result<()> {
    let res = analyze(&cfg.geometry, cfg.grid, cfg.n_eigs)?;
    emit(cfg, &(comment_header("#", "eigs", cfg) + &res.to_csv()))?;
    emit_summary(cfg, &wrap_json("eigs", cfg, res.summary_json()))
}

pub fn oracle(cfg: &RunConfig) -> Result<()> {
    let table = fourier_oracle(&cfg.geometry, cfg.cutoff)?;
    emit(cfg, &(comment_header("#", "oracle", cfg) + &table.to_csv()))
}

pub fn converge(cfg: &RunConfig) -> Result<()> {
    let study = convergence_study(&cfg.geometry, &cfg.grids, cfg.n_eigs, exec(cfg))?;
    let mut text = comment_header("#", "converge", cfg);
    for (t, flag) in &study.monotone {
        let flag = flag.map_or("n/a".to_string(), |b| b.to_string());
        text.push_str(&format!("# monotone target={t:.16e} {flag}\n"));
    }
    text.push_str(&format!("# kernel_dims={:?}\n", study.kernel_dims));
    text.push_str(&study.to_csv());
    emit(cfg, &text)?;
    if study.all_monotone() {
        Ok(())
    } else {
        Err(CmdError::Numerical(
            "cluster errors do not decrease monotonically".into(),
        ))
    }
}

pub fn action(cfg: &RunConfig) -> Result<()> {
    let m = build_mesh(cfg)?;
    let ex = exec(cfg);
    let u = random_regge_field(&m, &mut rng(cfg.seed));
    let lengths = EdgeLengthConfig::perturbed(&m, &u, cfg.eps)?;
    if !is_realizable(&m, &lengths) {
        return Err(CmdError::Numerical(format!(
            "eps {} gives unrealizable edge lengths; choose a smaller eps",
            cfg.eps
        )));
    }
    let theta = deficits(&m, &lengths, ex)?;
    let r = regge_action_with(&m, &lengths, ex)?;
    emit(
        cfg,
        &(comment_header("#", "action", cfg)
            + &format!("# action={r:.16e}\n")
            + &deficits_csv(&m, &lengths, &theta)),
    )?;
    let sv = second_variation_check(&m, &u, &cfg.epsilons)?;
    let summary = serde_json::json!({
        "action": r,
        "max_abs_deficit": theta.iter().fold(0.0_f64, |acc, t| acc.max(t.abs())),
        "second_variation": sv.to_json(),
    });
    emit_summary(cfg, &wrap_json("action", cfg, summary))
}

pub fn verify(cfg: &RunConfig) -> Result<()> {
    let report = suite::run_all(cfg.geometry, cfg.grid, cfg.seed)?;
    print!("{}", report.render());
    if let Some(p) = &cfg.out {
        let v = serde_json::to_value(&report).expect("report serializes");
        write_file(Path::new(p), &wrap_json("verify", cfg, v))?;
    }
    match report.failures() {
        0 => Ok(()),
        n => Err(CmdError::Numerical(format!(
            "{n} verification checks failed"
        ))),
    }
}
