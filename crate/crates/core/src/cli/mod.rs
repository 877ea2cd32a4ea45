//! Command implementations behind the `fvnc` binary.

mod config;
mod vtk;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    ChainSpec, MeshSpec, MmsSpec, Mode, OutputSpec, PhysicsSpec, Profile, ProfileSpec, RunConfig, SchemeSpec, SolverEntry, SolverSpec,
};
pub use vtk::{export_vtk, format_vtk};

use crate::mesh::io::read_mesh;
use crate::mesh::{admissibility_report, generate_equilateral_mesh, BuildOptions, Mesh, MeshQuality};
use crate::scheme::{div_residual, write_checkpoint, SchemeError, Simulation, TimeSeries};
use crate::verification::{invariant_suite, run_convergence, SuiteConfig, SuiteReport};

/// Largest accepted `|div u - s| / (tol * scale)`.
const DIV_RATIO_LIMIT: f64 = 10.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Mesh(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Verification(_) => 5,
            CliError::Output(_) => 1,
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::InvalidConfig(_) | SchemeError::InadmissibleData(_) | SchemeError::Physics(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn say(w: &mut dyn Write, text: &str) -> Result<(), CliError> {
    w.write_all(text.as_bytes()).map_err(|e| CliError::Output(format!("stdout: {e}")))
}

/// Hex SHA-256 of the config file contents.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Reads and parses a config; returns it with its hash.
pub fn load_config(path: &Path) -> Result<(RunConfig, String), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let config = RunConfig::parse(&text, &base).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((config, config_hash(&text)))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| output_error(path, e))
}

/// Summary of a finished `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub max_principle_guaranteed: bool,
    pub max_div_ratio: f64,
    pub output_dir: PathBuf,
}

fn banner(failures: &[(&'static str, usize)]) -> String {
    let rule = "!".repeat(64);
    let mut out = format!("{rule}\n!! maximum principle not guaranteed\n");
    for (name, count) in failures.iter().filter(|(_, n)| *n > 0) {
        writeln!(out, "!!   {name}: fails on {count} triangles").unwrap();
    }
    writeln!(out, "!! the run continues; bounds are monitored but not enforced\n{rule}").unwrap();
    out
}

/// Runs the configured simulation and writes VTK snapshots, the monitor CSV
/// and a final checkpoint into the output directory (`out` overrides it).
pub fn cmd_run(config_path: &Path, out: Option<&Path>, w: &mut dyn Write) -> Result<RunSummary, CliError> {
    let (config, hash) = load_config(config_path)?;
    let mesh = config.build_mesh().map_err(|e| CliError::Mesh(e.to_string()))?;
    let data = match config.mode {
        Mode::Physical => config.physical_data().map_err(CliError::Config)?,
        Mode::Mms => config.mms_case().map_err(CliError::Config)?.data,
    };
    let mut scheme = config.scheme_config().map_err(CliError::Config)?;
    if config.mode == Mode::Mms && config.scheme.steps.is_none() && config.scheme.k.is_none() {
        scheme = crate::scheme::SchemeConfig {
            k: config.mms.final_time / config.mms.base_steps as f64,
            n_steps: config.mms.base_steps,
            ..scheme
        };
    }
    let tol = scheme.pressure_solver.rel_tolerance;
    let (n_steps, vtk_every) = (scheme.n_steps, config.output.vtk_every);
    let dir = out.map_or_else(|| config.output_dir(), Path::to_path_buf);
    create_dir(&dir)?;

    let sim = Simulation::new(&mesh, &data, scheme)?;
    let validation = sim.validation();
    let guaranteed = validation.max_principle_guaranteed();
    if !guaranteed {
        let text = banner(&validation.failure_counts());
        log::warn!("maximum principle not guaranteed");
        say(w, &text)?;
    }
    say(
        w,
        &format!(
            "mesh: {} triangles, h = {:.4e}; {} steps of k = {:.4e}; config {hash}\n",
            mesh.n_triangles(),
            mesh.h(),
            n_steps,
            sim.config().k
        ),
    )?;

    let chain = data.chain.as_ref();
    let snapshot = |state: &crate::scheme::SchemeState| -> Result<(), CliError> {
        let s = sim.sources(state.time).s;
        let residual = div_residual(&mesh, &state.u, &s);
        let path = dir.join(format!("state_{:06}.vtk", state.step));
        export_vtk(&path, &mesh, state, &residual, chain, &hash).map_err(|e| output_error(&path, e))
    };
    let initial = sim.init()?;
    snapshot(&initial)?;

    let mut monitors = format!("# config_hash {hash}\n{}\n", TimeSeries::csv_header());
    let mut write_error = None;
    let mut max_div_ratio = 0.0f64;
    let result = sim.run_from(initial, |state, rec| {
        monitors.push_str(&TimeSeries::csv_row(rec));
        monitors.push('\n');
        if rec.div_scale > 0.0 {
            max_div_ratio = max_div_ratio.max(rec.div_residual / (tol * rec.div_scale));
        }
        let due = (vtk_every > 0 && state.step % vtk_every == 0) || state.step == n_steps;
        if due && write_error.is_none() {
            write_error = snapshot(state).err();
        }
    });
    if config.output.monitors {
        write_file(&dir.join("monitors.csv"), &monitors)?;
    }
    let (state, series) = result?;
    if let Some(e) = write_error {
        return Err(e);
    }
    if config.output.checkpoint {
        let path = dir.join("checkpoint");
        write_checkpoint(&path, &mesh, &state, &hash).map_err(|e| CliError::Output(e.to_string()))?;
    }
    let last = series.records.last().expect("at least one step");
    say(
        w,
        &format!(
            "done: t = {:?}; c in [{:.6e}, {:.6e}], theta in [{:.6e}, {:.6e}]; max |div u - s| / (tol scale) = {:.3}\n",
            state.time, last.c_min, last.c_max, last.theta_min, last.theta_max, max_div_ratio
        ),
    )?;
    if guaranteed {
        let violated = series.records.iter().filter(|r| r.max_principle_ok == Some(false)).count();
        if violated > 0 {
            say(w, &format!("warning: discrete bounds exceeded in {violated} steps\n"))?;
        }
    }
    if max_div_ratio > DIV_RATIO_LIMIT {
        return Err(CliError::Solver(format!(
            "divergence residual {max_div_ratio:.3} x (tolerance x scale) exceeds {DIV_RATIO_LIMIT}"
        )));
    }
    Ok(RunSummary {
        steps: state.step,
        final_time: state.time,
        max_principle_guaranteed: guaranteed,
        max_div_ratio,
        output_dir: dir,
    })
}

/// Convergence study of the configured MMS case (defaults without a config).
/// Fails with a verification error when a required order is below the
/// threshold.
pub fn cmd_convergence(config_path: Option<&Path>, levels: Option<usize>, out: Option<&Path>, w: &mut dyn Write) -> Result<(), CliError> {
    let (config, hash) = match config_path {
        Some(path) => load_config(path)?,
        None => {
            let text = "mode = \"mms\"\n";
            (RunConfig::parse(text, Path::new(".")).map_err(CliError::Config)?, config_hash(text))
        }
    };
    if config.mode != Mode::Mms {
        return Err(CliError::Config("the convergence command needs mode = \"mms\"".into()));
    }
    let mut study = config.convergence_config().map_err(CliError::Config)?;
    if let Some(n) = levels {
        if n < 3 {
            return Err(CliError::Config(format!("--levels must be at least 3, got {n}")));
        }
        study.levels = n;
    }
    let case = config.mms_case().map_err(CliError::Config)?;
    let base = config.build_mesh().map_err(|e| CliError::Mesh(e.to_string()))?;
    let report = run_convergence(&case, &base, &study).map_err(|e| CliError::Solver(e.to_string()))?;
    let table = report.to_table();
    say(w, &table)?;
    say(w, &format!("max |div u - s| / (tol scale) = {:.3}\n", report.max_div_ratio()))?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(&dir.join("convergence.txt"), &format!("# config_hash {hash}\n{table}"))?;
        write_file(&dir.join("convergence.csv"), &format!("# config_hash {hash}\n{}", report.to_csv()))?;
    }
    if !report.passed() {
        return Err(CliError::Verification(format!("observed orders below {}", report.threshold)));
    }
    if report.max_div_ratio() > DIV_RATIO_LIMIT {
        return Err(CliError::Verification(format!(
            "divergence residual ratio {:.3} above {DIV_RATIO_LIMIT}",
            report.max_div_ratio()
        )));
    }
    Ok(())
}

/// The three equilateral meshes of the identity checks: 2, 8 and 32 triangles.
pub fn default_suite_meshes() -> Vec<Mesh> {
    [(1, 1.0), (2, 0.5), (4, 0.25)]
        .iter()
        .map(|&(n, side)| generate_equilateral_mesh(n, n, side).expect("equilateral meshes are admissible"))
        .collect()
}

/// Runs the invariant suite with `seed` on the default meshes, or on the
/// mesh file `mesh`. Reports are written to `out` when given.
pub fn cmd_verify(seed: u64, mesh: Option<&Path>, out: Option<&Path>, w: &mut dyn Write) -> Result<SuiteReport, CliError> {
    let meshes = match mesh {
        Some(path) => vec![read_mesh(path, BuildOptions::default()).map_err(|e| CliError::Mesh(e.to_string()))?],
        None => default_suite_meshes(),
    };
    let report = invariant_suite(
        &meshes,
        &SuiteConfig {
            seed,
            ..SuiteConfig::default()
        },
    );
    let text = report.to_text();
    say(w, &text)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(&dir.join("suite.txt"), &text)?;
        write_file(&dir.join("suite.csv"), &report.to_csv())?;
    }
    if !report.passed() {
        let names: Vec<String> = report.failures().map(|e| format!("{} ({})", e.property, e.case)).collect();
        return Err(CliError::Verification(names.join(", ")));
    }
    Ok(report)
}

pub fn format_quality(q: &MeshQuality) -> String {
    let mut out = String::new();
    writeln!(out, "vertices            {}", q.n_vertices).unwrap();
    writeln!(out, "triangles           {}", q.n_triangles).unwrap();
    writeln!(out, "interior edges      {}", q.n_interior_edges).unwrap();
    writeln!(out, "boundary edges      {}", q.n_boundary_edges).unwrap();
    writeln!(out, "h                   {:.6e}", q.h).unwrap();
    writeln!(out, "max angle (deg)     {:.6}", q.max_angle.to_degrees()).unwrap();
    writeln!(out, "min angle (deg)     {:.6}", q.min_angle.to_degrees()).unwrap();
    match q.min_tau_interior {
        Some(t) => writeln!(out, "min tau (interior)  {t:.6e}").unwrap(),
        None => writeln!(out, "min tau (interior)  none").unwrap(),
    }
    writeln!(out, "min d/|sigma|       {:.6e}", q.min_d_over_length).unwrap();
    writeln!(out, "min |sigma|/h       {:.6e}", q.min_length_over_h).unwrap();
    writeln!(out, "regularity constant {:.6e}", q.regularity_constant()).unwrap();
    out
}

/// Builds the mesh and prints its admissibility report.
pub fn cmd_check_mesh(path: &Path, w: &mut dyn Write) -> Result<MeshQuality, CliError> {
    match read_mesh(path, BuildOptions::default()) {
        Ok(mesh) => {
            let quality = admissibility_report(&mesh);
            say(w, &format!("{}: admissible\n{}", path.display(), format_quality(&quality)))?;
            Ok(quality)
        }
        Err(e) => {
            say(w, &format!("{}: inadmissible: {e}\n", path.display()))?;
            Err(CliError::Mesh(format!("{}: {e:?}", path.display())))
        }
    }
}
