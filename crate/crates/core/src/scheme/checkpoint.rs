//! Restart files: the mesh, one CSV per field and a small `meta.txt`.
//! Floats are written in round-trip form, so a restart reproduces the
//! original run bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::SchemeState;
use crate::fields::{from_csv, to_csv, FieldError, FieldP0, FieldP1nc, FieldRt0};
use crate::mesh::io::{format_mesh, parse_mesh};
use crate::mesh::{BuildOptions, Mesh, MeshError};

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Field { path: PathBuf, source: FieldError },
    #[error("{path}: {source}")]
    Mesh { path: PathBuf, source: MeshError },
    #[error("{path}: {message}")]
    Meta { path: PathBuf, message: String },
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub mesh: Mesh,
    pub state: SchemeState,
    pub config_hash: String,
}

fn write(path: PathBuf, text: &str) -> Result<(), CheckpointError> {
    fs::write(&path, text).map_err(|source| CheckpointError::Io { path, source })
}

fn read(path: PathBuf) -> Result<(PathBuf, String), CheckpointError> {
    match fs::read_to_string(&path) {
        Ok(text) => Ok((path, text)),
        Err(source) => Err(CheckpointError::Io { path, source }),
    }
}

fn read_values(dir: &Path, name: &str, expected: usize) -> Result<Vec<f64>, CheckpointError> {
    let (path, text) = read(dir.join(name))?;
    let values = from_csv(&text).map_err(|source| CheckpointError::Field {
        path: path.clone(),
        source,
    })?;
    if values.len() != expected {
        return Err(CheckpointError::Field {
            path,
            source: FieldError::LengthMismatch {
                expected,
                found: values.len(),
            },
        });
    }
    Ok(values)
}

pub fn write_checkpoint(dir: &Path, mesh: &Mesh, state: &SchemeState, config_hash: &str) -> Result<(), CheckpointError> {
    fs::create_dir_all(dir).map_err(|source| CheckpointError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(dir.join("mesh.txt"), &format_mesh(mesh))?;
    write(dir.join("c.csv"), &to_csv(&state.c.values))?;
    write(dir.join("theta.csv"), &to_csv(&state.theta.values))?;
    write(dir.join("p.csv"), &to_csv(&state.p.dofs))?;
    write(dir.join("u.csv"), &to_csv(&state.u.fluxes))?;
    for (i, f) in state.extra.iter().enumerate() {
        write(dir.join(format!("species_{}.csv", i + 2)), &to_csv(&f.values))?;
    }
    let meta = format!(
        "step {}\ntime {:?}\nconfig_hash {}\nextra_species {}\n",
        state.step,
        state.time,
        config_hash,
        state.extra.len()
    );
    write(dir.join("meta.txt"), &meta)
}

pub fn read_checkpoint(dir: &Path) -> Result<Checkpoint, CheckpointError> {
    let (meta_path, meta) = read(dir.join("meta.txt"))?;
    let bad = |message: String| CheckpointError::Meta {
        path: meta_path.clone(),
        message,
    };
    let mut step = None;
    let mut time = None;
    let mut hash = None;
    let mut extra = None;
    for line in meta.lines().filter(|l| !l.trim().is_empty()) {
        let (key, value) = line.split_once(' ').ok_or_else(|| bad(format!("malformed line '{line}'")))?;
        let value = value.trim();
        match key {
            "step" => step = Some(value.parse::<usize>().map_err(|e| bad(format!("step: {e}")))?),
            "time" => time = Some(value.parse::<f64>().map_err(|e| bad(format!("time: {e}")))?),
            "config_hash" => hash = Some(value.to_string()),
            "extra_species" => extra = Some(value.parse::<usize>().map_err(|e| bad(format!("extra_species: {e}")))?),
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }
    let (step, time, config_hash, n_extra) = match (step, time, hash, extra) {
        (Some(s), Some(t), Some(h), Some(e)) => (s, t, h, e),
        _ => return Err(bad("missing step, time, config_hash or extra_species".into())),
    };

    let (mesh_path, mesh_text) = read(dir.join("mesh.txt"))?;
    // The mesh was accepted when the run started; do not re-apply the strict angle test.
    let mesh = parse_mesh(&mesh_text, BuildOptions { allow_right_angles: true })
        .map_err(|source| CheckpointError::Mesh { path: mesh_path, source })?;
    let (nt, ne) = (mesh.n_triangles(), mesh.n_edges());
    let state = SchemeState {
        step,
        time,
        c: FieldP0 {
            values: read_values(dir, "c.csv", nt)?,
        },
        theta: FieldP0 {
            values: read_values(dir, "theta.csv", nt)?,
        },
        p: FieldP1nc {
            dofs: read_values(dir, "p.csv", ne)?,
        },
        u: FieldRt0 {
            fluxes: read_values(dir, "u.csv", ne)?,
        },
        extra: (0..n_extra)
            .map(|i| read_values(dir, &format!("species_{}.csv", i + 2), nt).map(|values| FieldP0 { values }))
            .collect::<Result<_, _>>()?,
    };
    Ok(Checkpoint { mesh, state, config_hash })
}
