//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! NV NT
//! x y          (NV lines)
//! i0 i1 i2     (NT lines, 0-based, counterclockwise)
//! ```
//!
//! Only vertices and connectivity are stored; edges, circumcenters and
//! transmissibilities are recomputed on load.

use std::fmt::Write as _;
use std::path::Path;

use super::{build_mesh_with, BuildOptions, Mesh, MeshError, Point};

pub fn parse_mesh(text: &str, options: BuildOptions) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines.next().ok_or_else(|| MeshError::Parse("empty file".into()))?;
    let counts = parse_fields::<usize>(header, 2, line_no)?;
    let (nv, nt) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| MeshError::Parse(format!("expected {nv} vertex lines")))?;
        let xy = parse_fields::<f64>(line, 2, line_no)?;
        vertices.push(Point::new(xy[0], xy[1]));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| MeshError::Parse(format!("expected {nt} triangle lines")))?;
        let ids = parse_fields::<usize>(line, 3, line_no)?;
        triangles.push([ids[0], ids[1], ids[2]]);
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(MeshError::Parse(format!("line {line_no}: unexpected trailing data")));
    }
    build_mesh_with(vertices, triangles, options)
}

fn parse_fields<T: std::str::FromStr>(line: &str, n: usize, line_no: usize) -> Result<Vec<T>, MeshError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != n {
        return Err(MeshError::Parse(format!(
            "line {line_no}: expected {n} fields, found {}",
            fields.len()
        )));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>()
                .map_err(|_| MeshError::Parse(format!("line {line_no}: cannot parse '{f}'")))
        })
        .collect()
}

pub fn read_mesh(path: &Path, options: BuildOptions) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
    parse_mesh(&text, options)
}

/// Serializes vertices and connectivity with round-trip float formatting.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", mesh.vertices().len(), mesh.n_triangles()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:?} {:?}", p.x, p.y).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t.vertices[0], t.vertices[1], t.vertices[2]).unwrap();
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<(), MeshError> {
    std::fs::write(path, format_mesh(mesh)).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))
}
