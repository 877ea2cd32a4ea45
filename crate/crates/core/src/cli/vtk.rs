//! Legacy ASCII VTK export of a scheme state.

use std::fmt::Write as _;
use std::path::Path;

use crate::fields::{rt0_evaluate, FieldP0, FieldRt0};
use crate::mesh::Mesh;
use crate::physics::DecayChain;
use crate::scheme::SchemeState;

/// VTK cell type of a linear triangle.
const VTK_TRIANGLE: u8 = 5;

fn scalars(out: &mut String, name: &str, values: impl Iterator<Item = f64>) {
    writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
    for v in values {
        writeln!(out, "{v:?}").unwrap();
    }
}

fn velocity_at_centroids(mesh: &Mesh, u: &FieldRt0) -> Vec<[f64; 2]> {
    (0..mesh.n_triangles())
        .map(|t| {
            let x = mesh.triangles()[t].centroid;
            // The centroid is inside its own triangle.
            let v = rt0_evaluate(mesh, u, t, x).expect("centroid lies in its triangle");
            [v.x, v.y]
        })
        .collect()
}

/// Renders the state: cell scalars `c`, `theta`, `p` (the CR function at the
/// centroid), `div_u_residual`, one `species_i` per chain member in physical
/// variables, and the cell vector `u` at the centroid.
pub fn format_vtk(mesh: &Mesh, state: &SchemeState, div_residual: &FieldP0, chain: Option<&DecayChain>, config_hash: &str) -> String {
    let mut out = String::new();
    writeln!(out, "# vtk DataFile Version 3.0").unwrap();
    writeln!(out, "fvnc step {} time {:?} config {config_hash}", state.step, state.time).unwrap();
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(out, "POINTS {} double", mesh.vertices().len()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:?} {:?} 0.0", p.x, p.y).unwrap();
    }
    let n = mesh.n_triangles();
    writeln!(out, "CELLS {n} {}", 4 * n).unwrap();
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        writeln!(out, "3 {a} {b} {c}").unwrap();
    }
    writeln!(out, "CELL_TYPES {n}").unwrap();
    for _ in 0..n {
        writeln!(out, "{VTK_TRIANGLE}").unwrap();
    }
    writeln!(out, "CELL_DATA {n}").unwrap();
    scalars(&mut out, "c", state.c.values.iter().copied());
    scalars(&mut out, "theta", state.theta.values.iter().copied());
    scalars(&mut out, "p", (0..n).map(|t| state.p.centroid_value(mesh, t)));
    scalars(&mut out, "div_u_residual", div_residual.values.iter().copied());
    if let Some(chain) = chain {
        let physical: Vec<Vec<f64>> = (0..n)
            .map(|t| {
                let transformed: Vec<f64> = std::iter::once(state.c.values[t])
                    .chain(state.extra.iter().map(|f| f.values[t]))
                    .collect();
                chain.inverse(&transformed)
            })
            .collect();
        for i in 0..chain.len() {
            scalars(&mut out, &format!("species_{}", i + 1), physical.iter().map(|row| row[i]));
        }
    }
    writeln!(out, "VECTORS u double").unwrap();
    for [x, y] in velocity_at_centroids(mesh, &state.u) {
        writeln!(out, "{x:?} {y:?} 0.0").unwrap();
    }
    out
}

pub fn export_vtk(
    path: &Path,
    mesh: &Mesh,
    state: &SchemeState,
    div_residual: &FieldP0,
    chain: Option<&DecayChain>,
    config_hash: &str,
) -> std::io::Result<()> {
    std::fs::write(path, format_vtk(mesh, state, div_residual, chain, config_hash))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldP1nc, FieldRt0};
    use crate::mesh::generate_equilateral_mesh;

    #[test]
    fn constant_state_layout() {
        let mesh = generate_equilateral_mesh(1, 2, 1.0).unwrap();
        let state = SchemeState {
            step: 3,
            time: 0.5,
            c: FieldP0::constant(&mesh, 0.25),
            theta: FieldP0::constant(&mesh, 1.0),
            p: FieldP1nc::constant(&mesh, 2.0),
            u: FieldRt0::zeros(&mesh),
            extra: Vec::new(),
        };
        let text = format_vtk(&mesh, &state, &FieldP0::zeros(&mesh), None, "abc");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(lines[1].contains("config abc"));
        assert!(text.contains("POINTS 6 double"));
        assert!(text.contains("CELLS 4 16"));
        assert!(text.contains("CELL_DATA 4"));
        assert_eq!(lines.iter().filter(|l| **l == "5").count(), 4);
        let block = |name: &str| -> Vec<f64> {
            let i = lines.iter().position(|l| l.starts_with(&format!("SCALARS {name} "))).unwrap();
            lines[i + 2..i + 6].iter().map(|l| l.parse().unwrap()).collect()
        };
        assert_eq!(block("c"), vec![0.25; 4]);
        assert_eq!(block("theta"), vec![1.0; 4]);
        assert_eq!(block("p"), vec![2.0; 4]);
        assert_eq!(block("div_u_residual"), vec![0.0; 4]);
        assert_eq!(lines.last().unwrap(), &"0.0 0.0 0.0");
    }
}
