//! Discrete fields on a [`Mesh`](crate::mesh::Mesh): piecewise constants
//! (`P0`), Crouzeix-Raviart (`P1nc`, one dof per edge midpoint) and lowest
//! order Raviart-Thomas (`RT0`, one normal flux per edge in the edge's fixed
//! orientation).
//!
//! Fields are plain value vectors; every operation takes the mesh they live on.

mod norms;
mod projection;
mod rt0;

use std::fmt::Write as _;

use thiserror::Error;

use crate::linsolve::SolveError;
use crate::mesh::{Mesh, Point};

pub use norms::{broken_h1_norm, dual_norm_minus1h, h_norm, h_seminorm_pairs, poincare_ratio};
pub use projection::{
    interp_p1nc, interp_rt0, interp_rt0_checked, l2_project_p1nc, l2_project_p1nc_p0, l2_project_rt0, l2_project_rt0_p0, project_p0_mean,
    project_p0_point, project_vector_p0_mean,
};
pub use rt0::{p1nc_evaluate, p1nc_gradient, rt0_basis_coefficients, rt0_evaluate, rt0_local_mass, rt0_mass_matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field has {found} values, the mesh needs {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("normal flux {flux:e} on boundary edge {edge} violates v.n = 0")]
    BoundaryFluxViolation { edge: usize, flux: f64 },
    #[error("point ({x}, {y}) is outside triangle {triangle}")]
    PointOutsideTriangle { triangle: usize, x: f64, y: f64 },
    #[error("field mean {mean:e} is not zero (tolerance {tolerance:e})")]
    NonZeroMean { mean: f64, tolerance: f64 },
    #[error("linear solve failed: {0}")]
    Solver(#[from] SolveError),
    #[error("linear solve did not converge (relative residual {0:e})")]
    NotConverged(f64),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

fn check_len(expected: usize, found: usize) -> Result<(), FieldError> {
    if expected == found {
        Ok(())
    } else {
        Err(FieldError::LengthMismatch { expected, found })
    }
}

fn check_finite(values: &[f64]) -> Result<(), FieldError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(FieldError::NonFinite(i)),
        None => Ok(()),
    }
}

/// One value per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP0 {
    pub values: Vec<f64>,
}

/// One 2-vector per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldP0 {
    pub values: Vec<Point>,
}

/// Crouzeix-Raviart field: the value at each edge midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP1nc {
    pub dofs: Vec<f64>,
}

/// Raviart-Thomas field: `v . n_sigma` on each edge. Boundary fluxes are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRt0 {
    pub fluxes: Vec<f64>,
}

impl FieldP0 {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self, FieldError> {
        check_len(mesh.n_triangles(), values.len())?;
        check_finite(&values)?;
        Ok(FieldP0 { values })
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        FieldP0 {
            values: vec![value; mesh.n_triangles()],
        }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    /// `(q, 1)`.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        mesh.triangles().iter().zip(&self.values).map(|(t, v)| t.area * v).sum()
    }

    pub fn mean(&self, mesh: &Mesh) -> f64 {
        self.integral(mesh) / mesh.area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        FieldP0 {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &FieldP0, f: impl Fn(f64, f64) -> f64) -> Self {
        FieldP0 {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl VectorFieldP0 {
    pub fn new(mesh: &Mesh, values: Vec<Point>) -> Result<Self, FieldError> {
        check_len(mesh.n_triangles(), values.len())?;
        Ok(VectorFieldP0 { values })
    }

    pub fn constant(mesh: &Mesh, value: Point) -> Self {
        VectorFieldP0 {
            values: vec![value; mesh.n_triangles()],
        }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, Point::default())
    }
}

impl FieldP1nc {
    pub fn new(mesh: &Mesh, dofs: Vec<f64>) -> Result<Self, FieldError> {
        check_len(mesh.n_edges(), dofs.len())?;
        check_finite(&dofs)?;
        Ok(FieldP1nc { dofs })
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        FieldP1nc {
            dofs: vec![value; mesh.n_edges()],
        }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    /// `(q, 1)`; exact since the 3-midpoint rule integrates affine functions.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        mesh.triangles()
            .iter()
            .map(|t| t.area / 3.0 * t.edges.iter().map(|&e| self.dofs[e]).sum::<f64>())
            .sum()
    }

    /// Value of the affine restriction on triangle `t` at its centroid.
    pub fn centroid_value(&self, mesh: &Mesh, t: usize) -> f64 {
        mesh.triangles()[t].edges.iter().map(|&e| self.dofs[e]).sum::<f64>() / 3.0
    }
}

impl FieldRt0 {
    /// Fails if a boundary flux is nonzero.
    pub fn new(mesh: &Mesh, fluxes: Vec<f64>) -> Result<Self, FieldError> {
        check_len(mesh.n_edges(), fluxes.len())?;
        check_finite(&fluxes)?;
        for (e, edge) in mesh.edges().iter().enumerate() {
            if !edge.is_interior() && fluxes[e] != 0.0 {
                return Err(FieldError::BoundaryFluxViolation { edge: e, flux: fluxes[e] });
            }
        }
        Ok(FieldRt0 { fluxes })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        FieldRt0 {
            fluxes: vec![0.0; mesh.n_edges()],
        }
    }

    /// Outward flux of triangle `t` through its local edge `j`.
    pub fn outward_flux(&self, mesh: &Mesh, t: usize, j: usize) -> f64 {
        let tri = &mesh.triangles()[t];
        tri.edge_signs[j] * self.fluxes[tri.edges[j]]
    }

    /// Piecewise-constant divergence `(1/|K|) sum_sigma |sigma| v.n_{K,sigma}`.
    pub fn divergence(&self, mesh: &Mesh) -> FieldP0 {
        let values = mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                (0..3)
                    .map(|j| mesh.edges()[tri.edges[j]].length * self.outward_flux(mesh, t, j))
                    .sum::<f64>()
                    / tri.area
            })
            .collect();
        FieldP0 { values }
    }
}

/// Exact L2 products.
pub trait L2Field {
    fn l2_inner(&self, other: &Self, mesh: &Mesh) -> f64;

    fn l2_norm(&self, mesh: &Mesh) -> f64 {
        self.l2_inner(self, mesh).max(0.0).sqrt()
    }
}

impl L2Field for FieldP0 {
    fn l2_inner(&self, other: &Self, mesh: &Mesh) -> f64 {
        mesh.triangles()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(t, (a, b))| t.area * a * b)
            .sum()
    }
}

impl L2Field for VectorFieldP0 {
    fn l2_inner(&self, other: &Self, mesh: &Mesh) -> f64 {
        mesh.triangles()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(t, (a, b))| t.area * a.dot(*b))
            .sum()
    }
}

impl L2Field for FieldP1nc {
    /// The Crouzeix-Raviart mass matrix is diagonal, `m_sigma = sum_{K > sigma} |K| / 3`.
    fn l2_inner(&self, other: &Self, mesh: &Mesh) -> f64 {
        mesh.triangles()
            .iter()
            .map(|t| t.area / 3.0 * t.edges.iter().map(|&e| self.dofs[e] * other.dofs[e]).sum::<f64>())
            .sum()
    }
}

impl L2Field for FieldRt0 {
    fn l2_inner(&self, other: &Self, mesh: &Mesh) -> f64 {
        (0..mesh.n_triangles())
            .map(|t| {
                let m = rt0_local_mass(mesh, t);
                let tri = &mesh.triangles()[t];
                let a = tri.edges.map(|e| self.fluxes[e]);
                let b = tri.edges.map(|e| other.fluxes[e]);
                (0..3).map(|i| (0..3).map(|j| a[i] * m[i][j] * b[j]).sum::<f64>()).sum::<f64>()
            })
            .sum()
    }
}

/// `id,value` lines with round-trip float formatting.
pub fn to_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{v:?}").unwrap();
    }
    out
}

/// Inverse of [`to_csv`]; ids must be `0..n` in order.
pub fn from_csv(text: &str) -> Result<Vec<f64>, FieldError> {
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| FieldError::Csv { line: n + 1, message };
        let (id, value) = line.split_once(',').ok_or_else(|| err("expected 'id,value'".into()))?;
        let id: usize = id.trim().parse().map_err(|_| err(format!("bad id '{id}'")))?;
        if id != values.len() {
            return Err(err(format!("expected id {}, found {id}", values.len())));
        }
        values.push(value.trim().parse().map_err(|_| err(format!("bad value '{value}'")))?);
    }
    Ok(values)
}
