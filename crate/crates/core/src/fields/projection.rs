//! Projection and interpolation operators onto the discrete spaces.
//!
//! Quadrature: the 6-point degree-4 rule on triangles, 2-point Gauss on edges.

use super::rt0::{rt0_basis_coefficients, rt0_mass_matrix};
use super::{FieldError, FieldP0, FieldP1nc, FieldRt0, VectorFieldP0};
use crate::linsolve::{solve_spd, SolveReport, SolverConfig};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{edge_average, triangle_rule};

/// Cell averages `(1/|K|) int_K f`.
pub fn project_p0_mean(mesh: &Mesh, f: impl Fn(Point) -> f64) -> FieldP0 {
    let values = (0..mesh.n_triangles())
        .map(|t| {
            let area = mesh.triangles()[t].area;
            triangle_rule(mesh.triangle_points(t), area).map(|(x, _, w)| w * f(x)).sum::<f64>() / area
        })
        .collect();
    FieldP0 { values }
}

/// Cell averages of a vector function.
pub fn project_vector_p0_mean(mesh: &Mesh, f: impl Fn(Point) -> Point) -> VectorFieldP0 {
    let values = (0..mesh.n_triangles())
        .map(|t| {
            let area = mesh.triangles()[t].area;
            let sum = triangle_rule(mesh.triangle_points(t), area).fold(Point::default(), |acc, (x, _, w)| acc + w * f(x));
            (1.0 / area) * sum
        })
        .collect();
    VectorFieldP0 { values }
}

/// Values at the circumcenters.
pub fn project_p0_point(mesh: &Mesh, f: impl Fn(Point) -> f64) -> FieldP0 {
    FieldP0 {
        values: mesh.triangles().iter().map(|t| f(t.circumcenter)).collect(),
    }
}

/// Edge means: the CR interpolant preserving `int_sigma q`.
pub fn interp_p1nc(mesh: &Mesh, f: impl Fn(Point) -> f64) -> FieldP1nc {
    let dofs = mesh
        .edges()
        .iter()
        .map(|e| {
            let [a, b] = e.vertices.map(|v| mesh.vertices()[v]);
            edge_average(a, b, &f)
        })
        .collect();
    FieldP1nc { dofs }
}

/// L2 projection onto CR. The CR mass matrix is diagonal with entries
/// `sum_{K > sigma} |K| / 3`, so the projection is computed edge by edge.
pub fn l2_project_p1nc(mesh: &Mesh, f: impl Fn(Point) -> f64) -> FieldP1nc {
    let mut numer = vec![0.0; mesh.n_edges()];
    let mut mass = vec![0.0; mesh.n_edges()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for (x, l, w) in triangle_rule(mesh.triangle_points(t), tri.area) {
            let fx = f(x);
            for j in 0..3 {
                numer[tri.edges[j]] += w * fx * (1.0 - 2.0 * l[j]);
            }
        }
        for &e in &tri.edges {
            mass[e] += tri.area / 3.0;
        }
    }
    FieldP1nc {
        dofs: numer.iter().zip(&mass).map(|(n, m)| n / m).collect(),
    }
}

/// L2 projection of a piecewise constant onto CR: area-weighted neighbor average.
pub fn l2_project_p1nc_p0(mesh: &Mesh, p: &FieldP0) -> FieldP1nc {
    let mut numer = vec![0.0; mesh.n_edges()];
    let mut mass = vec![0.0; mesh.n_edges()];
    for (tri, &v) in mesh.triangles().iter().zip(&p.values) {
        for &e in &tri.edges {
            numer[e] += tri.area * v;
            mass[e] += tri.area;
        }
    }
    FieldP1nc {
        dofs: numer.iter().zip(&mass).map(|(n, m)| n / m).collect(),
    }
}

/// RT0 interpolant: edge means of `v . n_sigma`, with boundary fluxes set to zero.
pub fn interp_rt0(mesh: &Mesh, v: impl Fn(Point) -> Point) -> FieldRt0 {
    let fluxes = mesh
        .edges()
        .iter()
        .map(|e| {
            if e.is_interior() {
                let [a, b] = e.vertices.map(|i| mesh.vertices()[i]);
                edge_average(a, b, |x| v(x).dot(e.normal))
            } else {
                0.0
            }
        })
        .collect();
    FieldRt0 { fluxes }
}

/// As [`interp_rt0`], but fails when a boundary edge mean of `|v . n|`
/// exceeds `tolerance`.
pub fn interp_rt0_checked(mesh: &Mesh, v: impl Fn(Point) -> Point, tolerance: f64) -> Result<FieldRt0, FieldError> {
    for (id, e) in mesh.edges().iter().enumerate().filter(|(_, e)| !e.is_interior()) {
        let [a, b] = e.vertices.map(|i| mesh.vertices()[i]);
        let flux = edge_average(a, b, |x| v(x).dot(e.normal));
        if flux.abs() > tolerance {
            return Err(FieldError::BoundaryFluxViolation { edge: id, flux });
        }
    }
    Ok(interp_rt0(mesh, v))
}

/// L2 projection of an analytic vector field onto RT0.
pub fn l2_project_rt0(mesh: &Mesh, w: impl Fn(Point) -> Point, config: &SolverConfig) -> Result<(FieldRt0, SolveReport), FieldError> {
    let load = rt0_load(mesh, |t, c, p| {
        let area = mesh.triangles()[t].area;
        let mut out = [0.0; 3];
        for (x, _, wt) in triangle_rule(p, area) {
            let wx = w(x);
            for j in 0..3 {
                out[j] += wt * c[j] * wx.dot(x - p[j]);
            }
        }
        out
    });
    solve_rt0(mesh, load, config)
}

/// L2 projection of a piecewise constant vector field onto RT0.
pub fn l2_project_rt0_p0(mesh: &Mesh, w: &VectorFieldP0, config: &SolverConfig) -> Result<(FieldRt0, SolveReport), FieldError> {
    let load = rt0_load(mesh, |t, c, p| {
        let tri = &mesh.triangles()[t];
        std::array::from_fn(|j| tri.area * c[j] * w.values[t].dot(tri.centroid - p[j]))
    });
    solve_rt0(mesh, load, config)
}

fn rt0_load(mesh: &Mesh, local: impl Fn(usize, [f64; 3], [Point; 3]) -> [f64; 3]) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_edges()];
    for t in 0..mesh.n_triangles() {
        let c = rt0_basis_coefficients(mesh, t);
        let contributions = local(t, c, mesh.triangle_points(t));
        for (j, &e) in mesh.triangles()[t].edges.iter().enumerate() {
            load[e] += contributions[j];
        }
    }
    load
}

fn solve_rt0(mesh: &Mesh, load: Vec<f64>, config: &SolverConfig) -> Result<(FieldRt0, SolveReport), FieldError> {
    let (mass, edge_of_dof) = rt0_mass_matrix(mesh);
    let b: Vec<f64> = edge_of_dof.iter().map(|&e| load[e]).collect();
    let (x, report) = solve_spd(&mass, &b, config)?;
    if !report.converged {
        return Err(FieldError::NotConverged(report.relative_residual));
    }
    let mut fluxes = vec![0.0; mesh.n_edges()];
    for (dof, &e) in edge_of_dof.iter().enumerate() {
        fluxes[e] = x[dof];
    }
    Ok((FieldRt0 { fluxes }, report))
}
