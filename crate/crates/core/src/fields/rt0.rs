//! Local bases of the Crouzeix-Raviart and Raviart-Thomas elements.
//!
//! On triangle `K` with vertices `p_j` and local edge `j` opposite `p_j`:
//! - CR: `phi_j = 1 - 2 lambda_j`, so `grad phi_j = |sigma_j| n_{K,j} / |K|`;
//! - RT0: `psi_j(x) = s_j |sigma_j| / (2|K|) (x - p_j)`, where `s_j` is the
//!   sign relating the edge's fixed normal to the outward one. Then
//!   `psi_j . n_sigma_j = 1` on `sigma_j` and `0` on the other two edges.

use super::{FieldError, FieldP1nc, FieldRt0};
use crate::mesh::{barycentric, Mesh, Point};
use crate::operators::SparseOperator;

const INSIDE_TOL: f64 = 1e-10;

/// `s_j |sigma_j| / (2|K|)` for the three local edges.
pub fn rt0_basis_coefficients(mesh: &Mesh, t: usize) -> [f64; 3] {
    let tri = &mesh.triangles()[t];
    std::array::from_fn(|j| tri.edge_signs[j] * mesh.edges()[tri.edges[j]].length / (2.0 * tri.area))
}

/// Local RT0 mass matrix in the global flux orientation.
///
/// `int_K (x - p_i).(x - p_j)` is quadratic, so the edge-midpoint rule is exact.
pub fn rt0_local_mass(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let tri = &mesh.triangles()[t];
    let p = mesh.triangle_points(t);
    let mids = tri.edges.map(|e| mesh.edges()[e].midpoint);
    let c = rt0_basis_coefficients(mesh, t);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let integral: f64 = mids.iter().map(|&m| (m - p[i]).dot(m - p[j])).sum::<f64>() * tri.area / 3.0;
            c[i] * c[j] * integral
        })
    })
}

/// Global RT0 mass matrix restricted to interior-edge dofs, together with
/// the edge id of each row.
pub fn rt0_mass_matrix(mesh: &Mesh) -> (SparseOperator, Vec<usize>) {
    let (dof_of_edge, edge_of_dof) = interior_numbering(mesh);
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let m = rt0_local_mass(mesh, t);
        let edges = mesh.triangles()[t].edges;
        for i in 0..3 {
            let Some(di) = dof_of_edge[edges[i]] else { continue };
            for j in 0..3 {
                if let Some(dj) = dof_of_edge[edges[j]] {
                    triplets.push((di, dj, m[i][j]));
                }
            }
        }
    }
    let n = edge_of_dof.len();
    (SparseOperator::from_triplets(n, n, triplets, true), edge_of_dof)
}

pub(crate) fn interior_numbering(mesh: &Mesh) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut dof_of_edge = vec![None; mesh.n_edges()];
    let mut edge_of_dof = Vec::new();
    for (e, _) in mesh.interior_edges() {
        dof_of_edge[e] = Some(edge_of_dof.len());
        edge_of_dof.push(e);
    }
    (dof_of_edge, edge_of_dof)
}

fn check_inside(mesh: &Mesh, t: usize, x: Point) -> Result<[f64; 3], FieldError> {
    let [p0, p1, p2] = mesh.triangle_points(t);
    let l = barycentric(x, p0, p1, p2);
    if l.iter().any(|&v| v < -INSIDE_TOL) {
        return Err(FieldError::PointOutsideTriangle {
            triangle: t,
            x: x.x,
            y: x.y,
        });
    }
    Ok(l)
}

/// Value of the RT0 field at `x` in triangle `t`.
pub fn rt0_evaluate(mesh: &Mesh, v: &FieldRt0, t: usize, x: Point) -> Result<Point, FieldError> {
    check_inside(mesh, t, x)?;
    Ok(rt0_value_unchecked(mesh, v, t, x))
}

pub(crate) fn rt0_value_unchecked(mesh: &Mesh, v: &FieldRt0, t: usize, x: Point) -> Point {
    let tri = &mesh.triangles()[t];
    let p = mesh.triangle_points(t);
    let c = rt0_basis_coefficients(mesh, t);
    (0..3).fold(Point::default(), |acc, j| acc + (v.fluxes[tri.edges[j]] * c[j]) * (x - p[j]))
}

/// Value of the CR field at `x` in triangle `t`.
pub fn p1nc_evaluate(mesh: &Mesh, q: &FieldP1nc, t: usize, x: Point) -> Result<f64, FieldError> {
    let l = check_inside(mesh, t, x)?;
    let tri = &mesh.triangles()[t];
    Ok((0..3).map(|j| q.dofs[tri.edges[j]] * (1.0 - 2.0 * l[j])).sum())
}

/// Gradient of the affine restriction of `q` to triangle `t`.
pub fn p1nc_gradient(mesh: &Mesh, q: &FieldP1nc, t: usize) -> Point {
    let tri = &mesh.triangles()[t];
    (0..3).fold(Point::default(), |acc, j| {
        let e = tri.edges[j];
        let scale = q.dofs[e] * mesh.edges()[e].length / tri.area;
        acc + scale * mesh.outward_normal(t, j)
    })
}
