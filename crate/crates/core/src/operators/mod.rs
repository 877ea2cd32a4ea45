//! Discrete differential operators and the system matrices of the scheme.
//!
//! Conventions: `a_{K,sigma}` denotes the RT0 flux through `sigma` oriented
//! out of `K`; `a^+ = max(a, 0)`, `a^- = min(a, 0)`. Only interior edges carry
//! diffusive or convective fluxes (homogeneous Neumann / no-flux boundaries).

mod sparse;

use thiserror::Error;

pub use sparse::SparseOperator;

use crate::fields::{FieldP0, FieldP1nc, FieldRt0, VectorFieldP0};
use crate::mesh::{Mesh, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("time step must be positive, got {0}")]
    NonPositiveTimeStep(f64),
    #[error("diffusion coefficient must be nonnegative, got {0}")]
    NegativeDiffusion(f64),
    #[error("mobility {value:e} on triangle {triangle} is below the floor {floor:e}")]
    MobilityBelowFloor { triangle: usize, value: f64, floor: f64 },
}

/// Per-triangle gradient of the affine Crouzeix-Raviart function.
pub fn grad_h(mesh: &Mesh, q: &FieldP1nc) -> VectorFieldP0 {
    VectorFieldP0 {
        values: (0..mesh.n_triangles()).map(|t| crate::fields::p1nc_gradient(mesh, q, t)).collect(),
    }
}

/// Discrete divergence into P1nc, the negative adjoint of [`grad_h`]:
///
/// - interior: `3|sigma| / (|K|+|L|) (v_L - v_K) . n_sigma`
/// - boundary: `-3|sigma| / |K| v_K . n_sigma`
pub fn div_h(mesh: &Mesh, v: &VectorFieldP0) -> FieldP1nc {
    let tris = mesh.triangles();
    let dofs = mesh
        .edges()
        .iter()
        .map(|e| {
            let k = e.k();
            match e.l() {
                Some(l) => 3.0 * e.length / (tris[k].area + tris[l].area) * (v.values[l] - v.values[k]).dot(e.normal),
                None => -3.0 * e.length / tris[k].area * v.values[k].dot(e.normal),
            }
        })
        .collect();
    FieldP1nc { dofs }
}

/// Symmetric two-point flux matrix `T`: `T_KK = sum tau_sigma`,
/// `T_KL = -tau_sigma`. `Lap_h = -diag(1/|K|) T`.
pub fn transmissibility_matrix(mesh: &Mesh) -> SparseOperator {
    let mut triplets = Vec::with_capacity(4 * mesh.n_edges());
    for (_, e) in mesh.interior_edges() {
        let (k, l) = (e.k(), e.l().expect("interior edge"));
        triplets.extend([(k, k, e.tau), (l, l, e.tau), (k, l, -e.tau), (l, k, -e.tau)]);
    }
    let n = mesh.n_triangles();
    SparseOperator::from_triplets(n, n, triplets, true)
}

/// `(Lap_h q)_K = (1/|K|) sum_sigma tau_sigma (q_L - q_K)`.
pub fn lap_h_apply(mesh: &Mesh, q: &FieldP0) -> FieldP0 {
    let mut out = vec![0.0; mesh.n_triangles()];
    for (_, e) in mesh.interior_edges() {
        let (k, l) = (e.k(), e.l().expect("interior edge"));
        let flux = e.tau * (q.values[l] - q.values[k]);
        out[k] += flux;
        out[l] -= flux;
    }
    for (v, t) in out.iter_mut().zip(mesh.triangles()) {
        *v /= t.area;
    }
    FieldP0 { values: out }
}

/// Matrix of [`lap_h_apply`]. Not symmetric as a matrix; symmetric in the
/// area-weighted product.
pub fn lap_h_matrix(mesh: &Mesh) -> SparseOperator {
    let mut triplets = Vec::with_capacity(4 * mesh.n_edges());
    let tris = mesh.triangles();
    for (_, e) in mesh.interior_edges() {
        let (k, l) = (e.k(), e.l().expect("interior edge"));
        let (ak, al) = (tris[k].area, tris[l].area);
        triplets.extend([(k, k, -e.tau / ak), (k, l, e.tau / ak), (l, l, -e.tau / al), (l, k, e.tau / al)]);
    }
    let n = mesh.n_triangles();
    SparseOperator::from_triplets(n, n, triplets, false)
}

/// Upwind convection `b~_h(v, q)`:
/// `(1/|K|) sum_sigma |sigma| (a^+ q_K + a^- q_L)`.
pub fn upwind_apply(mesh: &Mesh, v: &FieldRt0, q: &FieldP0) -> FieldP0 {
    let mut out = vec![0.0; mesh.n_triangles()];
    for (id, e) in mesh.interior_edges() {
        let (k, l) = (e.k(), e.l().expect("interior edge"));
        // Flux from K to L; upstream value carried across.
        let a = v.fluxes[id];
        let transported = e.length * if a >= 0.0 { a * q.values[k] } else { a * q.values[l] };
        out[k] += transported;
        out[l] -= transported;
    }
    for (v, t) in out.iter_mut().zip(mesh.triangles()) {
        *v /= t.area;
    }
    FieldP0 { values: out }
}

/// Trilinear form `sum_K q_K sum_sigma |sigma| (a^+ p_K + a^- p_L)`.
pub fn b_h(mesh: &Mesh, v: &FieldRt0, p: &FieldP0, q: &FieldP0) -> f64 {
    let tilde = upwind_apply(mesh, v, p);
    mesh.triangles()
        .iter()
        .zip(tilde.values.iter().zip(&q.values))
        .map(|(t, (b, qk))| t.area * qk * b)
        .sum()
}

/// `sum_sigma |sigma| a_{K,sigma}` per triangle, interior edges only.
pub fn flux_sums(mesh: &Mesh, v: &FieldRt0) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_triangles()];
    for (id, e) in mesh.interior_edges() {
        let f = e.length * v.fluxes[id];
        out[e.k()] += f;
        out[e.l().expect("interior edge")] -= f;
    }
    out
}

/// Implicit transport matrix
/// `(1/k + r_K) I - D Lap_h + b~_h(u, .)`.
pub fn assemble_transport_matrix(
    mesh: &Mesh,
    u: &FieldRt0,
    diffusion: f64,
    reaction: &FieldP0,
    k: f64,
) -> Result<SparseOperator, OperatorError> {
    if !(k > 0.0) {
        return Err(OperatorError::NonPositiveTimeStep(k));
    }
    if !(diffusion >= 0.0) {
        return Err(OperatorError::NegativeDiffusion(diffusion));
    }
    let tris = mesh.triangles();
    let mut triplets: Vec<(usize, usize, f64)> = (0..mesh.n_triangles()).map(|t| (t, t, 1.0 / k + reaction.values[t])).collect();
    for (id, e) in mesh.interior_edges() {
        let (kk, l) = (e.k(), e.l().expect("interior edge"));
        let a = u.fluxes[id];
        let (ak, al) = (tris[kk].area, tris[l].area);
        let dt = diffusion * e.tau;
        let (pos, neg) = (a.max(0.0), a.min(0.0));
        // Row K sees a_{K,sigma} = a; row L sees a_{L,sigma} = -a.
        triplets.push((kk, kk, (dt + e.length * pos) / ak));
        triplets.push((kk, l, (-dt + e.length * neg) / ak));
        triplets.push((l, l, (dt + e.length * (-neg)) / al));
        triplets.push((l, kk, (-dt + e.length * (-pos)) / al));
    }
    let n = mesh.n_triangles();
    Ok(SparseOperator::from_triplets(n, n, triplets, false))
}

fn local_gradients(mesh: &Mesh, t: usize) -> [Point; 3] {
    let tri = &mesh.triangles()[t];
    std::array::from_fn(|j| (mesh.edges()[tri.edges[j]].length / tri.area) * mesh.outward_normal(t, j))
}

/// CR stiffness `S = sum_K kappa_K |K| grad phi_sigma . grad phi_sigma'`.
pub fn assemble_pressure_matrix(mesh: &Mesh, kappa: &FieldP0, kappa_inf: f64) -> Result<SparseOperator, OperatorError> {
    if let Some((triangle, &value)) = kappa.values.iter().enumerate().find(|(_, &v)| !(v >= kappa_inf)) {
        return Err(OperatorError::MobilityBelowFloor {
            triangle,
            value,
            floor: kappa_inf,
        });
    }
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = local_gradients(mesh, t);
        let w = kappa.values[t] * tri.area;
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri.edges[i], tri.edges[j], w * g[i].dot(g[j])));
            }
        }
    }
    let n = mesh.n_edges();
    Ok(SparseOperator::from_triplets(n, n, triplets, true))
}

/// `rhs_sigma = (f, grad_h phi_sigma) + (s, phi_sigma)`.
pub fn pressure_rhs(mesh: &Mesh, f: &VectorFieldP0, s: &FieldP0) -> Vec<f64> {
    let mut rhs = vec![0.0; mesh.n_edges()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = local_gradients(mesh, t);
        for j in 0..3 {
            rhs[tri.edges[j]] += tri.area * (f.values[t].dot(g[j]) + s.values[t] / 3.0);
        }
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{interp_p1nc, L2Field};
    use crate::mesh::generate_equilateral_mesh;

    #[test]
    fn two_triangle_gradient_matches_affine_interpolation() {
        let mesh = generate_equilateral_mesh(1, 1, 1.0).unwrap();
        let q = FieldP1nc {
            dofs: vec![0.3, -1.2, 2.0, 0.7, 1.1],
        };
        let g = grad_h(&mesh, &q);
        for t in 0..2 {
            // Solve a + b x + c y = q at the three midpoints directly.
            let tri = &mesh.triangles()[t];
            let rows: Vec<Vec<f64>> = tri
                .edges
                .iter()
                .map(|&e| {
                    let m = mesh.edges()[e].midpoint;
                    vec![1.0, m.x, m.y]
                })
                .collect();
            let rhs: Vec<f64> = tri.edges.iter().map(|&e| q.dofs[e]).collect();
            let coef = crate::linsolve::dense::lu_solve(&rows, &rhs).unwrap();
            assert!((g.values[t].x - coef[1]).abs() < 1e-12);
            assert!((g.values[t].y - coef[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_gradient_is_exact() {
        let mesh = generate_equilateral_mesh(3, 2, 0.4).unwrap();
        let q = interp_p1nc(&mesh, |p| 2.0 * p.x - 0.5 * p.y + 1.0);
        for g in grad_h(&mesh, &q).values {
            assert!((g.x - 2.0).abs() < 1e-13 && (g.y + 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn div_of_constant_vector() {
        let mesh = generate_equilateral_mesh(2, 2, 0.5).unwrap();
        let c = Point::new(0.7, -0.2);
        let d = div_h(&mesh, &VectorFieldP0::constant(&mesh, c));
        for (e, edge) in mesh.edges().iter().enumerate() {
            let expected = if edge.is_interior() {
                0.0
            } else {
                -3.0 * edge.length / mesh.triangles()[edge.k()].area * c.dot(edge.normal)
            };
            assert!((d.dofs[e] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn two_triangle_adjointness_spot_value() {
        let mesh = generate_equilateral_mesh(1, 1, 1.0).unwrap();
        let v = VectorFieldP0 {
            values: vec![Point::new(1.0, 2.0), Point::new(-0.5, 0.25)],
        };
        let q = FieldP1nc {
            dofs: vec![1.0, 2.0, -1.0, 0.5, 3.0],
        };
        let lhs = v.l2_inner(&grad_h(&mesh, &q), &mesh);
        let rhs = -q.l2_inner(&div_h(&mesh, &v), &mesh);
        // Direct edge sum: sum_sigma q_sigma |sigma| [v] . n
        let direct: f64 = (0..2)
            .flat_map(|t| (0..3).map(move |j| (t, j)))
            .map(|(t, j)| {
                let e = mesh.triangles()[t].edges[j];
                q.dofs[e] * mesh.edges()[e].length * v.values[t].dot(mesh.outward_normal(t, j))
            })
            .sum();
        assert!((lhs - direct).abs() < 1e-13 && (rhs - direct).abs() < 1e-13);
    }

    #[test]
    fn transport_matrix_reduces_to_scaled_identity() {
        let mesh = generate_equilateral_mesh(2, 2, 0.5).unwrap();
        let a = assemble_transport_matrix(&mesh, &FieldRt0::zeros(&mesh), 0.0, &FieldP0::zeros(&mesh), 0.25).unwrap();
        assert_eq!(a.to_dense(), SparseOperator::from_diagonal(&[4.0; 8]).to_dense());
        assert!(matches!(
            assemble_transport_matrix(&mesh, &FieldRt0::zeros(&mesh), 0.0, &FieldP0::zeros(&mesh), 0.0),
            Err(OperatorError::NonPositiveTimeStep(_))
        ));
    }

    #[test]
    fn pressure_matrix_kernel_and_symmetry() {
        let mesh = generate_equilateral_mesh(3, 3, 0.3).unwrap();
        let s = assemble_pressure_matrix(&mesh, &FieldP0::constant(&mesh, 1.0), 1e-6).unwrap();
        let ones = vec![1.0; mesh.n_edges()];
        assert!(s.apply(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!(s.max_asymmetry() <= 1e-13 * s.max_abs());
        assert!(matches!(
            assemble_pressure_matrix(&mesh, &FieldP0::constant(&mesh, 1e-9), 1e-6),
            Err(OperatorError::MobilityBelowFloor { .. })
        ));
    }

    #[test]
    fn pressure_rhs_sums_to_source_integral() {
        let mesh = generate_equilateral_mesh(2, 3, 0.4).unwrap();
        let f = VectorFieldP0 {
            values: (0..mesh.n_triangles()).map(|t| Point::new(t as f64, 1.0 - t as f64)).collect(),
        };
        let s = FieldP0 {
            values: (0..mesh.n_triangles()).map(|t| (t as f64).sin()).collect(),
        };
        let total: f64 = pressure_rhs(&mesh, &f, &s).iter().sum();
        assert!((total - s.integral(&mesh)).abs() < 1e-12);
    }
}
