use super::{FieldError, FieldP0, FieldP1nc, L2Field};
use crate::linsolve::{solve_spd_semidefinite, SolverConfig};
use crate::mesh::Mesh;
use crate::operators::transmissibility_matrix;

/// `(edge id, q_L - q_K)` for every interior edge.
pub fn h_seminorm_pairs<'a>(mesh: &'a Mesh, q: &'a FieldP0) -> impl Iterator<Item = (usize, f64)> + 'a {
    mesh.interior_edges().map(move |(id, e)| {
        let l = e.l().expect("interior edge");
        (id, q.values[l] - q.values[e.k()])
    })
}

/// Discrete H1 norm `(sum_sigma tau_sigma (q_L - q_K)^2)^(1/2)` over interior edges.
pub fn h_norm(mesh: &Mesh, q: &FieldP0) -> f64 {
    h_seminorm_pairs(mesh, q)
        .map(|(e, jump)| mesh.edges()[e].tau * jump * jump)
        .sum::<f64>()
        .sqrt()
}

/// Dual norm `sup (q, psi) / ||psi||_h`, evaluated through the Riesz
/// representative: `||z||_h` with `-Lap_h z = q`.
pub fn dual_norm_minus1h(mesh: &Mesh, q: &FieldP0, config: &SolverConfig) -> Result<f64, FieldError> {
    let mean = q.integral(mesh);
    let tolerance = 1e-10 * mesh.area().sqrt() * q.l2_norm(mesh);
    if mean.abs() > tolerance {
        return Err(FieldError::NonZeroMean { mean, tolerance });
    }
    if q.values.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let t = transmissibility_matrix(mesh);
    let b: Vec<f64> = mesh.triangles().iter().zip(&q.values).map(|(tri, v)| tri.area * v).collect();
    let (z, report) = solve_spd_semidefinite(&t, &b, config)?;
    if !report.converged {
        return Err(FieldError::NotConverged(report.relative_residual));
    }
    Ok(h_norm(mesh, &FieldP0 { values: z }))
}

/// `(|q|^2 + |grad_h q|^2)^(1/2)`.
pub fn broken_h1_norm(mesh: &Mesh, q: &FieldP1nc) -> f64 {
    let grad2: f64 = (0..mesh.n_triangles())
        .map(|t| {
            let g = super::p1nc_gradient(mesh, q, t);
            mesh.triangles()[t].area * g.dot(g)
        })
        .sum();
    (q.l2_inner(q, mesh) + grad2).sqrt()
}

/// `|q - mean(q)| / ||q||_h`, the ratio bounded by the discrete Poincare
/// constant. `None` for constant fields.
pub fn poincare_ratio(mesh: &Mesh, q: &FieldP0) -> Option<f64> {
    let mean = q.mean(mesh);
    let centered = q.map(|v| v - mean);
    let hn = h_norm(mesh, q);
    (hn > 0.0).then(|| centered.l2_norm(mesh) / hn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::SolverConfig;
    use crate::mesh::generate_equilateral_mesh;
    use crate::operators::lap_h_apply;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_triangle_jump_gives_fourth_root_of_three() {
        let mesh = generate_equilateral_mesh(1, 1, 1.0).unwrap();
        let q = FieldP0 { values: vec![0.0, 1.0] };
        assert!((h_norm(&mesh, &q) - 3f64.powf(0.25)).abs() < 1e-14);
        assert_eq!(h_norm(&mesh, &FieldP0::constant(&mesh, 2.5)), 0.0);
    }

    fn random_zero_mean(mesh: &Mesh, rng: &mut ChaCha8Rng) -> FieldP0 {
        let q = FieldP0 {
            values: (0..mesh.n_triangles()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let m = q.mean(mesh);
        q.map(|v| v - m)
    }

    #[test]
    fn dual_norm_matches_riesz_construction_and_bounds_quotients() {
        let mesh = generate_equilateral_mesh(4, 4, 0.25).unwrap();
        let cfg = SolverConfig::default().with_rel_tolerance(1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_zero_mean(&mesh, &mut rng);
        let q = lap_h_apply(&mesh, &w).map(|v| -v);
        let dual = dual_norm_minus1h(&mesh, &q, &cfg).unwrap();
        let hw = h_norm(&mesh, &w);
        assert!((dual - hw).abs() <= 1e-9 * hw, "{dual} vs {hw}");
        for _ in 0..50 {
            let psi = random_zero_mean(&mesh, &mut rng);
            let quotient = q.l2_inner(&psi, &mesh) / h_norm(&mesh, &psi);
            assert!(quotient <= dual * (1.0 + 1e-8));
        }
        assert_eq!(dual_norm_minus1h(&mesh, &FieldP0::zeros(&mesh), &cfg).unwrap(), 0.0);
    }

    #[test]
    fn dual_norm_rejects_nonzero_mean() {
        let mesh = generate_equilateral_mesh(2, 2, 0.5).unwrap();
        let err = dual_norm_minus1h(&mesh, &FieldP0::constant(&mesh, 1.0), &SolverConfig::default());
        assert!(matches!(err, Err(FieldError::NonZeroMean { .. })));
    }

    #[test]
    fn broken_norm_of_constant_is_l2_norm() {
        let mesh = generate_equilateral_mesh(2, 3, 0.5).unwrap();
        let q = FieldP1nc::constant(&mesh, 3.0);
        assert!((broken_h1_norm(&mesh, &q) - q.l2_norm(&mesh)).abs() < 1e-14);
    }
}
