use fvnc::fields::{interp_p1nc, FieldP0, FieldRt0, VectorFieldP0};
use fvnc::linsolve::dense::lu_solve;
use fvnc::linsolve::{solve, solve_spd, SolverConfig};
use fvnc::mesh::{build_mesh, generate_equilateral_mesh, uniform_refine, Mesh, Point};
use fvnc::operators::{assemble_pressure_matrix, assemble_transport_matrix, b_h, lap_h_apply, pressure_rhs, upwind_apply};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn acute_mesh() -> Mesh {
    let p = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.1),
        Point::new(0.45, 0.9),
        Point::new(1.4, 1.0),
        Point::new(-0.4, 0.8),
    ];
    uniform_refine(&build_mesh(p, vec![[0, 1, 2], [1, 3, 2], [0, 2, 4]]).unwrap())
}

fn random_p0(mesh: &Mesh, rng: &mut impl Rng) -> FieldP0 {
    FieldP0 {
        values: (0..mesh.n_triangles()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn random_rt0(mesh: &Mesh, rng: &mut impl Rng) -> FieldRt0 {
    FieldRt0 {
        fluxes: mesh
            .edges()
            .iter()
            .map(|e| if e.is_interior() { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect(),
    }
}

/// Discrete curl of a random P1 stream function vanishing on the boundary.
fn divergence_free(mesh: &Mesh, rng: &mut impl Rng) -> FieldRt0 {
    let mut boundary = vec![false; mesh.vertices().len()];
    for e in mesh.edges().iter().filter(|e| !e.is_interior()) {
        boundary[e.vertices[0]] = true;
        boundary[e.vertices[1]] = true;
    }
    let psi: Vec<f64> = boundary.iter().map(|&b| if b { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    FieldRt0 {
        fluxes: mesh
            .edges()
            .iter()
            .map(|e| {
                let [i, j] = e.vertices;
                let t = Point::new(-e.normal.y, e.normal.x);
                let s = (mesh.vertices()[j] - mesh.vertices()[i]).dot(t).signum();
                s * (psi[j] - psi[i]) / e.length
            })
            .collect(),
    }
}

#[test]
fn laplacian_kernel() {
    let mesh = acute_mesh();
    let out = lap_h_apply(&mesh, &FieldP0::constant(&mesh, 4.2));
    assert!(out.values.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn upwind_of_constant_with_divergence_free_velocity() {
    let mesh = uniform_refine(&acute_mesh());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = divergence_free(&mesh, &mut rng);
    assert!(v.divergence(&mesh).values.iter().all(|d| d.abs() < 1e-12));
    let out = upwind_apply(&mesh, &v, &FieldP0::constant(&mesh, 2.0));
    assert!(out.values.iter().all(|x| x.abs() < 1e-11));
    for _ in 0..10 {
        let q = random_p0(&mesh, &mut rng);
        assert!(b_h(&mesh, &v, &FieldP0::constant(&mesh, 0.7), &q).abs() < 1e-12);
    }
}

#[test]
fn single_interior_edge_uses_upstream_value() {
    let mesh = generate_equilateral_mesh(1, 1, 1.0).unwrap();
    let (id, e) = mesh.interior_edges().next().unwrap();
    let (k, l) = (e.k(), e.l().unwrap());
    let mut fluxes = vec![0.0; mesh.n_edges()];
    fluxes[id] = 0.8;
    let v = FieldRt0 { fluxes };
    let mut values = vec![0.0; 2];
    values[k] = 3.0;
    values[l] = -5.0;
    let out = upwind_apply(&mesh, &v, &FieldP0 { values });
    let area = |t: usize| mesh.triangles()[t].area;
    assert!((out.values[k] - e.length * 0.8 * 3.0 / area(k)).abs() < 1e-14);
    assert!((out.values[l] + e.length * 0.8 * 3.0 / area(l)).abs() < 1e-14);
}

#[test]
fn transport_matrix_structure() {
    let mesh = acute_mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (d, k) = (0.3, 0.05);
    let reaction = random_p0(&mesh, &mut rng).map(f64::abs);
    for _ in 0..5 {
        let u = random_rt0(&mesh, &mut rng);
        let a = assemble_transport_matrix(&mesh, &u, d, &reaction, k).unwrap();
        for (i, row) in a.to_dense().iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert!(i == j || x <= 0.0);
            }
        }
        let q = random_p0(&mesh, &mut rng);
        let lap = lap_h_apply(&mesh, &q);
        let up = upwind_apply(&mesh, &u, &q);
        let direct = a.apply(&q.values);
        for t in 0..mesh.n_triangles() {
            let expected = q.values[t] / k + reaction.values[t] * q.values[t] - d * lap.values[t] + up.values[t];
            assert!((direct[t] - expected).abs() < 1e-13 * expected.abs().max(1.0 / k));
        }
        // Constant input: 1/k + r_K + flux sum / |K|.
        let ones = a.apply(&vec![1.0; mesh.n_triangles()]);
        let div = u.divergence(&mesh);
        for t in 0..mesh.n_triangles() {
            let expected = 1.0 / k + reaction.values[t] + div.values[t];
            assert!((ones[t] - expected).abs() < 1e-13 / k);
        }
    }
}

#[test]
fn pressure_matrix_with_unit_mobility() {
    let mesh = acute_mesh();
    let s = assemble_pressure_matrix(&mesh, &FieldP0::constant(&mesh, 1.0), 1e-8).unwrap();
    let scale = s.max_abs();
    assert!(s.max_asymmetry() <= 1e-13 * scale);
    assert!(s.apply(&vec![1.0; mesh.n_edges()]).iter().all(|x| x.abs() < 1e-12 * scale));
    // Energy of an affine function is |grad q|^2 |Omega|.
    let q = interp_p1nc(&mesh, |x| 2.0 * x.x - x.y);
    let energy: f64 = q.dofs.iter().zip(s.apply(&q.dofs)).map(|(a, b)| a * b).sum();
    assert!((energy - 5.0 * mesh.area()).abs() < 1e-12);
}

#[test]
fn pressure_rhs_sums_to_the_source_integral() {
    let mesh = acute_mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = VectorFieldP0 {
        values: (0..mesh.n_triangles()).map(|_| Point::new(rng.gen(), rng.gen())).collect(),
    };
    let s = random_p0(&mesh, &mut rng);
    let total: f64 = pressure_rhs(&mesh, &f, &s).iter().sum();
    assert!((total - s.integral(&mesh)).abs() < 1e-13);
}

#[test]
fn cr_laplace_system_matches_dense_oracle() {
    let mesh = generate_equilateral_mesh(1, 1, 1.0).unwrap();
    let stiffness = assemble_pressure_matrix(&mesh, &FieldP0::constant(&mesh, 1.0), 1e-8).unwrap();
    // Regularize the Neumann kernel with the CR mass so the system is SPD.
    let mut mass = vec![0.0; mesh.n_edges()];
    for t in mesh.triangles() {
        for &e in &t.edges {
            mass[e] += t.area / 3.0;
        }
    }
    let dense_s = stiffness.to_dense();
    let triplets: Vec<(usize, usize, f64)> = (0..mesh.n_edges())
        .flat_map(|i| {
            let row = dense_s[i].clone();
            let mi = mass[i];
            (0..mesh.n_edges()).map(move |j| (i, j, row[j] + if i == j { mi } else { 0.0 }))
        })
        .collect();
    let a = fvnc::operators::SparseOperator::from_triplets(mesh.n_edges(), mesh.n_edges(), triplets, true);
    let quadratic = interp_p1nc(&mesh, |x| x.x * x.x + 0.5 * x.y * x.y - x.x * x.y);
    let b: Vec<f64> = quadratic.dofs.iter().zip(&mass).map(|(q, m)| q * m).collect();
    let (x, report) = solve_spd(&a, &b, &SolverConfig::symmetric().with_rel_tolerance(1e-14)).unwrap();
    assert!(report.converged);
    let oracle = lu_solve(&a.to_dense(), &b).unwrap();
    for (u, v) in x.iter().zip(&oracle) {
        assert!((u - v).abs() <= 1e-9);
    }
}

#[test]
fn transport_at_rest_agrees_between_solvers() {
    let mesh = acute_mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = assemble_transport_matrix(&mesh, &FieldRt0::zeros(&mesh), 0.2, &FieldP0::constant(&mesh, 0.1), 0.1).unwrap();
    let b = random_p0(&mesh, &mut rng).values;
    let tight = |c: SolverConfig| c.with_rel_tolerance(1e-13);
    let (x1, _) = solve(&a, &b, &tight(SolverConfig::nonsymmetric())).unwrap();
    // Row scaling by |K| makes the system symmetric.
    let areas: Vec<f64> = mesh.triangles().iter().map(|t| t.area).collect();
    let dense = a.to_dense();
    let triplets: Vec<(usize, usize, f64)> = (0..areas.len())
        .flat_map(|i| {
            let ai = areas[i];
            dense[i]
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(move |(j, &x)| (i, j, ai * x))
        })
        .collect();
    let sym = fvnc::operators::SparseOperator::from_triplets(areas.len(), areas.len(), triplets, false);
    let bs: Vec<f64> = b.iter().zip(&areas).map(|(v, a)| v * a).collect();
    let (x2, _) = solve_spd(&sym, &bs, &tight(SolverConfig::symmetric())).unwrap();
    for (u, v) in x1.iter().zip(&x2) {
        assert!((u - v).abs() <= 1e-10);
    }
}
