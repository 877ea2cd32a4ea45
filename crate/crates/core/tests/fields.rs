use fvnc::fields::{
    broken_h1_norm, h_norm, interp_p1nc, interp_rt0, l2_project_p1nc, l2_project_rt0, p1nc_evaluate, project_p0_mean, project_p0_point,
    rt0_evaluate, FieldP0, FieldP1nc, FieldRt0, L2Field,
};
use fvnc::linsolve::SolverConfig;
use fvnc::mesh::{barycentric, build_mesh, generate_equilateral_mesh, uniform_refine, Mesh, Point};
use fvnc::quadrature::triangle_rule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQRT3: f64 = 1.732_050_807_568_877_2;

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

/// The triangle whose interior contains `x`.
fn locate(mesh: &Mesh, x: Point) -> usize {
    (0..mesh.n_triangles())
        .find(|&t| {
            let [a, b, c] = mesh.triangle_points(t);
            barycentric(x, a, b, c).iter().all(|&l| l > -1e-12)
        })
        .expect("point inside the mesh")
}

fn l2_error(mesh: &Mesh, f: impl Fn(Point) -> f64, g: impl Fn(usize, Point) -> f64) -> f64 {
    (0..mesh.n_triangles())
        .flat_map(|t| triangle_rule(mesh.triangle_points(t), mesh.triangles()[t].area).map(move |(x, _, w)| (t, x, w)))
        .map(|(t, x, w)| w * (f(x) - g(t, x)).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn cell_averages() {
    let mesh = acute_mesh();
    assert!(project_p0_mean(&mesh, |_| 1.0).values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    let affine = |x: Point| 2.0 * x.x - 0.5 * x.y + 0.3;
    let avg = project_p0_mean(&mesh, affine);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        assert!((avg.values[t] - affine(tri.centroid)).abs() < 1e-14);
    }
    // Exact integral of x^2 over a triangle.
    let mesh = generate_equilateral_mesh(1, 1, 1.0).unwrap();
    let avg = project_p0_mean(&mesh, |x| x.x * x.x);
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.triangle_points(t).map(|p| p.x);
        let exact = (a * a + b * b + c * c + a * b + a * c + b * c) / 6.0;
        assert!((avg.values[t] - exact).abs() < 1e-12 * exact);
    }
}

#[test]
fn circumcenter_values() {
    let mesh = acute_mesh();
    assert!(project_p0_point(&mesh, |_| 0.7).values.iter().all(|&v| v == 0.7));
    let affine = |x: Point| -x.x + 3.0 * x.y;
    let point = project_p0_point(&mesh, affine);
    let mean = project_p0_mean(&mesh, affine);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        assert_eq!(point.values[t], affine(tri.circumcenter));
        let diff = affine(tri.circumcenter) - affine(tri.centroid);
        assert!((point.values[t] - mean.values[t] - diff).abs() < 1e-14);
    }
}

#[test]
fn cr_interpolation() {
    let mesh = acute_mesh();
    let affine = |x: Point| 0.5 * x.x + 2.0 * x.y - 1.0;
    let q = interp_p1nc(&mesh, affine);
    for (e, edge) in mesh.edges().iter().enumerate() {
        assert!((q.dofs[e] - affine(edge.midpoint)).abs() < 1e-14);
    }
    assert!(interp_p1nc(&mesh, |_| 1.0).dofs.iter().all(|&v| v == 1.0));

    let mut meshes = vec![generate_equilateral_mesh(2, 2, 0.5).unwrap()];
    for _ in 0..3 {
        meshes.push(uniform_refine(meshes.last().unwrap()));
    }
    let errors: Vec<f64> = meshes
        .iter()
        .map(|m| {
            let q = interp_p1nc(m, |x| x.x.sin());
            l2_error(m, |x| x.x.sin(), |t, x| p1nc_evaluate(m, &q, t, x).unwrap())
        })
        .collect();
    for w in errors.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.0, "{errors:?}");
    }
}

#[test]
fn cr_projection() {
    let mesh = acute_mesh();
    assert!(l2_project_p1nc(&mesh, |_| 1.0).dofs.iter().all(|&v| (v - 1.0).abs() < 1e-14));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = FieldP1nc {
        dofs: (0..mesh.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let again = l2_project_p1nc(&mesh, |x| p1nc_evaluate(&mesh, &r, locate(&mesh, x), x).unwrap());
    for (a, b) in again.dofs.iter().zip(&r.dofs) {
        assert!((a - b).abs() < 1e-12);
    }

    let p = |x: Point| (2.0 * x.x).sin() * x.y.cos();
    let proj = l2_project_p1nc(&mesh, p);
    for _ in 0..20 {
        let psi = FieldP1nc {
            dofs: (0..mesh.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let exact: f64 = (0..mesh.n_triangles())
            .flat_map(|t| triangle_rule(mesh.triangle_points(t), mesh.triangles()[t].area).map(move |(x, _, w)| (t, x, w)))
            .map(|(t, x, w)| w * p(x) * p1nc_evaluate(&mesh, &psi, t, x).unwrap())
            .sum();
        let inner = exact - proj.l2_inner(&psi, &mesh);
        let norm_p = l2_error(&mesh, p, |_, _| 0.0);
        assert!(inner.abs() <= 1e-10 * norm_p * psi.l2_norm(&mesh));
    }
}

#[test]
fn rt0_interpolation() {
    let mesh = acute_mesh();
    let v = Point::new(0.3, -1.2);
    let f = interp_rt0(&mesh, |_| v);
    for (e, edge) in mesh.edges().iter().enumerate() {
        let expected = if edge.is_interior() { v.dot(edge.normal) } else { 0.0 };
        assert!((f.fluxes[e] - expected).abs() < 1e-14);
    }
    // A divergence-free linear field: the flux sums vanish wherever all
    // three edges are interior.
    let f = interp_rt0(&mesh, |x| Point::new(x.y, x.x));
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if tri.edges.iter().all(|&e| mesh.edges()[e].is_interior()) {
            let sum: f64 = (0..3)
                .map(|j| mesh.edges()[tri.edges[j]].length * f.outward_flux(&mesh, t, j))
                .sum();
            assert!(sum.abs() < 1e-14, "{sum}");
        }
    }
}

#[test]
fn rt0_projection() {
    let mesh = acute_mesh();
    let config = SolverConfig::symmetric().with_rel_tolerance(1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let random_rt0 = |rng: &mut ChaCha8Rng| FieldRt0 {
        fluxes: mesh
            .edges()
            .iter()
            .map(|e| if e.is_interior() { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect(),
    };
    let r = random_rt0(&mut rng);
    let (again, _) = l2_project_rt0(&mesh, |x| rt0_evaluate(&mesh, &r, locate(&mesh, x), x).unwrap(), &config).unwrap();
    for (a, b) in again.fluxes.iter().zip(&r.fluxes) {
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    let w = |x: Point| Point::new((3.0 * x.y).sin(), x.x * x.y + 1.0);
    let (proj, _) = l2_project_rt0(&mesh, w, &config).unwrap();
    let w_norm = l2_error(&mesh, |_| 0.0, |_, x| w(x).norm());
    assert!(proj.l2_norm(&mesh) <= w_norm * (1.0 + 1e-10));
    for _ in 0..20 {
        let v = random_rt0(&mut rng);
        let exact: f64 = (0..mesh.n_triangles())
            .flat_map(|t| triangle_rule(mesh.triangle_points(t), mesh.triangles()[t].area).map(move |(x, _, wt)| (t, x, wt)))
            .map(|(t, x, wt)| wt * w(x).dot(rt0_evaluate(&mesh, &v, t, x).unwrap()))
            .sum();
        assert!((exact - proj.l2_inner(&v, &mesh)).abs() <= 1e-10 * w_norm * v.l2_norm(&mesh));
    }
}

#[test]
fn norms() {
    let mesh = acute_mesh();
    assert_eq!(h_norm(&mesh, &FieldP0::constant(&mesh, 3.0)), 0.0);
    let two = generate_equilateral_mesh(1, 1, 1.0).unwrap();
    let q = FieldP0 { values: vec![0.0, 1.0] };
    assert!((h_norm(&two, &q) - SQRT3.sqrt()).abs() < 1e-14);
    let c = FieldP1nc::constant(&mesh, 2.0);
    assert!((broken_h1_norm(&mesh, &c) - c.l2_norm(&mesh)).abs() < 1e-14);
    let r = FieldP0 {
        values: (0..mesh.n_triangles()).map(|t| (t as f64).sin()).collect(),
    };
    assert!((r.l2_inner(&r, &mesh) - r.l2_norm(&mesh).powi(2)).abs() < 1e-14);
}

#[test]
fn rt0_basis_on_a_single_triangle() {
    let p = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, SQRT3 / 2.0)];
    let mesh = build_mesh(p.clone(), vec![[0, 1, 2]]).unwrap();
    let v = FieldRt0 { fluxes: vec![1.0; 3] };
    let tri = &mesh.triangles()[0];
    // psi_j(x) = |sigma_j| / (2|K|) (x - p_j), all normals outward.
    let hand = |x: Point| {
        (0..3).fold(Point::default(), |acc, j| {
            let pj = mesh.vertices()[tri.vertices[j]];
            acc + (mesh.edges()[tri.edges[j]].length / (2.0 * tri.area)) * (x - pj)
        })
    };
    for x in [tri.centroid, Point::new(0.4, 0.2), Point::new(0.5, 0.8)] {
        let got = rt0_evaluate(&mesh, &v, 0, x).unwrap();
        assert!((got - hand(x)).norm() < 1e-14);
    }
    assert!(rt0_evaluate(&mesh, &v, 0, tri.centroid).unwrap().norm() < 1e-14);
    let at_vertex = rt0_evaluate(&mesh, &v, 0, p[0]).unwrap();
    let expected = (1.0 / (2.0 * tri.area)) * ((p[0] - p[1]) + (p[0] - p[2]));
    assert!((at_vertex - expected).norm() < 1e-14);
}
