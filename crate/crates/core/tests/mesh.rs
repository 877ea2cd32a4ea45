use std::f64::consts::PI;

use fvnc::mesh::io::{format_mesh, parse_mesh};
use fvnc::mesh::{
    admissibility_report, build_mesh, build_mesh_with, circumcenter, generate_equilateral_mesh, uniform_refine, BuildOptions, MeshError,
    Point,
};

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn two_equilateral() -> Vec<Point> {
    vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.5, SQRT3 / 2.0),
        Point::new(1.5, SQRT3 / 2.0),
    ]
}

#[test]
fn shared_edge_of_two_equilateral_triangles() {
    let mesh = build_mesh(two_equilateral(), vec![[0, 1, 2], [1, 3, 2]]).unwrap();
    let interior: Vec<_> = mesh.interior_edges().collect();
    assert_eq!(interior.len(), 1);
    let (_, e) = interior[0];
    // Each circumcenter sits height/3 = sqrt(3)/6 from the shared edge.
    assert!(close(e.d_sigma, 1.0 / SQRT3, 1e-14));
    assert!(close(e.tau, SQRT3, 1e-14));
    assert_eq!(mesh.n_edges(), 5);
}

#[test]
fn single_triangle_has_only_boundary_edges() {
    let p = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.3, 0.8)];
    let mesh = build_mesh(p.clone(), vec![[0, 1, 2]]).unwrap();
    assert_eq!(mesh.interior_edges().count(), 0);
    assert_eq!(mesh.n_edges(), 3);
    let xk = mesh.triangles()[0].circumcenter;
    for e in mesh.edges() {
        assert!(!e.is_interior());
        assert!(close(e.d_sigma, xk.distance(e.midpoint), 1e-14));
    }
    let q = admissibility_report(&mesh);
    assert_eq!(q.n_interior_edges, 0);
    assert_eq!(q.min_tau_interior, None);
}

#[test]
fn square_split_by_diagonal_has_zero_distance() {
    let p = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ];
    let tris = vec![[0, 1, 2], [0, 2, 3]];
    assert!(matches!(
        build_mesh(p.clone(), tris.clone()),
        Err(MeshError::ZeroTransmissibilityDistance { .. })
    ));
    let relaxed = build_mesh_with(p, tris, BuildOptions { allow_right_angles: true });
    assert!(matches!(relaxed, Err(MeshError::ZeroTransmissibilityDistance { .. })));
}

#[test]
fn obtuse_triangle_is_rejected() {
    let p = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.1)];
    assert!(matches!(build_mesh(p, vec![[0, 1, 2]]), Err(MeshError::InadmissibleAngle { .. })));
}

#[test]
fn circumcenter_examples() {
    let c = circumcenter(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, SQRT3 / 2.0)).unwrap();
    assert!(close(c.x, 0.5, 1e-15) && close(c.y, SQRT3 / 6.0, 1e-15));
    let c = circumcenter(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)).unwrap();
    assert!(close(c.x, 0.5, 1e-15) && close(c.y, 0.5, 1e-15));
    let pts = [Point::new(0.1, -0.3), Point::new(2.3, 0.4), Point::new(0.7, 1.9)];
    let c = circumcenter(pts[0], pts[1], pts[2]).unwrap();
    let r = c.distance(pts[0]);
    for p in pts {
        assert!(close(c.distance(p), r, 1e-12));
    }
    assert!(circumcenter(Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)).is_none());
}

#[test]
fn generator_examples() {
    let m = generate_equilateral_mesh(1, 1, 1.0).unwrap();
    assert_eq!(m.n_triangles(), 2);
    assert_eq!(m.interior_edges().count(), 1);
    assert!(close(m.interior_edges().next().unwrap().1.tau, SQRT3, 1e-14));

    let m = generate_equilateral_mesh(2, 2, 1.0).unwrap();
    assert_eq!(m.n_triangles(), 8);
    let q = m.quality();
    assert!(close(q.max_angle, PI / 3.0, 1e-12) && close(q.min_angle, PI / 3.0, 1e-12));

    let meshes: Vec<_> = [2, 4, 8]
        .iter()
        .map(|&n| generate_equilateral_mesh(n, n, 1.0 / n as f64).unwrap())
        .collect();
    for w in meshes.windows(2) {
        assert!(close(w[1].h(), w[0].h() / 2.0, 1e-12));
        let (a, b) = (w[0].quality().min_tau_interior.unwrap(), w[1].quality().min_tau_interior.unwrap());
        assert!(close(a, b, 1e-12));
    }
}

#[test]
fn equilateral_admissibility_report() {
    let q = admissibility_report(&generate_equilateral_mesh(3, 2, 0.7).unwrap());
    assert!(close(q.max_angle, PI / 3.0, 1e-12));
    assert!(close(q.min_tau_interior.unwrap(), SQRT3, 1e-12));
}

#[test]
fn refinement_examples() {
    let base = generate_equilateral_mesh(1, 1, 1.0).unwrap();
    let fine = uniform_refine(&base);
    assert_eq!(fine.n_triangles(), 8);
    assert!(close(fine.quality().max_angle, PI / 3.0, 1e-12));
    assert!(close(fine.quality().min_angle, PI / 3.0, 1e-12));
    assert!(close(fine.area(), base.area(), 1e-12));
    let q0 = admissibility_report(&base);
    let q1 = admissibility_report(&fine);
    assert!(close(q0.min_tau_interior.unwrap(), q1.min_tau_interior.unwrap(), 1e-12));
    assert!(close(q0.regularity_constant(), q1.regularity_constant(), 1e-12));

    // A non-equilateral acute mesh.
    let p = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.1),
        Point::new(0.45, 0.9),
        Point::new(1.4, 1.0),
    ];
    let m = build_mesh(p, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
    let r = uniform_refine(&m);
    assert_eq!(r.n_triangles(), 4 * m.n_triangles());
    assert!(close(r.area(), m.area(), 1e-12));

    // Twice refined equals one 16-way split: compare sorted vertex sets.
    let twice = uniform_refine(&uniform_refine(&m));
    let mut expected = Vec::new();
    for t in m.triangles() {
        let [a, b, c] = t.vertices.map(|v| m.vertices()[v]);
        for i in 0..=4 {
            for j in 0..=4 - i {
                let (u, v) = (i as f64 / 4.0, j as f64 / 4.0);
                expected.push(a + u * (b - a) + v * (c - a));
            }
        }
    }
    let key = |p: &Point| ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64);
    let mut expected: Vec<_> = expected.iter().map(key).collect();
    expected.sort();
    expected.dedup();
    let mut got: Vec<_> = twice.vertices().iter().map(key).collect();
    got.sort();
    assert_eq!(got, expected);
}

#[test]
fn edge_count_matches_euler_relation() {
    for (r, c) in [(1, 1), (2, 3), (5, 4)] {
        let m = generate_equilateral_mesh(r, c, 1.0).unwrap();
        let q = m.quality();
        assert_eq!(2 * q.n_interior_edges + q.n_boundary_edges, 3 * m.n_triangles());
        assert_eq!(q.n_vertices + m.n_triangles(), m.n_edges() + 1);
    }
}

#[test]
fn text_format_round_trip() {
    let m = generate_equilateral_mesh(2, 3, 0.4).unwrap();
    let again = parse_mesh(&format_mesh(&m), BuildOptions::default()).unwrap();
    assert_eq!(again.vertices(), m.vertices());
    assert_eq!(again.triangles(), m.triangles());
    let err = parse_mesh("3 1\n0 0\n1 0\n", BuildOptions::default()).unwrap_err();
    assert!(matches!(err, MeshError::Parse(_)));
}
