use super::{build_mesh, Mesh, MeshError, Point};

/// Rhombus `{a e1 + b e2 : 0 <= a <= n_cols * side, 0 <= b <= n_rows * side}`
/// with `e1 = (1, 0)`, `e2 = (1/2, sqrt(3)/2)`, tiled by `2 * n_rows * n_cols`
/// congruent equilateral triangles.
pub fn generate_equilateral_mesh(n_rows: usize, n_cols: usize, side: f64) -> Result<Mesh, MeshError> {
    assert!(n_rows >= 1 && n_cols >= 1, "need at least one row and one column");
    assert!(side > 0.0 && side.is_finite(), "side must be positive");
    let e1 = Point::new(side, 0.0);
    let e2 = Point::new(0.5 * side, 0.5 * 3f64.sqrt() * side);
    let id = |i: usize, j: usize| j * (n_cols + 1) + i;

    let mut vertices = Vec::with_capacity((n_rows + 1) * (n_cols + 1));
    for j in 0..=n_rows {
        for i in 0..=n_cols {
            vertices.push(i as f64 * e1 + j as f64 * e2);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_rows * n_cols);
    for j in 0..n_rows {
        for i in 0..n_cols {
            triangles.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            triangles.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build_mesh(vertices, triangles)
}

/// Red refinement: every triangle is split into four through its edge midpoints.
///
/// The children are similar to the parent, so angles (and admissibility) are
/// preserved and `h` halves.
pub fn uniform_refine(mesh: &Mesh) -> Mesh {
    let n_v = mesh.vertices().len();
    let mut vertices = mesh.vertices().to_vec();
    vertices.extend(mesh.edges().iter().map(|e| e.midpoint));

    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for tri in mesh.triangles() {
        let [v0, v1, v2] = tri.vertices;
        let [m0, m1, m2] = tri.edges.map(|e| n_v + e);
        triangles.push([v0, m2, m1]);
        triangles.push([m2, v1, m0]);
        triangles.push([m1, m0, v2]);
        triangles.push([m0, m1, m2]);
    }
    build_mesh(vertices, triangles).expect("refinement of an admissible mesh is admissible")
}
