//! Admissible triangular meshes.
//!
//! A mesh stores, besides its connectivity, everything the finite volume and
//! nonconforming operators need: circumcenters `x_K`, edge midpoints,
//! transmissibility distances `d_sigma` and `tau_sigma = |sigma| / d_sigma`,
//! and a fixed unit normal per edge oriented from `K_sigma` (the lower
//! triangle id) toward `L_sigma`, or outward for boundary edges.
//!
//! Local numbering: edge `j` of a triangle is the edge opposite its vertex `j`.

mod generate;
mod geometry;
pub mod io;

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

pub use generate::{generate_equilateral_mesh, uniform_refine};
pub use geometry::{barycentric, circumcenter, signed_area2, Point};

/// A mesh vertex.
pub type Vertex = Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("a mesh needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("a mesh needs at least one triangle")]
    NoTriangles,
    #[error("vertex {0} has non-finite coordinates")]
    NonFiniteVertex(usize),
    #[error("triangle {triangle} references vertex {index}, but only {n_vertices} vertices exist")]
    IndexOutOfRange { triangle: usize, index: usize, n_vertices: usize },
    #[error("triangle {0} is degenerate (zero area or repeated vertex)")]
    DegenerateTriangle(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("triangle {triangle} has an interior angle of {degrees:.6} degrees; admissible meshes need all angles < 90")]
    InadmissibleAngle { triangle: usize, degrees: f64 },
    #[error("edge {edge} ({v0}, {v1}) has zero transmissibility distance d_sigma (coincident circumcenters)")]
    ZeroTransmissibilityDistance { edge: usize, v0: usize, v1: usize },
    #[error("points are collinear")]
    CollinearPoints,
    #[error("mesh file: {0}")]
    Parse(String),
    #[error("mesh file io: {0}")]
    Io(String),
}

/// Options for [`build_mesh_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Accept angles equal to pi/2 (up to round-off). Obtuse angles and
    /// `d_sigma = 0` are still rejected.
    pub allow_right_angles: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    /// Counterclockwise.
    pub vertices: [usize; 3],
    /// `edges[j]` is opposite `vertices[j]`.
    pub edges: [usize; 3],
    /// `+1` when the fixed normal of `edges[j]` points out of this triangle.
    pub edge_signs: [f64; 3],
    pub circumcenter: Point,
    pub centroid: Point,
    /// Diameter of the circumscribed circle.
    pub diameter: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeKind {
    Interior { k: usize, l: usize },
    Boundary { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Sorted vertex ids.
    pub vertices: [usize; 2],
    pub midpoint: Point,
    pub length: f64,
    pub kind: EdgeKind,
    pub d_sigma: f64,
    pub tau: f64,
    /// Unit normal, from `K_sigma` toward `L_sigma` (outward on the boundary).
    pub normal: Point,
}

impl Edge {
    /// The triangle `K_sigma`.
    pub fn k(&self) -> usize {
        match self.kind {
            EdgeKind::Interior { k, .. } | EdgeKind::Boundary { k } => k,
        }
    }

    pub fn l(&self) -> Option<usize> {
        match self.kind {
            EdgeKind::Interior { l, .. } => Some(l),
            EdgeKind::Boundary { .. } => None,
        }
    }

    pub fn is_interior(&self) -> bool {
        matches!(self.kind, EdgeKind::Interior { .. })
    }
}

/// The constants of the mesh regularity assumption, as measured.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshQuality {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub n_interior_edges: usize,
    pub n_boundary_edges: usize,
    pub h: f64,
    /// `None` when the mesh has no interior edge.
    pub min_tau_interior: Option<f64>,
    pub min_tau: f64,
    pub max_angle: f64,
    pub min_angle: f64,
    /// min over all edges of `d_sigma / |sigma|`.
    pub min_d_over_length: f64,
    /// min over all edges of `|sigma| / h`.
    pub min_length_over_h: f64,
}

impl MeshQuality {
    /// The constant `C` for which `d_sigma >= C |sigma|` and `|sigma| >= C h` both hold.
    pub fn regularity_constant(&self) -> f64 {
        self.min_d_over_length.min(self.min_length_over_h)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    h: f64,
    quality: MeshQuality,
}

/// Builds a strictly admissible mesh (all angles < pi/2).
pub fn build_mesh(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh, MeshError> {
    build_mesh_with(vertices, triangles, BuildOptions::default())
}

/// Builds a mesh; clockwise triangles are reoriented.
///
/// `d_sigma = 0` is checked before the angle condition, so a pair of right
/// triangles sharing their hypotenuse reports `ZeroTransmissibilityDistance`.
pub fn build_mesh_with(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, options: BuildOptions) -> Result<Mesh, MeshError> {
    if vertices.len() < 3 {
        return Err(MeshError::TooFewVertices(vertices.len()));
    }
    if triangles.is_empty() {
        return Err(MeshError::NoTriangles);
    }
    if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
        return Err(MeshError::NonFiniteVertex(i));
    }

    let mut tris = Vec::with_capacity(triangles.len());
    for (t, ids) in triangles.iter().enumerate() {
        if let Some(&index) = ids.iter().find(|&&i| i >= vertices.len()) {
            return Err(MeshError::IndexOutOfRange {
                triangle: t,
                index,
                n_vertices: vertices.len(),
            });
        }
        let mut ids = *ids;
        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
            return Err(MeshError::DegenerateTriangle(t));
        }
        let (p0, p1, p2) = (vertices[ids[0]], vertices[ids[1]], vertices[ids[2]]);
        let area2 = signed_area2(p0, p1, p2);
        if area2 < 0.0 {
            ids.swap(1, 2);
        }
        let (p0, p1, p2) = (vertices[ids[0]], vertices[ids[1]], vertices[ids[2]]);
        let center = circumcenter(p0, p1, p2).ok_or(MeshError::DegenerateTriangle(t))?;
        tris.push(Triangle {
            vertices: ids,
            edges: [usize::MAX; 3],
            edge_signs: [1.0; 3],
            circumcenter: center,
            centroid: (1.0 / 3.0) * (p0 + p1 + p2),
            diameter: 2.0 * center.distance(p0),
            area: 0.5 * area2.abs(),
        });
    }

    // Edge table, ids assigned in order of first appearance.
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut incident: Vec<Vec<(usize, usize)>> = Vec::new();
    for (t, tri) in tris.iter().enumerate() {
        for j in 0..3 {
            let a = tri.vertices[(j + 1) % 3];
            let b = tri.vertices[(j + 2) % 3];
            let key = (a.min(b), a.max(b));
            let id = *index.entry(key).or_insert_with(|| {
                incident.push(Vec::with_capacity(2));
                incident.len() - 1
            });
            if incident[id].len() == 2 {
                return Err(MeshError::NonManifoldEdge(key.0, key.1));
            }
            incident[id].push((t, j));
        }
    }
    let mut keys = vec![(0, 0); incident.len()];
    for (key, id) in &index {
        keys[*id] = *key;
    }

    let mut edges = Vec::with_capacity(incident.len());
    for (id, inc) in incident.iter().enumerate() {
        let (a, b) = keys[id];
        let (pa, pb) = (vertices[a], vertices[b]);
        let midpoint = pa.midpoint(pb);
        let length = pa.distance(pb);
        let (k, k_local) = inc[0];
        let mut normal = (1.0 / length) * (pb - pa).perp_right();
        if normal.dot(midpoint - tris[k].centroid) < 0.0 {
            normal = -1.0 * normal;
        }
        tris[k].edges[k_local] = id;
        tris[k].edge_signs[k_local] = 1.0;
        let (kind, d_sigma) = match inc.get(1) {
            Some(&(l, l_local)) => {
                tris[l].edges[l_local] = id;
                tris[l].edge_signs[l_local] = -1.0;
                (EdgeKind::Interior { k, l }, tris[k].circumcenter.distance(tris[l].circumcenter))
            }
            None => (EdgeKind::Boundary { k }, tris[k].circumcenter.distance(midpoint)),
        };
        if !(d_sigma > 1e-12 * length) {
            return Err(MeshError::ZeroTransmissibilityDistance { edge: id, v0: a, v1: b });
        }
        edges.push(Edge {
            vertices: [a, b],
            midpoint,
            length,
            kind,
            d_sigma,
            tau: length / d_sigma,
            normal,
        });
    }

    let mut max_angle: f64 = 0.0;
    let mut min_angle = f64::INFINITY;
    for (t, tri) in tris.iter().enumerate() {
        for (angle, cosine) in triangle_angles(&vertices, tri) {
            let admissible = if options.allow_right_angles {
                cosine >= -1e-12
            } else {
                cosine > 1e-12
            };
            if !admissible {
                return Err(MeshError::InadmissibleAngle {
                    triangle: t,
                    degrees: angle.to_degrees(),
                });
            }
            max_angle = max_angle.max(angle);
            min_angle = min_angle.min(angle);
        }
    }
    debug_assert!(max_angle <= FRAC_PI_2 + 1e-9);

    let h = tris.iter().map(|t| t.diameter).fold(0.0, f64::max);
    let n_interior = edges.iter().filter(|e| e.is_interior()).count();
    let quality = MeshQuality {
        n_vertices: vertices.len(),
        n_triangles: tris.len(),
        n_interior_edges: n_interior,
        n_boundary_edges: edges.len() - n_interior,
        h,
        min_tau_interior: edges.iter().filter(|e| e.is_interior()).map(|e| e.tau).reduce(f64::min),
        min_tau: edges.iter().map(|e| e.tau).fold(f64::INFINITY, f64::min),
        max_angle,
        min_angle,
        min_d_over_length: edges.iter().map(|e| e.d_sigma / e.length).fold(f64::INFINITY, f64::min),
        min_length_over_h: edges.iter().map(|e| e.length / h).fold(f64::INFINITY, f64::min),
    };

    Ok(Mesh {
        vertices,
        triangles: tris,
        edges,
        h,
        quality,
    })
}

fn triangle_angles(vertices: &[Point], tri: &Triangle) -> [(f64, f64); 3] {
    let p = tri.vertices.map(|i| vertices[i]);
    std::array::from_fn(|j| {
        let a = p[(j + 1) % 3] - p[j];
        let b = p[(j + 2) % 3] - p[j];
        let cosine = a.dot(b) / (a.norm() * b.norm());
        (a.cross(b).atan2(a.dot(b)).abs(), cosine)
    })
}

/// Measured regularity constants of a built mesh.
pub fn admissibility_report(mesh: &Mesh) -> MeshQuality {
    mesh.quality.clone()
}

impl Mesh {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Maximum circumscribed-circle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn quality(&self) -> &MeshQuality {
        &self.quality
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_interior())
    }

    /// Vertex coordinates of triangle `t`, counterclockwise.
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].vertices.map(|i| self.vertices[i])
    }

    /// Triangle across edge `edge` from triangle `t`, if any.
    pub fn neighbor(&self, t: usize, edge: usize) -> Option<usize> {
        match self.edges[edge].kind {
            EdgeKind::Interior { k, l } => Some(if k == t { l } else { k }),
            EdgeKind::Boundary { .. } => None,
        }
    }

    /// Outward unit normal of triangle `t` on its local edge `j`.
    pub fn outward_normal(&self, t: usize, j: usize) -> Point {
        let tri = &self.triangles[t];
        tri.edge_signs[j] * self.edges[tri.edges[j]].normal
    }

    /// Area enclosed by the boundary edges, each traversed with the domain on
    /// its left (shoelace formula over the boundary edge set).
    pub fn boundary_enclosed_area(&self) -> f64 {
        let mut area2 = 0.0;
        for tri in &self.triangles {
            for j in 0..3 {
                if !self.edges[tri.edges[j]].is_interior() {
                    let a = self.vertices[tri.vertices[(j + 1) % 3]];
                    let b = self.vertices[tri.vertices[(j + 2) % 3]];
                    area2 += a.cross(b);
                }
            }
        }
        0.5 * area2
    }
}
