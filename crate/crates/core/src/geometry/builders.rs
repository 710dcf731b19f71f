use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mesh::{signed_area, BoundaryEdge, BoundingBox, Mesh};
use crate::error::{Error, Result};
use crate::Vec2;

/// Shapes that `build_structured_mesh` knows how to triangulate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MeshShape {
    UnitSquare,
    Disk {
        radius: f64,
    },
    /// Sector `r_inner <= r <= r_outer`, `0 <= theta <= angle`.
    AnnularSector {
        r_inner: f64,
        r_outer: f64,
        angle: f64,
    },
}

impl MeshShape {
    pub fn parse(tag: &str, radius: f64) -> Result<Self> {
        match tag {
            "unit_square" => Ok(MeshShape::UnitSquare),
            "disk" => Ok(MeshShape::Disk { radius }),
            "annular_sector" => Ok(MeshShape::AnnularSector {
                r_inner: 0.5 * radius,
                r_outer: radius,
                angle: 0.5 * PI,
            }),
            other => Err(Error::UnsupportedShape(other.to_string())),
        }
    }
}

/// Relative margin between the mesh bounding box and the hold-all box.
pub const HOLD_ALL_MARGIN: f64 = 0.5;

pub fn default_hold_all(vertices: &[Vec2]) -> BoundingBox {
    let tight = BoundingBox::around(vertices, 0.0);
    let extent = (tight.max[0] - tight.min[0]).max(tight.max[1] - tight.min[1]);
    BoundingBox::around(vertices, HOLD_ALL_MARGIN * 0.5 * extent)
}

pub fn build_structured_mesh(shape: MeshShape, resolution: usize) -> Result<Mesh> {
    if resolution < 2 {
        return Err(Error::ResolutionTooSmall(resolution));
    }
    let (vertices, triangles) = match shape {
        MeshShape::UnitSquare => unit_square(resolution),
        MeshShape::Disk { radius } => {
            if !(radius > 0.0) {
                return Err(Error::InvalidInput(format!("disk radius {radius} must be positive")));
            }
            disk(radius, resolution)
        }
        MeshShape::AnnularSector {
            r_inner,
            r_outer,
            angle,
        } => {
            if !(r_inner > 0.0 && r_outer > r_inner && angle > 0.0 && angle < 2.0 * PI) {
                return Err(Error::InvalidInput(format!(
                    "bad annular sector r_inner={r_inner}, r_outer={r_outer}, angle={angle}"
                )));
            }
            annular_sector(r_inner, r_outer, angle, resolution)
        }
    };
    let edges = boundary_from_triangles(&triangles);
    let hold_all = default_hold_all(&vertices);
    Mesh::new(vertices, triangles, edges, hold_all)
}

/// Edges used by exactly one triangle, oriented along that triangle.
pub fn boundary_from_triangles(triangles: &[[usize; 3]]) -> Vec<BoundaryEdge> {
    let mut seen: HashMap<(usize, usize), (usize, usize, usize, usize)> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            seen.entry((a.min(b), a.max(b)))
                .and_modify(|e| e.0 += 1)
                .or_insert((1, a, b, t));
        }
    }
    let mut edges: Vec<BoundaryEdge> = seen
        .into_values()
        .filter(|e| e.0 == 1)
        .map(|(_, a, b, triangle)| BoundaryEdge { a, b, triangle })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));
    edges
}

fn unit_square(n: usize) -> (Vec<Vec2>, Vec<[usize; 3]>) {
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(Vec2::new(i as f64 * h, j as f64 * h));
        }
    }
    let mut t = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    (v, t)
}

/// Concentric rings with `6 i` vertices on ring `i`, stitched by walking the
/// two rings in angle order. Boundary vertices lie exactly on the circle.
fn disk(radius: f64, n: usize) -> (Vec<Vec2>, Vec<[usize; 3]>) {
    let mut v = vec![Vec2::zeros()];
    let mut ring_start = vec![0usize];
    for i in 1..=n {
        ring_start.push(v.len());
        let m = 6 * i;
        let r = radius * i as f64 / n as f64;
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            v.push(Vec2::new(r * th.cos(), r * th.sin()));
        }
    }
    let mut t = Vec::new();
    // innermost fan
    for j in 0..6 {
        t.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for i in 2..=n {
        let (m_in, m_out) = (6 * (i - 1), 6 * i);
        let (s_in, s_out) = (ring_start[i - 1], ring_start[i]);
        let inner = |k: usize| s_in + k % m_in;
        let outer = |k: usize| s_out + k % m_out;
        let (mut a, mut b) = (0usize, 0usize);
        while a < m_in || b < m_out {
            // compare angles (b+1)/m_out against (a+1)/m_in exactly in integers
            let advance_outer = b < m_out && (a == m_in || (b + 1) * m_in <= (a + 1) * m_out);
            if advance_outer {
                t.push([inner(a), outer(b), outer(b + 1)]);
                b += 1;
            } else {
                t.push([inner(a), outer(b), inner(a + 1)]);
                a += 1;
            }
        }
    }
    for tri in &mut t {
        if signed_area(v[tri[0]], v[tri[1]], v[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
    }
    (v, t)
}

fn annular_sector(r0: f64, r1: f64, angle: f64, n: usize) -> (Vec<Vec2>, Vec<[usize; 3]>) {
    let rm = 0.5 * (r0 + r1);
    let na = ((n as f64 * angle * rm / (r1 - r0)).round() as usize).max(2);
    let id = |i: usize, j: usize| j * (na + 1) + i;
    let mut v = Vec::new();
    for j in 0..=n {
        let r = r0 + (r1 - r0) * j as f64 / n as f64;
        for i in 0..=na {
            let th = angle * i as f64 / na as f64;
            v.push(Vec2::new(r * th.cos(), r * th.sin()));
        }
    }
    let mut t = Vec::new();
    for j in 0..n {
        for i in 0..na {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            t.push([a, c, b]);
            t.push([a, d, c]);
        }
    }
    (v, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = build_structured_mesh(MeshShape::UnitSquare, 2).unwrap();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(m.boundary_edges.len(), 8);
        assert!((m.area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn disk_counts_and_radius() {
        for n in [2, 5, 9] {
            let m = build_structured_mesh(MeshShape::Disk { radius: 2.0 }, n).unwrap();
            assert_eq!(m.num_vertices(), 1 + 3 * n * (n + 1));
            assert_eq!(m.boundary_edges.len(), 6 * n);
            for &b in &m.boundary_vertices {
                assert!((m.vertices[b].norm() - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disk_perimeter_converges() {
        let mut prev = f64::INFINITY;
        for n in [4, 8, 16, 32] {
            let m = build_structured_mesh(MeshShape::Disk { radius: 1.0 }, n).unwrap();
            let err = (m.perimeter() - 2.0 * PI).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn resolution_too_small() {
        let err = build_structured_mesh(MeshShape::Disk { radius: 1.0 }, 1).unwrap_err();
        assert!(matches!(err, Error::ResolutionTooSmall(1)));
    }

    #[test]
    fn unknown_shape_tag() {
        assert!(matches!(
            MeshShape::parse("torus", 1.0),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn annular_sector_is_valid() {
        let shape = MeshShape::AnnularSector {
            r_inner: 0.5,
            r_outer: 1.0,
            angle: 1.0,
        };
        let m = build_structured_mesh(shape, 4).unwrap();
        let exact = 0.5 * 1.0 * (1.0 - 0.25);
        assert!((m.area() - exact).abs() < 0.02);
    }
}
