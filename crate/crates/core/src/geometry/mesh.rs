use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

/// Axis-aligned box used as the hold-all domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    /// Tight box around `points` grown by `margin` on every side.
    pub fn around(points: &[Vec2], margin: f64) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        Self {
            min: [min[0] - margin, min[1] - margin],
            max: [max[0] + margin, max[1] + margin],
        }
    }

    pub fn contains_strictly(&self, p: Vec2) -> bool {
        p.x > self.min[0] && p.x < self.max[0] && p.y > self.min[1] && p.y < self.max[1]
    }

    /// Distance from an interior point to the box boundary.
    pub fn distance_to_boundary(&self, p: Vec2) -> f64 {
        (p.x - self.min[0])
            .min(self.max[0] - p.x)
            .min(p.y - self.min[1])
            .min(self.max[1] - p.y)
    }

    pub fn diameter(&self) -> f64 {
        ((self.max[0] - self.min[0]).powi(2) + (self.max[1] - self.min[1]).powi(2)).sqrt()
    }
}

/// A boundary edge `a -> b`, oriented so that its parent triangle lies to
/// the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub triangle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Sorted indices of boundary vertices.
    pub boundary_vertices: Vec<usize>,
    pub hold_all: BoundingBox,
    /// Position of each vertex in `boundary_vertices`.
    boundary_slot: Vec<Option<usize>>,
}

pub fn signed_area(p0: Vec2, p1: Vec2, p2: Vec2) -> f64 {
    0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y))
}

impl Mesh {
    /// Builds and validates a mesh. Boundary edges are re-oriented to follow
    /// their parent triangle.
    pub fn new(
        vertices: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        hold_all: BoundingBox,
    ) -> Result<Self> {
        let nv = vertices.len();
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvertedTriangle { triangle: t, area });
            }
        }

        let mut edges = Vec::with_capacity(boundary_edges.len());
        for (e, be) in boundary_edges.iter().enumerate() {
            let tri = triangles
                .get(be.triangle)
                .ok_or_else(|| Error::InvalidMesh(format!("boundary edge {e} has no parent triangle")))?;
            let pos = |v: usize| tri.iter().position(|&x| x == v);
            let (Some(pa), Some(pb)) = (pos(be.a), pos(be.b)) else {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {e} is not an edge of triangle {}",
                    be.triangle
                )));
            };
            if (pa + 1) % 3 == pb {
                edges.push(*be);
            } else {
                edges.push(BoundaryEdge {
                    a: be.b,
                    b: be.a,
                    triangle: be.triangle,
                });
            }
        }

        let mut mesh = Self {
            vertices,
            triangles,
            boundary_edges: edges,
            boundary_vertices: Vec::new(),
            hold_all,
            boundary_slot: Vec::new(),
        };
        mesh.index_boundary();
        mesh.validate()?;
        Ok(mesh)
    }

    fn index_boundary(&mut self) {
        let mut bv: Vec<usize> = self.boundary_edges.iter().flat_map(|e| [e.a, e.b]).collect();
        bv.sort_unstable();
        bv.dedup();
        self.boundary_slot = vec![None; self.vertices.len()];
        for (k, &v) in bv.iter().enumerate() {
            self.boundary_slot[v] = Some(k);
        }
        self.boundary_vertices = bv;
    }

    /// Checks the structural invariants: every edge shared by at most two
    /// triangles, boundary edges are exactly the unshared ones, boundary
    /// forms closed simple loops, and the hold-all box contains the mesh.
    pub fn validate(&self) -> Result<()> {
        use std::collections::HashMap;
        let mut count: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = count.entry(key).or_insert((0, t));
                entry.0 += 1;
                if entry.0 > 2 {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) shared by more than two triangles"
                    )));
                }
            }
        }
        let mut free: Vec<(usize, usize)> = count.iter().filter(|(_, &(c, _))| c == 1).map(|(&k, _)| k).collect();
        free.sort_unstable();
        let mut listed: Vec<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|e| (e.a.min(e.b), e.a.max(e.b)))
            .collect();
        listed.sort_unstable();
        if free != listed {
            return Err(Error::InvalidMesh(
                "boundary edge list does not match the unshared triangle edges".into(),
            ));
        }
        for e in &self.boundary_edges {
            if count[&(e.a.min(e.b), e.a.max(e.b))].1 != e.triangle {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({}, {}) has the wrong parent triangle",
                    e.a, e.b
                )));
            }
        }

        // each boundary vertex must have exactly one outgoing and one incoming edge
        let mut out_deg = vec![0usize; self.vertices.len()];
        let mut in_deg = vec![0usize; self.vertices.len()];
        for e in &self.boundary_edges {
            out_deg[e.a] += 1;
            in_deg[e.b] += 1;
        }
        for &v in &self.boundary_vertices {
            if out_deg[v] != 1 || in_deg[v] != 1 {
                return Err(Error::InvalidMesh(format!(
                    "boundary vertex {v} is not on a simple closed loop"
                )));
            }
        }

        for &v in &self.boundary_vertices {
            if !self.hold_all.contains_strictly(self.vertices[v]) {
                return Err(Error::InvalidMesh(format!(
                    "boundary vertex {v} is not strictly inside the hold-all box"
                )));
            }
        }
        if self.vertices.iter().any(|&p| !self.hold_all.contains_strictly(p)) {
            return Err(Error::InvalidMesh("vertex outside the hold-all box".into()));
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn boundary_slot(&self, v: usize) -> Option<usize> {
        self.boundary_slot[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_slot[v].is_some()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        signed_area(self.vertices[i], self.vertices[j], self.vertices[k])
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [i, j, k] = self.triangles[t];
        (self.vertices[i] + self.vertices[j] + self.vertices[k]) / 3.0
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let be = self.boundary_edges[e];
        (self.vertices[be.b] - self.vertices[be.a]).norm()
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.boundary_edges.len()).map(|e| self.edge_length(e)).sum()
    }

    /// Gradients of the three barycentric hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Vec2; 3] {
        let [i, j, k] = self.triangles[t];
        let (p0, p1, p2) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        let two_a = 2.0 * signed_area(p0, p1, p2);
        let perp = |a: Vec2, b: Vec2| Vec2::new(a.y - b.y, b.x - a.x) / two_a;
        [perp(p1, p2), perp(p2, p0), perp(p0, p1)]
    }

    /// Gradient of a P1 field on triangle `t`.
    pub fn element_gradient(&self, t: usize, u: &[f64]) -> Vec2 {
        let g = self.hat_gradients(t);
        let tri = self.triangles[t];
        g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]]
    }

    /// Jacobian `J_ij = d h_i / d x_j` of a P1 vector field on triangle `t`.
    pub fn element_jacobian(&self, t: usize, h: &[Vec2]) -> Mat2 {
        let g = self.hat_gradients(t);
        let tri = self.triangles[t];
        let mut jac = Mat2::zeros();
        for k in 0..3 {
            jac += h[tri[k]] * g[k].transpose();
        }
        jac
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[tri[k]];
                let a = self.vertices[tri[(k + 1) % 3]] - p;
                let b = self.vertices[tri[(k + 2) % 3]] - p;
                let c = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
                min = min.min(c.acos().to_degrees());
            }
        }
        min
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    /// Sorted vertex neighbours (excluding the vertex itself).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_vertices()];
        for tri in &self.triangles {
            for k in 0..3 {
                for l in 0..3 {
                    if k != l {
                        out[tri[k]].push(tri[l]);
                    }
                }
            }
        }
        for n in &mut out {
            n.sort_unstable();
            n.dedup();
        }
        out
    }

    /// Barycentric location of `p`, if it lies in some triangle.
    pub fn locate(&self, p: Vec2) -> Option<(usize, [f64; 3])> {
        const SLACK: f64 = 1e-12;
        for (t, tri) in self.triangles.iter().enumerate() {
            let (p0, p1, p2) = (self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]);
            let a = signed_area(p0, p1, p2);
            let l0 = signed_area(p, p1, p2) / a;
            let l1 = signed_area(p0, p, p2) / a;
            let l2 = 1.0 - l0 - l1;
            if l0 >= -SLACK && l1 >= -SLACK && l2 >= -SLACK {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }

    /// Same connectivity with moved vertices; fails on inverted triangles.
    pub fn with_vertices(&self, vertices: Vec<Vec2>) -> Result<Mesh> {
        assert_eq!(vertices.len(), self.num_vertices());
        for (t, tri) in self.triangles.iter().enumerate() {
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvertedTriangle { triangle: t, area });
            }
        }
        let mut hold_all = self.hold_all;
        if vertices.iter().any(|&p| !hold_all.contains_strictly(p)) {
            let pad = 0.25 * BoundingBox::around(&vertices, 0.0).diameter();
            hold_all = BoundingBox::around(&vertices, pad);
        }
        Ok(Mesh {
            vertices,
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
            boundary_vertices: self.boundary_vertices.clone(),
            hold_all,
            boundary_slot: self.boundary_slot.clone(),
        })
    }

    /// FNV-1a hash over the coordinate bits, used to tag meshes in histories.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        for v in &self.vertices {
            for c in [v.x, v.y] {
                for byte in c.to_bits().to_le_bytes() {
                    hash ^= byte as u64;
                    hash = hash.wrapping_mul(0x100000001b3);
                }
            }
        }
        hash
    }
}
