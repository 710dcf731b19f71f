use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::Vec2;

/// Turning angles above this are treated as corners.
pub const CORNER_ANGLE_DEG: f64 = 30.0;

/// Per-boundary-vertex geometry, indexed by boundary slot (the position in
/// `Mesh::boundary_vertices`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGeometry {
    pub vertex: Vec<usize>,
    pub outward_normal: Vec<Vec2>,
    pub tangent: Vec<Vec2>,
    pub curvature: Vec<f64>,
    pub turning_angle: Vec<f64>,
    pub arc_weight: Vec<f64>,
    pub corner: Vec<bool>,
    /// Previous and next boundary slot along the loop.
    pub prev: Vec<usize>,
    pub next: Vec<usize>,
    /// Outward unit normal and length of every boundary edge.
    pub edge_normal: Vec<Vec2>,
    pub edge_length: Vec<f64>,
    /// Loops as sequences of boundary slots, in traversal order.
    pub loops: Vec<Vec<usize>>,
}

pub fn outward_edge_normal(a: Vec2, b: Vec2) -> Vec2 {
    let d = b - a;
    Vec2::new(d.y, -d.x) / d.norm()
}

pub fn compute_boundary_geometry(mesh: &Mesh) -> Result<BoundaryGeometry> {
    let nb = mesh.boundary_vertices.len();
    let ne = mesh.boundary_edges.len();
    let mut edge_normal = Vec::with_capacity(ne);
    let mut edge_length = Vec::with_capacity(ne);
    for (e, be) in mesh.boundary_edges.iter().enumerate() {
        let (pa, pb) = (mesh.vertices[be.a], mesh.vertices[be.b]);
        let len = (pb - pa).norm();
        if !(len > 1e-14 * mesh.hold_all.diameter()) {
            return Err(Error::DegenerateEdge { edge: e, length: len });
        }
        edge_normal.push(outward_edge_normal(pa, pb));
        edge_length.push(len);
    }

    let slot = |v: usize| mesh.boundary_slot(v).expect("edge endpoint on boundary");
    let mut out_edge = vec![usize::MAX; nb];
    let mut in_edge = vec![usize::MAX; nb];
    for (e, be) in mesh.boundary_edges.iter().enumerate() {
        out_edge[slot(be.a)] = e;
        in_edge[slot(be.b)] = e;
    }

    let mut prev = vec![0; nb];
    let mut next = vec![0; nb];
    let mut normal = vec![Vec2::zeros(); nb];
    let mut tangent = vec![Vec2::zeros(); nb];
    let mut curvature = vec![0.0; nb];
    let mut turning = vec![0.0; nb];
    let mut arc_weight = vec![0.0; nb];
    let mut corner = vec![false; nb];
    for s in 0..nb {
        let (ei, eo) = (in_edge[s], out_edge[s]);
        prev[s] = slot(mesh.boundary_edges[ei].a);
        next[s] = slot(mesh.boundary_edges[eo].b);
        let n = edge_normal[ei] + edge_normal[eo];
        normal[s] = n / n.norm();
        tangent[s] = Vec2::new(-normal[s].y, normal[s].x);
        let v = mesh.vertices[mesh.boundary_vertices[s]];
        let t_in = v - mesh.vertices[mesh.boundary_vertices[prev[s]]];
        let t_out = mesh.vertices[mesh.boundary_vertices[next[s]]] - v;
        let theta = (t_in.x * t_out.y - t_in.y * t_out.x).atan2(t_in.dot(&t_out));
        let avg = 0.5 * (edge_length[ei] + edge_length[eo]);
        turning[s] = theta;
        curvature[s] = theta / avg;
        arc_weight[s] = avg;
        corner[s] = theta.abs() > CORNER_ANGLE_DEG.to_radians();
    }

    let mut loops = Vec::new();
    let mut visited = vec![false; nb];
    for start in 0..nb {
        if visited[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut s = start;
        loop {
            visited[s] = true;
            lp.push(s);
            s = next[s];
            if s == start {
                break;
            }
            if visited[s] {
                return Err(Error::InvalidMesh("boundary loops intersect".into()));
            }
        }
        loops.push(lp);
    }

    Ok(BoundaryGeometry {
        vertex: mesh.boundary_vertices.clone(),
        outward_normal: normal,
        tangent,
        curvature,
        turning_angle: turning,
        arc_weight,
        corner,
        prev,
        next,
        edge_normal,
        edge_length,
        loops,
    })
}

impl BoundaryGeometry {
    pub fn len(&self) -> usize {
        self.vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex.is_empty()
    }

    /// Derivative along the boundary of nodal values `u` (indexed by
    /// global vertex) at slot `s`, by a three-point nonuniform difference.
    pub fn tangential_derivative(&self, mesh: &Mesh, u: &[f64], s: usize) -> f64 {
        let (sp, sn) = (self.prev[s], self.next[s]);
        let (vp, v, vn) = (self.vertex[sp], self.vertex[s], self.vertex[sn]);
        let hm = (mesh.vertices[v] - mesh.vertices[vp]).norm();
        let hp = (mesh.vertices[vn] - mesh.vertices[v]).norm();
        (hm * hm * (u[vn] - u[v]) + hp * hp * (u[v] - u[vp])) / (hm * hp * (hm + hp))
    }

    /// Same as [`tangential_derivative`] for boundary-slot-indexed values.
    pub fn tangential_derivative_slots(&self, mesh: &Mesh, u: &[f64], s: usize) -> f64 {
        let (sp, sn) = (self.prev[s], self.next[s]);
        let (vp, v, vn) = (self.vertex[sp], self.vertex[s], self.vertex[sn]);
        let hm = (mesh.vertices[v] - mesh.vertices[vp]).norm();
        let hp = (mesh.vertices[vn] - mesh.vertices[v]).norm();
        (hm * hm * (u[sn] - u[s]) + hp * hp * (u[s] - u[sp])) / (hm * hp * (hm + hp))
    }
}
