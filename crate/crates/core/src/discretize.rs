//! P1 finite-element assembly on a fixed triangulation.
//!
//! Triangle quadrature is the three-point edge-midpoint rule (point `q` is
//! the midpoint of local vertices `q` and `q+1`, weight `area/3`), stored at
//! index `3 t + q`. Edge quadrature is two-point Gauss, stored at `2 e + q`.
//! Every operator lives on the vertex-adjacency pattern, so operators can be
//! combined value-by-value.

use crate::error::{Error, Result};
use crate::geometry::{outward_edge_normal, Mesh};
use crate::linalg::CsrMatrix;
use crate::{Mat2, Vec2};

pub const TRI_QUAD: usize = 3;
pub const EDGE_QUAD: usize = 2;

/// Gauss abscissae on [0, 1].
pub fn edge_quad_abscissae() -> [f64; 2] {
    let s = 0.5 / 3f64.sqrt();
    [0.5 - s, 0.5 + s]
}

/// Hat function values at triangle quadrature point `q`.
#[inline]
pub fn tri_basis(q: usize) -> [f64; 3] {
    let mut phi = [0.0; 3];
    phi[q] = 0.5;
    phi[(q + 1) % 3] = 0.5;
    phi
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Mesh,
    areas: Vec<f64>,
    grads: Vec<[Vec2; 3]>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    tri_slots: Vec<[usize; 9]>,
    edge_slots: Vec<[usize; 4]>,
    edge_len: Vec<f64>,
    edge_normal: Vec<Vec2>,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Self {
        let nv = mesh.num_vertices();
        let nbrs = mesh.vertex_neighbors();
        let mut row_ptr = Vec::with_capacity(nv + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, n) in nbrs.iter().enumerate() {
            let mut row = n.clone();
            row.push(i);
            row.sort_unstable();
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        let slot = |i: usize, j: usize| {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            row_ptr[i] + row.binary_search(&j).expect("pattern contains element pairs")
        };
        let mut tri_slots = Vec::with_capacity(mesh.num_triangles());
        let mut areas = Vec::with_capacity(mesh.num_triangles());
        let mut grads = Vec::with_capacity(mesh.num_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut s = [0; 9];
            for k in 0..3 {
                for l in 0..3 {
                    s[3 * k + l] = slot(tri[k], tri[l]);
                }
            }
            tri_slots.push(s);
            areas.push(mesh.triangle_area(t));
            grads.push(mesh.hat_gradients(t));
        }
        let mut edge_slots = Vec::with_capacity(mesh.boundary_edges.len());
        let mut edge_len = Vec::new();
        let mut edge_normal = Vec::new();
        for be in &mesh.boundary_edges {
            edge_slots.push([slot(be.a, be.a), slot(be.a, be.b), slot(be.b, be.a), slot(be.b, be.b)]);
            let (pa, pb) = (mesh.vertices[be.a], mesh.vertices[be.b]);
            edge_len.push((pb - pa).norm());
            edge_normal.push(outward_edge_normal(pa, pb));
        }
        Self {
            mesh,
            areas,
            grads,
            row_ptr,
            col_idx,
            tri_slots,
            edge_slots,
            edge_len,
            edge_normal,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dof_count(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn num_triangles(&self) -> usize {
        self.areas.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_len.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn hat_gradients(&self, t: usize) -> &[Vec2; 3] {
        &self.grads[t]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_len[e]
    }

    pub fn edge_normal(&self, e: usize) -> Vec2 {
        self.edge_normal[e]
    }

    pub fn zero_operator(&self) -> CsrMatrix {
        let n = self.dof_count();
        CsrMatrix::zeros_with_pattern(n, n, self.row_ptr.clone(), self.col_idx.clone())
    }

    /// Physical positions of the triangle quadrature points.
    pub fn tri_quad_points(&self) -> Vec<Vec2> {
        let v = &self.mesh.vertices;
        let mut out = Vec::with_capacity(TRI_QUAD * self.num_triangles());
        for tri in &self.mesh.triangles {
            for q in 0..3 {
                out.push((v[tri[q]] + v[tri[(q + 1) % 3]]) * 0.5);
            }
        }
        out
    }

    pub fn tri_quad_weight(&self, t: usize) -> f64 {
        self.areas[t] / 3.0
    }

    /// Physical positions of the edge quadrature points.
    pub fn edge_quad_points(&self) -> Vec<Vec2> {
        let v = &self.mesh.vertices;
        let s = edge_quad_abscissae();
        let mut out = Vec::with_capacity(EDGE_QUAD * self.num_edges());
        for be in &self.mesh.boundary_edges {
            for sq in s {
                out.push(v[be.a] * (1.0 - sq) + v[be.b] * sq);
            }
        }
        out
    }

    /// Outward normal repeated at each edge quadrature point.
    pub fn edge_quad_normals(&self) -> Vec<Vec2> {
        self.edge_normal.iter().flat_map(|&n| [n, n]).collect()
    }

    /// Per-triangle gradient of a nodal field.
    pub fn gradients(&self, u: &[f64]) -> Vec<Vec2> {
        self.mesh
            .triangles
            .iter()
            .zip(&self.grads)
            .map(|(tri, g)| g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]])
            .collect()
    }

    /// P1 interpolation of a nodal field to triangle quadrature points.
    pub fn to_tri_quad(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(TRI_QUAD * self.num_triangles());
        for tri in &self.mesh.triangles {
            for q in 0..3 {
                out.push(0.5 * (u[tri[q]] + u[tri[(q + 1) % 3]]));
            }
        }
        out
    }

    /// P1 interpolation of a nodal field to edge quadrature points.
    pub fn to_edge_quad(&self, u: &[f64]) -> Vec<f64> {
        let s = edge_quad_abscissae();
        let mut out = Vec::with_capacity(EDGE_QUAD * self.num_edges());
        for be in &self.mesh.boundary_edges {
            for sq in s {
                out.push(u[be.a] * (1.0 - sq) + u[be.b] * sq);
            }
        }
        out
    }

    /// Per-triangle Jacobian of a nodal vector field.
    pub fn jacobians(&self, h: &[Vec2]) -> Vec<Mat2> {
        self.mesh
            .triangles
            .iter()
            .zip(&self.grads)
            .map(|(tri, g)| h[tri[0]] * g[0].transpose() + h[tri[1]] * g[1].transpose() + h[tri[2]] * g[2].transpose())
            .collect()
    }
}

/// Scalar coefficient. On triangles `Quad` is indexed `3 t + q` and
/// `Element` by triangle; on boundary edges `Quad` is `2 e + q` and
/// `Element` by edge. `Nodal` is indexed by vertex everywhere.
#[derive(Debug, Clone, Copy)]
pub enum Field<'a> {
    Const(f64),
    Nodal(&'a [f64]),
    Quad(&'a [f64]),
    Element(&'a [f64]),
}

impl Field<'_> {
    #[inline]
    pub fn tri(&self, space: &FeSpace, t: usize, q: usize) -> f64 {
        match *self {
            Field::Const(c) => c,
            Field::Nodal(u) => {
                let tri = &space.mesh.triangles[t];
                0.5 * (u[tri[q]] + u[tri[(q + 1) % 3]])
            }
            Field::Quad(v) => v[TRI_QUAD * t + q],
            Field::Element(v) => v[t],
        }
    }

    #[inline]
    pub fn edge(&self, space: &FeSpace, e: usize, q: usize) -> f64 {
        match *self {
            Field::Const(c) => c,
            Field::Nodal(u) => {
                let be = &space.mesh.boundary_edges[e];
                let s = edge_quad_abscissae()[q];
                u[be.a] * (1.0 - s) + u[be.b] * s
            }
            Field::Quad(v) => v[EDGE_QUAD * e + q],
            Field::Element(v) => v[e],
        }
    }

    fn check_finite(&self, what: &'static str) -> Result<()> {
        let ok = match *self {
            Field::Const(c) => c.is_finite(),
            Field::Nodal(v) | Field::Quad(v) | Field::Element(v) => v.iter().all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MatField<'a> {
    Identity,
    Const(Mat2),
    Quad(&'a [Mat2]),
    Element(&'a [Mat2]),
}

impl MatField<'_> {
    #[inline]
    pub fn tri(&self, t: usize, q: usize) -> Mat2 {
        match *self {
            MatField::Identity => Mat2::identity(),
            MatField::Const(m) => m,
            MatField::Quad(v) => v[TRI_QUAD * t + q],
            MatField::Element(v) => v[t],
        }
    }

    fn values(&self) -> &[Mat2] {
        match self {
            MatField::Identity => &[],
            MatField::Const(m) => std::slice::from_ref(m),
            MatField::Quad(v) | MatField::Element(v) => v,
        }
    }

    fn check(&self, require_symmetric: bool) -> Result<()> {
        for (i, m) in self.values().iter().enumerate() {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("matrix coefficient"));
            }
            if require_symmetric {
                let asym = (m[(0, 1)] - m[(1, 0)]).abs();
                if asym > 1e-10 * m.norm().max(1.0) {
                    return Err(Error::NonSymmetric {
                        point: i,
                        asymmetry: asym,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum VecField<'a> {
    Const(Vec2),
    Quad(&'a [Vec2]),
    Element(&'a [Vec2]),
}

impl VecField<'_> {
    #[inline]
    pub fn tri(&self, t: usize, q: usize) -> Vec2 {
        match *self {
            VecField::Const(v) => v,
            VecField::Quad(v) => v[TRI_QUAD * t + q],
            VecField::Element(v) => v[t],
        }
    }

    fn check_finite(&self) -> Result<()> {
        let ok = match self {
            VecField::Const(v) => v.iter().all(|x| x.is_finite()),
            VecField::Quad(v) | VecField::Element(v) => v.iter().all(|x| x.x.is_finite() && x.y.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite("vector coefficient"))
        }
    }
}

/// `int coeff phi_i phi_j dx`
pub fn assemble_weighted_mass(space: &FeSpace, coeff: &Field) -> Result<CsrMatrix> {
    coeff.check_finite("mass coefficient")?;
    let mut a = space.zero_operator();
    let vals = a.values_mut();
    for t in 0..space.num_triangles() {
        let w = space.tri_quad_weight(t);
        let slots = &space.tri_slots[t];
        for q in 0..TRI_QUAD {
            let c = w * coeff.tri(space, t, q);
            let phi = tri_basis(q);
            // only the two vertices of edge q are nonzero at the point
            for k in [q, (q + 1) % 3] {
                for l in [q, (q + 1) % 3] {
                    vals[slots[3 * k + l]] += c * phi[k] * phi[l];
                }
            }
        }
    }
    Ok(a)
}

/// `int (M grad phi_j) . grad phi_i dx`
pub fn assemble_matrix_stiffness(space: &FeSpace, m: &MatField) -> Result<CsrMatrix> {
    m.check(true)?;
    let mut a = space.zero_operator();
    let vals = a.values_mut();
    for t in 0..space.num_triangles() {
        let g = &space.grads[t];
        let slots = &space.tri_slots[t];
        let mut msum = Mat2::zeros();
        for q in 0..TRI_QUAD {
            msum += m.tri(t, q);
        }
        let mavg = msum * space.tri_quad_weight(t);
        for k in 0..3 {
            for l in 0..3 {
                vals[slots[3 * k + l]] += (mavg * g[l]).dot(&g[k]);
            }
        }
    }
    Ok(a)
}

/// `int (M grad phi_j . gradpsi) phi_i dx`; the transpose gives the
/// adjoint-side operator.
pub fn assemble_convective(space: &FeSpace, gradpsi: &VecField, m: &MatField) -> Result<CsrMatrix> {
    gradpsi.check_finite()?;
    m.check(false)?;
    let mut a = space.zero_operator();
    let vals = a.values_mut();
    for t in 0..space.num_triangles() {
        let g = &space.grads[t];
        let slots = &space.tri_slots[t];
        let w = space.tri_quad_weight(t);
        for q in 0..TRI_QUAD {
            let b = m.tri(t, q).transpose() * gradpsi.tri(t, q) * w;
            let phi = tri_basis(q);
            for k in [q, (q + 1) % 3] {
                for l in 0..3 {
                    vals[slots[3 * k + l]] += phi[k] * g[l].dot(&b);
                }
            }
        }
    }
    Ok(a)
}

/// `int_{dOmega} w data phi_i dgamma`
pub fn assemble_boundary_load(space: &FeSpace, w: &Field, data: &Field) -> Result<Vec<f64>> {
    w.check_finite("boundary weight")?;
    data.check_finite("boundary data")?;
    let mut out = vec![0.0; space.dof_count()];
    let s = edge_quad_abscissae();
    for (e, be) in space.mesh.boundary_edges.iter().enumerate() {
        let half = 0.5 * space.edge_len[e];
        for (q, sq) in s.iter().enumerate() {
            let c = half * w.edge(space, e, q) * data.edge(space, e, q);
            out[be.a] += c * (1.0 - sq);
            out[be.b] += c * sq;
        }
    }
    Ok(out)
}

/// `int_{dOmega} coeff phi_i phi_j dgamma`
pub fn assemble_boundary_mass(space: &FeSpace, coeff: &Field) -> Result<CsrMatrix> {
    coeff.check_finite("boundary mass coefficient")?;
    let mut a = space.zero_operator();
    let vals = a.values_mut();
    let s = edge_quad_abscissae();
    for e in 0..space.num_edges() {
        let half = 0.5 * space.edge_len[e];
        let slots = &space.edge_slots[e];
        for (q, sq) in s.iter().enumerate() {
            let c = half * coeff.edge(space, e, q);
            let phi = [1.0 - sq, *sq];
            vals[slots[0]] += c * phi[0] * phi[0];
            vals[slots[1]] += c * phi[0] * phi[1];
            vals[slots[2]] += c * phi[1] * phi[0];
            vals[slots[3]] += c * phi[1] * phi[1];
        }
    }
    Ok(a)
}

/// `int f phi_i dx`
pub fn assemble_volume_load(space: &FeSpace, f: &Field) -> Result<Vec<f64>> {
    f.check_finite("volume load")?;
    let mut out = vec![0.0; space.dof_count()];
    for (t, tri) in space.mesh.triangles.iter().enumerate() {
        let w = space.tri_quad_weight(t);
        for q in 0..TRI_QUAD {
            let c = 0.5 * w * f.tri(space, t, q);
            out[tri[q]] += c;
            out[tri[(q + 1) % 3]] += c;
        }
    }
    Ok(out)
}

/// `int f dx` by the triangle rule.
pub fn integrate(space: &FeSpace, f: &Field) -> f64 {
    let mut acc = 0.0;
    for t in 0..space.num_triangles() {
        let w = space.tri_quad_weight(t);
        for q in 0..TRI_QUAD {
            acc += w * f.tri(space, t, q);
        }
    }
    acc
}

/// `int_{dOmega} f dgamma` by the edge rule.
pub fn integrate_boundary(space: &FeSpace, f: &Field) -> f64 {
    let mut acc = 0.0;
    for e in 0..space.num_edges() {
        let half = 0.5 * space.edge_len[e];
        for q in 0..EDGE_QUAD {
            acc += half * f.edge(space, e, q);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_structured_mesh, MeshShape};
    use approx::assert_abs_diff_eq;

    fn square(n: usize) -> FeSpace {
        FeSpace::new(build_structured_mesh(MeshShape::UnitSquare, n).unwrap())
    }

    #[test]
    fn mass_partition_of_unity_and_linearity() {
        let s = square(3);
        let m1 = assemble_weighted_mass(&s, &Field::Const(1.0)).unwrap();
        let total: f64 = m1.row_sums().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        let m0 = assemble_weighted_mass(&s, &Field::Const(0.0)).unwrap();
        assert_eq!(m0.max_abs(), 0.0);
        let m2 = assemble_weighted_mass(&s, &Field::Const(2.0)).unwrap();
        for (a, b) in m2.values().iter().zip(m1.values()) {
            assert_eq!(*a, 2.0 * b);
        }
        assert!(m1.symmetry_error() < 1e-14);
    }

    #[test]
    fn mass_is_exact_for_p1_products() {
        let s = square(4);
        let m = assemble_weighted_mass(&s, &Field::Const(1.0)).unwrap();
        let x: Vec<f64> = s.mesh().vertices.iter().map(|p| p.x).collect();
        let y: Vec<f64> = s.mesh().vertices.iter().map(|p| p.y).collect();
        // int x y = 1/4, int x^2 = 1/3
        assert_abs_diff_eq!(m.bilinear(&x, &y), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(m.bilinear(&x, &x), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn nan_coefficient_is_rejected() {
        let s = square(2);
        let c = vec![f64::NAN; 9];
        assert!(matches!(
            assemble_weighted_mass(&s, &Field::Nodal(&c)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn stiffness_kernel_and_patch_test() {
        let s = square(4);
        let k = assemble_matrix_stiffness(&s, &MatField::Identity).unwrap();
        let ones = vec![1.0; s.dof_count()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-13));
        let aff: Vec<f64> = s.mesh().vertices.iter().map(|p| 0.3 + 2.0 * p.x - p.y).collect();
        let r = k.mul_vec(&aff);
        for (i, ri) in r.iter().enumerate() {
            if !s.mesh().is_boundary(i) {
                assert!(ri.abs() < 1e-13);
            }
        }
        let k2 = assemble_matrix_stiffness(&s, &MatField::Const(Mat2::identity() * 2.0)).unwrap();
        for (a, b) in k2.values().iter().zip(k.values()) {
            assert_abs_diff_eq!(*a, 2.0 * b, epsilon = 1e-15);
        }
    }

    #[test]
    fn nonsymmetric_matrix_coefficient_is_rejected() {
        let s = square(2);
        let m = Mat2::new(1.0, 0.5, 0.0, 1.0);
        assert!(matches!(
            assemble_matrix_stiffness(&s, &MatField::Const(m)),
            Err(Error::NonSymmetric { .. })
        ));
    }

    #[test]
    fn convective_column_sums_match_hat_derivative_integrals() {
        let s = square(2);
        let c = assemble_convective(&s, &VecField::Const(Vec2::new(1.0, 0.0)), &MatField::Identity).unwrap();
        // column j sums to int d_x phi_j dx, by hand on the 2x2 mesh
        let mut expect = vec![0.0; s.dof_count()];
        for t in 0..s.num_triangles() {
            let tri = s.mesh().triangles[t];
            for k in 0..3 {
                expect[tri[k]] += s.area(t) * s.hat_gradients(t)[k].x;
            }
        }
        let cs = c.col_sums();
        for j in 0..s.dof_count() {
            assert_abs_diff_eq!(cs[j], expect[j], epsilon = 1e-14);
        }
        // vertex (0, 1/2): boundary flux int phi n_x = -1/2
        let v = s.mesh().vertices.iter().position(|p| p.x == 0.0 && p.y == 0.5).unwrap();
        assert_abs_diff_eq!(cs[v], -0.5, epsilon = 1e-14);
        let zero = assemble_convective(&s, &VecField::Const(Vec2::zeros()), &MatField::Identity).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn boundary_load_and_mass() {
        let s = square(3);
        let l = assemble_boundary_load(&s, &Field::Const(1.0), &Field::Const(1.0)).unwrap();
        assert_abs_diff_eq!(l.iter().sum::<f64>(), 4.0, epsilon = 1e-14);
        for (i, li) in l.iter().enumerate() {
            if !s.mesh().is_boundary(i) {
                assert_eq!(*li, 0.0);
            }
        }
        let bm = assemble_boundary_mass(&s, &Field::Const(1.0)).unwrap();
        let rs = bm.row_sums();
        let bg = crate::geometry::compute_boundary_geometry(s.mesh()).unwrap();
        for (slot, &v) in bg.vertex.iter().enumerate() {
            assert_abs_diff_eq!(rs[v], bg.arc_weight[slot], epsilon = 1e-14);
        }
        let g: Vec<f64> = s.mesh().vertices.iter().map(|p| (3.0 * p.x).sin() + p.y).collect();
        let bmg = assemble_boundary_mass(&s, &Field::Nodal(&g)).unwrap();
        assert!(bmg.symmetry_error() < 1e-12);
    }
}
