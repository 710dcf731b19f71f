//! Method-of-mappings coefficients for `F_d = id + d h`.
//!
//! With `J = grad h` (`J_ij = d h_i / d x_j`):
//! `DF = I + d J`, `I_d = det DF`, `A_d = DF^{-T}`, `M_d = I_d A_d^T A_d`,
//! and on the boundary `w_d = I_d |A_d n|`.

use crate::discretize::{FeSpace, EDGE_QUAD, TRI_QUAD};
use crate::error::{Error, Result};
use crate::geometry::{DeformationField, Mesh};
use crate::{Mat2, Vec2};

/// Transform quantities at a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTransform {
    pub df: Mat2,
    pub det: f64,
    pub a: Mat2,
    pub m: Mat2,
}

impl PointTransform {
    pub fn from_jacobian(jac: &Mat2, d: f64) -> Self {
        let df = Mat2::identity() + jac * d;
        let det = df[(0, 0)] * df[(1, 1)] - df[(0, 1)] * df[(1, 0)];
        // DF^{-T} by the 2x2 cofactor formula
        let a = Mat2::new(df[(1, 1)], -df[(1, 0)], -df[(0, 1)], df[(0, 0)]) / det;
        let mut m = a.transpose() * a * det;
        // enforce exact symmetry; both off-diagonals agree to rounding
        let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        m[(0, 1)] = off;
        m[(1, 0)] = off;
        Self { df, det, a, m }
    }

    /// `w_d = I_d |A_d n|`.
    pub fn boundary_weight(&self, n: &Vec2) -> f64 {
        self.det * (self.a * n).norm()
    }
}

/// `I div h - J - J^T`.
pub fn m_prime(jac: &Mat2) -> Mat2 {
    Mat2::identity() * jac.trace() - jac - jac.transpose()
}

/// `(w_d)'(0) = div h - n . (J n)`.
pub fn boundary_weight_derivative(jac: &Mat2, n: &Vec2) -> f64 {
    jac.trace() - n.dot(&(jac * n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformCoefficients {
    pub d: f64,
    pub points: Vec<Vec2>,
    pub f: Vec<Vec2>,
    pub df: Vec<Mat2>,
    pub det_i: Vec<f64>,
    pub a: Vec<Mat2>,
    pub m: Vec<Mat2>,
    w: Option<Vec<f64>>,
}

impl TransformCoefficients {
    pub fn w(&self) -> Result<&[f64]> {
        self.w.as_deref().ok_or(Error::MissingNormals)
    }
}

fn check_normals(points: &[Vec2], normals: Option<&[Vec2]>) -> Result<()> {
    if let Some(n) = normals {
        if n.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} normals for {} points",
                n.len(),
                points.len()
            )));
        }
    }
    Ok(())
}

/// Pointwise transform coefficients. `w` is only available when normals
/// are supplied.
pub fn eval_transform(
    h: &DeformationField,
    mesh: &Mesh,
    d: f64,
    points: &[Vec2],
    normals: Option<&[Vec2]>,
) -> Result<TransformCoefficients> {
    check_normals(points, normals)?;
    let n = points.len();
    let mut out = TransformCoefficients {
        d,
        points: points.to_vec(),
        f: Vec::with_capacity(n),
        df: Vec::with_capacity(n),
        det_i: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        m: Vec::with_capacity(n),
        w: normals.map(|_| Vec::with_capacity(n)),
    };
    for (i, &x) in points.iter().enumerate() {
        let (hv, jac) = h.eval_at(mesh, x)?;
        let pt = PointTransform::from_jacobian(&jac, d);
        if !(pt.det > 0.0) {
            return Err(Error::DeformationTooLarge { det: pt.det, point: i });
        }
        out.f.push(x + hv * d);
        out.df.push(pt.df);
        out.det_i.push(pt.det);
        out.a.push(pt.a);
        out.m.push(pt.m);
        if let (Some(w), Some(nrm)) = (out.w.as_mut(), normals) {
            w.push(pt.boundary_weight(&nrm[i]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MPrimeField {
    pub mp: Vec<Mat2>,
}

pub fn eval_m_prime(h: &DeformationField, mesh: &Mesh, points: &[Vec2]) -> Result<MPrimeField> {
    let mp = points
        .iter()
        .map(|&x| h.eval_at(mesh, x).map(|(_, j)| m_prime(&j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MPrimeField { mp })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformDerivatives {
    /// `(I_d)'(0) = div h`
    pub d_i: Vec<f64>,
    /// `(w_d)'(0)`, present when normals were given.
    pub d_w: Option<Vec<f64>>,
    /// `(A_d^T)'(0) = -J`
    pub d_a_t: Vec<Mat2>,
}

pub fn transform_derivatives_at_zero(
    h: &DeformationField,
    mesh: &Mesh,
    points: &[Vec2],
    normals: Option<&[Vec2]>,
) -> Result<TransformDerivatives> {
    check_normals(points, normals)?;
    let mut d_i = Vec::with_capacity(points.len());
    let mut d_a_t = Vec::with_capacity(points.len());
    let mut d_w = normals.map(|_| Vec::with_capacity(points.len()));
    for (i, &x) in points.iter().enumerate() {
        let (_, jac) = h.eval_at(mesh, x)?;
        d_i.push(jac.trace());
        d_a_t.push(-jac);
        if let (Some(w), Some(n)) = (d_w.as_mut(), normals) {
            w.push(boundary_weight_derivative(&jac, &n[i]));
        }
    }
    Ok(TransformDerivatives { d_i, d_w, d_a_t })
}

/// Moves every vertex `x -> x + d h(x)` and carries nodal values along.
pub fn pushforward_compose(field: &[f64], h: &DeformationField, d: f64, mesh: &Mesh) -> Result<(Mesh, Vec<f64>)> {
    Ok((deform_mesh(mesh, h, d)?, field.to_vec()))
}

pub fn deform_mesh(mesh: &Mesh, h: &DeformationField, d: f64) -> Result<Mesh> {
    let moved = mesh.vertices.iter().zip(&h.values).map(|(x, v)| x + v * d).collect();
    mesh.with_vertices(moved)
}

/// Where the gradient of h comes from when building mapped coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSource {
    /// Exact Jacobian of the recipe at every quadrature point.
    Analytic,
    /// Element-wise Jacobian of the nodal P1 interpolant. The mapped forms
    /// are then identical to assembling on the moved mesh.
    #[default]
    Element,
}

/// Transform coefficients laid out on the quadrature points of a space:
/// `det` and `m` at triangle points, `w` at edge points, and the moved
/// vertex positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMap {
    pub d: f64,
    pub det: Vec<f64>,
    pub m: Vec<Mat2>,
    pub w: Vec<f64>,
    pub positions: Vec<Vec2>,
}

impl DomainMap {
    pub fn identity(space: &FeSpace) -> Self {
        let nq = TRI_QUAD * space.num_triangles();
        Self {
            d: 0.0,
            det: vec![1.0; nq],
            m: vec![Mat2::identity(); nq],
            w: vec![1.0; EDGE_QUAD * space.num_edges()],
            positions: space.mesh().vertices.clone(),
        }
    }

    pub fn new(space: &FeSpace, h: &DeformationField, d: f64, source: GradientSource) -> Result<Self> {
        if source == GradientSource::Element && h.values.iter().all(|v| *v == Vec2::zeros()) {
            return Ok(Self {
                d,
                ..Self::identity(space)
            });
        }
        let mesh = space.mesh();
        let nt = space.num_triangles();
        let mut det = Vec::with_capacity(TRI_QUAD * nt);
        let mut m = Vec::with_capacity(TRI_QUAD * nt);
        let mut w = Vec::with_capacity(EDGE_QUAD * space.num_edges());
        match source {
            GradientSource::Element => {
                let jac = space.jacobians(&h.values);
                let pts: Vec<PointTransform> = jac.iter().map(|j| PointTransform::from_jacobian(j, d)).collect();
                for (t, pt) in pts.iter().enumerate() {
                    if !(pt.det > 0.0) {
                        return Err(Error::DeformationTooLarge {
                            det: pt.det,
                            point: TRI_QUAD * t,
                        });
                    }
                    for _ in 0..TRI_QUAD {
                        det.push(pt.det);
                        m.push(pt.m);
                    }
                }
                for (e, be) in mesh.boundary_edges.iter().enumerate() {
                    let wv = pts[be.triangle].boundary_weight(&space.edge_normal(e));
                    w.extend([wv; EDGE_QUAD]);
                }
            }
            GradientSource::Analytic => {
                let no_recipe = || Error::InvalidInput("analytic gradient needs an analytic field".into());
                for (i, x) in space.tri_quad_points().into_iter().enumerate() {
                    let (_, jac) = h.recipe.eval(x).ok_or_else(no_recipe)?;
                    let pt = PointTransform::from_jacobian(&jac, d);
                    if !(pt.det > 0.0) {
                        return Err(Error::DeformationTooLarge { det: pt.det, point: i });
                    }
                    det.push(pt.det);
                    m.push(pt.m);
                }
                let normals = space.edge_quad_normals();
                for (x, n) in space.edge_quad_points().into_iter().zip(&normals) {
                    let (_, jac) = h.recipe.eval(x).ok_or_else(no_recipe)?;
                    w.push(PointTransform::from_jacobian(&jac, d).boundary_weight(n));
                }
            }
        }
        let positions = mesh.vertices.iter().zip(&h.values).map(|(x, v)| x + v * d).collect();
        Ok(Self {
            d,
            det,
            m,
            w,
            positions,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.d == 0.0
    }
}
