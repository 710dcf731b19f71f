use crate::discretize::FeSpace;
use crate::error::Result;
use crate::geometry::DeformationField;
use crate::transform::m_prime;
use crate::{Mat2, Vec2};

/// Value, gradient and Hessian of a smooth scalar at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

impl Jet {
    pub fn laplacian(&self) -> f64 {
        self.hess.trace()
    }
}

pub type ScalarField<'a> = &'a (dyn Fn(Vec2) -> Jet + Sync);

/// Degree-5 seven-point triangle rule: barycentric points and weights.
const TRI_RULE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059715871789770;
    const B1: f64 = 0.470142064105115;
    const W1: f64 = 0.132394152788506;
    const A2: f64 = 0.797426985353087;
    const B2: f64 = 0.101286507323456;
    const W2: f64 = 0.125939180544827;
    const C: f64 = 1.0 / 3.0;
    [
        ([C, C, C], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Three-point Gauss rule on [0, 1].
fn edge_rule() -> [(f64, f64); 3] {
    let o = 0.5 * (0.6f64).sqrt();
    [(0.5 - o, 5.0 / 18.0), (0.5, 4.0 / 9.0), (0.5 + o, 5.0 / 18.0)]
}

/// `div(a grad u)` from jets.
fn div_flux(a: &Jet, u: &Jet) -> f64 {
    a.grad.dot(&u.grad) + a.value * u.laplacian()
}

/// `|LHS - RHS|` of the integration-by-parts identity
///
/// `int a M' grad u . grad v = int div(a grad u)(h . grad v) + div(a grad v)(h . grad u)
///   - (grad u . grad v)(h . grad a)
///   - int_{dOmega} a (d_n u (h . grad v) + d_n v (h . grad u)) + int_{dOmega} a grad u . grad v (h . n)`
///
/// on the polygonal mesh domain. The identity is exact there, so the
/// residual measures quadrature error only.
pub fn boundary_identity_residual(
    space: &FeSpace,
    a: ScalarField,
    u: ScalarField,
    v: ScalarField,
    h: &DeformationField,
) -> Result<f64> {
    let mesh = space.mesh();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(t);
        let [p0, p1, p2] = tri.map(|i| mesh.vertices[i]);
        for (bary, qw) in TRI_RULE {
            let x = p0 * bary[0] + p1 * bary[1] + p2 * bary[2];
            let w = qw * area;
            let (hv, jac) = h.eval_at(mesh, x)?;
            let (aj, uj, vj) = (a(x), u(x), v(x));
            lhs += w * aj.value * (m_prime(&jac) * uj.grad).dot(&vj.grad);
            rhs += w
                * (div_flux(&aj, &uj) * hv.dot(&vj.grad) + div_flux(&aj, &vj) * hv.dot(&uj.grad)
                    - uj.grad.dot(&vj.grad) * hv.dot(&aj.grad));
        }
    }
    for (e, be) in mesh.boundary_edges.iter().enumerate() {
        let (pa, pb) = (mesh.vertices[be.a], mesh.vertices[be.b]);
        let n = space.edge_normal(e);
        let len = space.edge_length(e);
        for (s, qw) in edge_rule() {
            let x = pa * (1.0 - s) + pb * s;
            let w = qw * len;
            let (hv, _) = h.eval_at(mesh, x)?;
            let (aj, uj, vj) = (a(x), u(x), v(x));
            rhs -= w * aj.value * (uj.grad.dot(&n) * hv.dot(&vj.grad) + vj.grad.dot(&n) * hv.dot(&uj.grad));
            rhs += w * aj.value * uj.grad.dot(&vj.grad) * hv.dot(&n);
        }
    }
    Ok((lhs - rhs).abs())
}
