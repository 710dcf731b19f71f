use crate::adjoint::AdjointSolution;
use crate::discretize::{assemble_boundary_load, FeSpace, Field, TRI_QUAD};
use crate::error::{Error, Result};
use crate::geometry::DeformationField;
use crate::state::{BoundaryExcitation, ModelParams, StateSolution};
use crate::transform::{boundary_weight_derivative, m_prime};

/// Shape derivative in volume form, before integration by parts:
///
/// `-int int div h a psi_tt p + c^2 M' grad p . grad psi + b M' grad p . grad psi_t
///  - 2 sigma (M' grad psi_t . grad psi) p`
/// `+ int int_{dOmega} (w' G + grad G . h) (c^2 s + b s_t) p`
///
/// with `M' = div h I - J - J^T` and `w' = div h - n . J n`. The Jacobian of
/// `h` is taken element-wise from its nodal values, which makes this the
/// derivative of the mapped discrete forms.
pub fn shape_derivative_volume(
    space: &FeSpace,
    state: &StateSolution,
    adj: &AdjointSolution,
    excitation: &BoundaryExcitation,
    params: &ModelParams,
    h: &DeformationField,
) -> Result<f64> {
    if state.grid != adj.grid {
        return Err(Error::InvalidInput("state and adjoint grids differ".into()));
    }
    let mesh = space.mesh();
    let (c2, b, k, sigma) = (params.c * params.c, params.b, params.k, params.sigma);
    let jac = space.jacobians(&h.values);
    let div: Vec<f64> = jac.iter().map(|j| j.trace()).collect();
    let mp: Vec<_> = jac.iter().map(m_prime).collect();

    let dw: Vec<f64> = mesh
        .boundary_edges
        .iter()
        .enumerate()
        .map(|(e, be)| boundary_weight_derivative(&jac[be.triangle], &space.edge_normal(e)))
        .collect();
    let g: Vec<f64> = mesh.vertices.iter().map(|&x| excitation.profile.value(x)).collect();
    let dg: Vec<f64> = mesh
        .vertices
        .iter()
        .zip(&h.values)
        .map(|(&x, hv)| excitation.profile.gradient(x).dot(hv))
        .collect();
    let mut boundary = assemble_boundary_load(space, &Field::Element(&dw), &Field::Nodal(&g))?;
    let extra = assemble_boundary_load(space, &Field::Const(1.0), &Field::Nodal(&dg))?;
    for (a, e) in boundary.iter_mut().zip(extra) {
        *a += e;
    }

    let weights = state.grid.trapezoid_weights();
    let mut total = 0.0;
    for (n, w) in weights.iter().enumerate() {
        let (dpsi, p) = (&state.dpsi[n], &adj.p[n]);
        let a_q: Vec<f64> = space.to_tri_quad(dpsi).iter().map(|v| 1.0 - 2.0 * k * v).collect();
        let acc_q = space.to_tri_quad(&state.ddpsi[n]);
        let p_q = space.to_tri_quad(p);
        let gp = space.gradients(p);
        let gpsi = space.gradients(&state.psi[n]);
        let gdpsi = space.gradients(dpsi);
        let mut volume = 0.0;
        for t in 0..space.num_triangles() {
            let qw = space.tri_quad_weight(t);
            let mut mass = 0.0;
            let mut pbar = 0.0;
            for q in 0..TRI_QUAD {
                let i = TRI_QUAD * t + q;
                mass += qw * a_q[i] * acc_q[i] * p_q[i];
                pbar += qw * p_q[i];
            }
            let m = &mp[t];
            let area = space.area(t);
            volume += div[t] * mass + area * (c2 * (m * gp[t]).dot(&gpsi[t]) + b * (m * gp[t]).dot(&gdpsi[t]))
                - 2.0 * sigma * (m * gdpsi[t]).dot(&gpsi[t]) * pbar;
        }
        let factor = excitation.load_factor(params.c, params.b, state.grid.time(n));
        let bterm: f64 = boundary.iter().zip(p).map(|(x, y)| x * y).sum();
        total += w * (factor * bterm - volume);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("volume shape derivative"));
    }
    Ok(total)
}
