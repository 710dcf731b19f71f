use serde::{Deserialize, Serialize};

use crate::adjoint::AdjointSolution;
use crate::discretize::FeSpace;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryGeometry, DeformationField, Mesh};
use crate::state::{BoundaryExcitation, ModelParams, StateSolution};
use crate::Vec2;

/// How normal derivatives of the P1 fields are obtained at boundary vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalDerivativeRule {
    /// Read them off the boundary conditions: `d_n psi = g` from the state
    /// and `c^2 d_n p - b d_n p_t = -2 sigma g p_t` from the adjoint. The
    /// profile gradient is analytic.
    NaturalBc,
    /// Area-weighted average of the adjacent element gradients, dotted
    /// with the vertex normal.
    #[default]
    OneSided,
}

/// Time-integrated boundary density, indexed by boundary slot. Corner
/// slots carry zero and are listed in `excluded`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeGradient {
    pub density: Vec<f64>,
    pub excluded: Vec<usize>,
}

impl ShapeGradient {
    /// Density spread to a vertex array (zero in the interior), for export.
    pub fn nodal(&self, mesh: &Mesh) -> Vec<f64> {
        let mut out = vec![0.0; mesh.num_vertices()];
        for (s, &v) in mesh.boundary_vertices.iter().enumerate() {
            out[v] = self.density[s];
        }
        out
    }
}

/// Rows `d_n u(slot) = sum_j coef_j u_j` from adjacent element gradients.
fn one_sided_rows(mesh: &Mesh, bg: &BoundaryGeometry) -> Vec<Vec<(usize, f64)>> {
    let vt = mesh.vertex_triangles();
    (0..bg.len())
        .map(|s| {
            let v = bg.vertex[s];
            let n = bg.outward_normal[s];
            let total: f64 = vt[v].iter().map(|&t| mesh.triangle_area(t)).sum();
            let mut row: Vec<(usize, f64)> = Vec::new();
            for &t in &vt[v] {
                let w = mesh.triangle_area(t) / total;
                for (k, g) in mesh.hat_gradients(t).iter().enumerate() {
                    row.push((mesh.triangles[t][k], w * g.dot(&n)));
                }
            }
            row
        })
        .collect()
}

fn apply(row: &[(usize, f64)], u: &[f64]) -> f64 {
    row.iter().map(|&(j, c)| c * u[j]).sum()
}

/// Adjoint normal derivative from `c^2 q - b q_t = -2 sigma g p_t`,
/// `q(T) = 0`, integrated backwards by the trapezoid rule. Indexed
/// `[step][slot]`.
#[allow(clippy::needless_range_loop)]
fn adjoint_normal_derivative(
    params: &ModelParams,
    excitation: &BoundaryExcitation,
    adj: &AdjointSolution,
    bg: &BoundaryGeometry,
    profile: &[f64],
) -> Vec<Vec<f64>> {
    let steps = adj.grid.steps;
    let nb = bg.len();
    let mut q = vec![vec![0.0; nb]; steps + 1];
    if params.sigma == 0.0 {
        return q;
    }
    let dt = adj.grid.dt();
    let (c2, b) = (params.c * params.c, params.b);
    let forcing = |n: usize, s: usize| {
        let g = profile[s] * excitation.signal.value(adj.grid.time(n));
        2.0 * params.sigma * g * adj.dp[n][bg.vertex[s]]
    };
    let (lhs, rhs) = (1.0 + 0.5 * dt * c2 / b, 1.0 - 0.5 * dt * c2 / b);
    for n in (0..steps).rev() {
        for s in 0..nb {
            let r = forcing(n, s) + forcing(n + 1, s);
            q[n][s] = (rhs * q[n + 1][s] - 0.5 * dt / b * r) / lhs;
        }
    }
    q
}

/// Boundary density of the shape derivative at every boundary vertex:
///
/// `int_0^T d_n((c^2 g + b g_t) p) + (c^2 g + b g_t) p kappa - a psi_tt p
///  - c^2 grad p . grad psi - b grad p . grad psi_t + 2 sigma p grad psi . grad psi_t dt`
///
/// with `a = 1 - 2k psi_t`. Gradients are split into normal and tangential
/// parts; tangential parts are differenced along the boundary.
pub fn shape_gradient_density(
    space: &FeSpace,
    state: &StateSolution,
    adj: &AdjointSolution,
    excitation: &BoundaryExcitation,
    params: &ModelParams,
    bg: &BoundaryGeometry,
    rule: NormalDerivativeRule,
) -> Result<ShapeGradient> {
    if state.grid != adj.grid {
        return Err(Error::InvalidInput("state and adjoint grids differ".into()));
    }
    let mesh = space.mesh();
    let nb = bg.len();
    let (c2, b, k, sigma) = (params.c * params.c, params.b, params.k, params.sigma);
    let points: Vec<Vec2> = bg.vertex.iter().map(|&v| mesh.vertices[v]).collect();
    let profile: Vec<f64> = points.iter().map(|&x| excitation.profile.value(x)).collect();
    let profile_dn: Vec<f64> = points
        .iter()
        .zip(&bg.outward_normal)
        .map(|(&x, n)| excitation.profile.gradient(x).dot(n))
        .collect();
    let rows = match rule {
        NormalDerivativeRule::OneSided => Some(one_sided_rows(mesh, bg)),
        NormalDerivativeRule::NaturalBc => None,
    };
    let q = match rule {
        NormalDerivativeRule::NaturalBc => Some(adjoint_normal_derivative(params, excitation, adj, bg, &profile)),
        NormalDerivativeRule::OneSided => None,
    };

    let weights = state.grid.trapezoid_weights();
    let mut density = vec![0.0; nb];
    for (n, w) in weights.iter().enumerate() {
        let [sv, dsv, _] = excitation.signal.eval(state.grid.time(n));
        let gamma = c2 * sv + b * dsv;
        let (psi, dpsi, ddpsi, p) = (&state.psi[n], &state.dpsi[n], &state.ddpsi[n], &adj.p[n]);
        for s in 0..nb {
            if bg.corner[s] {
                continue;
            }
            let v = bg.vertex[s];
            let (dn_psi, dn_dpsi, dn_p) = match (&rows, &q) {
                (Some(r), _) => (apply(&r[s], psi), apply(&r[s], dpsi), apply(&r[s], p)),
                (None, Some(q)) => (profile[s] * sv, profile[s] * dsv, q[n][s]),
                _ => unreachable!(),
            };
            let dt_psi = bg.tangential_derivative(mesh, psi, s);
            let dt_dpsi = bg.tangential_derivative(mesh, dpsi, s);
            let dt_p = bg.tangential_derivative(mesh, p, s);
            let pv = p[v];
            let a = 1.0 - 2.0 * k * dpsi[v];
            let flux = gamma * (profile_dn[s] * pv + profile[s] * dn_p);
            let curv = gamma * profile[s] * pv * bg.curvature[s];
            let grad_p_psi = dn_p * dn_psi + dt_p * dt_psi;
            let grad_p_dpsi = dn_p * dn_dpsi + dt_p * dt_dpsi;
            let grad_psi_dpsi = dn_psi * dn_dpsi + dt_psi * dt_dpsi;
            density[s] += w
                * (flux + curv - a * ddpsi[v] * pv - c2 * grad_p_psi - b * grad_p_dpsi
                    + 2.0 * sigma * pv * grad_psi_dpsi);
        }
    }
    if density.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("shape gradient density"));
    }
    let excluded = (0..nb).filter(|&s| bg.corner[s]).collect();
    Ok(ShapeGradient { density, excluded })
}

/// `dJ(Omega) h = sum arc_weight * density * (h . n)` over non-corner
/// boundary vertices. `fixed` lists vertices where `h` must vanish (the
/// neighbourhood of the focal region).
pub fn shape_derivative(
    grad: &ShapeGradient,
    bg: &BoundaryGeometry,
    h: &DeformationField,
    fixed: &[usize],
) -> Result<f64> {
    h.check_vanishes_on(fixed)?;
    if grad.density.len() != bg.len() || h.values.is_empty() {
        return Err(Error::InvalidInput("density does not match the boundary".into()));
    }
    Ok((0..bg.len())
        .filter(|&s| !bg.corner[s])
        .map(|s| bg.arc_weight[s] * grad.density[s] * h.values[bg.vertex[s]].dot(&bg.outward_normal[s]))
        .sum())
}
