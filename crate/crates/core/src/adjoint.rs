//! Tracking objectives and the backward linear adjoint.
//!
//! The adjoint is solved in reversed time `q(tau) = p(T - tau)`, which turns
//! the terminal-value problem into an initial-value problem:
//!
//! `M_a q'' + (M_a' + b K - 2 sigma C^T(grad psi)) q' + c^2 K q = F`
//!
//! with `a = 1 - 2k psi_t`, `a' = 2k psi_tt` and all state quantities taken
//! at `T - tau`. The boundary term `2 sigma g p_t` of the strong form is
//! natural for this weak form and needs no separate boundary integral.

use serde::{Deserialize, Serialize};

use crate::discretize::{
    assemble_boundary_load, assemble_convective, assemble_matrix_stiffness, assemble_weighted_mass, FeSpace, Field,
    MatField, VecField,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix};
use crate::state::{
    BoundaryExcitation, ModelParams, StateSettings, StateSolution, TimeGrid, NEWMARK_BETA, NEWMARK_GAMMA,
};
use crate::transform::DomainMap;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostVariant {
    /// `1/2 int_{t0}^{t1} int (psi - psi_D)^2 chi`
    PotentialTracking,
    /// `1/2 int (psi(T) - psi_DS)^2 chi`
    FinalTime,
    /// `1/2 int_{t0}^{t1} int (psi_t - f_D)^2 chi`, `f_D = p_D / rho`
    PressureTracking,
}

/// Target data on the reference vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Constant(f64),
    /// Same nodal values at every step.
    Snapshot(Vec<f64>),
    /// One nodal vector per time step; `rate` is its time derivative, needed
    /// by the pressure objective.
    Trajectory {
        value: Vec<Vec<f64>>,
        rate: Option<Vec<Vec<f64>>>,
    },
}

impl Target {
    fn value(&self, step: usize, n: usize) -> Vec<f64> {
        match self {
            Target::Constant(c) => vec![*c; n],
            Target::Snapshot(v) => v.clone(),
            Target::Trajectory { value, .. } => value[step].clone(),
        }
    }

    /// Time derivative of the target. Trajectories without an explicit rate
    /// are differenced on the state grid.
    fn rate(&self, step: usize, steps: usize, dt: f64, n: usize) -> Vec<f64> {
        match self {
            Target::Trajectory { rate: Some(r), .. } => r[step].clone(),
            Target::Trajectory { value, rate: None } if steps > 0 => {
                let (lo, hi) = (step.saturating_sub(1), (step + 1).min(steps));
                let span = (hi - lo) as f64 * dt;
                value[lo].iter().zip(&value[hi]).map(|(x, y)| (y - x) / span).collect()
            }
            _ => vec![0.0; n],
        }
    }

    fn check(&self, n: usize, steps: usize) -> Result<()> {
        let ok = match self {
            Target::Constant(c) => c.is_finite(),
            Target::Snapshot(v) => v.len() == n && v.iter().all(|x| x.is_finite()),
            Target::Trajectory { value, rate } => {
                let good = |t: &Vec<Vec<f64>>| {
                    t.len() == steps + 1 && t.iter().all(|v| v.len() == n && v.iter().all(|x| x.is_finite()))
                };
                good(value) && rate.as_ref().is_none_or(good)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "target data has the wrong shape or is not finite".into(),
            ))
        }
    }
}

/// Disk-shaped focal region `D_S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalRegion {
    pub center: [f64; 2],
    pub radius: f64,
}

impl FocalRegion {
    pub fn contains(&self, x: Vec2) -> bool {
        (x - Vec2::new(self.center[0], self.center[1])).norm() <= self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostFunctionalSpec {
    pub variant: CostVariant,
    pub focal: FocalRegion,
    /// Nodal indicator of the focal region, values in [0, 1].
    pub chi: Vec<f64>,
    pub window: (f64, f64),
    pub target: Target,
    /// Vertices of every triangle touching the support of `chi`; admissible
    /// deformations vanish there.
    pub excluded: Vec<usize>,
}

impl CostFunctionalSpec {
    /// Builds `chi` from the vertices inside the focal disk. With
    /// `smooth = true` the indicator is averaged once over closed vertex
    /// neighbourhoods, spreading it over one element layer.
    pub fn new(
        mesh: &crate::geometry::Mesh,
        variant: CostVariant,
        focal: FocalRegion,
        window: (f64, f64),
        target: Target,
        smooth: bool,
    ) -> Result<Self> {
        let sharp: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|&x| if focal.contains(x) { 1.0 } else { 0.0 })
            .collect();
        if sharp.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidInput("focal region contains no mesh vertex".into()));
        }
        let chi = if smooth {
            mesh.vertex_neighbors()
                .iter()
                .enumerate()
                .map(|(i, nb)| (sharp[i] + nb.iter().map(|&j| sharp[j]).sum::<f64>()) / (1 + nb.len()) as f64)
                .collect()
        } else {
            sharp
        };
        if mesh.boundary_vertices.iter().any(|&b| chi[b] > 0.0) {
            return Err(Error::InvalidInput(
                "focal region must stay strictly inside the domain".into(),
            ));
        }
        let mut excluded: Vec<usize> = mesh
            .triangles
            .iter()
            .filter(|tri| tri.iter().any(|&v| chi[v] > 0.0))
            .flatten()
            .copied()
            .collect();
        excluded.sort_unstable();
        excluded.dedup();
        if excluded.iter().any(|&v| mesh.is_boundary(v)) {
            return Err(Error::InvalidInput(
                "focal region is within one element of the boundary".into(),
            ));
        }
        if !(0.0 <= window.0 && window.0 < window.1) {
            return Err(Error::InvalidWindow {
                t0: window.0,
                t1: window.1,
                t_final: f64::NAN,
            });
        }
        Ok(Self {
            variant,
            focal,
            chi,
            window,
            target,
            excluded,
        })
    }

    pub fn with_target(&self, target: Target) -> Self {
        Self { target, ..self.clone() }
    }

    fn check(&self, n: usize, grid: &TimeGrid) -> Result<Vec<f64>> {
        self.target.check(n, grid.steps)?;
        if self.chi.len() != n {
            return Err(Error::InvalidInput("focal indicator does not match the mesh".into()));
        }
        grid.window_weights(self.window.0, self.window.1)
    }

    /// Residual of the tracked quantity at one step.
    fn residual(&self, sol: &StateSolution, step: usize) -> Vec<f64> {
        let n = self.chi.len();
        let (field, target) = match self.variant {
            CostVariant::PotentialTracking | CostVariant::FinalTime => (&sol.psi[step], self.target.value(step, n)),
            CostVariant::PressureTracking => (&sol.dpsi[step], self.target.value(step, n)),
        };
        field.iter().zip(&target).map(|(a, b)| a - b).collect()
    }

    fn in_window(&self, t: f64) -> bool {
        let tol = 1e-12 * t.abs().max(1.0);
        t >= self.window.0 - tol && t <= self.window.1 + tol
    }

    /// `M_chi` (optionally weighted by a domain map's `I_d`).
    pub fn focal_mass(&self, space: &FeSpace, map: Option<&DomainMap>) -> Result<CsrMatrix> {
        let cq = space.to_tri_quad(&self.chi);
        match map {
            Some(m) => {
                let w: Vec<f64> = cq.iter().zip(&m.det).map(|(a, b)| a * b).collect();
                assemble_weighted_mass(space, &Field::Quad(&w))
            }
            None => assemble_weighted_mass(space, &Field::Quad(&cq)),
        }
    }
}

/// Objective value; time integrals by hat-function weights over the window.
pub fn evaluate_cost(
    space: &FeSpace,
    sol: &StateSolution,
    spec: &CostFunctionalSpec,
    map: Option<&DomainMap>,
) -> Result<f64> {
    let weights = spec.check(space.dof_count(), &sol.grid)?;
    let m = spec.focal_mass(space, map)?;
    match spec.variant {
        CostVariant::FinalTime => {
            let e = spec.residual(sol, sol.last_step());
            Ok(0.5 * m.bilinear(&e, &e))
        }
        _ => {
            let mut j = 0.0;
            for (step, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    let e = spec.residual(sol, step);
                    j += 0.5 * w * m.bilinear(&e, &e);
                }
            }
            Ok(j)
        }
    }
}

/// Right-hand side and terminal data of the adjoint problem. The volume
/// source is `f = chi * residual[n]` at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointData {
    pub residual: Vec<Vec<f64>>,
    pub chi: Vec<f64>,
    pub p_t: Vec<f64>,
    pub dp_t: Vec<f64>,
}

impl AdjointData {
    /// Nodal values of `f` at step `n`.
    pub fn source_at(&self, n: usize) -> Vec<f64> {
        self.residual[n].iter().zip(&self.chi).map(|(r, c)| r * c).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.residual.iter().flatten().all(|&x| x == 0.0) && self.p_t.iter().chain(&self.dp_t).all(|&x| x == 0.0)
    }

    /// `alpha * self + beta * other`
    /// `alpha self + beta other`; both must share the focal indicator.
    pub fn combine(&self, alpha: f64, other: &AdjointData, beta: f64) -> Result<AdjointData> {
        if self.chi != other.chi {
            return Err(Error::InvalidInput(
                "adjoint data with different focal indicators".into(),
            ));
        }
        let lin = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect() };
        Ok(AdjointData {
            residual: self
                .residual
                .iter()
                .zip(&other.residual)
                .map(|(a, b)| lin(a, b))
                .collect(),
            chi: self.chi.clone(),
            p_t: lin(&self.p_t, &other.p_t),
            dp_t: lin(&self.dp_t, &other.dp_t),
        })
    }
}

pub fn adjoint_data(
    space: &FeSpace,
    spec: &CostFunctionalSpec,
    sol: &StateSolution,
    params: &ModelParams,
) -> Result<AdjointData> {
    let n = space.dof_count();
    spec.check(n, &sol.grid)?;
    let steps = sol.last_step();
    let grid = sol.grid;
    let zero = vec![0.0; n];
    let mut residual = vec![zero.clone(); steps + 1];
    let mut dp_t = zero.clone();

    let terminal = |e: &[f64]| -> Result<Vec<f64>> {
        let v = &sol.dpsi[steps];
        let margin = v.iter().fold(f64::INFINITY, |m, &x| m.min(1.0 - 2.0 * params.k * x));
        if !(margin >= 0.5) {
            return Err(Error::Degeneracy { step: steps, margin });
        }
        let ma = assemble_weighted_mass(
            space,
            &Field::Quad(
                &space
                    .to_tri_quad(v)
                    .iter()
                    .map(|x| 1.0 - 2.0 * params.k * x)
                    .collect::<Vec<_>>(),
            ),
        )?;
        let mchi = spec.focal_mass(space, None)?;
        let rhs: Vec<f64> = mchi.mul_vec(e).iter().map(|x| -x).collect();
        let mut out = vec![0.0; n];
        linalg::pcg(&ma, &rhs, &mut out, &StateSettings::default().solver_options())?;
        Ok(out)
    };

    match spec.variant {
        CostVariant::PotentialTracking => {
            for (step, r) in residual.iter_mut().enumerate() {
                if spec.in_window(grid.time(step)) {
                    *r = spec.residual(sol, step);
                }
            }
        }
        CostVariant::FinalTime => {
            let e = spec.residual(sol, steps);
            dp_t = terminal(&e)?;
        }
        CostVariant::PressureTracking => {
            let dt = grid.dt();
            for (step, r) in residual.iter_mut().enumerate() {
                if !spec.in_window(grid.time(step)) {
                    continue;
                }
                let rate = spec.target.rate(step, steps, dt, n);
                *r = sol.ddpsi[step].iter().zip(&rate).map(|(a, b)| -(a - b)).collect();
            }
            if spec.in_window(grid.t_final) {
                let e = spec.residual(sol, steps);
                dp_t = terminal(&e)?;
            }
        }
    }
    Ok(AdjointData {
        residual,
        chi: spec.chi.clone(),
        p_t: zero,
        dp_t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    pub grid: TimeGrid,
    pub p: Vec<Vec<f64>>,
    pub dp: Vec<Vec<f64>>,
    pub p_t: Vec<f64>,
    pub dp_t: Vec<f64>,
}

/// Reverses the time order of a nodal trajectory.
pub fn reverse_trajectory(traj: &[Vec<f64>]) -> Vec<Vec<f64>> {
    traj.iter().rev().cloned().collect()
}

pub fn solve_adjoint(
    space: &FeSpace,
    params: &ModelParams,
    state: &StateSolution,
    data: &AdjointData,
    settings: &StateSettings,
) -> Result<AdjointSolution> {
    params.validate()?;
    let n = space.dof_count();
    let grid = state.grid;
    let steps = grid.steps;
    if data.residual.len() != steps + 1 || data.p_t.len() != n || data.dp_t.len() != n {
        return Err(Error::InvalidInput("adjoint data does not match the state grid".into()));
    }
    let opts = settings.solver_options();
    let (c2, dt) = (params.c * params.c, grid.dt());
    let (beta, gamma) = (NEWMARK_BETA, NEWMARK_GAMMA);
    let symmetric = params.sigma == 0.0;

    let stiff = assemble_matrix_stiffness(space, &MatField::Identity)?;
    let mass = assemble_weighted_mass(space, &Field::Const(1.0))?;
    let chi_mass = assemble_weighted_mass(space, &Field::Quad(&space.to_tri_quad(&data.chi)))?;

    // operators at reversed index m, i.e. state step N - m
    let operators = |m: usize| -> Result<(CsrMatrix, CsrMatrix)> {
        let s = steps - m;
        let ma = if params.k == 0.0 {
            mass.clone()
        } else {
            let a: Vec<f64> = space
                .to_tri_quad(&state.dpsi[s])
                .iter()
                .map(|x| 1.0 - 2.0 * params.k * x)
                .collect();
            assemble_weighted_mass(space, &Field::Quad(&a))?
        };
        let mut damp = stiff.clone();
        damp.scale(params.b);
        if params.k != 0.0 {
            let da: Vec<f64> = space
                .to_tri_quad(&state.ddpsi[s])
                .iter()
                .map(|x| 2.0 * params.k * x)
                .collect();
            damp.add_scaled(1.0, &assemble_weighted_mass(space, &Field::Quad(&da))?);
        }
        if params.sigma != 0.0 {
            let grad = space.gradients(&state.psi[s]);
            let c = assemble_convective(space, &VecField::Element(&grad), &MatField::Identity)?;
            damp.add_scaled(-2.0 * params.sigma, &c.transpose_same_pattern());
        }
        Ok((ma, damp))
    };
    let load = |m: usize| chi_mass.mul_vec(&data.residual[steps - m]);

    let q0 = data.p_t.clone();
    let dq0: Vec<f64> = data.dp_t.iter().map(|x| -x).collect();
    let (ma0, d0) = operators(0)?;
    let mut rhs = load(0);
    let dv = d0.mul_vec(&dq0);
    let ku = stiff.mul_vec(&q0);
    for i in 0..n {
        rhs[i] -= dv[i] + c2 * ku[i];
    }
    let mut a0 = vec![0.0; n];
    linalg::pcg(&ma0, &rhs, &mut a0, &opts)?;

    let mut q = vec![q0];
    let mut dq = vec![dq0];
    let mut acc = a0;
    for m in 1..=steps {
        let (u, v) = (&q[m - 1], &dq[m - 1]);
        let u_pred: Vec<f64> = (0..n)
            .map(|i| u[i] + dt * v[i] + dt * dt * (0.5 - beta) * acc[i])
            .collect();
        let v_pred: Vec<f64> = (0..n).map(|i| v[i] + dt * (1.0 - gamma) * acc[i]).collect();
        let (ma, damp) = operators(m)?;
        let mut system = ma;
        system.add_scaled(gamma * dt, &damp);
        system.add_scaled(beta * dt * dt * c2, &stiff);
        let f = load(m);
        let dv = damp.mul_vec(&v_pred);
        let ku = stiff.mul_vec(&u_pred);
        let rhs: Vec<f64> = (0..n).map(|i| f[i] - dv[i] - c2 * ku[i]).collect();
        linalg::solve(&system, &rhs, &mut acc, symmetric, &opts)?;
        let u_new: Vec<f64> = (0..n).map(|i| u_pred[i] + beta * dt * dt * acc[i]).collect();
        let v_new: Vec<f64> = (0..n).map(|i| v_pred[i] + gamma * dt * acc[i]).collect();
        if u_new.iter().chain(&v_new).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("adjoint solution"));
        }
        q.push(u_new);
        dq.push(v_new);
    }

    let p = reverse_trajectory(&q);
    let dp = dq.iter().rev().map(|v| v.iter().map(|x| -x).collect()).collect();
    Ok(AdjointSolution {
        grid,
        p,
        dp,
        p_t: data.p_t.clone(),
        dp_t: data.dp_t.clone(),
    })
}

/// `d J / d alpha` for the excitation `alpha g` at `alpha = 1`:
/// `int_0^T int_{dOmega} (c^2 g + b g_t) p`.
pub fn excitation_sensitivity(
    space: &FeSpace,
    params: &ModelParams,
    excitation: &BoundaryExcitation,
    adj: &AdjointSolution,
) -> Result<f64> {
    let g: Vec<f64> = space
        .mesh()
        .vertices
        .iter()
        .map(|&x| excitation.profile.value(x))
        .collect();
    let profile = assemble_boundary_load(space, &Field::Const(1.0), &Field::Nodal(&g))?;
    let w = adj.grid.trapezoid_weights();
    Ok(adj
        .p
        .iter()
        .enumerate()
        .map(|(step, p)| {
            let factor = excitation.load_factor(params.c, params.b, adj.grid.time(step));
            w[step] * factor * linalg::dot(&profile, p)
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_structured_mesh, MeshShape};
    use crate::state::{solve_state, SpatialProfile, TimeSignal};
    use approx::assert_abs_diff_eq;

    fn setup() -> (FeSpace, StateSolution, ModelParams) {
        let s = FeSpace::new(build_structured_mesh(MeshShape::Disk { radius: 1.0 }, 6).unwrap());
        let z = vec![0.0; s.dof_count()];
        let p = ModelParams::linear(1.0, 0.05, 1.0);
        let exc = BoundaryExcitation {
            profile: SpatialProfile::Gaussian {
                center: [1.0, 0.0],
                width: 0.5,
            },
            signal: TimeSignal::Burst {
                amplitude: 1.0,
                duration: 0.5,
            },
        };
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let sol = solve_state(&s, &p, &exc, &z, &z, None, &grid, &StateSettings::default()).unwrap();
        (s, sol, p)
    }

    fn focal() -> FocalRegion {
        FocalRegion {
            center: [0.0, 0.0],
            radius: 0.35,
        }
    }

    #[test]
    fn on_target_state_has_zero_cost_and_data() {
        let (s, sol, p) = setup();
        let variants = [
            (
                CostVariant::PotentialTracking,
                Target::Trajectory {
                    value: sol.psi.clone(),
                    rate: None,
                },
            ),
            (CostVariant::FinalTime, Target::Snapshot(sol.psi[40].clone())),
            (
                CostVariant::PressureTracking,
                Target::Trajectory {
                    value: sol.dpsi.clone(),
                    rate: Some(sol.ddpsi.clone()),
                },
            ),
        ];
        for (v, t) in variants {
            let spec = CostFunctionalSpec::new(s.mesh(), v, focal(), (0.0, 1.0), t, true).unwrap();
            assert_eq!(evaluate_cost(&s, &sol, &spec, None).unwrap(), 0.0);
            let data = adjoint_data(&s, &spec, &sol, &p).unwrap();
            assert!(data.is_zero());
            let adj = solve_adjoint(&s, &p, &sol, &data, &StateSettings::default()).unwrap();
            assert!(adj.p.iter().flatten().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn constant_offset_costs() {
        let (s, sol, p) = setup();
        let spec = CostFunctionalSpec::new(
            s.mesh(),
            CostVariant::FinalTime,
            focal(),
            (0.0, 1.0),
            Target::Snapshot(sol.psi[40].iter().map(|x| x - 1.0).collect()),
            false,
        )
        .unwrap();
        let area = crate::discretize::integrate(&s, &Field::Nodal(&spec.chi));
        assert_abs_diff_eq!(
            evaluate_cost(&s, &sol, &spec, None).unwrap(),
            0.5 * area,
            epsilon = 1e-12
        );
        let data = adjoint_data(&s, &spec, &sol, &p).unwrap();
        for (a, b) in data.dp_t.iter().zip(&spec.chi) {
            assert_abs_diff_eq!(*a, -b, epsilon = 1e-10);
        }

        let z = vec![0.0; s.dof_count()];
        let mut zero = sol.clone();
        zero.psi = vec![z; 41];
        let spec = CostFunctionalSpec::new(
            s.mesh(),
            CostVariant::PotentialTracking,
            focal(),
            (0.0, 1.0),
            Target::Constant(1.0),
            false,
        )
        .unwrap();
        assert_abs_diff_eq!(
            evaluate_cost(&s, &zero, &spec, None).unwrap(),
            0.5 * area,
            epsilon = 1e-12
        );
    }

    #[test]
    fn focal_region_on_boundary_is_rejected() {
        let (s, _, _) = setup();
        let f = FocalRegion {
            center: [0.95, 0.0],
            radius: 0.2,
        };
        assert!(CostFunctionalSpec::new(
            s.mesh(),
            CostVariant::FinalTime,
            f,
            (0.0, 1.0),
            Target::Constant(0.0),
            true
        )
        .is_err());
    }

    #[test]
    fn terminal_data_is_exact() {
        let (s, sol, p) = setup();
        let spec = CostFunctionalSpec::new(
            s.mesh(),
            CostVariant::FinalTime,
            focal(),
            (0.0, 1.0),
            Target::Constant(0.3),
            true,
        )
        .unwrap();
        let data = adjoint_data(&s, &spec, &sol, &p).unwrap();
        let adj = solve_adjoint(&s, &p, &sol, &data, &StateSettings::default()).unwrap();
        assert_eq!(adj.p[40], data.p_t);
        assert_eq!(adj.dp[40], data.dp_t);
    }

    fn amplitude_gradient_error(p: ModelParams, variant: CostVariant, steps: usize) -> f64 {
        let s = FeSpace::new(build_structured_mesh(MeshShape::Disk { radius: 1.0 }, 6).unwrap());
        let z = vec![0.0; s.dof_count()];
        let exc = BoundaryExcitation {
            profile: SpatialProfile::Gaussian {
                center: [1.0, 0.0],
                width: 0.6,
            },
            signal: TimeSignal::Burst {
                amplitude: 0.05,
                duration: 0.6,
            },
        };
        let grid = TimeGrid::new(1.2, steps).unwrap();
        let set = StateSettings::default();
        let target = match variant {
            CostVariant::FinalTime => Target::Constant(0.01),
            _ => Target::Constant(0.0),
        };
        let spec = CostFunctionalSpec::new(s.mesh(), variant, focal(), (0.2, 1.2), target, true).unwrap();
        let cost = |alpha: f64| {
            let sol = solve_state(&s, &p, &exc.scaled(alpha), &z, &z, None, &grid, &set).unwrap();
            evaluate_cost(&s, &sol, &spec, None).unwrap()
        };
        let sol = solve_state(&s, &p, &exc, &z, &z, None, &grid, &set).unwrap();
        let data = adjoint_data(&s, &spec, &sol, &p).unwrap();
        let adj = solve_adjoint(&s, &p, &sol, &data, &set).unwrap();
        let dj = excitation_sensitivity(&s, &p, &exc, &adj).unwrap();
        let eps = 1e-3;
        let fd = (cost(1.0 + eps) - cost(1.0 - eps)) / (2.0 * eps);
        ((dj - fd) / fd).abs()
    }

    #[test]
    fn amplitude_gradient_matches_finite_differences() {
        for p in [
            ModelParams::linear(1.0, 0.05, 1.0),
            ModelParams::westervelt(1.0, 0.05, 3.0, 1.0),
            ModelParams::kuznetsov(1.0, 0.05, 3.0, 1.0),
        ] {
            for v in [
                CostVariant::PotentialTracking,
                CostVariant::FinalTime,
                CostVariant::PressureTracking,
            ] {
                let err = amplitude_gradient_error(p, v, 120);
                assert!(err < 1e-3, "{v:?} {p:?}: {err:e}");
            }
        }
        // second order in time
        let ratio = amplitude_gradient_error(ModelParams::linear(1.0, 0.05, 1.0), CostVariant::PotentialTracking, 60)
            / amplitude_gradient_error(ModelParams::linear(1.0, 0.05, 1.0), CostVariant::PotentialTracking, 120);
        assert!(ratio > 3.0, "{ratio}");
    }
}
