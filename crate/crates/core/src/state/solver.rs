use serde::{Deserialize, Serialize};

use super::excitation::BoundaryExcitation;
use super::params::ModelParams;
use crate::discretize::{
    assemble_boundary_load, assemble_convective, assemble_matrix_stiffness, assemble_volume_load,
    assemble_weighted_mass, integrate, integrate_boundary, FeSpace, Field, MatField, VecField,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix, SolverOptions};
use crate::transform::DomainMap;
use crate::Vec2;

pub const NEWMARK_BETA: f64 = 0.25;
pub const NEWMARK_GAMMA: f64 = 0.5;

/// Uniform grid `t_n = n T / N`, `n = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) || steps == 0 {
            return Err(Error::InvalidInput(format!(
                "time grid needs T > 0 and N >= 1 (got T={t_final}, N={steps})"
            )));
        }
        Ok(Self { t_final, steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        // exact at the last node
        if n == self.steps {
            self.t_final
        } else {
            n as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.time(n)).collect()
    }

    /// Composite trapezoid weights on [0, T].
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.steps + 1];
        w[0] = 0.5 * dt;
        w[self.steps] = 0.5 * dt;
        w
    }

    /// Integrals of the piecewise-linear hat functions over `[t0, t1]`.
    /// Equal to trapezoid weights when the window ends fall on grid nodes.
    pub fn window_weights(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        if !(0.0 <= t0 && t0 < t1 && t1 <= self.t_final * (1.0 + 1e-12)) {
            return Err(Error::InvalidWindow {
                t0,
                t1,
                t_final: self.t_final,
            });
        }
        let mut w = vec![0.0; self.steps + 1];
        // integral over [a, b] of the linear function that is 1 at `peak`
        // and 0 at `foot`
        let part = |foot: f64, peak: f64, a: f64, b: f64| -> f64 {
            if b <= a {
                return 0.0;
            }
            let f = |t: f64| (t - foot) / (peak - foot);
            0.5 * (b - a) * (f(a) + f(b))
        };
        for (n, wn) in w.iter_mut().enumerate() {
            let tn = self.time(n);
            if n > 0 {
                let tl = self.time(n - 1);
                *wn += part(tl, tn, t0.max(tl), t1.min(tn));
            }
            if n < self.steps {
                let tr = self.time(n + 1);
                *wn += part(tr, tn, t0.max(tn), t1.min(tr));
            }
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSettings {
    /// Picard stops when the L2 norm of the psi_t increment falls below
    /// `picard_tol * max(1, ||psi_t||)`.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    /// Smallest admissible value of `1 - 2k psi_t`.
    pub degeneracy_threshold: f64,
    pub blowup_factor: f64,
}

impl Default for StateSettings {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            picard_max_iter: 25,
            linear_tol: 1e-13,
            linear_max_iter: 10_000,
            degeneracy_threshold: 0.5,
            blowup_factor: 1e6,
        }
    }
}

impl StateSettings {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            rel_tol: self.linear_tol,
            abs_tol: 1e-300,
            max_iter: self.linear_max_iter,
        }
    }
}

/// Volumetric right-hand side, only used for manufactured-solution checks.
pub trait VolumeSource: Sync {
    fn value(&self, x: Vec2, t: f64) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSolution {
    pub grid: TimeGrid,
    pub psi: Vec<Vec<f64>>,
    pub dpsi: Vec<Vec<f64>>,
    pub ddpsi: Vec<Vec<f64>>,
    pub degeneracy_margin: f64,
    pub energy: Vec<f64>,
    pub picard_iterations: Vec<usize>,
}

impl StateSolution {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn last_step(&self) -> usize {
        self.grid.steps
    }
}

/// `rho psi_t` at every node and step.
pub fn acoustic_pressure(sol: &StateSolution, params: &ModelParams) -> Vec<Vec<f64>> {
    sol.dpsi
        .iter()
        .map(|v| v.iter().map(|x| params.rho * x).collect())
        .collect()
}

/// `1/2 ||psi_t||^2 + c^2/2 ||grad psi||^2` from mass/stiffness forms.
pub fn snapshot_energy(mass: &CsrMatrix, stiff: &CsrMatrix, c: f64, u: &[f64], v: &[f64]) -> f64 {
    0.5 * mass.bilinear(v, v) + 0.5 * c * c * stiff.bilinear(u, u)
}

/// Energy per step on the unmapped domain.
pub fn energy_trace(space: &FeSpace, sol: &StateSolution, params: &ModelParams) -> Result<Vec<f64>> {
    let mass = assemble_weighted_mass(space, &Field::Const(1.0))?;
    let stiff = assemble_matrix_stiffness(space, &MatField::Identity)?;
    Ok(sol
        .psi
        .iter()
        .zip(&sol.dpsi)
        .map(|(u, v)| snapshot_energy(&mass, &stiff, params.c, u, v))
        .collect())
}

/// Mapped operators that do not change in time.
struct StaticOperators {
    stiff: CsrMatrix,
    mass: CsrMatrix,
    boundary_profile: Vec<f64>,
}

fn static_operators(space: &FeSpace, excitation: &BoundaryExcitation, map: &DomainMap) -> Result<StaticOperators> {
    let stiff = assemble_matrix_stiffness(space, &MatField::Quad(&map.m))?;
    let mass = assemble_weighted_mass(space, &Field::Quad(&map.det))?;
    let g: Vec<f64> = map.positions.iter().map(|&x| excitation.profile.value(x)).collect();
    let boundary_profile = assemble_boundary_load(space, &Field::Quad(&map.w), &Field::Nodal(&g))?;
    Ok(StaticOperators {
        stiff,
        mass,
        boundary_profile,
    })
}

fn min_margin(k: f64, v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |m, &x| m.min(1.0 - 2.0 * k * x))
}

fn coefficient_mass(space: &FeSpace, det: &[f64], k: f64, v: &[f64]) -> Result<CsrMatrix> {
    let vq = space.to_tri_quad(v);
    let coef: Vec<f64> = det.iter().zip(&vq).map(|(d, x)| d * (1.0 - 2.0 * k * x)).collect();
    assemble_weighted_mass(space, &Field::Quad(&coef))
}

/// `b K - 2 sigma C(grad u)`
fn damping(
    space: &FeSpace,
    params: &ModelParams,
    ops: &StaticOperators,
    map: &DomainMap,
    u: &[f64],
) -> Result<CsrMatrix> {
    let mut d = ops.stiff.clone();
    d.scale(params.b);
    if params.sigma != 0.0 {
        let grad = space.gradients(u);
        let conv = assemble_convective(space, &VecField::Element(&grad), &MatField::Quad(&map.m))?;
        d.add_scaled(-2.0 * params.sigma, &conv);
    }
    Ok(d)
}

/// Excitation scale used by the blow-up guard when the initial energy is 0.
fn excitation_energy_scale(
    space: &FeSpace,
    params: &ModelParams,
    excitation: &BoundaryExcitation,
    map: &DomainMap,
    grid: &TimeGrid,
) -> f64 {
    let g: Vec<f64> = map
        .positions
        .iter()
        .map(|&x| excitation.profile.value(x).abs())
        .collect();
    let gq = space.to_edge_quad(&g);
    let wg: Vec<f64> = gq.iter().zip(&map.w).map(|(a, b)| a * b).collect();
    let spatial = integrate_boundary(space, &Field::Quad(&wg));
    let temporal: f64 = grid
        .trapezoid_weights()
        .iter()
        .enumerate()
        .map(|(n, w)| w * excitation.load_factor(params.c, params.b, grid.time(n)).abs())
        .sum();
    let vol = integrate(space, &Field::Quad(&map.det));
    0.5 * (spatial * temporal).powi(2) / vol
}

#[allow(clippy::too_many_arguments)]
pub fn solve_state(
    space: &FeSpace,
    params: &ModelParams,
    excitation: &BoundaryExcitation,
    psi0: &[f64],
    psi1: &[f64],
    map: Option<&DomainMap>,
    grid: &TimeGrid,
    settings: &StateSettings,
) -> Result<StateSolution> {
    solve_state_with_source(space, params, excitation, psi0, psi1, map, grid, settings, None)
}

#[allow(clippy::too_many_arguments)]
pub fn solve_state_with_source(
    space: &FeSpace,
    params: &ModelParams,
    excitation: &BoundaryExcitation,
    psi0: &[f64],
    psi1: &[f64],
    map: Option<&DomainMap>,
    grid: &TimeGrid,
    settings: &StateSettings,
    source: Option<&dyn VolumeSource>,
) -> Result<StateSolution> {
    params.validate()?;
    let n = space.dof_count();
    if psi0.len() != n || psi1.len() != n {
        return Err(Error::InvalidInput(
            "initial data length does not match the mesh".into(),
        ));
    }
    if psi0.iter().chain(psi1).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("initial data"));
    }
    if psi0.iter().chain(psi1).all(|&x| x == 0.0) {
        excitation.check_rest_compatible()?;
    }

    let identity;
    let map = match map {
        Some(m) => m,
        None => {
            identity = DomainMap::identity(space);
            &identity
        }
    };
    let ops = static_operators(space, excitation, map)?;
    let opts = settings.solver_options();
    let (c2, dt) = (params.c * params.c, grid.dt());
    let (beta, gamma) = (NEWMARK_BETA, NEWMARK_GAMMA);
    let symmetric = params.sigma == 0.0;
    let linear = params.is_linear();

    let quad_points = source.map(|_| space.tri_quad_points());
    let load = |t: f64| -> Result<Vec<f64>> {
        let factor = excitation.load_factor(params.c, params.b, t);
        let mut f: Vec<f64> = ops.boundary_profile.iter().map(|g| factor * g).collect();
        if let (Some(src), Some(pts)) = (source, quad_points.as_ref()) {
            let vals: Vec<f64> = pts.iter().zip(&map.det).map(|(&x, d)| d * src.value(x, t)).collect();
            let vl = assemble_volume_load(space, &Field::Quad(&vals))?;
            for (a, b) in f.iter_mut().zip(vl) {
                *a += b;
            }
        }
        Ok(f)
    };

    // initial acceleration
    let mut margin = min_margin(params.k, psi1);
    if margin < settings.degeneracy_threshold {
        return Err(Error::Degeneracy { step: 0, margin });
    }
    let m0 = if params.k == 0.0 {
        ops.mass.clone()
    } else {
        coefficient_mass(space, &map.det, params.k, psi1)?
    };
    let d0 = damping(space, params, &ops, map, psi0)?;
    let mut rhs = load(0.0)?;
    let dv = d0.mul_vec(psi1);
    let ku = ops.stiff.mul_vec(psi0);
    for i in 0..n {
        rhs[i] -= dv[i] + c2 * ku[i];
    }
    let mut a0 = vec![0.0; n];
    linalg::pcg(&m0, &rhs, &mut a0, &opts)?;

    let e0 = snapshot_energy(&ops.mass, &ops.stiff, params.c, psi0, psi1);
    let e_limit = settings.blowup_factor * e0.max(excitation_energy_scale(space, params, excitation, map, grid));

    let mut psi = Vec::with_capacity(grid.steps + 1);
    let mut dpsi = Vec::with_capacity(grid.steps + 1);
    let mut ddpsi = Vec::with_capacity(grid.steps + 1);
    let mut energy = Vec::with_capacity(grid.steps + 1);
    let mut picard = Vec::with_capacity(grid.steps + 1);
    psi.push(psi0.to_vec());
    dpsi.push(psi1.to_vec());
    ddpsi.push(a0);
    energy.push(e0);
    picard.push(0);

    // constant system for the linear model
    let linear_system = if linear {
        let mut sys = ops.mass.clone();
        sys.add_scaled(gamma * dt * params.b, &ops.stiff);
        sys.add_scaled(beta * dt * dt * c2, &ops.stiff);
        Some(sys)
    } else {
        None
    };
    let static_damping = if params.sigma == 0.0 {
        Some(damping(space, params, &ops, map, psi0)?)
    } else {
        None
    };

    for step in 1..=grid.steps {
        let t = grid.time(step);
        let (u, v, a) = (&psi[step - 1], &dpsi[step - 1], &ddpsi[step - 1]);
        let u_pred: Vec<f64> = (0..n)
            .map(|i| u[i] + dt * v[i] + dt * dt * (0.5 - beta) * a[i])
            .collect();
        let v_pred: Vec<f64> = (0..n).map(|i| v[i] + dt * (1.0 - gamma) * a[i]).collect();
        let f = load(t)?;
        let ku_pred = ops.stiff.mul_vec(&u_pred);

        let mut acc = a.clone();
        let mut u_it: Vec<f64> = (0..n).map(|i| u_pred[i] + beta * dt * dt * acc[i]).collect();
        let mut v_it: Vec<f64> = (0..n).map(|i| v_pred[i] + gamma * dt * acc[i]).collect();
        let mut iterations = 0;
        let mut converged = false;
        let mut increment = f64::INFINITY;
        while iterations < settings.picard_max_iter {
            iterations += 1;
            let m_it = min_margin(params.k, &v_it);
            if m_it < settings.degeneracy_threshold || !m_it.is_finite() {
                return Err(Error::Degeneracy { step, margin: m_it });
            }
            let owned_damping;
            let damp = match &static_damping {
                Some(d) => d,
                None => {
                    owned_damping = damping(space, params, &ops, map, &u_it)?;
                    &owned_damping
                }
            };
            let owned_system;
            let system = match &linear_system {
                Some(s) => s,
                None => {
                    let mut s = if params.k == 0.0 {
                        ops.mass.clone()
                    } else {
                        coefficient_mass(space, &map.det, params.k, &v_it)?
                    };
                    s.add_scaled(gamma * dt, damp);
                    s.add_scaled(beta * dt * dt * c2, &ops.stiff);
                    owned_system = s;
                    &owned_system
                }
            };
            let dv = damp.mul_vec(&v_pred);
            let rhs: Vec<f64> = (0..n).map(|i| f[i] - dv[i] - c2 * ku_pred[i]).collect();
            linalg::solve(system, &rhs, &mut acc, symmetric, &opts)?;
            let v_new: Vec<f64> = (0..n).map(|i| v_pred[i] + gamma * dt * acc[i]).collect();
            let u_new: Vec<f64> = (0..n).map(|i| u_pred[i] + beta * dt * dt * acc[i]).collect();
            let diff: Vec<f64> = v_new.iter().zip(&v_it).map(|(a, b)| a - b).collect();
            increment = ops.mass.bilinear(&diff, &diff).max(0.0).sqrt();
            let scale = ops.mass.bilinear(&v_new, &v_new).max(0.0).sqrt().max(1.0);
            u_it = u_new;
            v_it = v_new;
            if linear || increment <= settings.picard_tol * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                step,
                iterations,
                increment,
            });
        }
        let m_step = min_margin(params.k, &v_it);
        if m_step < settings.degeneracy_threshold || !m_step.is_finite() {
            return Err(Error::Degeneracy { step, margin: m_step });
        }
        margin = margin.min(m_step);
        let e = snapshot_energy(&ops.mass, &ops.stiff, params.c, &u_it, &v_it);
        if !e.is_finite() || e > e_limit {
            return Err(Error::BlowUp {
                step,
                energy: e,
                limit: e_limit,
            });
        }
        energy.push(e);
        picard.push(iterations);
        psi.push(u_it);
        dpsi.push(v_it);
        ddpsi.push(acc);
    }

    Ok(StateSolution {
        grid: *grid,
        psi,
        dpsi,
        ddpsi,
        degeneracy_margin: margin,
        energy,
        picard_iterations: picard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_structured_mesh, MeshShape};
    use crate::state::excitation::{SpatialProfile, TimeSignal};

    fn disk_space(n: usize) -> FeSpace {
        FeSpace::new(build_structured_mesh(MeshShape::Disk { radius: 1.0 }, n).unwrap())
    }

    fn pulse() -> BoundaryExcitation {
        BoundaryExcitation {
            profile: SpatialProfile::Gaussian {
                center: [1.0, 0.0],
                width: 0.5,
            },
            signal: TimeSignal::Burst {
                amplitude: 1.0,
                duration: 0.5,
            },
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let s = disk_space(3);
        let z = vec![0.0; s.dof_count()];
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let sol = solve_state(
            &s,
            &ModelParams::linear(1.0, 0.1, 1.0),
            &BoundaryExcitation::none(),
            &z,
            &z,
            None,
            &grid,
            &StateSettings::default(),
        )
        .unwrap();
        assert!(sol.psi.iter().flatten().all(|&x| x == 0.0));
        assert!(sol.energy.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn velocity_is_trapezoid_derivative_of_potential() {
        let s = disk_space(4);
        let z = vec![0.0; s.dof_count()];
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let p = ModelParams::westervelt(1.0, 0.05, 1.0, 1.0);
        let sol = solve_state(
            &s,
            &p,
            &pulse().scaled(0.05),
            &z,
            &z,
            None,
            &grid,
            &StateSettings::default(),
        )
        .unwrap();
        let dt = grid.dt();
        for n in 0..grid.steps {
            for i in 0..s.dof_count() {
                let lhs = sol.psi[n + 1][i] - sol.psi[n][i];
                let rhs = 0.5 * dt * (sol.dpsi[n][i] + sol.dpsi[n + 1][i]);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
        assert!(sol.degeneracy_margin >= 0.5);
    }

    #[test]
    fn identity_map_matches_no_map() {
        let s = disk_space(4);
        let z = vec![0.0; s.dof_count()];
        let grid = TimeGrid::new(0.6, 20).unwrap();
        let p = ModelParams::kuznetsov(1.0, 0.05, 2.0, 1.0);
        let st = StateSettings::default();
        let a = solve_state(&s, &p, &pulse().scaled(0.05), &z, &z, None, &grid, &st).unwrap();
        let id = DomainMap::identity(&s);
        let b = solve_state(&s, &p, &pulse().scaled(0.05), &z, &z, Some(&id), &grid, &st).unwrap();
        assert_eq!(a.psi, b.psi);
    }

    #[test]
    fn incompatible_signal_is_rejected() {
        let s = disk_space(2);
        let z = vec![0.0; s.dof_count()];
        let exc = BoundaryExcitation {
            profile: SpatialProfile::Constant { value: 1.0 },
            signal: TimeSignal::RampedSine {
                amplitude: 1.0,
                frequency: 1.0,
                ramp_time: 0.0,
            },
        };
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let err = solve_state(
            &s,
            &ModelParams::linear(1.0, 0.1, 1.0),
            &exc,
            &z,
            &z,
            None,
            &grid,
            &StateSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn window_weights() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(g.window_weights(0.0, 1.0).unwrap(), g.trapezoid_weights());
        let w = g.window_weights(0.3, 0.8).unwrap();
        assert!((w.iter().sum::<f64>() - 0.5).abs() < 1e-14);
        assert!(g.window_weights(0.5, 0.2).is_err());
        assert!(g.window_weights(0.0, 1.5).is_err());
    }

    #[test]
    fn pressure_scaling() {
        let sol = StateSolution {
            grid: TimeGrid::new(1.0, 1).unwrap(),
            psi: vec![vec![0.0; 2]; 2],
            dpsi: vec![vec![1e-3, -5e-4]; 2],
            ddpsi: vec![vec![0.0; 2]; 2],
            degeneracy_margin: 1.0,
            energy: vec![0.0; 2],
            picard_iterations: vec![0; 2],
        };
        let p = acoustic_pressure(&sol, &ModelParams::linear(1.0, 0.1, 1000.0));
        assert!((p[1][0] - 1.0).abs() < 1e-12);
        let p1 = acoustic_pressure(&sol, &ModelParams::linear(1.0, 0.1, 1.0));
        assert_eq!(p1[0], sol.dpsi[0]);
    }
}
