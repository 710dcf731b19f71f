//! Built-in verification: transform identities, boundary curvature, the
//! integration-by-parts identity, adjoint duality and a manufactured
//! solution. Used by the `check` command and the acceptance suite.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adjoint::{adjoint_data, evaluate_cost, excitation_sensitivity, solve_adjoint};
use crate::discretize::{assemble_weighted_mass, FeSpace, Field};
use crate::error::Result;
use crate::geometry::{
    build_structured_mesh, compute_boundary_geometry, make_bump_field, DeformationField, FieldRecipe, MeshShape,
};
use crate::problems::{reference_disk_problem, ReferenceModel};
use crate::shapegrad::{boundary_identity_residual, Jet};
use crate::state::{solve_state_with_source, BoundaryExcitation, ModelParams, StateSettings, TimeGrid, VolumeSource};
use crate::transform::{boundary_weight_derivative, eval_transform, m_prime};
use crate::{Mat2, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Largest deviations found by [`transform_identity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformCheck {
    /// `max |I_0 - 1|, |A_0 - I|, |M_0 - I|, |w_0 - 1|`
    pub identity: f64,
    /// FD of `I_d` against `div h`.
    pub det: f64,
    /// FD of `w_d` against `div h - n . J n`.
    pub weight: f64,
    /// FD of `M_d` against `div h I - J - J^T`.
    pub m: f64,
}

/// Compares the transform coefficients with their closed-form values at
/// `d = 0` and their derivatives with central differences at `d = eps`, on
/// random points and unit normals.
pub fn transform_identity_check(seed: u64, samples: usize, eps: f64) -> Result<TransformCheck> {
    let mesh = build_structured_mesh(MeshShape::Disk { radius: 1.0 }, 6)?;
    let h = DeformationField::from_recipe(
        &mesh,
        FieldRecipe::Sum(vec![
            (
                1.0,
                FieldRecipe::Bump {
                    center: [0.3, -0.2],
                    radius: 0.9,
                    amplitude: [0.4, -0.25],
                },
            ),
            (
                0.5,
                FieldRecipe::Bump {
                    center: [-0.4, 0.5],
                    radius: 0.7,
                    amplitude: [-0.1, 0.6],
                },
            ),
        ]),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(samples);
    let mut normals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let r = rng.gen_range(0.0f64..1.0).sqrt() * 0.99;
        let a = rng.gen_range(0.0..2.0 * PI);
        points.push(Vec2::new(r * a.cos(), r * a.sin()));
        let b = rng.gen_range(0.0..2.0 * PI);
        normals.push(Vec2::new(b.cos(), b.sin()));
    }
    let at = |d: f64| eval_transform(&h, &mesh, d, &points, Some(&normals));
    let (zero, plus, minus) = (at(0.0)?, at(eps)?, at(-eps)?);
    let (w0, wp, wm) = (zero.w()?, plus.w()?, minus.w()?);
    let mut out = TransformCheck {
        identity: 0.0,
        det: 0.0,
        weight: 0.0,
        m: 0.0,
    };
    let eye = Mat2::identity();
    for i in 0..samples {
        out.identity = out
            .identity
            .max((zero.det_i[i] - 1.0).abs())
            .max((zero.a[i] - eye).amax())
            .max((zero.m[i] - eye).amax())
            .max((w0[i] - 1.0).abs());
        let (_, jac) = h.eval_at(&mesh, points[i])?;
        let fd = |p: f64, m: f64| (p - m) / (2.0 * eps);
        out.det = out.det.max((fd(plus.det_i[i], minus.det_i[i]) - jac.trace()).abs());
        out.weight = out
            .weight
            .max((fd(wp[i], wm[i]) - boundary_weight_derivative(&jac, &normals[i])).abs());
        let dm = (plus.m[i] - minus.m[i]) / (2.0 * eps);
        out.m = out.m.max((dm - m_prime(&jac)).amax());
    }
    Ok(out)
}

/// Largest relative curvature error on a fine disk and whether the square
/// flags exactly its four corners.
pub fn curvature_check() -> Result<(f64, bool)> {
    let disk = build_structured_mesh(MeshShape::Disk { radius: 2.0 }, 24)?;
    let bg = compute_boundary_geometry(&disk)?;
    let err = bg.curvature.iter().fold(0.0f64, |m, k| m.max((k - 0.5).abs() / 0.5));
    let square = build_structured_mesh(MeshShape::UnitSquare, 5)?;
    let bs = compute_boundary_geometry(&square)?;
    let corners = bs.corner.iter().filter(|&&c| c).count() == 4;
    Ok((err, corners))
}

/// Residual of the integration-by-parts identity for `a = 1 + x`,
/// `u = x^2`, `v = y^2` and a bump straddling the boundary of the unit
/// square, on the given refinement levels.
pub fn boundary_identity_residuals(levels: &[usize]) -> Result<Vec<f64>> {
    let a = |x: Vec2| Jet {
        value: 1.0 + x.x,
        grad: Vec2::new(1.0, 0.0),
        hess: Mat2::zeros(),
    };
    let u = |x: Vec2| Jet {
        value: x.x * x.x,
        grad: Vec2::new(2.0 * x.x, 0.0),
        hess: Mat2::new(2.0, 0.0, 0.0, 0.0),
    };
    let v = |x: Vec2| Jet {
        value: x.y * x.y,
        grad: Vec2::new(0.0, 2.0 * x.y),
        hess: Mat2::new(0.0, 0.0, 0.0, 2.0),
    };
    levels
        .iter()
        .map(|&n| {
            let mesh = build_structured_mesh(MeshShape::UnitSquare, n)?;
            let h = make_bump_field(Vec2::new(1.0, 0.5), 0.2, Vec2::new(0.3, -0.2), &mesh)?;
            boundary_identity_residual(&FeSpace::new(mesh), &a, &u, &v, &h)
        })
        .collect()
}

/// Observed orders between consecutive entries of an error sequence on
/// meshes refined by a factor of two.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Relative error between the adjoint amplitude gradient and a central
/// difference of `J(alpha g)` at `alpha = 1` on a reference disk problem.
pub fn amplitude_duality_error(model: ReferenceModel, resolution: usize, steps: usize) -> Result<f64> {
    let p = reference_disk_problem(model, resolution, steps)?;
    let z = vec![0.0; p.space.dof_count()];
    let cost = |alpha: f64| -> Result<f64> {
        let sol = solve_state_with_source(
            &p.space,
            &p.params,
            &p.excitation.scaled(alpha),
            &z,
            &z,
            None,
            &p.grid,
            &p.settings,
            None,
        )?;
        evaluate_cost(&p.space, &sol, &p.cost, None)
    };
    let sol = p.solve(None)?;
    let data = adjoint_data(&p.space, &p.cost, &sol, &p.params)?;
    let adj = solve_adjoint(&p.space, &p.params, &sol, &data, &p.settings)?;
    let dj = excitation_sensitivity(&p.space, &p.params, &p.excitation, &adj)?;
    let eps = 1e-3;
    let fd = (cost(1.0 + eps)? - cost(1.0 - eps)?) / (2.0 * eps);
    Ok(((dj - fd) / fd).abs())
}

/// Source for the manufactured solution `cos(pi x) exp(-t)` of the linear
/// model on the unit square, whose Neumann data vanish.
#[derive(Debug, Clone, Copy)]
pub struct MmsSource {
    pub c: f64,
    pub b: f64,
}

impl MmsSource {
    pub fn exact(x: Vec2, t: f64) -> f64 {
        (PI * x.x).cos() * (-t).exp()
    }
}

impl VolumeSource for MmsSource {
    fn value(&self, x: Vec2, t: f64) -> f64 {
        Self::exact(x, t) * (1.0 + (self.c * self.c - self.b) * PI * PI)
    }
}

/// Discrete `L2(0,1; L2)` error of the manufactured solution on an
/// `n x n` square mesh with `steps` time steps.
pub fn mms_error(params: &ModelParams, n: usize, steps: usize) -> Result<f64> {
    let mesh = build_structured_mesh(MeshShape::UnitSquare, n)?;
    let space = FeSpace::new(mesh);
    let grid = TimeGrid::new(1.0, steps)?;
    let psi0: Vec<f64> = space
        .mesh()
        .vertices
        .iter()
        .map(|&x| MmsSource::exact(x, 0.0))
        .collect();
    let psi1: Vec<f64> = psi0.iter().map(|v| -v).collect();
    let src = MmsSource {
        c: params.c,
        b: params.b,
    };
    let sol = solve_state_with_source(
        &space,
        params,
        &BoundaryExcitation::none(),
        &psi0,
        &psi1,
        None,
        &grid,
        &StateSettings::default(),
        Some(&src),
    )?;
    let mass = assemble_weighted_mass(&space, &Field::Const(1.0))?;
    let w = grid.trapezoid_weights();
    let mut acc = 0.0;
    for (step, psi) in sol.psi.iter().enumerate() {
        let t = grid.time(step);
        let e: Vec<f64> = space
            .mesh()
            .vertices
            .iter()
            .zip(psi)
            .map(|(&x, v)| v - MmsSource::exact(x, t))
            .collect();
        acc += w[step] * mass.bilinear(&e, &e);
    }
    Ok(acc.sqrt())
}

fn list(v: &[f64], exp: bool) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|x| if exp { format!("{x:.2e}") } else { format!("{x:.2}") })
        .collect();
    parts.join(", ")
}

/// The `check` suite. Every item is cheap; the whole run takes seconds.
pub fn run_checks(seed: u64) -> Vec<CheckItem> {
    let mut items = Vec::new();
    let mut push = |name: &'static str, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, format!("{}: {e}", e.class())));
        items.push(CheckItem { name, passed, detail });
    };
    push(
        "transform identities",
        transform_identity_check(seed, 100, 1e-6).map(|c| {
            (
                c.identity <= 1e-12 && c.det <= 1e-5 && c.weight <= 1e-5 && c.m <= 1e-5,
                format!(
                    "identity {:.1e}, dI {:.1e}, dw {:.1e}, dM {:.1e}",
                    c.identity, c.det, c.weight, c.m
                ),
            )
        }),
    );
    push(
        "boundary curvature",
        curvature_check().map(|(err, corners)| {
            (
                err < 1e-3 && corners,
                format!("disk rel. error {err:.1e}, square corners ok: {corners}"),
            )
        }),
    );
    push(
        "integration-by-parts identity",
        boundary_identity_residuals(&[4, 8, 16]).map(|r| {
            let orders = observed_orders(&r);
            (
                orders.iter().all(|&o| o >= 1.0),
                format!("residuals [{}], orders [{}]", list(&r, true), list(&orders, false)),
            )
        }),
    );
    push(
        "adjoint duality",
        amplitude_duality_error(ReferenceModel::Linear, 6, 60).map(|e| (e <= 1e-3, format!("relative error {e:.2e}"))),
    );
    push(
        "manufactured solution",
        (|| {
            let p = ReferenceModel::Linear.params();
            let e = [mms_error(&p, 4, 8)?, mms_error(&p, 8, 16)?, mms_error(&p, 16, 32)?];
            let orders = observed_orders(&e);
            Ok((
                orders.iter().all(|&o| o >= 1.8),
                format!("errors [{}], orders [{}]", list(&e, true), list(&orders, false)),
            ))
        })(),
    );
    items
}
