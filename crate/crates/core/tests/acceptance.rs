//! Acceptance suite. Runs every criterion at its stated tolerance and
//! runtime budget and prints one PASS/FAIL line each; exits non-zero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use acoustic_shape::driver::{run_optimization, RunConfig};
use acoustic_shape::geometry::{DeformationField, FieldRecipe};
use acoustic_shape::problems::{
    reference_disk_problem, reference_perturbation, ReferenceModel, REFERENCE_RESOLUTION, REFERENCE_STEPS,
};
use acoustic_shape::shapegrad::{
    shape_derivative, shape_derivative_volume, taylor_test, NormalDerivativeRule, DEFAULT_TAYLOR_STEPS,
};
use acoustic_shape::state::TimeGrid;
use acoustic_shape::transform::{deform_mesh, DomainMap, GradientSource};
use acoustic_shape::verify::{
    amplitude_duality_error, boundary_identity_residuals, mms_error, observed_orders, transform_identity_check,
};
use acoustic_shape::{Error, Result};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn ac1() -> Result<Verdict> {
    let c = transform_identity_check(20240601, 100, 1e-6)?;
    verdict(
        c.identity <= 1e-12 && c.det <= 1e-5 && c.weight <= 1e-5 && c.m <= 1e-5,
        format!(
            "d=0 deviation {:.1e} (<= 1e-12); FD errors I {:.1e}, w {:.1e}, M {:.1e} (<= 1e-5)",
            c.identity, c.det, c.weight, c.m
        ),
    )
}

/// Relative discrete L2-in-time distance of two nodal trajectories.
fn trajectory_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (u, v) in a.iter().zip(b) {
        for (x, y) in u.iter().zip(v) {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    (num / den).sqrt()
}

fn ac2() -> Result<Verdict> {
    let d = 0.2;
    let mut errs = Vec::new();
    for model in [ReferenceModel::Linear, ReferenceModel::Kuznetsov] {
        let mut p = reference_disk_problem(model, 25, REFERENCE_STEPS)?;
        p.grid = TimeGrid::new(p.grid.t_final, 200)?;
        let h = reference_perturbation(p.mesh())?;
        let map = DomainMap::new(&p.space, &h, d, GradientSource::Element)?;
        let pulled = p.solve(Some(&map))?;
        let direct = p.with_mesh(deform_mesh(p.mesh(), &h, d)?).solve(None)?;
        errs.push(trajectory_distance(&pulled.psi, &direct.psi));
    }
    verdict(
        errs[0] <= 1e-8 && errs[1] <= 1e-6,
        format!(
            "1951-vertex disk, N=200, d={d}: linear {:.1e} (<= 1e-8), Kuznetsov {:.1e} (<= 1e-6)",
            errs[0], errs[1]
        ),
    )
}

fn ac3() -> Result<Verdict> {
    let p = ReferenceModel::Linear.params();
    let errs = [mms_error(&p, 4, 8)?, mms_error(&p, 8, 16)?, mms_error(&p, 16, 32)?];
    let orders = observed_orders(&errs);
    verdict(
        errs.windows(2).all(|w| w[1] < w[0]) && orders.iter().all(|&o| o >= 1.8),
        format!(
            "errors {:.2e}, {:.2e}, {:.2e}; orders {:.2}, {:.2} (>= 1.8)",
            errs[0], errs[1], errs[2], orders[0], orders[1]
        ),
    )
}

fn ac4() -> Result<Verdict> {
    let base = reference_disk_problem(ReferenceModel::Kuznetsov, REFERENCE_RESOLUTION, REFERENCE_STEPS)?;
    let margin0 = base.solve(None)?.degeneracy_margin;
    let mut amplitude_factor = 1.0;
    let mut trail = vec![format!("x1: {margin0:.3}")];
    let outcome = loop {
        amplitude_factor *= 2.0;
        if amplitude_factor > 4096.0 {
            break None;
        }
        let p = acoustic_shape::problem::ShapeProblem {
            excitation: base.excitation.scaled(amplitude_factor),
            ..base.clone()
        };
        match p.solve(None) {
            Ok(sol) => {
                let finite = sol.psi.iter().chain(&sol.dpsi).flatten().all(|x| x.is_finite());
                if !finite {
                    break Some(Err("non-finite values without an error".to_string()));
                }
                trail.push(format!("x{amplitude_factor}: {:.3}", sol.degeneracy_margin));
            }
            Err(e) => break Some(Ok(e)),
        }
    };
    let (passed, end) = match outcome {
        Some(Ok(e @ Error::Degeneracy { .. })) => (margin0 >= 0.5, format!("x{amplitude_factor}: {e}")),
        Some(Ok(e)) => (false, format!("x{amplitude_factor}: unexpected {}: {e}", e.class())),
        Some(Err(msg)) => (false, msg),
        None => (false, "no error up to x4096".into()),
    };
    verdict(passed, format!("margins {}; {end}", trail.join(", ")))
}

fn ac5() -> Result<Verdict> {
    let lin = amplitude_duality_error(ReferenceModel::Linear, REFERENCE_RESOLUTION, REFERENCE_STEPS)?;
    let wes = amplitude_duality_error(ReferenceModel::Westervelt, REFERENCE_RESOLUTION, REFERENCE_STEPS)?;
    verdict(
        lin <= 1e-3 && wes <= 1e-2,
        format!("relative error linear {lin:.2e} (<= 1e-3), Westervelt {wes:.2e} (<= 1e-2)"),
    )
}

fn taylor_on_reference(model: ReferenceModel) -> Result<(f64, f64)> {
    let p = reference_disk_problem(model, REFERENCE_RESOLUTION, REFERENCE_STEPS)?;
    let ev = p.evaluate_gradient(NormalDerivativeRule::OneSided)?;
    let h = reference_perturbation(p.mesh())?;
    let dj = shape_derivative(&ev.gradient, &ev.boundary, &h, &p.cost.excluded)?;
    let report = taylor_test(&p, ev.j, dj, &h, &DEFAULT_TAYLOR_STEPS)?;
    Ok((report.gap.unwrap_or(f64::INFINITY), report.order.unwrap_or(f64::NAN)))
}

fn ac6() -> Result<Verdict> {
    let (lg, lo) = taylor_on_reference(ReferenceModel::Linear)?;
    let (kg, ko) = taylor_on_reference(ReferenceModel::Kuznetsov)?;
    verdict(
        lg <= 1e-2 && lo >= 1.7 && kg <= 5e-2,
        format!("linear gap {lg:.2e} (<= 1e-2) order {lo:.2} (>= 1.7); Kuznetsov gap {kg:.2e} (<= 5e-2) order {ko:.2}"),
    )
}

fn volume_boundary_difference(model: ReferenceModel, resolution: usize) -> Result<f64> {
    let p = reference_disk_problem(model, resolution, REFERENCE_STEPS)?;
    let ev = p.evaluate_gradient(NormalDerivativeRule::OneSided)?;
    let h = reference_perturbation(p.mesh())?;
    let b = shape_derivative(&ev.gradient, &ev.boundary, &h, &p.cost.excluded)?;
    let v = shape_derivative_volume(&p.space, &ev.state, &ev.adjoint, &p.excitation, &p.params, &h)?;
    Ok(((b - v) / v).abs())
}

fn ac7() -> Result<Verdict> {
    let mut passed = true;
    let mut parts = Vec::new();
    for model in [ReferenceModel::Linear, ReferenceModel::Kuznetsov] {
        let coarse = volume_boundary_difference(model, REFERENCE_RESOLUTION)?;
        let fine = volume_boundary_difference(model, 2 * REFERENCE_RESOLUTION)?;
        passed &= coarse <= 0.05 && fine < coarse;
        parts.push(format!("{model:?} {:.3}% -> {:.3}%", 100.0 * coarse, 100.0 * fine));
    }
    verdict(passed, format!("{} (coarse <= 5%, decreasing)", parts.join(", ")))
}

fn ac8() -> Result<Verdict> {
    let r = boundary_identity_residuals(&[4, 8, 16])?;
    let orders = observed_orders(&r);
    verdict(
        orders.iter().all(|&o| o >= 1.0),
        format!(
            "residuals {:.2e}, {:.2e}, {:.2e}; orders {:.2}, {:.2} (>= 1)",
            r[0], r[1], r[2], orders[0], orders[1]
        ),
    )
}

fn ac9() -> Result<Verdict> {
    let p = reference_disk_problem(ReferenceModel::Linear, REFERENCE_RESOLUTION, REFERENCE_STEPS)?;
    let ev = p.evaluate_gradient(NormalDerivativeRule::OneSided)?;
    let h1 = reference_perturbation(p.mesh())?;
    let swirl = DeformationField::from_recipe(
        p.mesh(),
        FieldRecipe::RingSwirl {
            center: [0.0, 0.0],
            r_mid: 1.0,
            half_width: 0.3,
            amplitude: 0.3,
        },
    )?;
    let h2 = h1.combine(1.0, &swirl, 1.0);
    let d1 = shape_derivative(&ev.gradient, &ev.boundary, &h1, &p.cost.excluded)?;
    let d2 = shape_derivative(&ev.gradient, &ev.boundary, &h2, &p.cost.excluded)?;
    let rel = ((d1 - d2) / d1).abs();
    verdict(
        rel <= 1e-8,
        format!("dJ {d1:.6e} vs {d2:.6e}, relative {rel:.1e} (<= 1e-8)"),
    )
}

fn ac10() -> Result<Verdict> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy_focusing.toml");
    let cfg = RunConfig::load(&path)?;
    let problem = cfg.assemble()?.problem;
    let history = run_optimization(&problem, &cfg.gradient, &cfg.optimization)?;
    let j0 = history.records[0].j;
    let reduction = 1.0 - history.final_j() / j0;
    verdict(
        history.accepted_steps() <= 10 && reduction >= 0.3 && history.is_monotone(),
        format!(
            "J {j0:.3e} -> {:.3e} in {} accepted steps ({:.1}% reduction, >= 30%), monotone: {}",
            history.final_j(),
            history.accepted_steps(),
            100.0 * reduction,
            history.is_monotone()
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Result<Verdict>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1 transform identities", Duration::from_secs(1), ac1),
        ("AC2 pullback oracle", Duration::from_secs(120), ac2),
        ("AC3 manufactured solution", Duration::from_secs(300), ac3),
        ("AC4 degeneracy monitor", Duration::from_secs(180), ac4),
        ("AC5 adjoint duality", Duration::from_secs(180), ac5),
        ("AC6 Taylor test", Duration::from_secs(600), ac6),
        ("AC7 volume vs boundary form", Duration::from_secs(300), ac7),
        ("AC8 integration-by-parts residual", Duration::from_secs(60), ac8),
        ("AC9 normal-trace dependence", Duration::from_secs(60), ac9),
        ("AC10 end-to-end descent", Duration::from_secs(900), ac10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(Ok(v)) => (v.passed && elapsed <= budget, v.detail),
            Ok(Err(e)) => (false, format!("{}: {e}", e.class())),
            Err(_) => (false, "panicked".into()),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} {name}: {detail} [{:.2}s, budget {}s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
