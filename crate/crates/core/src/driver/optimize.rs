use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DeformationField, Mesh};
use crate::problem::{GradientEvaluation, ShapeProblem};
use crate::shapegrad::{lift_density, shape_derivative, NormalDerivativeRule, DEFAULT_SMOOTHING_PASSES};
use crate::transform::deform_mesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationSettings {
    pub max_iters: usize,
    /// First trial step; the descent field is scaled to unit max-norm, so
    /// this is the largest vertex displacement tried.
    pub step0: f64,
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Stop when `|dJ h|` falls below this.
    pub gradient_tol: f64,
    /// Stop when the accepted step falls below this.
    pub step_tol: f64,
    pub min_angle_deg: f64,
}

/// How the boundary density is computed and turned into a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientSettings {
    pub rule: NormalDerivativeRule,
    pub smoothing_passes: usize,
}

impl Default for GradientSettings {
    fn default() -> Self {
        Self {
            rule: NormalDerivativeRule::OneSided,
            smoothing_passes: DEFAULT_SMOOTHING_PASSES,
        }
    }
}

impl Default for OptimizationSettings {
    fn default() -> Self {
        Self {
            max_iters: 10,
            step0: 0.05,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 20,
            gradient_tol: 1e-14,
            step_tol: 1e-8,
            min_angle_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub j: f64,
    /// `|dJ h|` for the descent field chosen at this iterate (zero on the
    /// last record when the loop ended before choosing one).
    pub dj: f64,
    /// Step accepted to reach this iterate (zero for the start).
    pub step: f64,
    pub backtracks: usize,
    pub degeneracy_margin: f64,
    pub min_angle_deg: f64,
    pub checksum: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    OnTarget,
    MaxIterations,
    SmallGradient,
    SmallStep,
    LineSearchFailed,
    MeshQuality,
}

#[derive(Debug, Clone)]
pub struct OptimizationHistory {
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    /// Last accepted mesh.
    pub final_mesh: Mesh,
    /// Minimum angle of the rejected mesh when the loop stopped on quality
    /// (0 for an inverted one).
    pub rejected_min_angle: Option<f64>,
}

impl OptimizationHistory {
    pub fn accepted_steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn final_j(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.j)
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].j < w[0].j)
    }
}

/// Number of Armijo trials evaluated together. The accepted trial is the
/// first acceptable one in backtracking order, independent of batching.
const TRIAL_BATCH: usize = 4;

/// Descent field from one gradient evaluation: the smoothed density lifted
/// into the domain, scaled to unit max-norm, with its directional
/// derivative `dJ h`. `None` when the density vanishes.
pub fn descent_direction(
    problem: &ShapeProblem,
    ev: &GradientEvaluation,
    gradient: &GradientSettings,
) -> Result<Option<(DeformationField, f64)>> {
    let raw = lift_density(
        &problem.space,
        &ev.boundary,
        &ev.gradient,
        &problem.cost.excluded,
        gradient.smoothing_passes,
    )?;
    let norm = raw.max_norm();
    if norm == 0.0 {
        return Ok(None);
    }
    let h = raw.scaled(1.0 / norm);
    let slope = shape_derivative(&ev.gradient, &ev.boundary, &h, &problem.cost.excluded)?;
    Ok(Some((h, slope)))
}

/// Largest step `step0 * backtrack^k` passing the Armijo test, with its
/// backtrack count. Failed trial solves count as rejections.
fn armijo(
    problem: &ShapeProblem,
    h: &DeformationField,
    j0: f64,
    slope: f64,
    opts: &OptimizationSettings,
) -> Option<(f64, usize)> {
    let steps: Vec<f64> = (0..=opts.max_backtracks)
        .map(|k| opts.step0 * opts.backtrack.powi(k as i32))
        .collect();
    for (b, chunk) in steps.chunks(TRIAL_BATCH).enumerate() {
        let trials: Vec<Option<f64>> = chunk
            .par_iter()
            .map(|&d| problem.perturbed_objective(h, d).ok().filter(|j| j.is_finite()))
            .collect();
        for (i, (&d, j)) in chunk.iter().zip(trials).enumerate() {
            if let Some(j) = j {
                if j <= j0 + opts.armijo_c1 * d * slope && j < j0 {
                    return Some((d, b * TRIAL_BATCH + i));
                }
            }
        }
    }
    None
}

/// Steepest descent on the boundary density lifted to a smooth field, with
/// Armijo backtracking. Accepted steps move the mesh.
pub fn run_optimization(
    problem: &ShapeProblem,
    gradient: &GradientSettings,
    opts: &OptimizationSettings,
) -> Result<OptimizationHistory> {
    if !(opts.step0 > 0.0 && opts.backtrack > 0.0 && opts.backtrack < 1.0 && opts.armijo_c1 > 0.0) {
        return Err(Error::InvalidInput("invalid line-search settings".into()));
    }
    let mut current = problem.clone();
    let mut records: Vec<IterationRecord> = Vec::new();
    let (mut step, mut backtracks) = (0.0, 0);
    let mut rejected_min_angle = None;
    let stop = loop {
        let iteration = records.len();
        let ev = current
            .evaluate_gradient(gradient.rule)
            .map_err(|e| e.at_iteration(iteration))?;
        let mesh = current.mesh();
        records.push(IterationRecord {
            iteration,
            j: ev.j,
            dj: 0.0,
            step,
            backtracks,
            degeneracy_margin: ev.state.degeneracy_margin,
            min_angle_deg: mesh.min_angle_deg(),
            checksum: mesh.checksum(),
        });
        if ev.j == 0.0 {
            break StopReason::OnTarget;
        }
        if iteration > 0 && step < opts.step_tol {
            break StopReason::SmallStep;
        }
        if iteration >= opts.max_iters {
            break StopReason::MaxIterations;
        }
        let Some((h, slope)) = descent_direction(&current, &ev, gradient)? else {
            break StopReason::SmallGradient;
        };
        records[iteration].dj = slope.abs();
        if !(slope < 0.0) || slope.abs() < opts.gradient_tol {
            break StopReason::SmallGradient;
        }
        let Some((d, k)) = armijo(&current, &h, ev.j, slope, opts) else {
            break StopReason::LineSearchFailed;
        };
        let moved = match deform_mesh(mesh, &h, d) {
            Ok(m) if m.min_angle_deg() >= opts.min_angle_deg => m,
            Ok(m) => {
                rejected_min_angle = Some(m.min_angle_deg());
                break StopReason::MeshQuality;
            }
            Err(_) => {
                rejected_min_angle = Some(0.0);
                break StopReason::MeshQuality;
            }
        };
        current = current.with_mesh(moved);
        (step, backtracks) = (d, k);
    };
    Ok(OptimizationHistory {
        records,
        stop,
        final_mesh: current.mesh().clone(),
        rejected_min_angle,
    })
}
