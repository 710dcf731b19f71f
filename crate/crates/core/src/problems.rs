//! Reference problems on the unit disk: a wave packet enters through a
//! boundary arc on the left and is tracked in a small focal disk.

use serde::{Deserialize, Serialize};

use crate::adjoint::{CostFunctionalSpec, CostVariant, FocalRegion, Target};
use crate::error::Result;
use crate::geometry::{build_structured_mesh, make_bump_field, DeformationField, Mesh, MeshShape};
use crate::problem::ShapeProblem;
use crate::state::{BoundaryExcitation, ModelParams, SpatialProfile, StateSettings, TimeGrid, TimeSignal};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceModel {
    Linear,
    Westervelt,
    Kuznetsov,
}

pub const REFERENCE_T: f64 = 2.0;
/// Ring count of the coarse reference disk (1801 vertices).
pub const REFERENCE_RESOLUTION: usize = 24;
pub const REFERENCE_STEPS: usize = 100;
pub const REFERENCE_FOCAL: FocalRegion = FocalRegion {
    center: [0.3, 0.0],
    radius: 0.2,
};

impl ReferenceModel {
    pub fn params(self) -> ModelParams {
        match self {
            ReferenceModel::Linear => ModelParams::linear(1.0, 0.05, 1.0),
            ReferenceModel::Westervelt => ModelParams::westervelt(1.0, 0.05, 6.0, 1.0),
            ReferenceModel::Kuznetsov => ModelParams::kuznetsov(1.0, 0.05, 6.0, 1.0),
        }
    }

    /// Burst amplitude: the nonlinear presets run at a level where the
    /// quadratic terms are visible but far from degenerate.
    pub fn amplitude(self) -> f64 {
        match self {
            ReferenceModel::Linear => 1.0,
            ReferenceModel::Westervelt | ReferenceModel::Kuznetsov => 0.02,
        }
    }
}

pub fn reference_excitation(amplitude: f64) -> BoundaryExcitation {
    BoundaryExcitation {
        profile: SpatialProfile::Gaussian {
            center: [-1.0, 0.0],
            width: 0.5,
        },
        signal: TimeSignal::Burst {
            amplitude,
            duration: 0.6,
        },
    }
}

pub fn reference_mesh(resolution: usize) -> Result<Mesh> {
    build_structured_mesh(MeshShape::Disk { radius: 1.0 }, resolution)
}

/// Tracks `psi = 0` in the focal disk over the whole horizon.
pub fn reference_disk_problem(model: ReferenceModel, resolution: usize, steps: usize) -> Result<ShapeProblem> {
    let mesh = reference_mesh(resolution)?;
    let cost = CostFunctionalSpec::new(
        &mesh,
        CostVariant::PotentialTracking,
        REFERENCE_FOCAL,
        (0.0, REFERENCE_T),
        Target::Constant(0.0),
        true,
    )?;
    ShapeProblem::new(
        mesh,
        model.params(),
        reference_excitation(model.amplitude()),
        cost,
        TimeGrid::new(REFERENCE_T, steps)?,
        StateSettings::default(),
    )
}

/// Outward bump on the upper-left boundary arc, away from the focal region.
pub fn reference_perturbation(mesh: &Mesh) -> Result<DeformationField> {
    let c = Vec2::new(-0.6, 0.8);
    make_bump_field(c, 0.6, c * 0.5, mesh)
}

/// Focusing toy: the target is the linear field produced by the pristine
/// disk, and the optimization starts from a dented disk.
pub fn toy_focusing_problem(resolution: usize, steps: usize) -> Result<(ShapeProblem, DeformationField)> {
    let reference = reference_disk_problem(ReferenceModel::Linear, resolution, steps)?;
    let target = reference.solve(None)?;
    let cost = reference.cost.with_target(Target::Trajectory {
        value: target.psi,
        rate: Some(target.dpsi),
    });
    let problem = ShapeProblem { cost, ..reference };
    let c = Vec2::new(-0.8, -0.6);
    let dent = make_bump_field(c, 0.6, c * -0.15, problem.mesh())?;
    Ok((problem, dent))
}
