//! A complete shape-optimization problem on one mesh: model, excitation,
//! objective and time discretization. Initial data are always at rest.

use crate::adjoint::{adjoint_data, evaluate_cost, solve_adjoint, AdjointSolution, CostFunctionalSpec};
use crate::discretize::FeSpace;
use crate::error::Result;
use crate::geometry::{compute_boundary_geometry, BoundaryGeometry, DeformationField, Mesh};
use crate::shapegrad::{shape_gradient_density, NormalDerivativeRule, ShapeGradient};
use crate::state::{solve_state, BoundaryExcitation, ModelParams, StateSettings, StateSolution, TimeGrid};
use crate::transform::{DomainMap, GradientSource};

#[derive(Debug, Clone)]
pub struct ShapeProblem {
    pub space: FeSpace,
    pub params: ModelParams,
    pub excitation: BoundaryExcitation,
    pub cost: CostFunctionalSpec,
    pub grid: TimeGrid,
    pub settings: StateSettings,
}

/// Everything produced by one gradient evaluation.
#[derive(Debug, Clone)]
pub struct GradientEvaluation {
    pub j: f64,
    pub state: StateSolution,
    pub adjoint: AdjointSolution,
    pub boundary: BoundaryGeometry,
    pub gradient: ShapeGradient,
}

impl ShapeProblem {
    pub fn new(
        mesh: Mesh,
        params: ModelParams,
        excitation: BoundaryExcitation,
        cost: CostFunctionalSpec,
        grid: TimeGrid,
        settings: StateSettings,
    ) -> Result<Self> {
        params.validate()?;
        excitation.check_rest_compatible()?;
        grid.window_weights(cost.window.0, cost.window.1)?;
        Ok(Self {
            space: FeSpace::new(mesh),
            params,
            excitation,
            cost,
            grid,
            settings,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.space.mesh()
    }

    /// Same problem on a mesh with identical connectivity (e.g. after
    /// moving vertices). Nodal focal data and targets carry over by index.
    pub fn with_mesh(&self, mesh: Mesh) -> Self {
        Self {
            space: FeSpace::new(mesh),
            ..self.clone()
        }
    }

    pub fn solve(&self, map: Option<&DomainMap>) -> Result<StateSolution> {
        let z = vec![0.0; self.space.dof_count()];
        solve_state(
            &self.space,
            &self.params,
            &self.excitation,
            &z,
            &z,
            map,
            &self.grid,
            &self.settings,
        )
    }

    pub fn cost_of(&self, sol: &StateSolution, map: Option<&DomainMap>) -> Result<f64> {
        evaluate_cost(&self.space, sol, &self.cost, map)
    }

    pub fn objective(&self) -> Result<f64> {
        self.cost_of(&self.solve(None)?, None)
    }

    /// `J((id + d h)(Omega))` through the mapped state equation.
    pub fn perturbed_objective(&self, h: &DeformationField, d: f64) -> Result<f64> {
        let map = DomainMap::new(&self.space, h, d, GradientSource::Element)?;
        let sol = self.solve(Some(&map))?;
        self.cost_of(&sol, Some(&map))
    }

    pub fn adjoint(&self, state: &StateSolution) -> Result<AdjointSolution> {
        let data = adjoint_data(&self.space, &self.cost, state, &self.params)?;
        solve_adjoint(&self.space, &self.params, state, &data, &self.settings)
    }

    pub fn evaluate_gradient(&self, rule: NormalDerivativeRule) -> Result<GradientEvaluation> {
        let state = self.solve(None)?;
        let j = self.cost_of(&state, None)?;
        let adjoint = self.adjoint(&state)?;
        let boundary = compute_boundary_geometry(self.mesh())?;
        let gradient = shape_gradient_density(
            &self.space,
            &state,
            &adjoint,
            &self.excitation,
            &self.params,
            &boundary,
            rule,
        )?;
        Ok(GradientEvaluation {
            j,
            state,
            adjoint,
            boundary,
            gradient,
        })
    }
}
