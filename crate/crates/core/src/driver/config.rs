use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::optimize::{GradientSettings, OptimizationSettings};
use crate::adjoint::{CostFunctionalSpec, CostVariant, FocalRegion, Target};
use crate::error::{Error, Result};
use crate::geometry::io::load_mesh;
use crate::geometry::{build_structured_mesh, make_bump_field, DeformationField, Mesh, MeshShape};
use crate::problem::ShapeProblem;
use crate::shapegrad::DEFAULT_TAYLOR_STEPS;
use crate::state::{BoundaryExcitation, ModelParams, StateSettings, TimeGrid};
use crate::transform::deform_mesh;
use crate::Vec2;

/// Smooth compactly supported displacement `amplitude * bump(|x - center| / radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: [f64; 2],
}

impl BumpSpec {
    pub fn field(&self, mesh: &Mesh) -> Result<DeformationField> {
        make_bump_field(
            Vec2::new(self.center[0], self.center[1]),
            self.radius,
            Vec2::new(self.amplitude[0], self.amplitude[1]),
            mesh,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// `disk`, `unit_square` or `annular_sector`; ignored when `file` is set.
    #[serde(default = "default_shape")]
    pub shape: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Mesh file, relative to the config file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Applied once to the built mesh, after targets are computed.
    #[serde(default)]
    pub perturbation: Option<BumpSpec>,
}

fn default_shape() -> String {
    "disk".into()
}

fn default_radius() -> f64 {
    1.0
}

fn default_resolution() -> usize {
    24
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Linear {
        c: f64,
        b: f64,
        rho: f64,
    },
    Westervelt {
        c: f64,
        b: f64,
        beta_a: f64,
        rho: f64,
    },
    Kuznetsov {
        c: f64,
        b: f64,
        beta_a: f64,
        rho: f64,
    },
    Custom {
        c: f64,
        b: f64,
        k: f64,
        sigma: f64,
        rho: f64,
    },
}

impl ModelConfig {
    pub fn params(&self) -> ModelParams {
        match *self {
            ModelConfig::Linear { c, b, rho } => ModelParams::linear(c, b, rho),
            ModelConfig::Westervelt { c, b, beta_a, rho } => ModelParams::westervelt(c, b, beta_a, rho),
            ModelConfig::Kuznetsov { c, b, beta_a, rho } => ModelParams::kuznetsov(c, b, beta_a, rho),
            ModelConfig::Custom { c, b, k, sigma, rho } => ModelParams {
                c,
                b,
                k,
                sigma,
                beta_a: None,
                rho,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    Constant {
        value: f64,
    },
    /// `scale` times the field of the configured model on the unperturbed
    /// mesh.
    ReferenceRun {
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub variant: CostVariant,
    pub focal_center: [f64; 2],
    pub focal_radius: f64,
    /// Tracking window; defaults to the whole horizon.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Use the sharp vertex indicator instead of the one-ring average.
    #[serde(default)]
    pub sharp: bool,
    pub target: TargetConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaylorDirection {
    /// Lifted descent field of the gradient at the configured mesh.
    #[default]
    Descent,
    Bump(BumpSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaylorConfig {
    pub d_values: Vec<f64>,
    pub direction: TaylorDirection,
}

impl Default for TaylorConfig {
    fn default() -> Self {
        Self {
            d_values: DEFAULT_TAYLOR_STEPS.to_vec(),
            direction: TaylorDirection::Descent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// VTK snapshot stride in time steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Points whose values are written to the trajectory tables.
    pub probes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshConfig,
    pub model: ModelConfig,
    pub excitation: BoundaryExcitation,
    pub cost: CostConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: StateSettings,
    #[serde(default)]
    pub gradient: GradientSettings,
    #[serde(default)]
    pub taylor: TaylorConfig,
    #[serde(default)]
    pub optimization: OptimizationSettings,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Problem assembled from a config, with probe locations resolved.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub problem: ShapeProblem,
    pub probes: Vec<Probe>,
}

/// Barycentric interpolation stencil of a probe point.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub point: [f64; 2],
    pub nodes: [usize; 3],
    pub weights: [f64; 3],
}

impl Probe {
    pub fn sample(&self, u: &[f64]) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&i, w)| w * u[i]).sum()
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }

    /// Reads and parses a config file. I/O failures are reported as config
    /// errors as well.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn base_mesh(&self) -> Result<Mesh> {
        match &self.mesh.file {
            Some(f) => load_mesh(&self.base_dir.join(f)),
            None => build_structured_mesh(
                MeshShape::parse(&self.mesh.shape, self.mesh.radius)?,
                self.mesh.resolution,
            ),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.t_final, self.time.steps)
    }

    pub fn assemble(&self) -> Result<Assembled> {
        let mesh = self.base_mesh()?;
        let grid = self.grid()?;
        let params = self.model.params();
        let focal = FocalRegion {
            center: self.cost.focal_center,
            radius: self.cost.focal_radius,
        };
        let [t0, t1] = self.cost.window.unwrap_or([0.0, self.time.t_final]);
        let placeholder = CostFunctionalSpec::new(
            &mesh,
            self.cost.variant,
            focal,
            (t0, t1),
            Target::Constant(0.0),
            !self.cost.sharp,
        )?;
        let base = ShapeProblem::new(mesh, params, self.excitation, placeholder, grid, self.solver)?;
        let target = match self.cost.target {
            TargetConfig::Constant { value } => Target::Constant(value),
            TargetConfig::ReferenceRun { scale } => {
                let sol = base.solve(None)?;
                let scaled = |t: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
                    t.into_iter()
                        .map(|v| v.into_iter().map(|x| scale * x).collect())
                        .collect()
                };
                let (value, rate) = match self.cost.variant {
                    CostVariant::PressureTracking => (sol.dpsi, sol.ddpsi),
                    _ => (sol.psi, sol.dpsi),
                };
                Target::Trajectory {
                    value: scaled(value),
                    rate: Some(scaled(rate)),
                }
            }
        };
        let mut problem = ShapeProblem {
            cost: base.cost.with_target(target),
            ..base
        };
        if let Some(bump) = &self.mesh.perturbation {
            let h = bump.field(problem.mesh())?;
            h.check_vanishes_on(&problem.cost.excluded)?;
            problem = problem.with_mesh(deform_mesh(problem.mesh(), &h, 1.0)?);
        }
        let probes = self
            .output
            .probes
            .iter()
            .map(|&p| {
                let (t, weights) = problem
                    .mesh()
                    .locate(Vec2::new(p[0], p[1]))
                    .ok_or_else(|| Error::Config(format!("probe ({}, {}) lies outside the mesh", p[0], p[1])))?;
                Ok(Probe {
                    point: p,
                    nodes: problem.mesh().triangles[t],
                    weights,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Assembled { problem, probes })
    }
}
