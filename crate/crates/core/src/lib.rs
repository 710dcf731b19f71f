//! Finite-element solver for the Westervelt and Kuznetsov equations on
//! planar domains, with adjoint-based shape derivatives and a gradient
//! descent driver.
//!
//! The usual entry point is a [`ShapeProblem`], either built directly or
//! assembled from a [`RunConfig`].

// `!(x > 0.0)` comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod discretize;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod shapegrad;
pub mod state;
pub mod transform;
pub mod verify;

pub use adjoint::{AdjointSolution, CostFunctionalSpec, CostVariant, FocalRegion, Target};
pub use discretize::FeSpace;
pub use driver::{OptimizationHistory, RunConfig};
pub use error::{Error, Result};
pub use geometry::{BoundaryGeometry, DeformationField, Mesh, MeshShape};
pub use problem::{GradientEvaluation, ShapeProblem};
pub use shapegrad::{NormalDerivativeRule, ShapeGradient, TaylorReport};
pub use state::{BoundaryExcitation, ModelParams, StateSettings, StateSolution, TimeGrid};
pub use transform::{DomainMap, GradientSource};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
