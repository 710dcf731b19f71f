//! Shape derivative of the tracking objectives: boundary (Hadamard) form,
//! volume form, the integration-by-parts identity that links them, Taylor
//! tests and the lift of the boundary density to a descent field.

mod density;
mod identity;
mod lift;
mod taylor;
mod volume;

pub use density::{shape_derivative, shape_gradient_density, NormalDerivativeRule, ShapeGradient};
pub use identity::{boundary_identity_residual, Jet, ScalarField};
pub use lift::{harmonic_extension, lift_density, smooth_along_boundary, DEFAULT_SMOOTHING_PASSES};
pub use taylor::{taylor_test, TaylorReport, TaylorRow, DEFAULT_TAYLOR_STEPS, NOISE_FACTOR};
pub use volume::shape_derivative_volume;
