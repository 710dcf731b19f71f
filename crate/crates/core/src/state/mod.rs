mod excitation;
mod params;
mod solver;

pub use excitation::{BoundaryExcitation, SpatialProfile, TimeSignal};
pub use params::ModelParams;
pub use solver::{
    acoustic_pressure, energy_trace, snapshot_energy, solve_state, solve_state_with_source, StateSettings,
    StateSolution, TimeGrid, VolumeSource, NEWMARK_BETA, NEWMARK_GAMMA,
};
