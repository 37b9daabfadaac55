//! Exact allocation of defibrillator-drone base stations in mountainous
//! terrain.
//!
//! The pipeline runs from an [`instance::Instance`] (stations, patients,
//! terrain, drone) through a [`travel::TravelTimeMatrix`] and a
//! [`model::ModelForm`] to a [`solver::Solution`], which the [`report`]
//! module turns into statistics tables, sweeps and map layers.

pub mod geo;
pub mod instance;
pub mod model;
pub mod report;
pub mod solver;
pub mod terrain;
pub mod travel;

pub use instance::Instance;
pub use model::{AllocationProblem, BackupMode, ModelForm, Objective};
pub use solver::{solve, solve_problem, Solution, SolveConfig, SolveError};
pub use travel::{DroneProfile, TravelTimeMatrix};
