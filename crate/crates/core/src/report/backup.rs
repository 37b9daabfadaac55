//! Side-by-side comparison of the three backup modes at one budget.

use super::stats::{stats, Stats};
use super::sweep::RowStatus;
use super::ReportError;
use crate::model::{AllocationProblem, BackupMode, Objective};
use crate::solver::{solve_problem, Solution, SolveConfig, SolveError};
use crate::travel::TravelTimeMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BackupRow {
    pub mode: BackupMode,
    pub status: RowStatus,
    pub drone1: Option<Stats>,
    /// Absent for B0.
    pub drone2: Option<Stats>,
    /// Drone 2 minus drone 1, per patient.
    pub difference: Option<Stats>,
    /// Stations holding two drones (B2 only).
    pub two_drone_stations: Option<usize>,
    pub objective: Option<f64>,
}

/// Per-patient gap between the second and first responder.
pub fn differences(sol: &Solution) -> Vec<f64> {
    sol.times.iter().map(|t| t[1] - t[0]).collect()
}

pub fn backup_compare(
    matrix: &TravelTimeMatrix,
    s: usize,
    t_max: f64,
    cfg: &SolveConfig,
) -> Result<Vec<BackupRow>, ReportError> {
    [BackupMode::B0, BackupMode::B1, BackupMode::B2]
        .into_iter()
        .map(|mode| {
            let p = AllocationProblem::new(matrix, Objective::TravelTime, s, t_max, mode);
            let (status, solved) = match solve_problem(&p, cfg) {
                Ok((form, sol)) => (RowStatus::Ok, Some((form, sol))),
                Err(SolveError::Infeasible(_)) => (RowStatus::Infeasible, None),
                Err(SolveError::NoIncumbent) => (RowStatus::TimeLimit, None),
                Err(SolveError::TimeLimitExceeded(sol)) => {
                    let form = crate::model::build_model(&p)?;
                    (RowStatus::TimeLimit, Some((form, *sol)))
                }
                Err(e) => return Err(e.into()),
            };
            let Some((form, sol)) = solved else {
                return Ok(BackupRow {
                    mode,
                    status,
                    drone1: None,
                    drone2: None,
                    difference: None,
                    two_drone_stations: None,
                    objective: None,
                });
            };
            let two = mode.coverage() == 2;
            Ok(BackupRow {
                mode,
                status,
                drone1: Some(stats(&sol.responder_times(0))?),
                drone2: if two { Some(stats(&sol.responder_times(1))?) } else { None },
                difference: if two { Some(stats(&differences(&sol))?) } else { None },
                two_drone_stations: (mode == BackupMode::B2)
                    .then(|| sol.drones_per_station(&form).iter().filter(|&&d| d == 2).count()),
                objective: Some(sol.objective),
            })
        })
        .collect()
}
