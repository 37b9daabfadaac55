//! Parameter sweeps: drone budget at a fixed time limit (travel-time
//! objective) and time limit with free budget (station-count objective).

use std::fmt;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use super::mmss::format_mmss;
use super::stats::{stats, Stats};
use super::ReportError;
use crate::model::{coverage_threshold, AllocationProblem, BackupMode, Objective};
use crate::solver::{solve_problem, Solution, SolveConfig, SolveError};
use crate::travel::TravelTimeMatrix;

/// Default spacing of time-limit sweeps, seconds.
pub const TMAX_STEP_S: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowStatus {
    Ok,
    /// No allocation satisfies the time limit and budget.
    Infeasible,
    /// Statistics describe the best allocation found before the limit.
    TimeLimit,
}

impl RowStatus {
    pub fn label(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Infeasible => "O_t̄",
            RowStatus::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepKey {
    Drones(usize),
    TimeLimit(f64),
}

impl fmt::Display for SweepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SweepKey::Drones(s) => write!(f, "{s}"),
            SweepKey::TimeLimit(t) if t.is_infinite() => f.write_str("inf"),
            SweepKey::TimeLimit(t) => f.write_str(&format_mmss(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub key: SweepKey,
    pub status: RowStatus,
    /// Drone-1 response times after reassignment.
    pub stats: Option<Stats>,
    /// Drones placed; for station-count sweeps the minimal budget.
    pub drones: Option<usize>,
    pub objective: Option<f64>,
    pub nodes: u64,
    pub wall_time: Duration,
}

impl StatsRow {
    fn from_outcome(key: SweepKey, outcome: Result<Solution, SolveError>) -> Result<Self, ReportError> {
        let (status, sol) = match outcome {
            Ok(sol) => (RowStatus::Ok, Some(sol)),
            Err(SolveError::Infeasible(_)) => (RowStatus::Infeasible, None),
            Err(SolveError::TimeLimitExceeded(sol)) => (RowStatus::TimeLimit, Some(*sol)),
            Err(SolveError::NoIncumbent) => (RowStatus::TimeLimit, None),
            Err(e) => return Err(e.into()),
        };
        Ok(match sol {
            Some(sol) => StatsRow {
                key,
                status,
                stats: Some(stats(&sol.responder_times(0))?),
                drones: Some(sol.selected.len()),
                objective: Some(sol.objective),
                nodes: sol.nodes_explored,
                wall_time: sol.wall_time,
            },
            None => StatsRow {
                key,
                status,
                stats: None,
                drones: None,
                objective: None,
                nodes: 0,
                wall_time: Duration::ZERO,
            },
        })
    }
}

/// Runs `f` over `items` in order; with more than one thread the items are
/// solved concurrently, one solver thread each, and reassembled in order.
fn run_rows<T: Sync>(
    items: &[T],
    cfg: &SolveConfig,
    f: impl Fn(&T, &SolveConfig) -> Result<StatsRow, ReportError> + Sync,
) -> Result<Vec<StatsRow>, ReportError> {
    if cfg.threads <= 1 {
        return items.iter().map(|x| f(x, cfg)).collect();
    }
    let single = SolveConfig { threads: 1, ..cfg.clone() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().map(|x| f(x, &single)).collect())
}

/// One travel-time solve per budget in `s_values`.
pub fn sweep_s(
    matrix: &TravelTimeMatrix,
    t_max: f64,
    s_values: &[usize],
    backup: BackupMode,
    cfg: &SolveConfig,
) -> Result<Vec<StatsRow>, ReportError> {
    run_rows(s_values, cfg, |&s, cfg| {
        let p = AllocationProblem::new(matrix, Objective::TravelTime, s, t_max, backup);
        StatsRow::from_outcome(SweepKey::Drones(s), solve_problem(&p, cfg).map(|(_, sol)| sol))
    })
}

/// One station-count solve per time limit in `t_values`, budget unlimited.
pub fn sweep_tmax(
    matrix: &TravelTimeMatrix,
    t_values: &[f64],
    backup: BackupMode,
    cfg: &SolveConfig,
) -> Result<Vec<StatsRow>, ReportError> {
    run_rows(t_values, cfg, |&t, cfg| {
        let budget = AllocationProblem::new(matrix, Objective::StationCount, 1, t, backup).effective_stations();
        let p = AllocationProblem::new(matrix, Objective::StationCount, budget, t, backup);
        StatsRow::from_outcome(SweepKey::TimeLimit(t), solve_problem(&p, cfg).map(|(_, sol)| sol))
    })
}

/// Time limits from the coverage threshold up to `end` in steps of `step`.
pub fn tmax_grid(matrix: &TravelTimeMatrix, backup: BackupMode, step: f64, end: f64) -> Vec<f64> {
    let start = coverage_threshold(matrix, backup);
    if !start.is_finite() || !(step > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let t = start + k as f64 * step;
        if t > end {
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}
