//! Exact solving of [`ModelForm`]s.
//!
//! * Travel-time objective: best-first branch and bound over the station
//!   variables. Bounds come from a Lagrangian relaxation of the coverage
//!   rows, tuned by subgradient steps; a greedy start refined by swap search
//!   supplies the first incumbent.
//! * Station-count objective (and budget feasibility for the travel-time
//!   objective): iterative deepening on the number of stations, each depth
//!   a depth-first covering search with Lagrangian pruning.
//!
//! For a fixed station set the assignment is never searched: every patient
//! takes its `r` fastest admissible open stations.

mod assign;
mod brute;
mod cover;
mod heuristic;
mod median;

use std::time::{Duration, Instant};

use thiserror::Error;

pub use assign::reassign;
pub use brute::{brute_force, brute_force_problem, BRUTE_FORCE_MAX_STATIONS};

use crate::model::{build_model, check_feasibility, AllocationProblem, Feasibility, ModelError, ModelForm, Objective};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Wall-clock limit in seconds; `0` disables it.
    pub time_limit: f64,
    /// Worker threads for the parallel parts of the search. Results do not
    /// depend on this value.
    pub threads: usize,
    /// Absolute objective tolerance in seconds.
    pub tolerance: f64,
    /// Emit progress lines on stderr.
    pub progress: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: 0.0,
            threads: 1,
            tolerance: 1e-9,
            progress: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    ProvenOptimal,
    /// Best incumbent when the time limit struck; optimality not proven.
    Incumbent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InfeasibleReason {
    /// The time limit is below the coverage threshold.
    TimeLimit { threshold: f64 },
    /// Some patient has too few admissible stations.
    Patient { patient: usize },
    /// Covering all patients needs more drones than the budget allows.
    Budget { budget: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("infeasible: {0:?}")]
    Infeasible(InfeasibleReason),
    #[error("time limit reached before optimality was proven")]
    TimeLimitExceeded(Box<Solution>),
    #[error("time limit reached before any feasible allocation was found")]
    NoIncumbent,
    #[error("brute force supports at most {max} effective stations, got {stations}")]
    TooLarge { stations: usize, max: usize },
    #[error("patient {patient} has fewer than the required number of admissible selected stations")]
    CoverageGap { patient: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub objective_kind: Objective,
    /// Effective station indices holding a drone, ascending.
    pub selected: Vec<usize>,
    /// Per patient, the responding effective stations fastest first.
    pub assignment: Vec<Vec<usize>>,
    /// Per patient, the responders' travel times in seconds, ascending.
    pub times: Vec<Vec<f64>>,
    /// Summed seconds or station count, depending on `objective_kind`.
    pub objective: f64,
    /// Best proven lower bound on the objective.
    pub lower_bound: f64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

impl Solution {
    pub(crate) fn from_selection(
        form: &ModelForm,
        mut selected: Vec<usize>,
        status: SolveStatus,
        lower_bound: f64,
        nodes_explored: u64,
        started: Instant,
    ) -> Result<Self, SolveError> {
        selected.sort_unstable();
        selected.dedup();
        let assignment = reassign(form, &selected)?;
        let times = assign::assignment_times(form, &assignment);
        let objective = match form.objective {
            Objective::TravelTime => assign::travel_sum(&times),
            Objective::StationCount => selected.len() as f64,
        };
        Ok(Solution {
            objective_kind: form.objective,
            selected,
            assignment,
            times,
            objective,
            lower_bound: lower_bound.min(objective),
            status,
            nodes_explored,
            wall_time: started.elapsed(),
        })
    }

    /// Sum of all responder times, seconds.
    pub fn travel_sum(&self) -> f64 {
        assign::travel_sum(&self.times)
    }

    /// Travel time of the `k`-th responder (0 = nearest) for every patient.
    pub fn responder_times(&self, k: usize) -> Vec<f64> {
        self.times.iter().map(|t| t[k]).collect()
    }

    /// Drones per original station.
    pub fn drones_per_station(&self, form: &ModelForm) -> Vec<u8> {
        let mut counts = vec![0u8; form.original_stations()];
        for &i in &self.selected {
            counts[form.group[i]] += 1;
        }
        counts
    }

    /// Original stations holding at least one drone, ascending.
    pub fn stations_used(&self, form: &ModelForm) -> Vec<usize> {
        let mut v: Vec<usize> = self.selected.iter().map(|&i| form.group[i]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

pub(crate) struct Clock {
    started: Instant,
    deadline: Option<Instant>,
}

impl Clock {
    pub(crate) fn new(cfg: &SolveConfig) -> Self {
        let started = Instant::now();
        let deadline = (cfg.time_limit > 0.0).then(|| started + Duration::from_secs_f64(cfg.time_limit));
        Clock { started, deadline }
    }

    pub(crate) fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Solves a constructed model to proven optimality.
pub fn solve(form: &ModelForm, cfg: &SolveConfig) -> Result<Solution, SolveError> {
    let clock = Clock::new(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| match form.objective {
        Objective::TravelTime => median::solve(form, cfg, &clock),
        Objective::StationCount => cover::solve(form, cfg, &clock),
    })
}

pub(crate) fn model_error(e: ModelError) -> SolveError {
    match e {
        ModelError::InfeasiblePatient { patient, .. } => SolveError::Infeasible(InfeasibleReason::Patient { patient }),
        other => SolveError::Model(other),
    }
}

/// Feasibility check, model construction and solve in one step.
pub fn solve_problem(p: &AllocationProblem, cfg: &SolveConfig) -> Result<(ModelForm, Solution), SolveError> {
    if let Feasibility::Infeasible { threshold } = check_feasibility(p) {
        // argument errors take precedence over infeasibility
        build_model(&AllocationProblem { t_max: f64::INFINITY, ..*p })?;
        return Err(SolveError::Infeasible(InfeasibleReason::TimeLimit { threshold }));
    }
    let form = build_model(p).map_err(model_error)?;
    let sol = solve(&form, cfg)?;
    Ok((form, sol))
}
