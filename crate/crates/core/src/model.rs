//! The station-allocation integer program in its solver-ready form.
//!
//! Variables are `y_i` (a drone is stationed at `i`) and `x_ij` (patient `j`
//! is served from `i`). Pairs slower than the time limit are dropped before
//! solving, and the linking constraint is kept in disaggregated form
//! `x_ij <= y_i`, which has the same integer points as the aggregated
//! `sum_j x_ij <= q * y_i` but a tighter relaxation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::travel::{feasibility_threshold, TravelTimeMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("objective weight must be 0 or 1, got {0}")]
    MixedObjective(f64),
    #[error("drone budget {budget} must be between 1 and {stations}")]
    InvalidBudget { budget: usize, stations: usize },
    #[error("time limit must be positive, got {0}")]
    InvalidTimeLimit(f64),
    #[error("patient {patient} has {allowed} admissible stations, needs {required}")]
    InfeasiblePatient {
        patient: usize,
        allowed: usize,
        required: usize,
    },
    #[error("unknown backup mode `{0}` (b0, b1, b2)")]
    UnknownBackup(String),
}

/// Which term of the objective is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Weight 0: minimise the summed travel time of all assignments.
    TravelTime,
    /// Weight 1: minimise the number of stations that hold a drone.
    StationCount,
}

impl Objective {
    /// Only the two pure weights are accepted; trading drones against
    /// seconds is not a meaningful objective here.
    pub fn from_alpha(alpha: f64) -> Result<Self, ModelError> {
        if alpha == 0.0 {
            Ok(Objective::TravelTime)
        } else if alpha == 1.0 {
            Ok(Objective::StationCount)
        } else {
            Err(ModelError::MixedObjective(alpha))
        }
    }

    pub fn alpha(self) -> u8 {
        match self {
            Objective::TravelTime => 0,
            Objective::StationCount => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BackupMode {
    /// One responder per patient.
    #[default]
    B0,
    /// Two responders from two different stations.
    B1,
    /// Two responders; a station may hold up to two drones.
    B2,
}

impl BackupMode {
    pub fn coverage(self) -> usize {
        match self {
            BackupMode::B0 => 1,
            BackupMode::B1 | BackupMode::B2 => 2,
        }
    }
}

impl fmt::Display for BackupMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackupMode::B0 => "B0",
            BackupMode::B1 => "B1",
            BackupMode::B2 => "B2",
        })
    }
}

impl FromStr for BackupMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "b0" => Ok(BackupMode::B0),
            "b1" => Ok(BackupMode::B1),
            "b2" => Ok(BackupMode::B2),
            _ => Err(ModelError::UnknownBackup(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AllocationProblem<'a> {
    pub objective: Objective,
    /// Maximum number of drones.
    pub budget: usize,
    /// Seconds; `f64::INFINITY` disables the limit.
    pub t_max: f64,
    pub backup: BackupMode,
    pub matrix: &'a TravelTimeMatrix,
}

impl<'a> AllocationProblem<'a> {
    pub fn new(
        matrix: &'a TravelTimeMatrix,
        objective: Objective,
        budget: usize,
        t_max: f64,
        backup: BackupMode,
    ) -> Self {
        AllocationProblem {
            objective,
            budget,
            t_max,
            backup,
            matrix,
        }
    }

    /// Stations after duplication.
    pub fn effective_stations(&self) -> usize {
        match self.backup {
            BackupMode::B2 => 2 * self.matrix.stations(),
            _ => self.matrix.stations(),
        }
    }
}

/// Solver-ready model after threshold elimination and (for B2) duplication.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelForm {
    pub objective: Objective,
    pub backup: BackupMode,
    pub budget: usize,
    pub t_max: f64,
    /// Required responders per patient.
    pub coverage: usize,
    /// Original station behind every effective station. For B2, effective
    /// stations `i` and `i + m` are the two drone slots of station `i`.
    pub group: Vec<usize>,
    /// Admissible `(station, seconds)` per patient, fastest first, ties by
    /// station index.
    pub by_patient: Vec<Vec<(usize, f64)>>,
    /// Admissible `(patient, seconds)` per effective station, by patient.
    pub by_station: Vec<Vec<(usize, f64)>>,
}

impl ModelForm {
    pub fn stations(&self) -> usize {
        self.group.len()
    }

    pub fn patients(&self) -> usize {
        self.by_patient.len()
    }

    pub fn original_stations(&self) -> usize {
        match self.backup {
            BackupMode::B2 => self.group.len() / 2,
            _ => self.group.len(),
        }
    }

    /// For B2, the effective station that must be open whenever `i` is; the
    /// second drone slot of a station is only used after the first.
    pub fn twin_leader(&self, i: usize) -> Option<usize> {
        let m = self.original_stations();
        (self.backup == BackupMode::B2 && i >= m).then(|| i - m)
    }

    pub fn twin_follower(&self, i: usize) -> Option<usize> {
        let m = self.original_stations();
        (self.backup == BackupMode::B2 && i < m).then(|| i + m)
    }

    /// Every admissible `(station, patient)` pair.
    pub fn allowed_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_station
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, _)| (i, j)))
    }
}

fn check_problem(p: &AllocationProblem) -> Result<(), ModelError> {
    let m_eff = p.effective_stations();
    if p.budget == 0 || p.budget > m_eff {
        return Err(ModelError::InvalidBudget {
            budget: p.budget,
            stations: m_eff,
        });
    }
    if !(p.t_max > 0.0) {
        return Err(ModelError::InvalidTimeLimit(p.t_max));
    }
    Ok(())
}

pub fn build_model(p: &AllocationProblem) -> Result<ModelForm, ModelError> {
    check_problem(p)?;
    let mat = p.matrix;
    let (m, q) = (mat.stations(), mat.patients());
    let copies = if p.backup == BackupMode::B2 { 2 } else { 1 };
    let m_eff = m * copies;
    let r = p.backup.coverage();

    let group: Vec<usize> = (0..m_eff).map(|i| i % m).collect();
    let mut by_station = vec![Vec::new(); m_eff];
    let mut by_patient = vec![Vec::new(); q];
    for (i, row) in by_station.iter_mut().enumerate() {
        for (j, &t) in mat.row(group[i]).iter().enumerate() {
            if t <= p.t_max {
                row.push((j, t));
                by_patient[j].push((i, t));
            }
        }
    }
    for (j, col) in by_patient.iter_mut().enumerate() {
        if col.len() < r {
            return Err(ModelError::InfeasiblePatient {
                patient: j,
                allowed: col.len(),
                required: r,
            });
        }
        col.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    }

    Ok(ModelForm {
        objective: p.objective,
        backup: p.backup,
        budget: p.budget,
        t_max: p.t_max,
        coverage: r,
        group,
        by_patient,
        by_station,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Feasible,
    /// No allocation meets the time limit; `threshold` is the smallest limit
    /// that would.
    Infeasible { threshold: f64 },
}

/// Smallest time limit under which the coverage requirement of `backup` can
/// be met with unlimited drones.
pub fn coverage_threshold(mat: &TravelTimeMatrix, backup: BackupMode) -> f64 {
    match backup {
        BackupMode::B0 | BackupMode::B2 => feasibility_threshold(mat),
        BackupMode::B1 => {
            if mat.stations() < 2 {
                return f64::INFINITY;
            }
            let mut worst = f64::NEG_INFINITY;
            for j in 0..mat.patients() {
                let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
                for i in 0..mat.stations() {
                    let t = mat.get(i, j);
                    if t < a {
                        b = a;
                        a = t;
                    } else if t < b {
                        b = t;
                    }
                }
                worst = worst.max(b);
            }
            worst
        }
    }
}

/// Time-limit feasibility. Budget feasibility needs a covering solve and is
/// left to the solver.
pub fn check_feasibility(p: &AllocationProblem) -> Feasibility {
    let threshold = coverage_threshold(p.matrix, p.backup);
    if p.t_max < threshold {
        Feasibility::Infeasible { threshold }
    } else {
        Feasibility::Feasible
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn fixture() -> TravelTimeMatrix {
        TravelTimeMatrix::from_rows(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 2.0, 2.0, 2.0],
            vec![5.0, 1.0, 1.0, 5.0],
        ])
        .unwrap()
    }

    #[test]
    fn alpha_must_be_pure() {
        assert_eq!(Objective::from_alpha(0.0), Ok(Objective::TravelTime));
        assert_eq!(Objective::from_alpha(1.0), Ok(Objective::StationCount));
        assert_eq!(Objective::from_alpha(0.5), Err(ModelError::MixedObjective(0.5)));
    }

    #[test]
    fn unlimited_time_keeps_every_pair() {
        let m = fixture();
        let f = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 1, f64::INFINITY, BackupMode::B0)).unwrap();
        assert_eq!(f.allowed_pairs().count(), 12);
        assert_eq!(f.coverage, 1);
        assert_eq!(f.by_patient[3], vec![(1, 2.0), (0, 4.0), (2, 5.0)]);
    }

    #[test]
    fn threshold_two_eliminates_slow_pairs() {
        let m = fixture();
        let f = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 1, 2.0, BackupMode::B0)).unwrap();
        let pairs: Vec<_> = f.allowed_pairs().collect();
        // (1,2) has t = 2 <= t_max and therefore stays admissible
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (1, 3), (2, 1), (2, 2)]);
        assert!(f.by_patient.iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn b2_duplicates_stations() {
        let m = fixture();
        let f = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 2, f64::INFINITY, BackupMode::B2)).unwrap();
        assert_eq!(f.stations(), 6);
        assert_eq!(f.group, vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(f.coverage, 2);
        assert_eq!(f.twin_leader(4), Some(1));
        assert_eq!(f.twin_follower(1), Some(4));
        assert_eq!(f.by_station[3], f.by_station[0]);
    }

    #[test]
    fn infeasible_patient_is_reported() {
        let m = fixture();
        let err = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 1, 1.5, BackupMode::B0)).unwrap_err();
        assert_eq!(err, ModelError::InfeasiblePatient { patient: 3, allowed: 0, required: 1 });
        let err = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 1, 2.0, BackupMode::B1)).unwrap_err();
        assert_eq!(err, ModelError::InfeasiblePatient { patient: 3, allowed: 1, required: 2 });
    }

    #[test]
    fn budget_and_limit_checks() {
        let m = fixture();
        assert!(matches!(
            build_model(&AllocationProblem::new(&m, Objective::TravelTime, 4, 10.0, BackupMode::B0)),
            Err(ModelError::InvalidBudget { .. })
        ));
        assert!(build_model(&AllocationProblem::new(&m, Objective::TravelTime, 4, 10.0, BackupMode::B2)).is_ok());
        assert!(matches!(
            build_model(&AllocationProblem::new(&m, Objective::TravelTime, 1, 0.0, BackupMode::B0)),
            Err(ModelError::InvalidTimeLimit(_))
        ));
    }

    #[test]
    fn feasibility_boundaries() {
        let m = fixture();
        let p = |t, b| AllocationProblem::new(&m, Objective::TravelTime, 1, t, b);
        assert_eq!(check_feasibility(&p(1.999, BackupMode::B0)), Feasibility::Infeasible { threshold: 2.0 });
        assert_eq!(check_feasibility(&p(2.0, BackupMode::B0)), Feasibility::Feasible);
        assert_eq!(check_feasibility(&p(2.0, BackupMode::B1)), Feasibility::Infeasible { threshold: 4.0 });
        assert_eq!(check_feasibility(&p(2.0, BackupMode::B2)), Feasibility::Feasible);
    }

    #[test]
    fn backup_mode_parsing() {
        assert_eq!("B2".parse::<BackupMode>(), Ok(BackupMode::B2));
        assert!("b3".parse::<BackupMode>().is_err());
    }
}
