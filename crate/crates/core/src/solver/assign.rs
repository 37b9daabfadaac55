use super::SolveError;
use crate::model::ModelForm;

/// Assigns every patient to its `r` fastest admissible stations among
/// `selected`, ties by lower station index.
pub fn reassign(form: &ModelForm, selected: &[usize]) -> Result<Vec<Vec<usize>>, SolveError> {
    let mut open = vec![false; form.stations()];
    for &i in selected {
        open[i] = true;
    }
    let r = form.coverage;
    form.by_patient
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let picked: Vec<usize> = col.iter().filter(|e| open[e.0]).take(r).map(|e| e.0).collect();
            if picked.len() < r {
                Err(SolveError::CoverageGap { patient: j })
            } else {
                Ok(picked)
            }
        })
        .collect()
}

pub(crate) fn assignment_times(form: &ModelForm, assignment: &[Vec<usize>]) -> Vec<Vec<f64>> {
    assignment
        .iter()
        .zip(&form.by_patient)
        .map(|(a, col)| {
            a.iter()
                .map(|&i| col.iter().find(|e| e.0 == i).map(|e| e.1).unwrap())
                .collect()
        })
        .collect()
}

/// Summation order is fixed (patient, then responder rank) so that every
/// code path reports bit-identical objectives for the same station set.
pub(crate) fn travel_sum(times: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for t in times {
        for &v in t {
            total += v;
        }
    }
    total
}

/// Objective of an open-station mask, `None` if some patient is short of
/// responders. Same summation order as [`travel_sum`].
pub(crate) fn mask_cost(form: &ModelForm, open: &[bool]) -> Option<f64> {
    let r = form.coverage;
    let mut total = 0.0;
    for col in &form.by_patient {
        let mut need = r;
        for &(i, c) in col {
            if open[i] {
                total += c;
                need -= 1;
                if need == 0 {
                    break;
                }
            }
        }
        if need > 0 {
            return None;
        }
    }
    Some(total)
}

pub(crate) fn covers(form: &ModelForm, open: &[bool]) -> bool {
    let r = form.coverage;
    form.by_patient
        .iter()
        .all(|col| col.iter().filter(|e| open[e.0]).take(r).count() == r)
}

/// Whether the open set respects the B2 slot order.
pub(crate) fn twins_ordered(form: &ModelForm, open: &[bool]) -> bool {
    (0..form.stations()).all(|i| match form.twin_leader(i) {
        Some(l) => !open[i] || open[l],
        None => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::fixture;
    use crate::model::{build_model, AllocationProblem, BackupMode, Objective};

    #[test]
    fn nearest_selected_station() {
        let m = fixture();
        let f = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 2, f64::INFINITY, BackupMode::B0)).unwrap();
        let a = reassign(&f, &[1, 2]).unwrap();
        assert_eq!(a, vec![vec![1], vec![2], vec![2], vec![1]]);
        assert_eq!(travel_sum(&assignment_times(&f, &a)), 6.0);
        assert_eq!(mask_cost(&f, &[false, true, true]), Some(6.0));
    }

    #[test]
    fn two_responders_fastest_first() {
        let m = fixture();
        let f = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 3, f64::INFINITY, BackupMode::B1)).unwrap();
        let a = reassign(&f, &[0, 1, 2]).unwrap();
        assert_eq!(a[0], vec![0, 1]);
        // patient 1: station 2 at 1 s, then 0 and 1 tie at 2 s
        assert_eq!(a[1], vec![2, 0]);
    }

    #[test]
    fn gap_is_reported() {
        let m = fixture();
        let f = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 1, 2.0, BackupMode::B0)).unwrap();
        assert_eq!(reassign(&f, &[2]), Err(SolveError::CoverageGap { patient: 0 }));
        assert_eq!(mask_cost(&f, &[false, false, true]), None);
    }

    #[test]
    fn twin_order() {
        let m = fixture();
        let f = build_model(&AllocationProblem::new(&m, Objective::TravelTime, 2, f64::INFINITY, BackupMode::B2)).unwrap();
        assert!(twins_ordered(&f, &[true, false, false, true, false, false]));
        assert!(!twins_ordered(&f, &[false, false, false, true, false, false]));
    }
}
