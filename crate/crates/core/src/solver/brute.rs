//! Exhaustive enumeration of station subsets. Used as an oracle for small
//! instances; it shares no search logic with the exact solvers.

use std::time::Instant;

use super::assign::{covers, mask_cost, twins_ordered};
use super::{model_error, InfeasibleReason, Solution, SolveError, SolveStatus};
use crate::model::{build_model, check_feasibility, AllocationProblem, Feasibility, ModelForm, Objective};

pub const BRUTE_FORCE_MAX_STATIONS: usize = 20;

/// All `k`-subsets of `0..n` as bit masks, increasing.
fn subsets(n: usize, k: usize) -> impl Iterator<Item = u32> {
    let limit = 1u64 << n;
    let mut next = if k == 0 { Some(0u64) } else if k <= n { Some((1u64 << k) - 1) } else { None };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < limit).then_some(n)
        };
        Some(cur as u32)
    })
}

fn mask_to_open(mask: u32, n: usize, open: &mut [bool]) {
    for (i, o) in open.iter_mut().enumerate().take(n) {
        *o = mask >> i & 1 == 1;
    }
}

/// Exhaustive optimum. Among equal objectives the first subset in
/// (size, mask) order wins.
pub fn brute_force(form: &ModelForm) -> Result<Solution, SolveError> {
    let started = Instant::now();
    let n = form.stations();
    if n > BRUTE_FORCE_MAX_STATIONS {
        return Err(SolveError::TooLarge { stations: n, max: BRUTE_FORCE_MAX_STATIONS });
    }
    let mut open = vec![false; n];
    let mut evaluated = 0u64;
    let mut best: Option<(f64, u32)> = None;
    'sizes: for k in 1..=form.budget.min(n) {
        for mask in subsets(n, k) {
            mask_to_open(mask, n, &mut open);
            evaluated += 1;
            match form.objective {
                Objective::TravelTime => {
                    if let Some(c) = mask_cost(form, &open) {
                        if best.is_none_or(|(b, _)| c < b) {
                            best = Some((c, mask));
                        }
                    }
                }
                Objective::StationCount => {
                    if covers(form, &open) {
                        best = Some((k as f64, mask));
                        break 'sizes;
                    }
                }
            }
        }
    }
    let Some((value, mask)) = best else {
        return Err(SolveError::Infeasible(InfeasibleReason::Budget { budget: form.budget }));
    };
    mask_to_open(mask, n, &mut open);
    // the slot order of B2 is a symmetry breaker; an unordered optimum has
    // an ordered twin with the same objective
    let selected = canonical_twins(form, &open);
    Solution::from_selection(form, selected, SolveStatus::ProvenOptimal, value, evaluated, started)
}

fn canonical_twins(form: &ModelForm, open: &[bool]) -> Vec<usize> {
    let mut open = open.to_vec();
    if !twins_ordered(form, &open) {
        for i in 0..form.stations() {
            if let Some(l) = form.twin_leader(i) {
                if open[i] && !open[l] {
                    open[i] = false;
                    open[l] = true;
                }
            }
        }
    }
    (0..open.len()).filter(|&i| open[i]).collect()
}

/// Feasibility check, model construction and brute force in one step.
pub fn brute_force_problem(p: &AllocationProblem) -> Result<(ModelForm, Solution), SolveError> {
    if let Feasibility::Infeasible { threshold } = check_feasibility(p) {
        return Err(SolveError::Infeasible(InfeasibleReason::TimeLimit { threshold }));
    }
    let form = build_model(p).map_err(model_error)?;
    let sol = brute_force(&form)?;
    Ok((form, sol))
}
