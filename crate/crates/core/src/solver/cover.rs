//! Fewest stations covering every patient `r` times within the time limit.
//!
//! Iterative deepening on the station count `k`, starting from a
//! Lagrangian lower bound. Each depth is a depth-first feasibility search
//! with unit propagation, Lagrangian pruning against `k`, reduced-cost
//! fixing and greedy completion.

use super::assign::{covers, twins_ordered};
use super::median::{propagate_twins, CLOSED, FREE, OPEN};
use super::{Clock, InfeasibleReason, Solution, SolveConfig, SolveError, SolveStatus};
use crate::model::ModelForm;

pub(crate) enum CoverOutcome {
    Optimal(Vec<usize>),
    /// No cover within the cap.
    Infeasible,
    /// Interrupted; best cover within the cap so far, if any.
    TimeLimit(Option<Vec<usize>>),
}

struct Interrupted;

/// Unit propagation: a patient whose free stations exactly meet its
/// remaining need takes all of them. Fills `need` with the residual need.
fn propagate(form: &ModelForm, state: &mut [u8], need: &mut [u32]) -> bool {
    let r = form.coverage as u32;
    loop {
        if !propagate_twins(form, state) {
            return false;
        }
        let mut changed = false;
        for (j, col) in form.by_patient.iter().enumerate() {
            let (mut have, mut free) = (0u32, 0u32);
            for &(i, _) in col {
                match state[i] {
                    OPEN => have += 1,
                    FREE => free += 1,
                    _ => {}
                }
            }
            let d = r.saturating_sub(have);
            need[j] = d;
            if free < d {
                return false;
            }
            if d > 0 && free == d {
                for &(i, _) in col {
                    if state[i] == FREE {
                        state[i] = OPEN;
                    }
                }
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
}

struct Lagrangian<'a> {
    form: &'a ModelForm,
    rho: Vec<f64>,
    cand: Vec<usize>,
    sel: Vec<bool>,
    g: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Eval {
    /// Bound on the number of further stations.
    value: f64,
    rho_last: f64,
    rho_next: f64,
    gnorm: f64,
}

impl<'a> Lagrangian<'a> {
    fn new(form: &'a ModelForm) -> Self {
        Lagrangian {
            form,
            rho: vec![0.0; form.stations()],
            cand: Vec::new(),
            sel: vec![false; form.stations()],
            g: vec![0.0; form.patients()],
        }
    }

    fn eval(&mut self, state: &[u8], need: &[u32], slots: usize, lambda: &[f64]) -> Eval {
        let f = self.form;
        self.cand.clear();
        for i in 0..f.stations() {
            self.sel[i] = false;
            if state[i] != FREE {
                continue;
            }
            let mut v = 1.0;
            for &(j, _) in &f.by_station[i] {
                if need[j] > 0 {
                    v -= lambda[j];
                }
            }
            self.rho[i] = v;
            if v < 0.0 {
                self.cand.push(i);
            }
        }
        let rho = &self.rho;
        self.cand.sort_by(|&a, &b| rho[a].total_cmp(&rho[b]).then(a.cmp(&b)));
        let picked = slots.min(self.cand.len());
        let rho_last = if picked == slots && picked > 0 { rho[self.cand[picked - 1]] } else { 0.0 };
        let rho_next = self.cand.get(picked).map_or(0.0, |&i| rho[i]);

        let mut value = 0.0;
        for (j, &d) in need.iter().enumerate() {
            self.g[j] = d as f64;
            value += d as f64 * lambda[j];
        }
        for &i in &self.cand[..picked] {
            self.sel[i] = true;
            value += rho[i];
            for &(j, _) in &f.by_station[i] {
                if need[j] > 0 {
                    self.g[j] -= 1.0;
                }
            }
        }
        let gnorm = self.g.iter().map(|g| g * g).sum();
        Eval { value, rho_last, rho_next, gnorm }
    }

    fn flip_penalty(&self, i: usize, e: &Eval) -> f64 {
        if self.sel[i] {
            e.rho_next - self.rho[i]
        } else {
            self.rho[i] - e.rho_last
        }
    }
}

/// Subgradient ascent towards `target` further stations. Returns the best
/// bound and leaves `lambda` at its multipliers.
#[allow(clippy::too_many_arguments)]
fn ascend(
    lag: &mut Lagrangian,
    state: &[u8],
    need: &[u32],
    slots: usize,
    lambda: &mut [f64],
    target: f64,
    (iterations, theta0, patience): (usize, f64, usize),
    clock: &Clock,
) -> f64 {
    for (l, &d) in lambda.iter_mut().zip(need) {
        if d == 0 {
            *l = 0.0;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_lambda = lambda.to_vec();
    let mut theta = theta0;
    let mut stale = 0;
    for _ in 0..iterations {
        let e = lag.eval(state, need, slots, lambda);
        if e.value > best {
            best = e.value;
            best_lambda.copy_from_slice(lambda);
            stale = 0;
        } else {
            stale += 1;
        }
        if best > target - 1.0 + 1e-6 || e.gnorm == 0.0 || clock.expired() {
            break;
        }
        if stale >= patience {
            theta /= 2.0;
            stale = 0;
            if theta < 1e-3 {
                break;
            }
        }
        let step = theta * (target - e.value) / e.gnorm;
        for (l, g) in lambda.iter_mut().zip(&lag.g) {
            *l = (*l + step * g).max(0.0);
        }
    }
    lambda.copy_from_slice(&best_lambda);
    best
}

/// Adds the free station serving the most still-needy patients until all
/// needs are met; `None` if that takes more than `k` stations in total.
fn complete(form: &ModelForm, state: &[u8], need: &[u32], k: usize) -> Option<Vec<bool>> {
    let mut open: Vec<bool> = state.iter().map(|&s| s == OPEN).collect();
    let mut need = need.to_vec();
    let mut count = open.iter().filter(|&&o| o).count();
    let mut missing: u32 = need.iter().sum();
    while missing > 0 {
        if count >= k {
            return None;
        }
        let mut best: Option<(usize, usize)> = None;
        for i in 0..form.stations() {
            if state[i] != FREE || open[i] || form.twin_leader(i).is_some_and(|l| !open[l]) {
                continue;
            }
            let gain = form.by_station[i].iter().filter(|e| need[e.0] > 0).count();
            if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        let (_, i) = best?;
        open[i] = true;
        count += 1;
        for &(j, _) in &form.by_station[i] {
            if need[j] > 0 {
                need[j] -= 1;
                missing -= 1;
            }
        }
    }
    Some(open)
}

const ROOT_SCHEDULE: (usize, f64, usize) = (600, 2.0, 25);
const NODE_SCHEDULE: (usize, f64, usize) = (80, 1.0, 8);

/// Looks for a cover with at most `k` stations below `root`.
fn search(
    form: &ModelForm,
    k: usize,
    root: &[u8],
    root_lambda: &[f64],
    clock: &Clock,
    nodes: &mut u64,
) -> Result<Option<Vec<bool>>, Interrupted> {
    let n = form.stations();
    let mut lag = Lagrangian::new(form);
    let mut need = vec![0u32; form.patients()];
    let mut stack = vec![(root.to_vec(), root_lambda.to_vec())];
    while let Some((mut state, mut lambda)) = stack.pop() {
        *nodes += 1;
        if clock.expired() {
            return Err(Interrupted);
        }
        let mut fresh = true;
        loop {
            if !propagate(form, &mut state, &mut need) {
                break;
            }
            let opened = state.iter().filter(|&&s| s == OPEN).count();
            if opened > k {
                break;
            }
            if need.iter().all(|&d| d == 0) {
                return Ok(Some(state.iter().map(|&s| s == OPEN).collect()));
            }
            let slots = k - opened;
            if slots == 0 {
                break;
            }
            let target = (k + 1 - opened) as f64;
            if fresh {
                fresh = false;
                let bound = ascend(&mut lag, &state, &need, slots, &mut lambda, target, NODE_SCHEDULE, clock);
                if bound > target - 1.0 + 1e-6 {
                    break;
                }
                if let Some(open) = complete(form, &state, &need, k) {
                    return Ok(Some(open));
                }
            }
            let e = lag.eval(&state, &need, slots, &lambda);
            if e.value > target - 1.0 + 1e-6 {
                break;
            }
            let mut fixed = false;
            for i in 0..n {
                if state[i] == FREE && e.value + lag.flip_penalty(i, &e) > target - 1.0 + 1e-6 {
                    state[i] = if lag.sel[i] { OPEN } else { CLOSED };
                    fixed = true;
                }
            }
            if fixed {
                continue;
            }

            // the neediest patient with the least slack decides the branch
            let mut pick: Option<(u32, usize)> = None;
            for (j, col) in form.by_patient.iter().enumerate() {
                if need[j] == 0 {
                    continue;
                }
                let free = col.iter().filter(|e| state[e.0] == FREE).count() as u32;
                let slack = free - need[j];
                if pick.is_none_or(|(s, _)| slack < s) {
                    pick = Some((slack, j));
                }
            }
            let (_, j) = pick.expect("a patient with residual need");
            let mut station: Option<(f64, usize)> = None;
            for &(i, _) in &form.by_patient[j] {
                if state[i] != FREE {
                    continue;
                }
                let i = form.twin_leader(i).filter(|&l| state[l] == FREE).unwrap_or(i);
                let v = lag.rho.get(i).copied().unwrap_or(0.0);
                if station.is_none_or(|(b, bi)| v < b || (v == b && i < bi)) {
                    station = Some((v, i));
                }
            }
            let (_, i) = station.expect("free station");
            let mut closed = state.clone();
            closed[i] = CLOSED;
            stack.push((closed, lambda.clone()));
            state[i] = OPEN;
            stack.push((state, lambda));
            break;
        }
    }
    Ok(None)
}

pub(crate) fn min_cover(form: &ModelForm, cap: usize, clock: &Clock, nodes: &mut u64) -> CoverOutcome {
    let n = form.stations();
    let mut state = vec![FREE; n];
    let mut need = vec![0u32; form.patients()];
    if !propagate(form, &mut state, &mut need) {
        return CoverOutcome::Infeasible;
    }
    let opened = state.iter().filter(|&&s| s == OPEN).count();
    let greedy = complete(form, &state, &need, n).expect("all stations cover");
    let upper = greedy.iter().filter(|&&o| o).count();
    let greedy_sel: Vec<usize> = (0..n).filter(|&i| greedy[i]).collect();

    let mut lambda = vec![0.0; form.patients()];
    for (j, col) in form.by_patient.iter().enumerate() {
        lambda[j] = 1.0 / col.len() as f64;
    }
    let mut lag = Lagrangian::new(form);
    let target = (upper - opened) as f64;
    let bound = ascend(&mut lag, &state, &need, n - opened, &mut lambda, target, ROOT_SCHEDULE, clock);
    let lower = opened + (bound - 1e-6).ceil().max(0.0) as usize;
    if lower > cap {
        return CoverOutcome::Infeasible;
    }
    let best_in_cap = (upper <= cap).then(|| greedy_sel.clone());

    for k in lower..upper.min(cap + 1) {
        match search(form, k, &state, &lambda, clock, nodes) {
            Ok(Some(open)) => {
                debug_assert!(covers(form, &open) && twins_ordered(form, &open));
                return CoverOutcome::Optimal((0..n).filter(|&i| open[i]).collect());
            }
            Ok(None) => {}
            Err(Interrupted) => return CoverOutcome::TimeLimit(best_in_cap),
        }
    }
    match best_in_cap {
        Some(sel) => CoverOutcome::Optimal(sel),
        None => CoverOutcome::Infeasible,
    }
}

pub(crate) fn solve(form: &ModelForm, _cfg: &SolveConfig, clock: &Clock) -> Result<Solution, SolveError> {
    let mut nodes = 0;
    match min_cover(form, form.budget, clock, &mut nodes) {
        CoverOutcome::Optimal(sel) => {
            let k = sel.len() as f64;
            Solution::from_selection(form, sel, SolveStatus::ProvenOptimal, k, nodes, clock.started)
        }
        CoverOutcome::Infeasible => Err(SolveError::Infeasible(InfeasibleReason::Budget { budget: form.budget })),
        CoverOutcome::TimeLimit(Some(sel)) => {
            let sol = Solution::from_selection(form, sel, SolveStatus::Incumbent, 0.0, nodes, clock.started)?;
            Err(SolveError::TimeLimitExceeded(Box::new(sol)))
        }
        CoverOutcome::TimeLimit(None) => Err(SolveError::NoIncumbent),
    }
}
