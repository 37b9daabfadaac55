//! Branch and bound for the travel-time objective.
//!
//! Relaxing the coverage rows with multipliers `lambda_j >= 0` leaves
//!
//! ```text
//! L(lambda) = r * sum_j lambda_j + min over |open| <= s of sum_{i open} rho_i
//! rho_i     = sum_j min(0, c_ij - lambda_j)
//! ```
//!
//! which is solved by opening the most negative `rho_i`. The multipliers are
//! tuned by subgradient steps; their value also yields reduced-cost bounds
//! for forcing a single station open or closed, used both for fixing and as
//! the bound of the flipped child when branching.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::assign::{covers, mask_cost};
use super::cover::{self, CoverOutcome};
use super::heuristic::{greedy, local_search};
use super::{Clock, InfeasibleReason, Solution, SolveConfig, SolveError, SolveStatus};
use crate::model::ModelForm;

pub(crate) const FREE: u8 = 0;
pub(crate) const OPEN: u8 = 1;
pub(crate) const CLOSED: u8 = 2;

/// Applies the B2 slot order to a partial fixing. Returns `false` when the
/// fixing contradicts it.
pub(crate) fn propagate_twins(form: &ModelForm, state: &mut [u8]) -> bool {
    for i in 0..form.stations() {
        if let Some(l) = form.twin_leader(i) {
            match (state[l], state[i]) {
                (CLOSED, OPEN) => return false,
                (CLOSED, FREE) => state[i] = CLOSED,
                (FREE, OPEN) => state[l] = OPEN,
                _ => {}
            }
        }
    }
    true
}

fn enough_stations(form: &ModelForm, state: &[u8]) -> bool {
    let r = form.coverage;
    form.by_patient
        .iter()
        .all(|col| col.iter().filter(|e| state[e.0] != CLOSED).take(r).count() == r)
}

struct Lagrangian<'a> {
    form: &'a ModelForm,
    rho: Vec<f64>,
    cand: Vec<usize>,
    sel: Vec<bool>,
    g: Vec<f64>,
}

/// Outcome of one evaluation of `L(lambda)` at a node.
#[derive(Debug, Clone, Copy)]
struct Eval {
    value: f64,
    /// `rho` of the last free station picked, or 0 with unused slots.
    rho_last: f64,
    /// `rho` of the best free station not picked, or 0.
    rho_next: f64,
    gnorm: f64,
}

impl<'a> Lagrangian<'a> {
    fn new(form: &'a ModelForm) -> Self {
        Lagrangian {
            form,
            rho: vec![0.0; form.stations()],
            cand: Vec::with_capacity(form.stations()),
            sel: vec![false; form.stations()],
            g: vec![0.0; form.patients()],
        }
    }

    fn eval(&mut self, state: &[u8], slots: usize, lambda: &[f64]) -> Eval {
        let f = self.form;
        self.rho.iter_mut().for_each(|v| *v = 0.0);
        for (col, &lam) in f.by_patient.iter().zip(lambda) {
            for &(i, c) in col {
                if c >= lam {
                    break;
                }
                if state[i] != CLOSED {
                    self.rho[i] += c - lam;
                }
            }
        }
        self.cand.clear();
        self.cand.extend((0..f.stations()).filter(|&i| state[i] == FREE && self.rho[i] < 0.0));
        let rho = &self.rho;
        self.cand.sort_by(|&a, &b| rho[a].total_cmp(&rho[b]).then(a.cmp(&b)));
        let picked = slots.min(self.cand.len());
        let rho_last = if picked == slots && picked > 0 { rho[self.cand[picked - 1]] } else { 0.0 };
        let rho_next = self.cand.get(picked).map_or(0.0, |&i| rho[i]);

        let mut value = 0.0;
        for &lam in lambda {
            value += lam;
        }
        value *= f.coverage as f64;
        for i in 0..f.stations() {
            self.sel[i] = state[i] == OPEN;
            if self.sel[i] {
                value += rho[i];
            }
        }
        for &i in &self.cand[..picked] {
            self.sel[i] = true;
            value += rho[i];
        }

        let r = f.coverage as f64;
        let mut gnorm = 0.0;
        for ((col, &lam), g) in f.by_patient.iter().zip(lambda).zip(self.g.iter_mut()) {
            let mut n = 0.0;
            for &(i, c) in col {
                if c >= lam {
                    break;
                }
                if self.sel[i] {
                    n += 1.0;
                }
            }
            *g = r - n;
            gnorm += *g * *g;
        }
        Eval { value, rho_last, rho_next, gnorm }
    }

    /// Penalty on `L` for forcing free station `i` to the other side.
    fn flip_penalty(&self, i: usize, e: &Eval) -> f64 {
        if self.sel[i] {
            e.rho_next - self.rho[i]
        } else {
            self.rho[i] - e.rho_last
        }
    }
}

struct Schedule {
    iterations: usize,
    theta: f64,
    patience: usize,
}

const ROOT: Schedule = Schedule { iterations: 3000, theta: 2.0, patience: 40 };
const CHILD: Schedule = Schedule { iterations: 250, theta: 0.5, patience: 12 };

struct Bounded {
    value: f64,
    lambda: Vec<f64>,
}

/// Subgradient ascent from `lambda`; returns the best multipliers found.
#[allow(clippy::too_many_arguments)]
fn ascend(
    lag: &mut Lagrangian,
    state: &[u8],
    slots: usize,
    mut lambda: Vec<f64>,
    sched: &Schedule,
    ub: &mut f64,
    incumbent: &mut [bool],
    prune_at: impl Fn(f64) -> f64,
    clock: &Clock,
) -> Bounded {
    let mut best = Bounded { value: f64::NEG_INFINITY, lambda: lambda.clone() };
    let mut theta = sched.theta;
    let mut stale = 0;
    for it in 0..sched.iterations {
        let e = lag.eval(state, slots, &lambda);
        if e.value > best.value {
            best.value = e.value;
            best.lambda.copy_from_slice(&lambda);
            stale = 0;
        } else {
            stale += 1;
        }
        // the relaxed selection is often a good allocation itself
        if it % 10 == 0 || e.gnorm == 0.0 {
            if let Some(c) = mask_cost(lag.form, &lag.sel) {
                if c < *ub {
                    *ub = c;
                    incumbent.copy_from_slice(&lag.sel);
                }
            }
        }
        if best.value >= prune_at(*ub) || e.gnorm == 0.0 || clock.expired() {
            break;
        }
        if stale >= sched.patience {
            theta /= 2.0;
            stale = 0;
            if theta < 1e-4 {
                break;
            }
        }
        let step = theta * (*ub - e.value).max(1e-9 * ub.abs().max(1.0)) / e.gnorm;
        for (l, g) in lambda.iter_mut().zip(&lag.g) {
            *l = (*l + step * g).max(0.0);
        }
    }
    best
}

struct Node {
    bound: f64,
    seq: u64,
    state: Vec<u8>,
    lambda: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound, then oldest node, on top
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

fn initial_incumbent(form: &ModelForm, clock: &Clock, nodes: &mut u64) -> Result<Vec<bool>, SolveError> {
    let n = form.stations();
    let none = vec![false; n];
    let mut open = vec![false; n];
    greedy(form, &mut open, form.budget, &none);
    if !covers(form, &open) {
        match cover::min_cover(form, form.budget, clock, nodes) {
            CoverOutcome::Optimal(sel) => {
                open.iter_mut().for_each(|o| *o = false);
                for i in sel {
                    open[i] = true;
                }
                greedy(form, &mut open, form.budget, &none);
            }
            CoverOutcome::Infeasible => {
                return Err(SolveError::Infeasible(InfeasibleReason::Budget { budget: form.budget }))
            }
            CoverOutcome::TimeLimit(_) => return Err(SolveError::NoIncumbent),
        }
    }
    local_search(form, &mut open, &none, clock);
    Ok(open)
}

pub(crate) fn solve(form: &ModelForm, cfg: &SolveConfig, clock: &Clock) -> Result<Solution, SolveError> {
    let n = form.stations();
    let r = form.coverage;
    let mut nodes = 0u64;
    let mut incumbent = initial_incumbent(form, clock, &mut nodes)?;
    let mut ub = mask_cost(form, &incumbent).expect("incumbent covers");
    // bounds and costs are sums of many terms; allow for their rounding
    let tol = cfg.tolerance;
    let prune_at = |ub: f64| ub - tol.max(1e-13 * ub.abs());

    let mut lag = Lagrangian::new(form);
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let root_lambda: Vec<f64> = form.by_patient.iter().map(|col| col[r - 1].1).collect();
    heap.push(Node { bound: f64::NEG_INFINITY, seq, state: vec![FREE; n], lambda: root_lambda });

    let mut timed_out = false;
    let mut global_lb = f64::NEG_INFINITY;
    while let Some(node) = heap.pop() {
        if node.bound >= prune_at(ub) {
            continue;
        }
        if clock.expired() {
            global_lb = node.bound;
            timed_out = true;
            break;
        }
        nodes += 1;
        if cfg.progress && nodes.is_multiple_of(1000) {
            eprintln!("nodes {nodes}  open {}  bound {:.3}  incumbent {ub:.3}", heap.len(), node.bound);
        }
        let is_root = node.seq == 0;
        let mut state = node.state;
        let mut lambda = node.lambda;
        let mut bound = node.bound;
        let mut fresh = true;
        loop {
            if !propagate_twins(form, &mut state) || !enough_stations(form, &state) {
                break;
            }
            let opened = state.iter().filter(|&&s| s == OPEN).count();
            if opened > form.budget {
                break;
            }
            let slots = form.budget - opened;
            let free = state.iter().filter(|&&s| s == FREE).count();
            if free == 0 || slots == 0 || free <= slots {
                // more stations never hurt, so open everything still free
                let leaf: Vec<bool> = state.iter().map(|&s| s == OPEN || (s == FREE && slots > 0)).collect();
                if let Some(c) = mask_cost(form, &leaf) {
                    if c < ub {
                        ub = c;
                        incumbent = leaf;
                    }
                }
                break;
            }
            if fresh {
                let sched = if is_root { &ROOT } else { &CHILD };
                let b = ascend(&mut lag, &state, slots, lambda, sched, &mut ub, &mut incumbent, prune_at, clock);
                lambda = b.lambda;
                bound = bound.max(b.value);
                fresh = false;
                if is_root {
                    // polish whatever the relaxation suggested
                    let mut open = incumbent.clone();
                    local_search(form, &mut open, &vec![false; n], clock);
                    if let Some(c) = mask_cost(form, &open) {
                        if c < ub {
                            ub = c;
                            incumbent = open;
                        }
                    }
                }
            }
            let e = lag.eval(&state, slots, &lambda);
            if bound >= prune_at(ub) {
                break;
            }

            let mut fixed = false;
            let mut pick: Option<(f64, usize)> = None;
            for i in 0..n {
                if state[i] != FREE {
                    continue;
                }
                let d = lag.flip_penalty(i, &e);
                if e.value + d >= prune_at(ub) {
                    state[i] = if lag.sel[i] { OPEN } else { CLOSED };
                    fixed = true;
                } else if pick.is_none_or(|(pd, _)| d > pd) {
                    pick = Some((d, i));
                }
            }
            if fixed {
                continue;
            }
            let (d, i) = pick.expect("free station");
            let (same, flip) = if lag.sel[i] { (OPEN, CLOSED) } else { (CLOSED, OPEN) };
            for (value, b) in [(same, bound), (flip, bound.max(e.value + d))] {
                let mut child = state.clone();
                child[i] = value;
                seq += 1;
                heap.push(Node { bound: b, seq, state: child, lambda: lambda.clone() });
            }
            break;
        }
    }

    if !timed_out {
        global_lb = ub;
    }
    let selected: Vec<usize> = (0..n).filter(|&i| incumbent[i]).collect();
    let status = if timed_out { SolveStatus::Incumbent } else { SolveStatus::ProvenOptimal };
    let sol = Solution::from_selection(form, selected, status, global_lb, nodes, clock.started)?;
    if timed_out {
        Err(SolveError::TimeLimitExceeded(Box::new(sol)))
    } else {
        Ok(sol)
    }
}
