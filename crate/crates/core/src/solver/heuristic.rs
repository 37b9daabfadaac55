//! Primal heuristics for the travel-time objective: greedy addition and
//! best-improvement swap search.

use rayon::prelude::*;

use super::assign::mask_cost;
use super::Clock;
use crate::model::ModelForm;

/// Cost charged for a missing responder; larger than any gain from
/// re-routing, so coverage always comes first.
fn penalty(form: &ModelForm) -> f64 {
    let worst = form
        .by_patient
        .iter()
        .filter_map(|c| c.last().map(|e| e.1))
        .fold(0.0, f64::max);
    1.0 + 2.0 * worst
}

/// Per patient, the `r`-th and `r + 1`-th fastest open responder times, or
/// the penalty where missing.
struct Ranks {
    worst: Vec<f64>,
    next: Vec<f64>,
    /// Patients for which a station is among the first `r`, with its time.
    served_by: Vec<Vec<(usize, f64)>>,
}

fn ranks(form: &ModelForm, open: &[bool], pen: f64) -> Ranks {
    let r = form.coverage;
    let q = form.patients();
    let mut out = Ranks {
        worst: vec![pen; q],
        next: vec![pen; q],
        served_by: vec![Vec::new(); form.stations()],
    };
    for (j, col) in form.by_patient.iter().enumerate() {
        let mut seen = 0;
        for &(i, c) in col {
            if !open[i] {
                continue;
            }
            if seen < r {
                out.served_by[i].push((j, c));
                if seen == r - 1 {
                    out.worst[j] = c;
                }
            } else {
                out.next[j] = c;
                break;
            }
            seen += 1;
        }
    }
    out
}

fn can_open(form: &ModelForm, open: &[bool], i: usize) -> bool {
    !open[i] && form.twin_leader(i).is_none_or(|l| open[l])
}

/// Adds stations one at a time, each time the one with the largest drop in
/// penalised cost, until `count` are open or nothing helps. Stations marked
/// in `banned` are never added.
pub(crate) fn greedy(form: &ModelForm, open: &mut [bool], count: usize, banned: &[bool]) {
    let pen = penalty(form);
    let rk = ranks(form, open, pen);
    let r = form.coverage;
    // the r fastest open responder times per patient, ascending
    let mut top: Vec<Vec<f64>> = form
        .by_patient
        .iter()
        .map(|col| col.iter().filter(|e| open[e.0]).take(r).map(|e| e.1).collect())
        .collect();
    let mut worst = rk.worst;
    let mut opened = open.iter().filter(|&&o| o).count();
    while opened < count {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..form.stations() {
            if banned[i] || !can_open(form, open, i) {
                continue;
            }
            let gain: f64 = form.by_station[i].iter().map(|&(j, c)| (worst[j] - c).max(0.0)).sum();
            if gain > 0.0 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        let Some((_, i)) = best else { break };
        open[i] = true;
        opened += 1;
        for &(j, c) in &form.by_station[i] {
            if c < worst[j] {
                let t = &mut top[j];
                let at = t.partition_point(|&x| x <= c);
                t.insert(at, c);
                t.truncate(r);
                worst[j] = if t.len() == r { t[r - 1] } else { pen };
            }
        }
    }
}

/// Swaps one open station for one closed station while that strictly
/// lowers the objective, taking the best swap each round.
pub(crate) fn local_search(form: &ModelForm, open: &mut [bool], banned: &[bool], clock: &Clock) {
    let pen = penalty(form);
    let n = form.stations();
    let Some(mut current) = mask_cost(form, open) else { return };
    loop {
        if clock.expired() {
            return;
        }
        let rk = ranks(form, open, pen);
        let outs: Vec<usize> = (0..n)
            .filter(|&i| open[i] && form.twin_follower(i).is_none_or(|f| !open[f]))
            .collect();
        let best = outs
            .par_iter()
            .map(|&out| {
                let mut first_r = vec![false; form.patients()];
                let mut loss = 0.0;
                for &(j, c) in &rk.served_by[out] {
                    first_r[j] = true;
                    // dropping `out` promotes the next responder
                    loss += rk.next[j] - c;
                }
                let mut best: Option<(f64, usize, usize)> = None;
                for inc in 0..n {
                    if open[inc] || banned[inc] {
                        continue;
                    }
                    if let Some(l) = form.twin_leader(inc) {
                        if !open[l] || l == out {
                            continue;
                        }
                    }
                    let mut gain = 0.0;
                    for &(j, c) in &form.by_station[inc] {
                        let w = if first_r[j] { rk.next[j] } else { rk.worst[j] };
                        gain += (w - c).max(0.0);
                    }
                    let delta = loss - gain;
                    if best.is_none_or(|(d, _, _)| delta < d) {
                        best = Some((delta, out, inc));
                    }
                }
                best
            })
            .reduce(
                || None,
                |a, b| match (a, b) {
                    (Some(x), Some(y)) => Some(if y.0 < x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                },
            );
        let Some((delta, out, inc)) = best else { return };
        if delta >= -1e-9 * current.abs().max(1.0) {
            return;
        }
        open[out] = false;
        open[inc] = true;
        match mask_cost(form, open) {
            Some(c) if c < current => current = c,
            _ => {
                open[out] = true;
                open[inc] = false;
                return;
            }
        }
    }
}
