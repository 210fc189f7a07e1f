//! Reference solvers: exhaustive enumeration, lazy greedy and Monte Carlo
//! simulation of the cascade.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::CascadeProblem;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seeding::child_rng;

pub const DEFAULT_CAP: u128 = 10_000_000;

/// Relative tolerance under which two cascade values count as tied.
const CASCADE_TIE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Lexicographically smallest optimal set.
    pub best_set: Vec<usize>,
    pub best_value: f64,
    pub num_evaluated: u128,
    /// Every optimal set, in enumeration order.
    pub ties: Vec<Vec<usize>>,
}

/// `C(m, k)`, saturating at `u128::MAX`.
pub fn binomial(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((m - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn check_cap(m: usize, k: usize, cap: u128) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in [1, {m}]")));
    }
    let count = binomial(m, k);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok(())
}

/// Visits every `k`-subset of `0..m` in colexicographic order. The callback
/// receives the senders that left and joined since the previous subset.
fn for_each_subset(m: usize, k: usize, mut visit: impl FnMut(&[usize], &[usize], &[usize])) {
    let mut c: Vec<usize> = (0..k).collect();
    let mut removed = Vec::new();
    let mut added: Vec<usize> = c.clone();
    loop {
        visit(&c, &removed, &added);
        removed.clear();
        added.clear();
        // colex successor: bump the first element that can move up
        let Some(j) = (0..k).find(|&j| c[j] + 1 < if j + 1 < k { c[j + 1] } else { m }) else {
            return;
        };
        let old: Vec<usize> = c[..=j].to_vec();
        c[j] += 1;
        for (t, v) in c[..j].iter_mut().enumerate() {
            *v = t;
        }
        let new = &c[..=j];
        removed.extend(old.iter().filter(|v| !new.contains(v)));
        added.extend(new.iter().filter(|v| !old.contains(v)));
    }
}

struct Best {
    value: f64,
    tol: f64,
    relative: bool,
    candidates: Vec<(Vec<usize>, f64)>,
}

impl Best {
    fn new(relative: bool) -> Self {
        Best { value: f64::NEG_INFINITY, tol: 0.0, relative, candidates: Vec::new() }
    }

    fn slack(&self, v: f64) -> f64 {
        if self.relative {
            CASCADE_TIE * v.abs().max(1.0)
        } else {
            self.tol
        }
    }

    fn offer(&mut self, set: &[usize], v: f64) {
        if v > self.value {
            self.value = v;
            let floor = v - self.slack(v);
            self.candidates.retain(|(_, w)| *w >= floor);
        }
        if v >= self.value - self.slack(self.value) {
            self.candidates.push((set.to_vec(), v));
        }
    }

    fn finish(self, num_evaluated: u128) -> OracleResult {
        let ties: Vec<Vec<usize>> = self.candidates.into_iter().map(|(s, _)| s).collect();
        let best_set = ties.iter().min().cloned().unwrap_or_default();
        OracleResult { best_set, best_value: self.value, num_evaluated, ties }
    }
}

pub fn brute_force_deterministic(g: &BipartiteGraph, k: usize) -> Result<OracleResult> {
    brute_force_deterministic_capped(g, k, DEFAULT_CAP)
}

pub fn brute_force_deterministic_capped(g: &BipartiteGraph, k: usize, cap: u128) -> Result<OracleResult> {
    check_cap(g.num_senders(), k, cap)?;
    let mut cover = vec![0u32; g.num_receivers()];
    let mut covered = 0usize;
    let mut best = Best::new(false);
    let mut evaluated = 0u128;
    for_each_subset(g.num_senders(), k, |set, removed, added| {
        for &i in removed {
            for &j in g.receivers_of(i) {
                cover[j] -= 1;
                if cover[j] == 0 {
                    covered -= 1;
                }
            }
        }
        for &i in added {
            for &j in g.receivers_of(i) {
                if cover[j] == 0 {
                    covered += 1;
                }
                cover[j] += 1;
            }
        }
        evaluated += 1;
        best.offer(set, covered as f64);
    });
    Ok(best.finish(evaluated))
}

/// Exact per-receiver log miss probability for the current membership.
fn log_miss_of(prob: &CascadeProblem, member: &[bool], j: usize, log_q: &[f64]) -> f64 {
    let g = prob.graph();
    g.senders_of(j)
        .iter()
        .zip(g.in_range(j))
        .filter(|(i, _)| member[**i])
        .map(|(_, pos)| log_q[pos])
        .sum()
}

fn arc_log_q(prob: &CascadeProblem) -> Vec<f64> {
    (0..prob.graph().num_arcs()).map(|pos| (-prob.arc_prob(pos)).ln_1p()).collect()
}

pub fn brute_force_cascade(prob: &CascadeProblem) -> Result<OracleResult> {
    brute_force_cascade_capped(prob, DEFAULT_CAP)
}

pub fn brute_force_cascade_capped(prob: &CascadeProblem, cap: u128) -> Result<OracleResult> {
    let (m, k) = (prob.num_senders(), prob.k());
    check_cap(m, k, cap)?;
    let g = prob.graph();
    let log_q = arc_log_q(prob);
    let mut member = vec![false; m];
    let mut reach = vec![0.0; g.num_receivers()];
    let mut best = Best::new(true);
    let mut evaluated = 0u128;
    let mut touched = Vec::new();
    for_each_subset(m, k, |set, removed, added| {
        removed.iter().for_each(|&i| member[i] = false);
        added.iter().for_each(|&i| member[i] = true);
        touched.clear();
        for &i in removed.iter().chain(added) {
            touched.extend_from_slice(g.receivers_of(i));
        }
        for &j in &touched {
            reach[j] = -log_miss_of(prob, &member, j, &log_q).exp_m1();
        }
        evaluated += 1;
        best.offer(set, reach.iter().sum());
    });
    Ok(best.finish(evaluated))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyResult {
    /// Senders in selection order.
    pub order: Vec<usize>,
    pub value: f64,
}

impl GreedyResult {
    pub fn sorted_set(&self) -> Vec<usize> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }
}

#[derive(Debug, PartialEq)]
struct Entry {
    gain: f64,
    sender: usize,
    round: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then(other.sender.cmp(&self.sender))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy greedy: stale gains are upper bounds by submodularity, so an entry
/// that is fresh when it reaches the top of the heap is the exact argmax,
/// with ties to the lowest index.
fn lazy_greedy(m: usize, k: usize, mut gain: impl FnMut(usize) -> f64, mut commit: impl FnMut(usize)) -> Vec<usize> {
    let mut heap: BinaryHeap<Entry> = (0..m).map(|i| Entry { gain: gain(i), sender: i, round: 0 }).collect();
    let mut order = Vec::with_capacity(k);
    while order.len() < k {
        let top = heap.pop().expect("k ≤ m");
        if top.round == order.len() {
            commit(top.sender);
            order.push(top.sender);
        } else {
            heap.push(Entry { gain: gain(top.sender), sender: top.sender, round: order.len() });
        }
    }
    order
}

pub fn greedy_deterministic(g: &BipartiteGraph, k: usize) -> Result<GreedyResult> {
    let m = g.num_senders();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in [1, {m}]")));
    }
    let covered = std::cell::RefCell::new(vec![false; g.num_receivers()]);
    let order = lazy_greedy(
        m,
        k,
        |i| g.receivers_of(i).iter().filter(|&&j| !covered.borrow()[j]).count() as f64,
        |i| g.receivers_of(i).iter().for_each(|&j| covered.borrow_mut()[j] = true),
    );
    let value = g.reachable_count(&order)? as f64;
    Ok(GreedyResult { order, value })
}

pub fn greedy_cascade(prob: &CascadeProblem) -> GreedyResult {
    let (m, k) = (prob.num_senders(), prob.k());
    let g = prob.graph();
    let log_q = arc_log_q(prob);
    let state = std::cell::RefCell::new((vec![false; m], vec![0.0f64; g.num_receivers()]));
    let order = lazy_greedy(
        m,
        k,
        |i| {
            let st = state.borrow();
            g.receivers_of(i)
                .iter()
                .map(|&j| {
                    let pos = g.in_range(j).start + g.senders_of(j).binary_search(&i).expect("arc exists");
                    st.1[j].exp() * -log_q[pos].exp_m1()
                })
                .sum()
        },
        |i| {
            let mut st = state.borrow_mut();
            st.0[i] = true;
            for &j in g.receivers_of(i) {
                let l = log_miss_of(prob, &st.0, j, &log_q);
                st.1[j] = l;
            }
        },
    );
    let mut x = vec![0.0; m];
    order.iter().for_each(|&i| x[i] = 1.0);
    GreedyResult { value: prob.expected_spread(&x), order }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

const MC_CHUNK: usize = 10_000;

/// Simulates every arc out of `set` as an independent coin and counts the
/// receivers reached. Trials are split into fixed chunks with their own
/// stream, so the estimate does not depend on the worker count.
pub fn monte_carlo_spread(prob: &CascadeProblem, set: &[usize], trials: usize, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let g = prob.graph();
    if let Some(&bad) = set.iter().find(|&&i| i >= g.num_senders()) {
        return Err(Error::Dimension(format!("sender {bad} out of range")));
    }
    let mut member = vec![false; g.num_senders()];
    set.iter().for_each(|&i| member[i] = true);
    // arcs out of the set, grouped by receiver
    let groups: Vec<Vec<f64>> = (0..g.num_receivers())
        .map(|j| {
            g.senders_of(j)
                .iter()
                .zip(g.in_range(j))
                .filter(|(i, _)| member[**i])
                .map(|(_, pos)| prob.arc_prob(pos))
                .collect::<Vec<f64>>()
        })
        .filter(|ps| !ps.is_empty())
        .collect();
    let chunks = trials.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = child_rng(seed, c as u64);
            let count = MC_CHUNK.min(trials - c * MC_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let mut reached = 0u32;
                for ps in &groups {
                    // every arc is drawn, even after the receiver is reached
                    let mut hit = false;
                    for &p in ps {
                        hit |= rng.gen_bool(p);
                    }
                    reached += hit as u32;
                }
                let r = reached as f64;
                s += r;
                s2 += r * r;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let mean = s / n;
    let var = if trials > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate { mean, std_error: (var / n).sqrt(), trials })
}
