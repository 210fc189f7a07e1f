//! Linear relaxation of deterministic influence maximization:
//!
//! ```text
//!     max eᵀt  s.t.  t ≤ Aᵀx,  0 ≤ t ≤ e,  eᵀx = k,  0 ≤ x ≤ e
//! ```
//!
//! solved at a vertex by the simplex in [`simplex`], plus the closed-form
//! dual certificates for planted instances and a KKT residual check.

mod certificate;
pub mod factor;
pub mod simplex;

use serde::{Deserialize, Serialize};

pub use certificate::{duals_thm1, duals_thm2, kkt_check, planted_primal, KktReport};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use factor::SparseCol;
use simplex::{LpModel, NonbasicAt, SimplexOptions, SimplexStatus, StartBasis};

#[derive(Debug, Clone, Copy)]
pub struct LpProblem<'g> {
    pub graph: &'g BipartiteGraph,
    pub k: usize,
}

impl LpProblem<'_> {
    pub fn num_x(&self) -> usize {
        self.graph.num_senders()
    }

    pub fn num_t(&self) -> usize {
        self.graph.num_receivers()
    }
}

pub fn build_lp(g: &BipartiteGraph, k: usize) -> Result<LpProblem<'_>> {
    if k == 0 || k > g.num_senders() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in [1, {}]",
            g.num_senders()
        )));
    }
    Ok(LpProblem { graph: g, k })
}

/// Multipliers of the KKT system: `λ` on `t ≤ Aᵀx`, `μ` on `t ≤ e`, `ν` on
/// `x ≤ e` and `ξ` on `eᵀx = k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Duals {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub xi_dual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub objective: f64,
    #[serde(flatten)]
    pub duals: Duals,
    pub status: LpStatus,
    pub iterations: usize,
}

impl LpSolution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

// Column layout: x (m), t (n), s (n). Rows: n coupling rows then the equality.
fn model(p: &LpProblem) -> LpModel {
    let (m, n) = (p.num_x(), p.num_t());
    let g = p.graph;
    let mut cols = Vec::with_capacity(m + 2 * n);
    for i in 0..m {
        cols.push(SparseCol::new(
            g.receivers_of(i).iter().map(|&j| (j, -1.0)).chain([(n, 1.0)]),
        ));
    }
    for j in 0..n {
        cols.push(SparseCol::new([(j, 1.0)]));
    }
    for j in 0..n {
        cols.push(SparseCol::new([(j, 1.0)]));
    }
    let mut cost = vec![0.0; m + 2 * n];
    cost[m..m + n].iter_mut().for_each(|c| *c = -1.0);
    let mut upper = vec![1.0; m + n];
    upper.extend(std::iter::repeat_n(f64::INFINITY, n));
    let mut rhs = vec![0.0; n + 1];
    rhs[n] = p.k as f64;
    LpModel { num_rows: n + 1, cols, cost, lower: vec![0.0; m + 2 * n], upper, rhs }
}

/// Crash basis: the `k` senders of largest out-degree (ties to the lower
/// index) at 1, one of them basic on the equality row; every slack basic;
/// covered `t_j` at 1 and the rest at 0.
fn crash(p: &LpProblem) -> StartBasis {
    let (m, n) = (p.num_x(), p.num_t());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(p.graph.out_degree(i)), i));
    let chosen = &order[..p.k];
    let mut at = vec![NonbasicAt::Lower; m + 2 * n];
    for &i in chosen {
        at[i] = NonbasicAt::Upper;
    }
    let mut x = vec![0.0; m];
    chosen.iter().for_each(|&i| x[i] = 1.0);
    for (j, cover) in p.graph.apply_transpose(&x).expect("length m").into_iter().enumerate() {
        if cover >= 1.0 {
            at[m + j] = NonbasicAt::Upper;
        }
    }
    let mut basis: Vec<usize> = (m + n..m + 2 * n).collect();
    basis.push(chosen[0]);
    StartBasis { basis, at }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(p, None)
}

/// As [`solve_lp`] with an optional pivot cap.
pub fn solve_lp_with(p: &LpProblem, max_iter: Option<usize>) -> Result<LpSolution> {
    let (m, n) = (p.num_x(), p.num_t());
    let lp = model(p);
    let mut opts = SimplexOptions::for_size(lp.num_rows, lp.num_cols());
    if let Some(cap) = max_iter {
        opts.max_iter = cap;
    }
    let r = simplex::solve(&lp, Some(&crash(p)), opts)?;
    let status = match r.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        SimplexStatus::Infeasible => LpStatus::Infeasible,
        SimplexStatus::IterationLimit => LpStatus::IterationLimit,
        SimplexStatus::Unbounded => unreachable!("the feasible region is bounded"),
    };
    let lambda: Vec<f64> = r.duals[..n].iter().map(|y| -y).collect();
    let xi_dual = -r.duals[n];
    let mu = r.reduced_costs[m..m + n].iter().map(|d| (-d).max(0.0)).collect();
    let nu = r.reduced_costs[..m].iter().map(|d| (-d).max(0.0)).collect();
    Ok(LpSolution {
        x: r.values[..m].to_vec(),
        t: r.values[m..m + n].to_vec(),
        objective: -r.objective,
        duals: Duals { lambda, mu, nu, xi_dual },
        status,
        iterations: r.iterations,
    })
}
