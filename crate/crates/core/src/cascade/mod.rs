//! Depth-one independent cascade on a bipartite graph.
//!
//! A selected sender `i` reaches receiver `j` with probability `p_ij`,
//! independently per arc, so receiver `j` is missed with probability
//! `∏ (1 − p_ij)^{x_i}`. The relaxation minimizes the expected number of
//! missed receivers
//!
//! ```text
//!     g(x) = Σ_j exp(Σ_i x_i ln(1 − p_ij))
//! ```
//!
//! over the capped simplex `{0 ≤ x ≤ 1, Σx = k}`; `g` is convex.

mod certify;
mod projection;
mod rounding;
mod solver;

pub use certify::{certify_by_cut, kkt_check_cascade, CascadeKkt, CutCertificate, Verdict};
pub use projection::project_capped_simplex;
pub use rounding::{round_threshold, round_topk, TIE_TOL};
pub use solver::{solve_cascade, solve_cascade_with, CascadeSolution, PgOptions};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

#[derive(Debug, Clone, PartialEq)]
pub enum ArcProbs {
    Uniform(f64),
    /// One probability per arc, in receiver-major order (see
    /// [`BipartiteGraph::in_range`]).
    PerArc(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct CascadeProblem<'g> {
    graph: &'g BipartiteGraph,
    probs: ArcProbs,
    k: usize,
    /// `ln(1 − p)` per arc, receiver-major.
    log_q: Vec<f64>,
}

impl<'g> CascadeProblem<'g> {
    pub fn new(graph: &'g BipartiteGraph, probs: ArcProbs, k: usize) -> Result<Self> {
        if k == 0 || k > graph.num_senders() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} must lie in [1, {}]",
                graph.num_senders()
            )));
        }
        let inside = |p: f64| p > 0.0 && p < 1.0;
        let log_q = match &probs {
            ArcProbs::Uniform(p) => {
                if !inside(*p) {
                    return Err(Error::InvalidArgument(format!("p = {p} must lie in (0, 1)")));
                }
                vec![(-p).ln_1p(); graph.num_arcs()]
            }
            ArcProbs::PerArc(ps) => {
                if ps.len() != graph.num_arcs() {
                    return Err(Error::Dimension(format!(
                        "{} arc probabilities for {} arcs",
                        ps.len(),
                        graph.num_arcs()
                    )));
                }
                if let Some(p) = ps.iter().find(|&&p| !inside(p)) {
                    return Err(Error::InvalidArgument(format!("arc probability {p} must lie in (0, 1)")));
                }
                ps.iter().map(|p| (-p).ln_1p()).collect()
            }
        };
        Ok(CascadeProblem { graph, probs, k, log_q })
    }

    pub fn uniform(graph: &'g BipartiteGraph, p: f64, k: usize) -> Result<Self> {
        Self::new(graph, ArcProbs::Uniform(p), k)
    }

    pub fn graph(&self) -> &'g BipartiteGraph {
        self.graph
    }

    pub fn probs(&self) -> &ArcProbs {
        &self.probs
    }

    /// The common arc probability, if the model is uniform.
    pub fn uniform_p(&self) -> Option<f64> {
        match self.probs {
            ArcProbs::Uniform(p) => Some(p),
            ArcProbs::PerArc(_) => None,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_senders(&self) -> usize {
        self.graph.num_senders()
    }

    pub fn num_receivers(&self) -> usize {
        self.graph.num_receivers()
    }

    /// Arc probability at receiver-major position `pos`.
    pub fn arc_prob(&self, pos: usize) -> f64 {
        match &self.probs {
            ArcProbs::Uniform(p) => *p,
            ArcProbs::PerArc(ps) => ps[pos],
        }
    }

    fn check_len(&self, x: &[f64]) {
        assert_eq!(x.len(), self.num_senders(), "x must have one entry per sender");
    }

    /// Per-receiver log miss probabilities `L_j = Σ_i x_i ln(1 − p_ij)`.
    pub fn log_miss(&self, x: &[f64]) -> Vec<f64> {
        self.check_len(x);
        let g = self.graph;
        (0..g.num_receivers())
            .map(|j| {
                g.senders_of(j)
                    .iter()
                    .zip(&self.log_q[g.in_range(j)])
                    .map(|(&i, lq)| x[i] * lq)
                    .sum()
            })
            .collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.log_miss(x).into_iter().map(f64::exp).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let miss: Vec<f64> = self.log_miss(x).into_iter().map(f64::exp).collect();
        self.gradient_from_miss(&miss)
    }

    pub(crate) fn gradient_from_miss(&self, miss: &[f64]) -> Vec<f64> {
        let g = self.graph;
        let mut grad = vec![0.0; g.num_senders()];
        for (j, &pj) in miss.iter().enumerate() {
            for (&i, lq) in g.senders_of(j).iter().zip(&self.log_q[g.in_range(j)]) {
                grad[i] += lq * pj;
            }
        }
        grad
    }

    /// Expected number of reached receivers, `Σ_j (1 − ∏_i (1 − p_ij)^{x_i})`.
    pub fn expected_spread(&self, x: &[f64]) -> f64 {
        self.log_miss(x).into_iter().map(|l| -l.exp_m1()).sum()
    }

    /// `g(x + d) − g(x)` without cancellation, given `L(x)`.
    pub(crate) fn objective_change(&self, log_miss: &[f64], d: &[f64]) -> f64 {
        let delta = self.log_miss(d);
        log_miss.iter().zip(delta).map(|(l, dl)| l.exp() * dl.exp_m1()).sum()
    }
}

/// Indicator vector of `set` over `m` senders.
pub fn indicator(m: usize, set: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0; m];
    set.iter().for_each(|&i| x[i] = 1.0);
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::nested_pair_instance;
    use proptest::prelude::*;

    #[test]
    fn trivial_values() {
        let g = BipartiteGraph::new(1, 1, [(0, 0)]).unwrap();
        let p = CascadeProblem::uniform(&g, 0.5, 1).unwrap();
        assert_eq!(p.objective(&[0.0]), 1.0);
        assert_eq!(p.objective(&[1.0]), 0.5);
        assert_eq!(p.gradient(&[0.0]), vec![0.5f64.ln()]);
        assert_eq!(p.expected_spread(&[0.0]), 0.0);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let g = BipartiteGraph::new(2, 1, [(0, 0), (1, 0)]).unwrap();
        assert!(CascadeProblem::uniform(&g, 1.0, 1).is_err());
        assert!(CascadeProblem::uniform(&g, 0.0, 1).is_err());
        assert!(CascadeProblem::new(&g, ArcProbs::PerArc(vec![0.5]), 1).is_err());
        assert!(CascadeProblem::new(&g, ArcProbs::PerArc(vec![0.5, 1.2]), 1).is_err());
        assert!(CascadeProblem::uniform(&g, 0.5, 3).is_err());
    }

    #[test]
    fn nested_pair_spreads() {
        let inst = nested_pair_instance([100, 20], [99, 10]).unwrap();
        let p = CascadeProblem::uniform(&inst.graph, 0.5, 2).unwrap();
        let m = inst.num_senders();
        let infl_sub = p.expected_spread(&indicator(m, &[0, 1]));
        let both = p.expected_spread(&indicator(m, &[0, 2]));
        assert!((infl_sub - 74.75).abs() < 1e-12);
        assert!((both - 60.0).abs() < 1e-12);

        let inst = nested_pair_instance([100, 44], [80, 40]).unwrap();
        let p = CascadeProblem::uniform(&inst.graph, 0.5, 2).unwrap();
        let x = indicator(inst.num_senders(), &[0, 2]);
        assert!((p.expected_spread(&x) - 72.0).abs() < 1e-12);
        assert!((p.objective(&x) - 72.0).abs() < 1e-12);
    }

    #[test]
    fn per_arc_matches_direct_product() {
        let g = BipartiteGraph::new(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        // receiver-major: (0,0), (1,0), (1,1)
        let p = CascadeProblem::new(&g, ArcProbs::PerArc(vec![0.2, 0.5, 0.7]), 1).unwrap();
        let x = [0.5, 1.0];
        let expected = 0.8f64.powf(0.5) * 0.5 + 0.3;
        assert!((p.objective(&x) - expected).abs() < 1e-12);
    }

    fn random_problem() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize)>, Vec<f64>)> {
        (2usize..7, 1usize..8).prop_flat_map(|(m, n)| {
            let arcs = proptest::sample::subsequence((0..m * n).collect::<Vec<_>>(), 1..=m * n);
            (Just(m), Just(n), arcs, proptest::collection::vec(0.05f64..0.95, m * n))
        })
        .prop_map(|(m, n, cells, ps)| {
            let arcs = cells.iter().map(|c| (c / n, c % n)).collect();
            (m, n, arcs, ps)
        })
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(
            (m, n, arcs, ps) in random_problem(),
            x in proptest::collection::vec(0.0f64..1.0, 7),
        ) {
            let g = BipartiteGraph::new(m, n, arcs).unwrap();
            let probs = ArcProbs::PerArc(ps[..g.num_arcs()].to_vec());
            let p = CascadeProblem::new(&g, probs, 1).unwrap();
            let x = &x[..m];
            let grad = p.gradient(x);
            let h = 1e-6;
            for i in 0..m {
                let (mut a, mut b) = (x.to_vec(), x.to_vec());
                a[i] += h;
                b[i] -= h;
                let fd = (p.objective(&a) - p.objective(&b)) / (2.0 * h);
                prop_assert!((fd - grad[i]).abs() <= 1e-6 * grad[i].abs().max(1.0));
                prop_assert!(grad[i] <= 0.0);
            }
        }

        #[test]
        fn objective_is_convex(
            (m, n, arcs, ps) in random_problem(),
            x in proptest::collection::vec(0.0f64..1.0, 7),
            y in proptest::collection::vec(0.0f64..1.0, 7),
            theta in 0.0f64..1.0,
        ) {
            let g = BipartiteGraph::new(m, n, arcs).unwrap();
            let p = CascadeProblem::new(&g, ArcProbs::PerArc(ps[..g.num_arcs()].to_vec()), 1).unwrap();
            let (x, y) = (&x[..m], &y[..m]);
            let mix: Vec<f64> = x.iter().zip(y).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
            prop_assert!(p.objective(&mix) <= theta * p.objective(x) + (1.0 - theta) * p.objective(y) + 1e-12);
        }

        #[test]
        fn objective_change_matches_difference(
            (m, n, arcs, ps) in random_problem(),
            x in proptest::collection::vec(0.0f64..1.0, 7),
            y in proptest::collection::vec(0.0f64..1.0, 7),
        ) {
            let g = BipartiteGraph::new(m, n, arcs).unwrap();
            let p = CascadeProblem::new(&g, ArcProbs::PerArc(ps[..g.num_arcs()].to_vec()), 1).unwrap();
            let (x, y) = (&x[..m], &y[..m]);
            let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
            let change = p.objective_change(&p.log_miss(x), &d);
            prop_assert!((change - (p.objective(y) - p.objective(x))).abs() < 1e-12);
        }
    }
}
