use std::collections::BTreeMap;

use rand::Rng;

use super::{grouped_receivers, grouped_senders, join, PlantedInstance};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seeding::rng_from_seed;

/// Parameters of the randomized planted model (receivers draw their arcs).
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPlantedSpec {
    pub k: usize,
    pub n: Vec<usize>,
    pub r: Vec<usize>,
    pub g0_size: usize,
    /// Cross-group noise intensity.
    pub q: f64,
    /// Subordinate density.
    pub s: f64,
    pub seed: u64,
}

impl RandomPlantedSpec {
    /// Total number of senders `r = Σ r_l + k`.
    pub fn total_senders(&self) -> usize {
        self.r.iter().sum::<usize>() + self.k
    }

    pub fn r_min(&self) -> usize {
        self.r.iter().copied().min().unwrap_or(0)
    }

    pub fn n_min(&self) -> usize {
        self.n.iter().copied().min().unwrap_or(0)
    }

    /// Probability that a `G_l` receiver draws an arc from a given subordinate of `L_l`.
    pub fn in_group_prob(&self, l: usize) -> f64 {
        if self.r[l] == 0 {
            0.0
        } else {
            self.s * self.r_min() as f64 / self.r[l] as f64
        }
    }

    /// Probability of each arc from a sender outside the receiver's group.
    pub fn cross_prob(&self) -> f64 {
        self.q / self.total_senders() as f64
    }

    /// Probability that a `G_0` receiver draws an arc from a given subordinate.
    pub fn g0_prob(&self) -> f64 {
        self.s * self.r_min() as f64 / self.total_senders() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n.len() != self.k || self.r.len() != self.k {
            return Err(Error::InvalidSpec("need k ≥ 1 and one n_l, r_l per group".into()));
        }
        if self.n.contains(&0) {
            return Err(Error::InvalidSpec("every group needs n_l ≥ 1".into()));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) || !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidSpec("q and s must be finite and non-negative".into()));
        }
        let mut probs = vec![("q/r", self.cross_prob()), ("s·r_min/r", self.g0_prob())];
        probs.extend((0..self.k).map(|l| ("s·r_min/r_l", self.in_group_prob(l))));
        if let Some((name, p)) = probs.into_iter().find(|&(_, p)| p > 1.0) {
            return Err(Error::InvalidSpec(format!("rule probability {name} = {p} exceeds 1")));
        }
        Ok(())
    }
}

/// Randomized planted instance. For every receiver in index order:
///
/// 1. a `G_l` receiver takes the arc from influencer `l`;
/// 2. it takes each subordinate of `L_l` with probability `s·r_min/r_l`;
/// 3. it takes each sender outside `L_l` with probability `q/r`;
/// 4. a `G_0` receiver takes each subordinate (any group) with probability
///    `s·r_min/r`. Influencers never reach `G_0`.
pub fn gen_random_planted(spec: &RandomPlantedSpec) -> Result<PlantedInstance> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let (sender_group, influencers) = grouped_senders(&spec.r);
    let receiver_group = grouped_receivers(&spec.n, spec.g0_size);
    let m = sender_group.len();
    let cross = spec.cross_prob();
    let g0 = spec.g0_prob();
    let in_group: Vec<f64> = (0..spec.k).map(|l| spec.in_group_prob(l)).collect();

    let mut arcs = Vec::new();
    for (j, group) in receiver_group.iter().enumerate() {
        match *group {
            Some(l) => {
                for i in 0..m {
                    let take = if sender_group[i] != l {
                        rng.gen_bool(cross)
                    } else if influencers[l] == i {
                        true
                    } else {
                        rng.gen_bool(in_group[l])
                    };
                    if take {
                        arcs.push((i, j));
                    }
                }
            }
            None => {
                for i in 0..m {
                    if influencers[sender_group[i]] != i && rng.gen_bool(g0) {
                        arcs.push((i, j));
                    }
                }
            }
        }
    }

    let mut params = BTreeMap::new();
    params.insert("kind".into(), "random-planted".into());
    params.insert("n".into(), join(&spec.n));
    params.insert("r".into(), join(&spec.r));
    params.insert("g0".into(), spec.g0_size.to_string());
    params.insert("q".into(), spec.q.to_string());
    params.insert("s".into(), spec.s.to_string());
    params.insert("seed".into(), spec.seed.to_string());

    Ok(PlantedInstance {
        graph: BipartiteGraph::new(m, receiver_group.len(), arcs)?,
        k: spec.k,
        sender_group,
        receiver_group,
        influencers,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(q: f64, s: f64, seed: u64) -> RandomPlantedSpec {
        RandomPlantedSpec { k: 3, n: vec![60; 3], r: vec![5; 3], g0_size: 20, q, s, seed }
    }

    #[test]
    fn zero_noise_has_no_cross_arcs() {
        let inst = gen_random_planted(&spec(0.0, 0.2, 4)).unwrap();
        for (i, j) in inst.graph.arcs() {
            if let Some(l) = inst.receiver_group[j] {
                assert_eq!(inst.sender_group[i], l);
            }
        }
        assert!(inst.satisfies_a1_prime());
    }

    #[test]
    fn g0_never_touches_influencers() {
        for seed in 0..20 {
            let inst = gen_random_planted(&spec(0.5, 0.2, seed)).unwrap();
            assert!(inst.satisfies_a1_prime());
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let a = gen_random_planted(&spec(0.5, 0.2, 9)).unwrap();
        let b = gen_random_planted(&spec(0.5, 0.2, 9)).unwrap();
        let c = gen_random_planted(&spec(0.5, 0.2, 10)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn rejects_probabilities_above_one() {
        let mut bad = spec(0.5, 0.2, 0);
        bad.r = vec![1, 5, 5];
        bad.s = 2.0;
        // s·r_min/r_l = 2 for the group with one subordinate
        assert!(matches!(gen_random_planted(&bad), Err(Error::InvalidSpec(_))));
        let mut bad = spec(30.0, 0.2, 0);
        bad.q = 30.0;
        assert!(gen_random_planted(&bad).is_err());
        assert!(gen_random_planted(&spec(-0.1, 0.2, 0)).is_err());
    }

    #[test]
    fn mean_indegree_matches_rule_probabilities() {
        // expected G_l indegree: 1 + s·r_min + q·(r − r_l − 1)/r
        let base = spec(0.5, 0.2, 0);
        let r = base.total_senders() as f64;
        let expected = 1.0 + 0.2 * 5.0 + 0.5 * (r - 5.0 - 1.0) / r;
        let mut samples = Vec::new();
        for seed in 0..200 {
            let inst = gen_random_planted(&spec(0.5, 0.2, seed)).unwrap();
            let (_, groups) = inst.receiver_groups();
            let degs: Vec<f64> =
                groups.iter().flatten().map(|&j| inst.graph.in_degree(j) as f64).collect();
            samples.push(degs.iter().sum::<f64>() / degs.len() as f64);
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        let se = (var / samples.len() as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} expected {expected} se {se}");
    }
}
