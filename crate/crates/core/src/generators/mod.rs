//! Planted-influencer instance generators and the recovery-condition checkers.
//!
//! Every generator returns a [`PlantedInstance`]: the graph plus the ground
//! truth. Senders are laid out group by group with the influencer first;
//! receivers of `G_1..G_k` come first and the noise block `G_0` last (forest
//! fire instances keep creation order instead).

mod bundle;
pub(crate) mod conditions;
mod forest_fire;
mod planted;
mod random;

use std::collections::BTreeMap;

pub use bundle::{read_bundle, write_bundle, GRAPH_FILE, META_FILE};
pub use conditions::{check_thm2, check_thm6, Thm2Report, Thm6Report};
pub use forest_fire::{gen_forest_fire, ForestFireSpec};
pub use planted::{gen_deterministic_noisy, gen_noiseless, nested_pair_instance, NoisySpec};
pub use random::{gen_random_planted, RandomPlantedSpec};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, SelectionVector};

/// A graph together with its planted group structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub graph: BipartiteGraph,
    pub k: usize,
    /// Group index (`0..k`) of every sender.
    pub sender_group: Vec<usize>,
    /// Group index of every receiver; `None` marks the noise block `G_0`.
    pub receiver_group: Vec<Option<usize>>,
    /// `influencers[l]` is the influencer of group `l`.
    pub influencers: Vec<usize>,
    /// Generator name, spec parameters and seed, kept for the sidecar file.
    pub params: BTreeMap<String, String>,
}

impl PlantedInstance {
    /// Checks the partition invariants.
    pub fn validate(&self) -> Result<()> {
        let m = self.graph.num_senders();
        let n = self.graph.num_receivers();
        if self.sender_group.len() != m || self.receiver_group.len() != n {
            return Err(Error::Dimension("group labels do not match graph size".into()));
        }
        if self.influencers.len() != self.k {
            return Err(Error::Dimension(format!(
                "{} influencers for k = {}",
                self.influencers.len(),
                self.k
            )));
        }
        if self.sender_group.iter().any(|&l| l >= self.k)
            || self.receiver_group.iter().flatten().any(|&l| l >= self.k)
        {
            return Err(Error::InvalidArgument("group label out of range".into()));
        }
        for (l, &i) in self.influencers.iter().enumerate() {
            if i >= m || self.sender_group[i] != l {
                return Err(Error::InvalidArgument(format!(
                    "influencer {i} is not a member of group {l}"
                )));
            }
        }
        Ok(())
    }

    pub fn num_senders(&self) -> usize {
        self.graph.num_senders()
    }

    pub fn num_receivers(&self) -> usize {
        self.graph.num_receivers()
    }

    pub fn is_influencer(&self, i: usize) -> bool {
        self.influencers[self.sender_group[i]] == i
    }

    /// `L_1..L_k` with the influencer first in each group.
    pub fn sender_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = self.influencers.iter().map(|&i| vec![i]).collect();
        for (i, &l) in self.sender_group.iter().enumerate() {
            if !self.is_influencer(i) {
                groups[l].push(i);
            }
        }
        groups
    }

    /// `(G_0, [G_1..G_k])`.
    pub fn receiver_groups(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let mut g0 = Vec::new();
        let mut groups = vec![Vec::new(); self.k];
        for (j, l) in self.receiver_group.iter().enumerate() {
            match l {
                Some(l) => groups[*l].push(j),
                None => g0.push(j),
            }
        }
        (g0, groups)
    }

    /// `n_l = |G_l|` for `l = 1..k`.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for l in self.receiver_group.iter().flatten() {
            sizes[*l] += 1;
        }
        sizes
    }

    pub fn subordinates(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_senders()).filter(move |&i| !self.is_influencer(i))
    }

    pub fn x_star(&self) -> SelectionVector {
        SelectionVector::indicator(self.num_senders(), &self.influencers)
            .expect("influencers are valid sender indices")
    }

    /// A1': influencer `l` reaches all of `G_l` and no influencer reaches `G_0`.
    pub fn satisfies_a1_prime(&self) -> bool {
        let (g0, groups) = self.receiver_groups();
        let covers = groups
            .iter()
            .enumerate()
            .all(|(l, gl)| gl.iter().all(|&j| self.graph.has_arc(self.influencers[l], j)));
        let g0_clean = g0
            .iter()
            .all(|&j| self.graph.senders_of(j).iter().all(|&i| !self.is_influencer(i)));
        covers && g0_clean
    }

    /// A1–A3: A1' with `G_0 = ∅`, no cross-group arcs, and every subordinate
    /// adjacent to a proper subset of its own group.
    pub fn satisfies_a1_a3(&self) -> bool {
        let (g0, _) = self.receiver_groups();
        if !g0.is_empty() || !self.satisfies_a1_prime() {
            return false;
        }
        let sizes = self.group_sizes();
        let no_cross = self
            .graph
            .arcs()
            .all(|(i, j)| self.receiver_group[j] == Some(self.sender_group[i]));
        let proper = self
            .subordinates()
            .all(|i| self.graph.out_degree(i) < sizes[self.sender_group[i]]);
        no_cross && proper
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Lays out groups contiguously: returns `(sender_group, influencers)` for
/// groups with `r[l]` subordinates each.
fn grouped_senders(r: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut sender_group = Vec::new();
    let mut influencers = Vec::new();
    for (l, &rl) in r.iter().enumerate() {
        influencers.push(sender_group.len());
        sender_group.extend(std::iter::repeat_n(l, rl + 1));
    }
    (sender_group, influencers)
}

fn grouped_receivers(n: &[usize], g0: usize) -> Vec<Option<usize>> {
    let mut out: Vec<Option<usize>> = n
        .iter()
        .enumerate()
        .flat_map(|(l, &nl)| std::iter::repeat_n(Some(l), nl))
        .collect();
    out.extend(std::iter::repeat_n(None, g0));
    out
}
