//! Two-layer forest-fire growth with planted influencers.
//!
//! Growth starts from `k` influencer/receiver pairs. While both caps are
//! open a receiver is added with probability `p1`, otherwise a subordinate;
//! once one side is full only the other side grows. A new node copies a
//! neighbour of a random existing node of its own kind, then keeps burning
//! with probability `p2`: from the node it just linked to, hop to a random
//! neighbour and link to a random neighbour of that.
//!
//! The chain never creates a duplicate arc: it only picks targets not yet
//! linked to the new node and stops when none is left. It is also capped at
//! the current node count.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use super::PlantedInstance;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seeding::{rng_from_seed, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestFireSpec {
    pub k: usize,
    /// Sender cap `u_i`.
    pub u_i: usize,
    /// Receiver cap `u_f`.
    pub u_f: usize,
    /// Probability of adding a receiver rather than a subordinate.
    pub p1: f64,
    /// Burn continuation probability.
    pub p2: f64,
    /// Noise arcs, as a percentage of the complement arc count.
    pub sigma_pct: f64,
    pub seed: u64,
}

impl ForestFireSpec {
    /// The desk-scale benchmark shape: `u_i = 10k`, `u_f = 10 u_i`.
    pub fn scaled(k: usize, p1: f64, p2: f64, sigma_pct: f64, seed: u64) -> Self {
        ForestFireSpec { k, u_i: 10 * k, u_f: 100 * k, p1, p2, sigma_pct, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidSpec("k must be at least 1".into()));
        }
        if !(self.p1 > 0.0 && self.p1 < 1.0) || !(self.p2 > 0.0 && self.p2 < 1.0) {
            return Err(Error::InvalidSpec("p1 and p2 must lie in (0, 1)".into()));
        }
        if !(self.sigma_pct >= 0.0 && self.sigma_pct <= 100.0) {
            return Err(Error::InvalidSpec("sigma must be a percentage in [0, 100]".into()));
        }
        if self.u_i < self.k || self.u_f < self.k {
            return Err(Error::InvalidSpec("caps u_i and u_f must be at least k".into()));
        }
        Ok(())
    }
}

struct Growth {
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl Growth {
    fn link(&mut self, i: usize, j: usize) {
        self.out[i].push(j);
        self.inc[j].push(i);
    }

    fn nodes(&self) -> usize {
        self.out.len() + self.inc.len()
    }

    fn pick<'a>(rng: &mut StreamRng, xs: impl Iterator<Item = &'a usize> + Clone) -> Option<usize> {
        let count = xs.clone().count();
        (count > 0).then(|| *xs.clone().nth(rng.gen_range(0..count)).unwrap())
    }

    fn add_receiver(&mut self, rng: &mut StreamRng, p2: f64) {
        let j = self.inc.len();
        let j0 = rng.gen_range(0..j);
        self.inc.push(Vec::new());
        let i1 = self.inc[j0][rng.gen_range(0..self.inc[j0].len())];
        self.link(i1, j);
        let cap = self.nodes();
        let mut current = i1;
        let mut steps = 1;
        while steps < cap && rng.gen_bool(p2) {
            let Some(hop) = Self::pick(rng, self.out[current].iter().filter(|&&r| r != j)) else {
                break;
            };
            let mine = &self.inc[j];
            let Some(next) = Self::pick(rng, self.inc[hop].iter().filter(|s| !mine.contains(s))) else {
                break;
            };
            self.link(next, j);
            current = next;
            steps += 1;
        }
    }

    fn add_subordinate(&mut self, rng: &mut StreamRng, p2: f64) {
        let i = self.out.len();
        let i0 = rng.gen_range(0..i);
        self.out.push(Vec::new());
        let j1 = self.out[i0][rng.gen_range(0..self.out[i0].len())];
        self.link(i, j1);
        let cap = self.nodes();
        let mut current = j1;
        let mut steps = 1;
        while steps < cap && rng.gen_bool(p2) {
            let Some(hop) = Self::pick(rng, self.inc[current].iter().filter(|&&s| s != i)) else {
                break;
            };
            let mine = &self.out[i];
            let Some(next) = Self::pick(rng, self.out[hop].iter().filter(|r| !mine.contains(r))) else {
                break;
            };
            self.link(i, next);
            current = next;
            steps += 1;
        }
    }
}

/// Forest-fire instance. Influencers are senders `0..k`. After growth, every
/// receiver with no influencer neighbour links to a uniformly random
/// influencer; then `⌊σ/100 · |complement|⌋` noise arcs are drawn uniformly
/// without replacement from the complement. `E_orig` and `E_noise` are
/// recorded in `params`.
///
/// Receiver groups are the influencer a receiver was attached to by the
/// tweak, or its first influencer neighbour; a subordinate joins the group of
/// the receiver it first linked to. `G_0` is empty.
pub fn gen_forest_fire(spec: &ForestFireSpec) -> Result<PlantedInstance> {
    spec.validate()?;
    let k = spec.k;
    let mut rng = rng_from_seed(spec.seed);
    let mut g = Growth { out: vec![Vec::new(); k], inc: vec![Vec::new(); k] };
    for l in 0..k {
        g.link(l, l);
    }
    while g.out.len() < spec.u_i || g.inc.len() < spec.u_f {
        let senders_open = g.out.len() < spec.u_i;
        let receivers_open = g.inc.len() < spec.u_f;
        let receiver = match (senders_open, receivers_open) {
            (true, true) => rng.gen_bool(spec.p1),
            (false, _) => true,
            (true, false) => false,
        };
        if receiver {
            g.add_receiver(&mut rng, spec.p2);
        } else {
            g.add_subordinate(&mut rng, spec.p2);
        }
    }

    let mut receiver_group = Vec::with_capacity(spec.u_f);
    for j in 0..spec.u_f {
        let label = match g.inc[j].iter().copied().find(|&i| i < k) {
            Some(l) => l,
            None => {
                let l = rng.gen_range(0..k);
                g.link(l, j);
                l
            }
        };
        receiver_group.push(Some(label));
    }
    let sender_group: Vec<usize> = (0..spec.u_i)
        .map(|i| if i < k { i } else { receiver_group[g.out[i][0]].unwrap() })
        .collect();

    let mut present: HashSet<(usize, usize)> = HashSet::new();
    for (i, rs) in g.out.iter().enumerate() {
        present.extend(rs.iter().map(|&j| (i, j)));
    }
    let e_orig = present.len();
    let complement = spec.u_i * spec.u_f - e_orig;
    let e_noise = (spec.sigma_pct / 100.0 * complement as f64).floor() as usize;
    let mut added = 0;
    while added < e_noise {
        let arc = (rng.gen_range(0..spec.u_i), rng.gen_range(0..spec.u_f));
        if present.insert(arc) {
            added += 1;
        }
    }

    let mut params = BTreeMap::new();
    params.insert("kind".into(), "forest-fire".into());
    params.insert("u_i".into(), spec.u_i.to_string());
    params.insert("u_f".into(), spec.u_f.to_string());
    params.insert("p1".into(), spec.p1.to_string());
    params.insert("p2".into(), spec.p2.to_string());
    params.insert("sigma".into(), spec.sigma_pct.to_string());
    params.insert("seed".into(), spec.seed.to_string());
    params.insert("e_orig".into(), e_orig.to_string());
    params.insert("e_noise".into(), e_noise.to_string());

    Ok(PlantedInstance {
        graph: BipartiteGraph::new(spec.u_i, spec.u_f, present)?,
        k,
        sender_group,
        receiver_group,
        influencers: (0..k).collect(),
        params,
    })
}
