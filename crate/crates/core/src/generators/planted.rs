use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use super::{grouped_receivers, grouped_senders, join, PlantedInstance};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seeding::rng_from_seed;

fn check_group_lists(k: usize, n: &[usize], r: &[usize]) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidSpec("k must be at least 1".into()));
    }
    if n.len() != k || r.len() != k {
        return Err(Error::InvalidSpec(format!(
            "expected {k} group sizes and subordinate counts, got {} and {}",
            n.len(),
            r.len()
        )));
    }
    if let Some(l) = n.iter().position(|&nl| nl == 0) {
        return Err(Error::InvalidSpec(format!(
            "group {} has no receivers; a subordinate needs a proper subset to exist",
            l + 1
        )));
    }
    Ok(())
}

/// Noiseless planted instance: influencer `l` covers all of `G_l`, nothing
/// crosses group boundaries, and each subordinate covers a uniformly random
/// proper subset of its group (size uniform on `0..n_l`).
pub fn gen_noiseless(k: usize, n: &[usize], r: &[usize], seed: u64) -> Result<PlantedInstance> {
    check_group_lists(k, n, r)?;
    let mut rng = rng_from_seed(seed);
    let (sender_group, influencers) = grouped_senders(r);
    let receiver_group = grouped_receivers(n, 0);

    let mut arcs = Vec::new();
    let mut offset = 0;
    for l in 0..k {
        let inf = influencers[l];
        arcs.extend((offset..offset + n[l]).map(|j| (inf, j)));
        for sub in inf + 1..=inf + r[l] {
            let size = rng.gen_range(0..n[l]);
            arcs.extend(sample(&mut rng, n[l], size).into_iter().map(|j| (sub, offset + j)));
        }
        offset += n[l];
    }

    let mut params = BTreeMap::new();
    params.insert("kind".into(), "noiseless".into());
    params.insert("n".into(), join(n));
    params.insert("r".into(), join(r));
    params.insert("seed".into(), seed.to_string());

    let inst = PlantedInstance {
        graph: BipartiteGraph::new(sender_group.len(), offset, arcs)?,
        k,
        sender_group,
        receiver_group,
        influencers,
        params,
    };
    debug_assert!(inst.satisfies_a1_a3());
    Ok(inst)
}

/// Parameters for [`gen_deterministic_noisy`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySpec {
    pub n: Vec<usize>,
    pub r: Vec<usize>,
    pub g0_size: usize,
    /// Target fraction `θ_l` of `G_l` reserved for the exclusive block `H_l`.
    pub theta: Vec<f64>,
    /// Target ratio `β_l`: a subordinate covers at most `β_l·|H_l|` of `H_l`.
    pub beta: Vec<f64>,
    /// Number of `G_0` receivers each subordinate is wired to (capped at `|G_0|`).
    pub z_cap: usize,
    pub seed: u64,
}

/// Noisy planted instance satisfying A1'–A3'.
///
/// `H_l` is the first `⌊θ_l n_l⌋` receivers of `G_l`. Each subordinate gets
/// exactly `⌊β_l |H_l|⌋` uniformly chosen arcs into `H_l` and `min(z_cap,
/// |G_0|)` into `G_0`. Arcs into `G_l∖H_l` and into the non-exclusive part of
/// other groups are drawn independently with probability 1/2, and every
/// receiver of `G_l∖H_l` is given at least one sender from outside `L_l` so
/// that the exclusive block recomputed from the arcs is exactly `H_l`.
pub fn gen_deterministic_noisy(spec: &NoisySpec) -> Result<PlantedInstance> {
    let k = spec.n.len();
    check_group_lists(k, &spec.n, &spec.r)?;
    if spec.theta.len() != k || spec.beta.len() != k {
        return Err(Error::InvalidSpec("θ and β need one entry per group".into()));
    }
    let mut h_size = Vec::with_capacity(k);
    for l in 0..k {
        let (theta, beta) = (spec.theta[l], spec.beta[l]);
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidSpec(format!("θ_{} = {theta} outside (0, 1]", l + 1)));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidSpec(format!("β_{} = {beta} outside (0, 1)", l + 1)));
        }
        let h = (theta * spec.n[l] as f64 + 1e-9).floor() as usize;
        if h == 0 {
            return Err(Error::InvalidSpec(format!(
                "θ_{}·n_{} rounds down to an empty exclusive block",
                l + 1,
                l + 1
            )));
        }
        if h < spec.n[l] && k == 1 {
            return Err(Error::InvalidSpec(
                "θ < 1 needs a second group to supply out-of-group senders".into(),
            ));
        }
        h_size.push(h);
    }

    let mut rng = rng_from_seed(spec.seed);
    let (sender_group, influencers) = grouped_senders(&spec.r);
    let receiver_group = grouped_receivers(&spec.n, spec.g0_size);
    let m = sender_group.len();
    let num_recv = receiver_group.len();
    let starts: Vec<usize> = spec
        .n
        .iter()
        .scan(0, |acc, &nl| {
            let s = *acc;
            *acc += nl;
            Some(s)
        })
        .collect();
    let g0_start = spec.n.iter().sum::<usize>();
    // receivers outside every exclusive block, by group
    let non_exclusive: Vec<Vec<usize>> =
        (0..k).map(|l| (starts[l] + h_size[l]..starts[l] + spec.n[l]).collect()).collect();

    let mut adj = vec![false; m * num_recv];
    let mut add = |i: usize, j: usize| adj[i * num_recv + j] = true;

    for l in 0..k {
        let inf = influencers[l];
        for j in starts[l]..starts[l] + spec.n[l] {
            add(inf, j);
        }
        let h_cover = (spec.beta[l] * h_size[l] as f64 + 1e-9).floor() as usize;
        let z = spec.z_cap.min(spec.g0_size);
        for sub in inf + 1..=inf + spec.r[l] {
            for j in sample(&mut rng, h_size[l], h_cover) {
                add(sub, starts[l] + j);
            }
            for block in &non_exclusive {
                for &j in block {
                    if rng.gen_bool(0.5) {
                        add(sub, j);
                    }
                }
            }
            for j in sample(&mut rng, spec.g0_size, z) {
                add(sub, g0_start + j);
            }
        }
    }
    for l in 0..k {
        let outside: Vec<usize> = (0..m).filter(|&i| sender_group[i] != l).collect();
        for &j in &non_exclusive[l] {
            if !outside.iter().any(|&i| adj[i * num_recv + j]) {
                let i = outside[rng.gen_range(0..outside.len())];
                adj[i * num_recv + j] = true;
            }
        }
    }

    let arcs = (0..m).flat_map(|i| (0..num_recv).map(move |j| (i, j)));
    let arcs: Vec<(usize, usize)> = arcs.filter(|&(i, j)| adj[i * num_recv + j]).collect();

    let mut params = BTreeMap::new();
    params.insert("kind".into(), "deterministic-noisy".into());
    params.insert("n".into(), join(&spec.n));
    params.insert("r".into(), join(&spec.r));
    params.insert("g0".into(), spec.g0_size.to_string());
    params.insert("theta".into(), join(&spec.theta));
    params.insert("beta".into(), join(&spec.beta));
    params.insert("z_cap".into(), spec.z_cap.to_string());
    params.insert("seed".into(), spec.seed.to_string());

    Ok(PlantedInstance {
        graph: BipartiteGraph::new(m, num_recv, arcs)?,
        k,
        sender_group,
        receiver_group,
        influencers,
        params,
    })
}

/// Two groups, one subordinate each; subordinate `l` covers the first
/// `cover[l]` receivers of `G_l`. Sender order: influencer 1, subordinate 1,
/// influencer 2, subordinate 2.
pub fn nested_pair_instance(n: [usize; 2], cover: [usize; 2]) -> Result<PlantedInstance> {
    if n.contains(&0) || cover[0] > n[0] || cover[1] > n[1] {
        return Err(Error::InvalidSpec("each cover must fit inside its nonempty group".into()));
    }
    let mut arcs = Vec::new();
    arcs.extend((0..n[0]).map(|j| (0, j)));
    arcs.extend((0..cover[0]).map(|j| (1, j)));
    arcs.extend((0..n[1]).map(|j| (2, n[0] + j)));
    arcs.extend((0..cover[1]).map(|j| (3, n[0] + j)));
    let mut params = BTreeMap::new();
    params.insert("kind".into(), "nested-pair".into());
    params.insert("n".into(), join(&n));
    params.insert("cover".into(), join(&cover));
    Ok(PlantedInstance {
        graph: BipartiteGraph::new(4, n[0] + n[1], arcs)?,
        k: 2,
        sender_group: vec![0, 0, 1, 1],
        receiver_group: grouped_receivers(&n, 0),
        influencers: vec![0, 2],
        params,
    })
}
