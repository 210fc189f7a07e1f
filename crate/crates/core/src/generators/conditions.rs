//! Sufficient conditions for exact recovery, evaluated on a concrete instance.

use serde::Serialize;

use super::PlantedInstance;
use crate::error::{Error, Result};

/// Evaluation of the deterministic-noise recovery conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm2Report {
    /// `|H_l|`: receivers of `G_l` with no sender outside `L_l`.
    pub h_sizes: Vec<usize>,
    pub theta: Vec<f64>,
    /// Largest `|N(i) ∩ H_l| / |H_l|` over the subordinates of each group.
    pub beta_max: Vec<f64>,
    /// `min θ / max θ`; `None` when some `θ_l = 0`.
    pub rho: Option<f64>,
    /// `(subordinate, z_i)` with `z_i` its number of `G_0` neighbours.
    pub z: Vec<(usize, usize)>,
    pub n_min: usize,
    pub a1_prime: bool,
    /// `β_l < ρ/2` for every group.
    pub cond3: bool,
    /// `z_i ≤ n_min θ_l ρ / 2` for every subordinate.
    pub cond4: bool,
    pub pass: bool,
}

/// Exclusive block of each group: receivers of `G_l` whose senders all lie in `L_l`.
pub(crate) fn exclusive_blocks(inst: &PlantedInstance) -> Vec<Vec<usize>> {
    let mut blocks = vec![Vec::new(); inst.k];
    for (j, group) in inst.receiver_group.iter().enumerate() {
        if let Some(l) = *group {
            if inst.graph.senders_of(j).iter().all(|&i| inst.sender_group[i] == l) {
                blocks[l].push(j);
            }
        }
    }
    blocks
}

pub fn check_thm2(inst: &PlantedInstance) -> Thm2Report {
    let n = inst.group_sizes();
    let n_min = n.iter().copied().min().unwrap_or(0);
    let blocks = exclusive_blocks(inst);
    let h_sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
    let theta: Vec<f64> = h_sizes.iter().zip(&n).map(|(&h, &nl)| h as f64 / nl as f64).collect();
    let mut in_block = vec![false; inst.num_receivers()];
    for &j in blocks.iter().flatten() {
        in_block[j] = true;
    }

    let mut beta_max = vec![0.0f64; inst.k];
    let mut z = Vec::new();
    for i in inst.subordinates() {
        let l = inst.sender_group[i];
        let covered = inst.graph.receivers_of(i).iter().filter(|&&j| in_block[j]).count();
        let zi = inst
            .graph
            .receivers_of(i)
            .iter()
            .filter(|&&j| inst.receiver_group[j].is_none())
            .count();
        if h_sizes[l] > 0 {
            beta_max[l] = beta_max[l].max(covered as f64 / h_sizes[l] as f64);
        }
        z.push((i, zi));
    }

    let theta_min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let theta_max = theta.iter().copied().fold(0.0, f64::max);
    let rho = (theta_min > 0.0).then(|| theta_min / theta_max);
    let (cond3, cond4) = match rho {
        Some(rho) => (
            beta_max.iter().all(|&b| b < rho / 2.0),
            z.iter()
                .all(|&(i, zi)| zi as f64 <= n_min as f64 * theta[inst.sender_group[i]] * rho / 2.0),
        ),
        None => (false, false),
    };
    let a1_prime = inst.satisfies_a1_prime();
    Thm2Report {
        h_sizes,
        theta,
        beta_max,
        rho,
        z,
        n_min,
        a1_prime,
        cond3,
        cond4,
        pass: a1_prime && cond3 && cond4,
    }
}

/// Evaluation of the cascade-model recovery condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm6Report {
    pub n: Vec<usize>,
    /// Receivers of `G_l` not adjacent to any sender outside `L_l`.
    pub n_hat: Vec<usize>,
    /// Largest in-group coverage of a subordinate of `L_l`.
    pub alpha: Vec<usize>,
    /// Largest out-of-group coverage of a subordinate of `L_l`.
    pub gamma: Vec<usize>,
    pub p: f64,
    pub xi_round: f64,
    pub a1_prime: bool,
    /// `α_l < n_l` for every group.
    pub alpha_below_n: bool,
    /// `min n̂ ≥ (1−p)^{1/2 + ξ/2} · max (α + γ/(1−p))`.
    pub cond_balance: bool,
    /// `n_l − α_l > (1−p)^{−k} γ_l` for every group.
    pub cond_noise: bool,
    pub pass: bool,
}

pub fn check_thm6(inst: &PlantedInstance, p: f64, xi_round: f64) -> Result<Thm6Report> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0, 1)")));
    }
    let xi_max = 1.0 / (2 * inst.k + 1) as f64;
    if !(xi_round >= 0.0 && xi_round < xi_max) {
        return Err(Error::InvalidArgument(format!(
            "rounding parameter {xi_round} outside [0, {xi_max})"
        )));
    }
    let n = inst.group_sizes();
    let n_hat: Vec<usize> = exclusive_blocks(inst).iter().map(Vec::len).collect();
    let mut alpha = vec![0usize; inst.k];
    let mut gamma = vec![0usize; inst.k];
    for i in inst.subordinates() {
        let l = inst.sender_group[i];
        let inside = inst
            .graph
            .receivers_of(i)
            .iter()
            .filter(|&&j| inst.receiver_group[j] == Some(l))
            .count();
        let outside = inst.graph.out_degree(i) - inside;
        alpha[l] = alpha[l].max(inside);
        gamma[l] = gamma[l].max(outside);
    }

    let q = 1.0 - p;
    let lhs = n_hat.iter().copied().min().unwrap_or(0) as f64;
    let worst = (0..inst.k)
        .map(|l| alpha[l] as f64 + gamma[l] as f64 / q)
        .fold(0.0, f64::max);
    let cond_balance = lhs >= q.powf(0.5 + xi_round / 2.0) * worst;
    let amplify = q.powi(-(inst.k as i32));
    let cond_noise = (0..inst.k).all(|l| (n[l] - alpha[l].min(n[l])) as f64 > amplify * gamma[l] as f64);
    let alpha_below_n = (0..inst.k).all(|l| alpha[l] < n[l]);
    let a1_prime = inst.satisfies_a1_prime();
    Ok(Thm6Report {
        n,
        n_hat,
        alpha,
        gamma,
        p,
        xi_round,
        a1_prime,
        alpha_below_n,
        cond_balance,
        cond_noise,
        pass: a1_prime && alpha_below_n && cond_balance && cond_noise,
    })
}
