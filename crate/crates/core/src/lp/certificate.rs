use serde::Serialize;

use super::{Duals, LpProblem};
use crate::error::{Error, Result};
use crate::generators::{conditions::exclusive_blocks, PlantedInstance};

/// The planted primal pair `(x*, t*)`: influencers selected, `t* = 1` on
/// interest groups and `0` on `G_0`.
pub fn planted_primal(inst: &PlantedInstance) -> (Vec<f64>, Vec<f64>) {
    let x = inst.x_star().as_slice().to_vec();
    let t = inst.receiver_group.iter().map(|g| if g.is_some() { 1.0 } else { 0.0 }).collect();
    (x, t)
}

/// Noiseless certificate: `λ = 1/n_l` on `G_l`, `μ = e − λ`, `ν = δx*` and
/// `ξ = 1 − δ` with `δ = 1/max n_l`.
pub fn duals_thm1(inst: &PlantedInstance) -> Result<Duals> {
    if !inst.satisfies_a1_a3() {
        return Err(Error::Certificate("instance violates A1–A3".into()));
    }
    let sizes = inst.group_sizes();
    let delta = 1.0 / *sizes.iter().max().expect("k ≥ 1") as f64;
    let lambda: Vec<f64> = inst
        .receiver_group
        .iter()
        .map(|g| 1.0 / sizes[g.expect("A1–A3 has no G_0")] as f64)
        .collect();
    let mu = lambda.iter().map(|l| 1.0 - l).collect();
    let nu = inst.x_star().as_slice().iter().map(|x| delta * x).collect();
    Ok(Duals { lambda, mu, nu, xi_dual: 1.0 - delta })
}

/// Noisy certificate. `λ = n_min/n_l` on the exclusive block `H_l`, `0` on
/// the rest of `G_l` and `1` on `G_0`; `μ` makes `λ + μ = e`. With scores
/// `s = Aλ`, the threshold `ω` is the midpoint between the largest
/// subordinate score and the smallest influencer score (half the latter
/// when there are no subordinates); `ν_i = s_i − ω` on influencers and
/// `ξ = ω`.
pub fn duals_thm2(inst: &PlantedInstance) -> Result<Duals> {
    if !inst.satisfies_a1_prime() {
        return Err(Error::Certificate("instance violates A1'".into()));
    }
    let sizes = inst.group_sizes();
    let n_min = *sizes.iter().min().expect("k ≥ 1") as f64;
    let mut lambda: Vec<f64> = inst.receiver_group.iter().map(|g| if g.is_some() { 0.0 } else { 1.0 }).collect();
    for (l, block) in exclusive_blocks(inst).iter().enumerate() {
        for &j in block {
            lambda[j] = n_min / sizes[l] as f64;
        }
    }
    let mu = lambda.iter().map(|l| 1.0 - l).collect();
    let scores = inst.graph.apply(&lambda)?;
    let infl_min = inst.influencers.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
    let sub_max = inst.subordinates().map(|i| scores[i]).fold(f64::NEG_INFINITY, f64::max);
    if infl_min <= sub_max || infl_min <= 0.0 {
        return Err(Error::Certificate(format!(
            "influencer scores (min {infl_min}) do not separate from subordinate scores (max {sub_max})"
        )));
    }
    let omega = if sub_max.is_finite() { 0.5 * (infl_min + sub_max) } else { 0.5 * infl_min };
    let nu = (0..inst.num_senders())
        .map(|i| if inst.is_influencer(i) { scores[i] - omega } else { 0.0 })
        .collect();
    Ok(Duals { lambda, mu, nu, xi_dual: omega })
}

/// Residuals of the KKT system at a primal/dual pair. Products are the
/// absolute inner products; feasibility entries are the largest violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `λᵀ(t − Aᵀx)`, `μᵀ(e − t)`, `νᵀ(e − x)`, `tᵀ(λ + μ − e)`, `xᵀ(−Aλ + ν + ξe)`.
    pub complementarity: [f64; 5],
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub max_residual: f64,
    pub pass: bool,
}

pub fn kkt_check(p: &LpProblem, x: &[f64], t: &[f64], d: &Duals, tol: f64) -> KktReport {
    let (m, n) = (p.num_x(), p.num_t());
    let dims_ok = x.len() == m
        && t.len() == n
        && d.lambda.len() == n
        && d.mu.len() == n
        && d.nu.len() == m;
    if !dims_ok {
        return KktReport {
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            complementarity: [f64::INFINITY; 5],
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            max_residual: f64::INFINITY,
            pass: false,
        };
    }
    let ax = p.graph.apply_transpose(x).expect("length checked");
    let al = p.graph.apply(&d.lambda).expect("length checked");
    let neg = |v: f64| (-v).max(0.0);

    let mut primal = (x.iter().sum::<f64>() - p.k as f64).abs();
    for i in 0..m {
        primal = primal.max(neg(x[i])).max(neg(1.0 - x[i]));
    }
    for j in 0..n {
        primal = primal.max(neg(ax[j] - t[j])).max(neg(t[j])).max(neg(1.0 - t[j]));
    }

    let stat: Vec<f64> = (0..m).map(|i| -al[i] + d.nu[i] + d.xi_dual).collect();
    let mut dual = 0.0f64;
    for j in 0..n {
        dual = dual.max(neg(d.lambda[j])).max(neg(d.mu[j])).max(neg(d.lambda[j] + d.mu[j] - 1.0));
    }
    for i in 0..m {
        dual = dual.max(neg(d.nu[i])).max(neg(stat[i]));
    }

    let dot = |a: &mut dyn Iterator<Item = f64>| a.sum::<f64>().abs();
    let complementarity = [
        dot(&mut (0..n).map(|j| d.lambda[j] * (t[j] - ax[j]))),
        dot(&mut (0..n).map(|j| d.mu[j] * (1.0 - t[j]))),
        dot(&mut (0..m).map(|i| d.nu[i] * (1.0 - x[i]))),
        dot(&mut (0..n).map(|j| t[j] * (d.lambda[j] + d.mu[j] - 1.0))),
        dot(&mut (0..m).map(|i| x[i] * stat[i])),
    ];
    // dual of the relaxation: min eᵀμ + eᵀν + kξ
    let dual_objective = d.mu.iter().sum::<f64>() + d.nu.iter().sum::<f64>() + p.k as f64 * d.xi_dual;
    let max_residual = complementarity.iter().copied().fold(primal.max(dual), f64::max);
    KktReport {
        primal_residual: primal,
        dual_residual: dual,
        complementarity,
        primal_objective: t.iter().sum(),
        dual_objective,
        max_residual,
        pass: max_residual <= tol,
    }
}
