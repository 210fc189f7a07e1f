use serde::{Deserialize, Serialize};

use super::{project_capped_simplex, CascadeProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgOptions {
    /// Stop when `‖x − Π(x − ∇g(x))‖∞` falls to this.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub sigma: f64,
    pub max_backtracks: usize,
}

impl Default for PgOptions {
    fn default() -> Self {
        PgOptions { tol: 1e-9, max_iter: 50_000, sigma: 1e-4, max_backtracks: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub stationarity: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// The gradient shifted by the mean over free coordinates. Moves along the
/// capped simplex keep `Σx` fixed, so the shift changes neither the
/// projection nor the slope, but it removes a common mode that otherwise
/// swamps both in rounding near the optimum. Returns the shift too.
fn center(x: &[f64], grad: &[f64]) -> (Vec<f64>, f64) {
    let (sum, n) = x
        .iter()
        .zip(grad)
        .filter(|(xi, _)| **xi > 0.0 && **xi < 1.0)
        .fold((0.0, 0usize), |(s, n), (_, g)| (s + g, n + 1));
    let c = if n > 0 { sum / n as f64 } else { 0.0 };
    (grad.iter().map(|g| g - c).collect(), c)
}

fn stationarity(x: &[f64], grad: &[f64], k: usize) -> f64 {
    let y: Vec<f64> = x.iter().zip(center(x, grad).0).map(|(a, g)| a - g).collect();
    project_capped_simplex(&y, k)
        .iter()
        .zip(x)
        .map(|(p, a)| (p - a).abs())
        .fold(0.0, f64::max)
}

pub fn solve_cascade(prob: &CascadeProblem) -> CascadeSolution {
    solve_cascade_with(prob, PgOptions::default())
}

/// Projected gradient from `(k/m)·e` with an Armijo search along the
/// projection arc `α ↦ Π(x − α∇g)`, halving from the trial step. The first
/// trial step is 1; later ones are the Barzilai–Borwein step
/// `sᵀs / sᵀy` of the previous move, clamped to `[1e-10, 1e10]`, and 1 when
/// `sᵀy ≤ 0`. Every accepted step decreases `g`.
pub fn solve_cascade_with(prob: &CascadeProblem, opts: PgOptions) -> CascadeSolution {
    let (m, k) = (prob.num_senders(), prob.k());
    let mut x = vec![k as f64 / m as f64; m];
    let mut log_miss = prob.log_miss(&x);
    let mut miss: Vec<f64> = log_miss.iter().map(|l| l.exp()).collect();
    let mut grad = prob.gradient_from_miss(&miss);
    let mut trial = 1.0;
    let mut iterations = 0;
    let mut res = stationarity(&x, &grad, k);
    let mut converged = res <= opts.tol;

    while !converged && iterations < opts.max_iter {
        let mut alpha = trial;
        let mut accepted = None;
        let (centered, shift) = center(&x, &grad);
        for _ in 0..=opts.max_backtracks {
            let y: Vec<f64> = x.iter().zip(&centered).map(|(a, g)| a - alpha * g).collect();
            let cand = project_capped_simplex(&y, k);
            let d: Vec<f64> = cand.iter().zip(&x).map(|(c, a)| c - a).collect();
            let slope: f64 = d.iter().zip(&centered).map(|(di, g)| di * g).sum();
            if slope >= 0.0 {
                // the projection arc collapsed onto x
                break;
            }
            // Σx drifts by an ulp of k per projection; measure the decrease
            // of g − shift·(Σx − k), which is g on the feasible set
            let drift: f64 = d.iter().sum();
            let change = prob.objective_change(&log_miss, &d) - shift * drift;
            if change <= opts.sigma * slope {
                accepted = Some((cand, d));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, d)) = accepted else {
            break;
        };
        iterations += 1;
        let new_log = prob.log_miss(&cand);
        let new_miss: Vec<f64> = new_log.iter().map(|l| l.exp()).collect();
        let new_grad = prob.gradient_from_miss(&new_miss);
        let sy: f64 = d.iter().zip(new_grad.iter().zip(&grad)).map(|(s, (a, b))| s * (a - b)).sum();
        let ss: f64 = d.iter().map(|s| s * s).sum();
        trial = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { 1.0 };
        x = cand;
        log_miss = new_log;
        miss = new_miss;
        grad = new_grad;
        res = stationarity(&x, &grad, k);
        converged = res <= opts.tol;
    }

    CascadeSolution {
        objective: miss.iter().sum(),
        x,
        gradient: grad,
        stationarity: res,
        iterations,
        converged,
    }
}
