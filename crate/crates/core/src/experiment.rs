//! Forest-fire recovery campaigns in the shape of the benchmark tables.
//!
//! A campaign is the grid `k × p1 × sigma × trial`. Each trial draws its
//! instance from a seed derived from the master seed and the trial's own
//! parameters, so adding grid points never changes an existing trial.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{round_topk, solve_cascade, CascadeProblem};
use crate::error::{Error, Result};
use crate::generators::{gen_forest_fire, ForestFireSpec, PlantedInstance};
use crate::graph::recovery_error;
use crate::lp::{build_lp, solve_lp, LpStatus};
use crate::seeding::derive_seed;

/// A trial counts as recovered when its error is below this.
pub const RECOVERY_TOL: f64 = 1e-8;

pub const CSV_HEADER: &str = "model,k,p1,p2,sigma,seed,E_orig,E_noise,err,recovered,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Lp,
    Cascade,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Lp => "lp",
            Model::Cascade => "cascade",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub model: Model,
    pub k: usize,
    pub p1: f64,
    pub p2: f64,
    /// Noise level in percent.
    pub sigma: f64,
    /// Seed of this trial's instance.
    pub seed: u64,
    pub e_orig: usize,
    pub e_noise: usize,
    /// NaN when the solver gave no usable answer.
    pub err: f64,
    pub recovered: bool,
    /// Only filled when timing is requested, so default output is
    /// reproducible byte for byte.
    pub wall_ms: Option<f64>,
}

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        let wall = self.wall_ms.map_or_else(|| "-".to_string(), |w| format!("{w:.3}"));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.k,
            self.p1,
            self.p2,
            self.sigma,
            self.seed,
            self.e_orig,
            self.e_noise,
            self.err,
            self.recovered,
            wall
        )
    }
}

pub fn to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Everything a trial produced, for dumping and re-checking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub record: ExperimentRecord,
    pub influencers: Vec<usize>,
    /// Relaxation solution.
    pub x: Vec<f64>,
    /// Top-k rounding of `x` (cascade only); `None` on a tie.
    pub rounded: Option<Vec<f64>>,
}

impl TrialOutcome {
    /// The vector the recovery error is measured on.
    pub fn scored(&self) -> Option<&[f64]> {
        match self.record.model {
            Model::Lp => Some(&self.x),
            Model::Cascade => self.rounded.as_deref(),
        }
    }
}

fn param<T: std::str::FromStr>(inst: &PlantedInstance, key: &str) -> T {
    inst.param(key)
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("forest-fire instance records {key}"))
}

/// LP trial: recovery error of the relaxation's `x` itself.
pub fn lp_outcome(inst: &PlantedInstance) -> Result<(Vec<f64>, f64)> {
    let sol = solve_lp(&build_lp(&inst.graph, inst.k)?)?;
    let err = match sol.status {
        LpStatus::Optimal => recovery_error(&sol.x, &inst.influencers),
        _ => f64::NAN,
    };
    Ok((sol.x, err))
}

/// Cascade trial: recovery error of the top-k rounding; a rounding tie
/// leaves the error undefined.
pub fn cascade_outcome(inst: &PlantedInstance, p: f64) -> Result<(Vec<f64>, Option<Vec<f64>>, f64)> {
    let prob = CascadeProblem::uniform(&inst.graph, p, inst.k)?;
    let sol = solve_cascade(&prob);
    match round_topk(&sol.x, inst.k) {
        Ok(y) => {
            let err = recovery_error(&y, &inst.influencers);
            Ok((sol.x, Some(y), err))
        }
        Err(Error::Ambiguous { .. }) => Ok((sol.x, None, f64::NAN)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub model: Model,
    pub k: usize,
    pub p1: f64,
    pub p2: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Arc probability of the cascade model.
    pub p: f64,
    pub timing: bool,
}

pub fn run_trial(spec: &TrialSpec) -> Result<TrialOutcome> {
    let start = Instant::now();
    let inst = gen_forest_fire(&ForestFireSpec::scaled(spec.k, spec.p1, spec.p2, spec.sigma, spec.seed))?;
    let (x, rounded, err) = match spec.model {
        Model::Lp => {
            let (x, err) = lp_outcome(&inst)?;
            (x, None, err)
        }
        Model::Cascade => cascade_outcome(&inst, spec.p)?,
    };
    let wall_ms = spec.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let record = ExperimentRecord {
        model: spec.model,
        k: spec.k,
        p1: spec.p1,
        p2: spec.p2,
        sigma: spec.sigma,
        seed: spec.seed,
        e_orig: param(&inst, "e_orig"),
        e_noise: param(&inst, "e_noise"),
        err,
        recovered: err < RECOVERY_TOL,
        wall_ms,
    };
    Ok(TrialOutcome { record, influencers: inst.influencers, x, rounded })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub model: Model,
    pub ks: Vec<usize>,
    pub p1s: Vec<f64>,
    pub p2: f64,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub p: f64,
    pub timing: bool,
}

impl Campaign {
    /// The first benchmark table: LP model, `p2 = 0.9`.
    pub fn table1(ks: Vec<usize>, p1s: Vec<f64>, sigmas: Vec<f64>, trials: usize, master_seed: u64) -> Self {
        Campaign { model: Model::Lp, ks, p1s, p2: 0.9, sigmas, trials, master_seed, p: 0.9, timing: false }
    }

    /// The second benchmark table: cascade model with `p = 0.9`.
    pub fn table2(ks: Vec<usize>, p1s: Vec<f64>, sigmas: Vec<f64>, trials: usize, master_seed: u64) -> Self {
        Campaign { model: Model::Cascade, ..Campaign::table1(ks, p1s, sigmas, trials, master_seed) }
    }

    /// Trial specs ordered by `(k, p1, sigma, trial)`.
    pub fn trials(&self) -> Vec<TrialSpec> {
        let mut out = Vec::new();
        for &k in &self.ks {
            for &p1 in &self.p1s {
                for &sigma in &self.sigmas {
                    for t in 0..self.trials {
                        out.push(TrialSpec {
                            model: self.model,
                            k,
                            p1,
                            p2: self.p2,
                            sigma,
                            seed: trial_seed(self.master_seed, k, p1, self.p2, sigma, t),
                            p: self.p,
                            timing: self.timing,
                        });
                    }
                }
            }
        }
        out
    }

    /// Runs every trial on the current rayon pool. Output order does not
    /// depend on completion order.
    pub fn run(&self) -> Result<Vec<TrialOutcome>> {
        self.trials().par_iter().map(run_trial).collect()
    }
}

pub fn trial_seed(master: u64, k: usize, p1: f64, p2: f64, sigma: f64, trial: usize) -> u64 {
    derive_seed(master, &[k as u64, p1.to_bits(), p2.to_bits(), sigma.to_bits(), trial as u64])
}

/// One table cell: the mean over trials of one `(k, p1, sigma)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub model: Model,
    pub k: usize,
    pub p1: f64,
    pub sigma: f64,
    pub trials: usize,
    pub e_orig: f64,
    pub e_noise: f64,
    /// Mean over trials with a defined error.
    pub err: f64,
    pub n_rec: usize,
}

/// Groups consecutive records sharing `(model, k, p1, sigma)`.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<CellSummary> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for r in records {
        let same = cells
            .last()
            .is_some_and(|c| (c.model, c.k, c.p1, c.sigma) == (r.model, r.k, r.p1, r.sigma));
        if !same {
            cells.push(CellSummary {
                model: r.model,
                k: r.k,
                p1: r.p1,
                sigma: r.sigma,
                trials: 0,
                e_orig: 0.0,
                e_noise: 0.0,
                err: 0.0,
                n_rec: 0,
            });
            counts.push(0);
        }
        let c = cells.last_mut().unwrap();
        c.trials += 1;
        c.e_orig += r.e_orig as f64;
        c.e_noise += r.e_noise as f64;
        c.n_rec += r.recovered as usize;
        if r.err.is_finite() {
            c.err += r.err;
            *counts.last_mut().unwrap() += 1;
        }
    }
    for (c, n) in cells.iter_mut().zip(counts) {
        c.e_orig /= c.trials as f64;
        c.e_noise /= c.trials as f64;
        c.err = if n > 0 { c.err / n as f64 } else { f64::NAN };
    }
    cells
}

/// Fixed-width text table of cell summaries.
pub fn format_summary(cells: &[CellSummary]) -> String {
    let mut out = format!(
        "{:>7} {:>4} {:>5} {:>6} {:>9} {:>9} {:>9} {:>6}\n",
        "model", "k", "p1", "sigma", "E_orig", "E_noise", "err", "N_rec"
    );
    for c in cells {
        let _ = writeln!(
            out,
            "{:>7} {:>4} {:>5} {:>6} {:>9.0} {:>9.0} {:>9.1e} {:>3}/{:<2}",
            c.model.to_string(),
            c.k,
            c.p1,
            c.sigma,
            c.e_orig,
            c.e_noise,
            c.err,
            c.n_rec,
            c.trials
        );
    }
    out
}
