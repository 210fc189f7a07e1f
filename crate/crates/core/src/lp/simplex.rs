//! Bounded-variable revised primal simplex for `min cᵀz, Mz = b, l ≤ z ≤ u`.
//!
//! Devex pricing (lowest index on ties), Harris two-pass ratio test with
//! bound flips, and a switch to Bland's rule after a run of degenerate
//! pivots. Phase 1 uses one artificial column per row when no feasible
//! starting basis is supplied.

use rand::Rng;

use super::factor::{BasisFactor, SparseCol};
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

#[derive(Debug, Clone)]
pub struct LpModel {
    pub num_rows: usize,
    pub cols: Vec<SparseCol>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LpModel {
    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.cols.len();
        if self.cost.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension("cost and bounds must have one entry per column".into()));
        }
        if self.rhs.len() != self.num_rows {
            return Err(Error::Dimension("rhs must have one entry per row".into()));
        }
        for (j, col) in self.cols.iter().enumerate() {
            if col.rows.iter().any(|&r| r >= self.num_rows) {
                return Err(Error::Dimension(format!("column {j} references a missing row")));
            }
            if self.lower[j] > self.upper[j] || self.lower[j].is_infinite() && self.upper[j].is_infinite() {
                return Err(Error::InvalidArgument(format!("column {j} needs a finite bound and l ≤ u")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonbasicAt {
    Lower,
    Upper,
}

/// A starting basis: `basis[p]` is the column basic at position `p`; every
/// other column sits at the bound given by `at`.
#[derive(Debug, Clone)]
pub struct StartBasis {
    pub basis: Vec<usize>,
    pub at: Vec<NonbasicAt>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
    pub refactor_every: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
    /// Relative bound perturbation; `0` disables it.
    pub perturb: f64,
}

impl SimplexOptions {
    pub fn for_size(rows: usize, cols: usize) -> Self {
        SimplexOptions {
            max_iter: 50 * (rows + cols) + 1000,
            refactor_every: 100,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-7,
            bland_after: 5 * (rows + cols),
            perturb: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub values: Vec<f64>,
    /// Row duals `y = B⁻ᵀ c_B`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Loc {
    Basic(usize),
    At(NonbasicAt),
}

struct State<'a> {
    model: &'a LpModel,
    opts: SimplexOptions,
    basis: Vec<usize>,
    loc: Vec<Loc>,
    xb: Vec<f64>,
    factor: BasisFactor,
    iterations: usize,
    degenerate: usize,
    bland: bool,
    /// Devex reference weights, one per column.
    weights: Vec<f64>,
    /// Working bounds; the ratio test may shift them outward.
    lower: Vec<f64>,
    upper: Vec<f64>,
    shifted: bool,
}

fn singular() -> Error {
    Error::InvalidArgument("simplex basis became singular".into())
}

impl<'a> State<'a> {
    fn new(model: &'a LpModel, opts: SimplexOptions, start: &StartBasis) -> Result<Self> {
        let mut loc: Vec<Loc> = start.at.iter().map(|&a| Loc::At(a)).collect();
        for (p, &j) in start.basis.iter().enumerate() {
            loc[j] = Loc::Basic(p);
        }
        for (j, l) in loc.iter_mut().enumerate() {
            // a nonbasic column must sit at a finite bound
            match *l {
                Loc::At(NonbasicAt::Lower) if model.lower[j].is_infinite() => *l = Loc::At(NonbasicAt::Upper),
                Loc::At(NonbasicAt::Upper) if model.upper[j].is_infinite() => *l = Loc::At(NonbasicAt::Lower),
                _ => {}
            }
        }
        let cols: Vec<&SparseCol> = start.basis.iter().map(|&j| &model.cols[j]).collect();
        let factor = BasisFactor::new(model.num_rows, &cols).map_err(|_| singular())?;
        let mut st = State {
            model,
            opts,
            basis: start.basis.clone(),
            loc,
            xb: Vec::new(),
            factor,
            iterations: 0,
            degenerate: 0,
            bland: false,
            weights: vec![1.0; model.num_cols()],
            lower: model.lower.clone(),
            upper: model.upper.clone(),
            shifted: false,
        };
        st.recompute_xb();
        Ok(st)
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.loc[j] {
            Loc::At(NonbasicAt::Lower) => self.lower[j],
            Loc::At(NonbasicAt::Upper) => self.upper[j],
            Loc::Basic(_) => unreachable!(),
        }
    }

    fn recompute_xb(&mut self) {
        let mut r = self.model.rhs.clone();
        for j in 0..self.model.num_cols() {
            if let Loc::At(_) = self.loc[j] {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    for (row, a) in self.model.cols[j].iter() {
                        r[row] -= a * v;
                    }
                }
            }
        }
        self.xb = self.factor.ftran(&r);
    }

    fn refactor(&mut self) -> Result<()> {
        let cols: Vec<&SparseCol> = self.basis.iter().map(|&j| &self.model.cols[j]).collect();
        self.factor = BasisFactor::new(self.model.num_rows, &cols).map_err(|_| singular())?;
        self.recompute_xb();
        Ok(())
    }

    /// Moves the bound of every basic variable past it onto its value.
    fn shift_infeasible(&mut self) {
        for (&j, &v) in self.basis.iter().zip(&self.xb) {
            if v < self.lower[j] {
                self.lower[j] = v;
                self.shifted = true;
            } else if v > self.upper[j] {
                self.upper[j] = v;
                self.shifted = true;
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        (0..self.model.num_cols())
            .map(|j| match self.loc[j] {
                Loc::Basic(p) => self.xb[p],
                _ => self.nonbasic_value(j),
            })
            .collect()
    }

    fn max_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        self.factor.btran(&cb)
    }

    fn reduced_costs(&self, cost: &[f64], y: &[f64]) -> Vec<f64> {
        self.model.cols.iter().enumerate().map(|(j, col)| cost[j] - col.dot(y)).collect()
    }

    /// Picks an entering column and its direction (+1 increase, −1 decrease).
    /// Scores are `d_j² / w_j`; under Bland's rule the first eligible column.
    fn price(&self, d: &[f64]) -> Option<(usize, f64)> {
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, &dj) in d.iter().enumerate() {
            let dir = match self.loc[j] {
                Loc::At(NonbasicAt::Lower) if dj < -tol => 1.0,
                Loc::At(NonbasicAt::Upper) if dj > tol => -1.0,
                _ => continue,
            };
            if self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            if self.bland {
                return Some((j, dir));
            }
            let score = dj * dj / self.weights[j];
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Ratio test. Returns the step and the leaving position, or `None` as
    /// the position when the entering column hits its own opposite bound.
    fn ratio(&self, q: usize, dir: f64, w: &[f64]) -> Option<(f64, Option<usize>)> {
        let (ptol, ftol) = (self.opts.pivot_tol, self.opts.feas_tol);
        let range = self.upper[q] - self.lower[q];
        let limit = |p: usize, slack: f64| -> Option<f64> {
            let rate = -dir * w[p];
            let j = self.basis[p];
            let v = self.xb[p];
            if rate < -ptol && self.lower[j].is_finite() {
                Some(((v - self.lower[j] + slack) / -rate).max(0.0))
            } else if rate > ptol && self.upper[j].is_finite() {
                Some(((self.upper[j] - v + slack) / rate).max(0.0))
            } else {
                None
            }
        };

        if self.bland {
            let mut best: Option<(f64, usize)> = None;
            for p in 0..w.len() {
                if let Some(t) = limit(p, 0.0) {
                    let better = match best {
                        None => true,
                        Some((bt, bp)) => t < bt - 1e-12 || (t <= bt + 1e-12 && self.basis[p] < self.basis[bp]),
                    };
                    if better {
                        best = Some((t, p));
                    }
                }
            }
            return match best {
                Some((t, _)) if range <= t => Some((range, None)),
                Some((t, p)) => Some((t, Some(p))),
                None if range.is_finite() => Some((range, None)),
                None => None,
            };
        }

        let theta_max = (0..w.len()).filter_map(|p| limit(p, ftol)).fold(f64::INFINITY, f64::min);
        if range <= theta_max && range.is_finite() {
            return Some((range, None));
        }
        if theta_max.is_infinite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for p in 0..w.len() {
            if let Some(t) = limit(p, 0.0) {
                if t <= theta_max && best.is_none_or(|(_, a)| w[p].abs() > a) {
                    best = Some((p, w[p].abs()));
                }
            }
        }
        let p = best.map(|(p, _)| p)?;
        Some((limit(p, 0.0).unwrap(), Some(p)))
    }

    /// Devex update for entering `q`, leaving `out` at position `p`, using the
    /// pivot row of the basis before the swap.
    fn update_weights(&mut self, q: usize, out: usize, p: usize, w: &[f64]) {
        let pivot = w[p];
        let wq = self.weights[q];
        if wq > 1e6 {
            self.weights.iter_mut().for_each(|v| *v = 1.0);
            return;
        }
        let mut e = vec![0.0; self.model.num_rows];
        e[p] = 1.0;
        let rho = self.factor.btran(&e);
        for (j, col) in self.model.cols.iter().enumerate() {
            if j == q || matches!(self.loc[j], Loc::Basic(_)) {
                continue;
            }
            let ratio = col.dot(&rho) / pivot;
            if ratio != 0.0 {
                self.weights[j] = self.weights[j].max(ratio * ratio * wq);
            }
        }
        self.weights[out] = (wq / (pivot * pivot)).max(1.0);
    }

    fn run(&mut self, cost: &[f64]) -> Result<SimplexStatus> {
        let m = self.model.num_rows;
        self.shift_infeasible();
        loop {
            if self.iterations >= self.opts.max_iter {
                return Ok(SimplexStatus::IterationLimit);
            }
            let y = self.duals(cost);
            let d = self.reduced_costs(cost, &y);
            let Some((q, dir)) = self.price(&d) else {
                return Ok(SimplexStatus::Optimal);
            };
            let mut a = vec![0.0; m];
            for (r, v) in self.model.cols[q].iter() {
                a[r] = v;
            }
            let w = self.factor.ftran(&a);
            let Some((theta, leave)) = self.ratio(q, dir, &w) else {
                return Ok(SimplexStatus::Unbounded);
            };
            self.iterations += 1;
            if theta <= 1e-9 {
                self.degenerate += 1;
                if self.degenerate > self.opts.bland_after {
                    self.bland = true;
                }
            } else {
                self.degenerate = 0;
                self.bland = false;
            }
            for (x, wp) in self.xb.iter_mut().zip(&w) {
                *x -= dir * theta * wp;
            }
            match leave {
                None => {
                    self.loc[q] = Loc::At(if dir > 0.0 { NonbasicAt::Upper } else { NonbasicAt::Lower });
                }
                Some(p) => {
                    let out = self.basis[p];
                    let bound = if -dir * w[p] < 0.0 { NonbasicAt::Lower } else { NonbasicAt::Upper };
                    // the ratio test tolerates small overshoots; keep them exact
                    let v = self.xb[p];
                    match bound {
                        NonbasicAt::Lower if v < self.lower[out] => {
                            self.lower[out] = v;
                            self.shifted = true;
                        }
                        NonbasicAt::Upper if v > self.upper[out] => {
                            self.upper[out] = v;
                            self.shifted = true;
                        }
                        _ => {}
                    }
                    self.loc[out] = Loc::At(bound);
                    let entering_value = match self.loc[q] {
                        Loc::At(NonbasicAt::Lower) => self.lower[q] + theta,
                        _ => self.upper[q] - theta,
                    };
                    self.basis[p] = q;
                    self.loc[q] = Loc::Basic(p);
                    self.xb[p] = entering_value;
                    self.update_weights(q, out, p, &w);
                    self.factor.push_eta(p, &w);
                    if self.factor.num_etas() >= self.opts.refactor_every {
                        self.refactor()?;
                        self.shift_infeasible();
                    }
                }
            }
        }
    }

    fn snapshot(&self) -> StartBasis {
        let at = self
            .loc
            .iter()
            .map(|l| match *l {
                Loc::At(a) => a,
                Loc::Basic(_) => NonbasicAt::Lower,
            })
            .collect();
        StartBasis { basis: self.basis.clone(), at }
    }

    fn finish(&mut self, status: SimplexStatus) -> Result<SimplexResult> {
        self.refactor()?;
        let y = self.duals(&self.model.cost);
        let reduced_costs = self.reduced_costs(&self.model.cost, &y);
        let values = self.values();
        let objective = values.iter().zip(&self.model.cost).map(|(v, c)| v * c).sum();
        Ok(SimplexResult {
            status,
            values,
            duals: y,
            reduced_costs,
            objective,
            iterations: self.iterations,
            basis: self.basis.clone(),
        })
    }
}

/// Phase 1 with one artificial per row, every structural column at its
/// finite lower bound (or upper if the lower is infinite).
fn phase_one(model: &LpModel, opts: SimplexOptions) -> Result<(StartBasis, usize, bool)> {
    let n = model.num_cols();
    let m = model.num_rows;
    let at: Vec<NonbasicAt> = (0..n)
        .map(|j| if model.lower[j].is_finite() { NonbasicAt::Lower } else { NonbasicAt::Upper })
        .collect();
    let mut res = model.rhs.clone();
    for j in 0..n {
        let v = if at[j] == NonbasicAt::Lower { model.lower[j] } else { model.upper[j] };
        for (r, a) in model.cols[j].iter() {
            res[r] -= a * v;
        }
    }
    let mut ext = model.clone();
    for (r, &v) in res.iter().enumerate() {
        ext.cols.push(SparseCol::new([(r, if v < 0.0 { -1.0 } else { 1.0 })]));
        ext.lower.push(0.0);
        ext.upper.push(f64::INFINITY);
    }
    let mut cost = vec![0.0; n];
    cost.extend(std::iter::repeat_n(1.0, m));
    ext.cost = cost.clone();
    let mut at_ext = at.clone();
    at_ext.extend(std::iter::repeat_n(NonbasicAt::Lower, m));
    let start = StartBasis { basis: (n..n + m).collect(), at: at_ext };
    let mut st = State::new(&ext, opts, &start)?;
    let status = st.run(&cost)?;
    let iters = st.iterations;
    st.refactor()?;
    let infeas: f64 = st.values()[n..].iter().sum();
    if status != SimplexStatus::Optimal || infeas > opts.feas_tol * (1.0 + m as f64) {
        return Ok((start, iters, false));
    }

    // Drive basic artificials out where a structural column can replace them.
    let mut basis = st.basis.clone();
    let mut loc_at: Vec<NonbasicAt> = (0..n)
        .map(|j| match st.loc[j] {
            Loc::At(a) => a,
            Loc::Basic(_) => NonbasicAt::Lower,
        })
        .collect();
    let mut in_basis = vec![false; n + m];
    for &j in &basis {
        in_basis[j] = true;
    }
    for p in 0..m {
        if basis[p] < n {
            continue;
        }
        let mut e = vec![0.0; m];
        e[p] = 1.0;
        let row = st.factor.btran(&e);
        let candidate = (0..n).filter(|&j| !in_basis[j]).max_by(|&a, &b| {
            let (va, vb) = (model.cols[a].dot(&row).abs(), model.cols[b].dot(&row).abs());
            va.partial_cmp(&vb).unwrap().then(b.cmp(&a))
        });
        if let Some(j) = candidate.filter(|&j| model.cols[j].dot(&row).abs() > 1e-7) {
            let mut a = vec![0.0; m];
            for (r, v) in model.cols[j].iter() {
                a[r] = v;
            }
            let w = st.factor.ftran(&a);
            st.factor.push_eta(p, &w);
            in_basis[basis[p]] = false;
            in_basis[j] = true;
            basis[p] = j;
        }
    }
    if basis.iter().any(|&j| j >= n) {
        // redundant rows: leave the artificial, fixed at zero
        return Err(Error::InvalidArgument("equality rows are linearly dependent".into()));
    }
    for &j in &basis {
        loc_at[j] = NonbasicAt::Lower;
    }
    Ok((StartBasis { basis, at: loc_at }, iters, true))
}

fn infeasible_result(model: &LpModel, iterations: usize) -> SimplexResult {
    SimplexResult {
        status: SimplexStatus::Infeasible,
        values: vec![f64::NAN; model.num_cols()],
        duals: vec![f64::NAN; model.num_rows],
        reduced_costs: vec![f64::NAN; model.num_cols()],
        objective: f64::NAN,
        iterations,
        basis: Vec::new(),
    }
}

/// Copy of `model` whose bounds are widened by a random amount in
/// `[δ, 2δ]·max(1, |bound|)` on every side the current point does not sit
/// on, so the current basic solution stays feasible while no basic variable
/// starts at a bound. The stream is fixed, so solves stay deterministic.
fn perturbed(model: &LpModel, start: &StartBasis, delta: f64) -> LpModel {
    let mut rng = rng_from_seed(0x7065_7274_7572_62);
    let mut basic = vec![false; model.num_cols()];
    start.basis.iter().for_each(|&j| basic[j] = true);
    let mut out = model.clone();
    for j in 0..model.num_cols() {
        let (lo, hi) = (basic[j] || start.at[j] == NonbasicAt::Upper, basic[j] || start.at[j] == NonbasicAt::Lower);
        if lo && out.lower[j].is_finite() {
            out.lower[j] -= delta * (1.0 + rng.gen::<f64>()) * out.lower[j].abs().max(1.0);
        }
        if hi && out.upper[j].is_finite() {
            out.upper[j] += delta * (1.0 + rng.gen::<f64>()) * out.upper[j].abs().max(1.0);
        }
    }
    out
}

/// Solves `model`, starting from `start` when it is a valid primal-feasible
/// basis and from phase 1 otherwise. With `opts.perturb > 0` the bulk of the
/// pivots run on a bound-perturbed copy; the final basis is then restored to
/// the true bounds and polished, falling back to phase 1 if the restored
/// basis is infeasible.
pub fn solve(model: &LpModel, start: Option<&StartBasis>, opts: SimplexOptions) -> Result<SimplexResult> {
    model.check()?;
    let mut iterations = 0;
    let usable = start.filter(|s| {
        s.basis.len() == model.num_rows
            && s.at.len() == model.num_cols()
            && State::new(model, opts, s).is_ok_and(|st| st.max_infeasibility() <= opts.feas_tol)
    });
    let mut basis = match usable {
        Some(s) => s.clone(),
        None => {
            let (b, it, feasible) = phase_one(model, opts)?;
            iterations += it;
            if !feasible {
                return Ok(infeasible_result(model, iterations));
            }
            b
        }
    };
    if opts.perturb > 0.0 {
        let shifted = perturbed(model, &basis, opts.perturb);
        let mut st = State::new(&shifted, opts, &basis)?;
        st.iterations = iterations;
        st.run(&shifted.cost)?;
        iterations = st.iterations;
        basis = st.snapshot();
    }
    let mut st = State::new(model, opts, &basis)?;
    if st.max_infeasibility() > opts.feas_tol {
        let (b, it, feasible) = phase_one(model, opts)?;
        iterations += it;
        if !feasible {
            return Ok(infeasible_result(model, iterations));
        }
        st = State::new(model, opts, &b)?;
    }
    st.iterations = iterations;
    let mut status = st.run(&model.cost)?;
    // Shifted bounds: restore the true ones and polish from the same basis.
    for _ in 0..3 {
        if !st.shifted {
            break;
        }
        let (basis, iterations) = (st.snapshot(), st.iterations);
        st = State::new(model, opts, &basis)?;
        st.iterations = iterations;
        status = st.run(&model.cost)?;
    }
    st.lower = model.lower.clone();
    st.upper = model.upper.clone();
    st.finish(status)
}
