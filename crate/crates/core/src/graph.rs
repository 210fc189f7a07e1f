//! Bipartite sender→receiver graphs and their incidence algebra.
//!
//! The incidence matrix `A` has one row per sender and one column per
//! receiver. Both orientations are stored in compressed form because every
//! solver walks the graph both ways.

use std::fmt::Write as _;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Immutable bipartite graph with arcs from senders to receivers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    num_senders: usize,
    num_receivers: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<usize>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
}

impl BipartiteGraph {
    /// Builds a graph from an arc list. Out-of-range indices and duplicate
    /// arcs are rejected.
    pub fn new<I>(num_senders: usize, num_receivers: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut arcs: Vec<(usize, usize)> = arcs.into_iter().collect();
        for &(i, j) in &arcs {
            if i >= num_senders {
                return Err(Error::Dimension(format!(
                    "sender index {i} out of range (senders = {num_senders})"
                )));
            }
            if j >= num_receivers {
                return Err(Error::Dimension(format!(
                    "receiver index {j} out of range (receivers = {num_receivers})"
                )));
            }
        }
        arcs.sort_unstable();
        if let Some(w) = arcs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "duplicate arc {} {}",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_unique(num_senders, num_receivers, &arcs))
    }

    fn from_sorted_unique(num_senders: usize, num_receivers: usize, arcs: &[(usize, usize)]) -> Self {
        let mut out_offsets = vec![0usize; num_senders + 1];
        let mut in_offsets = vec![0usize; num_receivers + 1];
        for &(i, j) in arcs {
            out_offsets[i + 1] += 1;
            in_offsets[j + 1] += 1;
        }
        for i in 0..num_senders {
            out_offsets[i + 1] += out_offsets[i];
        }
        for j in 0..num_receivers {
            in_offsets[j + 1] += in_offsets[j];
        }
        let out_targets = arcs.iter().map(|&(_, j)| j).collect();
        // arcs are sender-major, so filling receiver buckets in order keeps
        // every in-list sorted by sender
        let mut in_sources = vec![0usize; arcs.len()];
        let mut cursor = in_offsets.clone();
        for &(i, j) in arcs {
            in_sources[cursor[j]] = i;
            cursor[j] += 1;
        }
        BipartiteGraph {
            num_senders,
            num_receivers,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn num_senders(&self) -> usize {
        self.num_senders
    }

    pub fn num_receivers(&self) -> usize {
        self.num_receivers
    }

    pub fn num_arcs(&self) -> usize {
        self.out_targets.len()
    }

    /// Receivers adjacent to sender `i`, sorted.
    pub fn receivers_of(&self, i: usize) -> &[usize] {
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// Senders adjacent to receiver `j`, sorted.
    pub fn senders_of(&self, j: usize) -> &[usize] {
        &self.in_sources[self.in_range(j)]
    }

    /// Positions of receiver `j`'s in-arcs in receiver-major arc order. Per-arc
    /// data (e.g. transmission probabilities) is indexed this way.
    pub fn in_range(&self, j: usize) -> Range<usize> {
        self.in_offsets[j]..self.in_offsets[j + 1]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.in_offsets[j + 1] - self.in_offsets[j]
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        i < self.num_senders && self.receivers_of(i).binary_search(&j).is_ok()
    }

    /// Arcs in lexicographic `(sender, receiver)` order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_senders).flat_map(move |i| self.receivers_of(i).iter().map(move |&j| (i, j)))
    }

    /// `Aᵀx`: for each receiver, the sum of `x` over its senders.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.num_senders {
            return Err(Error::Dimension(format!(
                "selection has length {}, graph has {} senders",
                x.len(),
                self.num_senders
            )));
        }
        Ok((0..self.num_receivers)
            .map(|j| self.senders_of(j).iter().map(|&i| x[i]).sum())
            .collect())
    }

    /// `Ay`: for each sender, the sum of `y` over its receivers.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.num_receivers {
            return Err(Error::Dimension(format!(
                "receiver vector has length {}, graph has {} receivers",
                y.len(),
                self.num_receivers
            )));
        }
        Ok((0..self.num_senders)
            .map(|i| self.receivers_of(i).iter().map(|&j| y[j]).sum())
            .collect())
    }

    /// Number of receivers adjacent to at least one sender of `set`.
    pub fn reachable_count(&self, set: &[usize]) -> Result<usize> {
        let mut hit = vec![false; self.num_receivers];
        for &i in set {
            if i >= self.num_senders {
                return Err(Error::Dimension(format!(
                    "sender index {i} out of range (senders = {})",
                    self.num_senders
                )));
            }
            for &j in self.receivers_of(i) {
                hit[j] = true;
            }
        }
        Ok(hit.into_iter().filter(|&h| h).count())
    }

    /// Canonical text form: header lines then one sorted `i j` line per arc.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + 12 * self.num_arcs());
        writeln!(out, "senders {}", self.num_senders).unwrap();
        writeln!(out, "receivers {}", self.num_receivers).unwrap();
        for (i, j) in self.arcs() {
            writeln!(out, "{i} {j}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut senders = None;
        let mut receivers = None;
        let mut arcs = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            let mut parts = line.split_whitespace();
            let first = parts.next().unwrap();
            let second = parts
                .next()
                .ok_or_else(|| perr(format!("expected two fields, found `{line}`")))?;
            if parts.next().is_some() {
                return Err(perr(format!("expected two fields, found `{line}`")));
            }
            let parse_count = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| perr(format!("`{s}` is not a non-negative integer")))
            };
            match (senders, receivers) {
                (None, _) => {
                    if first != "senders" {
                        return Err(perr("expected header `senders <m>`".into()));
                    }
                    senders = Some(parse_count(second)?);
                }
                (Some(_), None) => {
                    if first != "receivers" {
                        return Err(perr("expected header `receivers <n>`".into()));
                    }
                    receivers = Some(parse_count(second)?);
                }
                (Some(m), Some(n)) => {
                    let i = parse_count(first)?;
                    let j = parse_count(second)?;
                    if i >= m {
                        return Err(perr(format!("sender index {i} out of range (senders = {m})")));
                    }
                    if j >= n {
                        return Err(perr(format!("receiver index {j} out of range (receivers = {n})")));
                    }
                    if !seen.insert((i, j)) {
                        return Err(perr(format!("duplicate arc {i} {j}")));
                    }
                    arcs.push((i, j));
                }
            }
        }
        let (Some(m), Some(n)) = (senders, receivers) else {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                msg: "missing `senders`/`receivers` header".into(),
            });
        };
        arcs.sort_unstable();
        Ok(Self::from_sorted_unique(m, n, &arcs))
    }
}

impl FromStr for BipartiteGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

/// A fractional or 0-1 selection of senders with its budget `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionVector {
    pub x: Vec<f64>,
    pub k: usize,
}

impl SelectionVector {
    pub fn new(x: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("budget k must be positive".into()));
        }
        Ok(SelectionVector { x, k })
    }

    /// 0-1 indicator of `set` among `len` senders; the budget is `|set|`.
    pub fn indicator(len: usize, set: &[usize]) -> Result<Self> {
        let mut x = vec![0.0; len];
        for &i in set {
            if i >= len {
                return Err(Error::Dimension(format!("index {i} out of range ({len})")));
            }
            x[i] = 1.0;
        }
        Self::new(x, set.len())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Box bounds hold and the entries sum to `k` within `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.x.iter().all(|&v| (-tol..=1.0 + tol).contains(&v))
            && (self.x.iter().sum::<f64>() - self.k as f64).abs() <= tol
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }
}

/// Recovery error `sqrt(Σ_{i∈influencers} (x_i − 1)²)`.
pub fn recovery_error(x: &[f64], influencers: &[usize]) -> f64 {
    influencers.iter().map(|&i| (x[i] - 1.0).powi(2)).sum::<f64>().sqrt()
}
