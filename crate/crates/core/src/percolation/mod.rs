//! Site-percolation laboratory on the `(n+1) x (n+1)` box.
//!
//! Monte Carlo estimators and exact enumerators for the facts the detector
//! depends on: box crossings and their duality, vertex-disjoint crossings,
//! subcritical cluster tails, and positive correlation of increasing events.

mod flow;

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::flood_reaches;
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Color};
use crate::lattice::{neighbor_indices, Adjacency, GridDims, PixelCoord};
use crate::rng::Seed;
use crate::tail::{exceedance_counts, TailFit};
use flow::FlowNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercConfig {
    /// Box `[0, n] x [0, n]`, i.e. `(n+1)^2` sites.
    pub n: usize,
    pub p: f64,
}

impl PercConfig {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("occupation probability must lie in [0, 1], got {p}")));
        }
        Ok(PercConfig { n, p })
    }

    pub fn dims(&self) -> GridDims {
        GridDims::square(self.n + 1).expect("n + 1 >= 1")
    }
}

#[inline]
fn site_black(seed: Seed, index: usize, p: f64) -> bool {
    seed.uniform(index as u64) < p
}

/// Each site black independently with probability `p`; site `i` uses
/// stream `i` of `seed`, so configurations at different `p` are coupled.
pub fn sample_configuration(cfg: &PercConfig, seed: Seed) -> BinaryGrid {
    let dims = cfg.dims();
    let values = (0..dims.len()).map(|i| site_black(seed, i, cfg.p)).collect();
    BinaryGrid::new(dims, values).expect("same dims")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LeftRight,
    TopBottom,
}

/// Whether a `color` path joins the two sides of the grid facing `direction`.
pub fn has_crossing(grid: &BinaryGrid, color: Color, direction: Direction, adj: Adjacency) -> bool {
    let d = grid.dims();
    match direction {
        Direction::LeftRight => {
            let last = d.width - 1;
            flood_reaches(grid, color, adj, (0..d.height).map(|r| r * d.width), |i| {
                i % d.width == last
            })
        }
        Direction::TopBottom => {
            let last = d.height - 1;
            flood_reaches(grid, color, adj, 0..d.width, |i| i / d.width == last)
        }
    }
}

/// Black left-right crossing, the event `A_n`.
pub fn open_lr(grid: &BinaryGrid) -> bool {
    has_crossing(grid, Color::Black, Direction::LeftRight, Adjacency::Triangular)
}

/// White top-bottom crossing, the event `B_n`.
pub fn closed_tb(grid: &BinaryGrid) -> bool {
    has_crossing(grid, Color::White, Direction::TopBottom, Adjacency::Triangular)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingStats {
    pub trials: usize,
    pub a_n_count: usize,
    pub b_n_count: usize,
    pub both_count: usize,
}

impl CrossingStats {
    pub fn a_frequency(&self) -> f64 {
        self.a_n_count as f64 / self.trials as f64
    }

    pub fn b_frequency(&self) -> f64 {
        self.b_n_count as f64 / self.trials as f64
    }

    pub fn a_stderr(&self) -> f64 {
        binomial_se(self.a_frequency(), self.trials)
    }

    /// Configurations with exactly one of `A_n`, `B_n`.
    pub fn exclusive(&self) -> bool {
        self.both_count == 0 && self.a_n_count + self.b_n_count == self.trials
    }
}

fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Monte Carlo frequencies of `A_n`, `B_n` and `A_n & B_n`.
pub fn estimate_crossing(cfg: &PercConfig, trials: usize, seed: Seed) -> Result<CrossingStats> {
    if trials < 100 {
        return Err(Error::domain(format!("need at least 100 trials, got {trials}")));
    }
    let (a, b, both) = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let g = sample_configuration(cfg, seed.derive(t));
            let (a, b) = (open_lr(&g), closed_tb(&g));
            (a as usize, b as usize, (a && b) as usize)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    Ok(CrossingStats {
        trials,
        a_n_count: a,
        b_n_count: b,
        both_count: both,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointCrossings {
    pub grid: BinaryGrid,
    pub m_n: usize,
    /// One witness family of `m_n` pairwise vertex-disjoint crossings.
    pub paths: Vec<Vec<PixelCoord>>,
}

/// Maximum number of vertex-disjoint black left-right crossings, by unit
/// vertex-capacity maximum flow.
pub fn max_disjoint_crossings(grid: &BinaryGrid, adj: Adjacency) -> DisjointCrossings {
    let d = grid.dims();
    let v = d.len();
    let (source, sink) = (2 * v, 2 * v + 1);
    let (inn, out) = (|i: usize| 2 * i, |i: usize| 2 * i + 1);
    let black = grid.values();
    let mut net = FlowNetwork::new(2 * v + 2);
    let mut buf = [0usize; 6];
    for i in (0..v).filter(|&i| black[i]) {
        net.add_edge(inn(i), out(i), 1);
        let k = neighbor_indices(i, d, adj, &mut buf);
        for &j in buf[..k].iter().filter(|&&j| black[j]) {
            net.add_edge(out(i), inn(j), 1);
        }
        if i % d.width == 0 {
            net.add_edge(source, inn(i), 1);
        }
        if i % d.width == d.width - 1 {
            net.add_edge(out(i), sink, 1);
        }
    }
    let m_n = net.max_flow(source, sink) as usize;

    let paths = net
        .flow_targets(source)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|first| {
            let mut path = Vec::new();
            let mut node = first;
            while node != sink {
                let site = node / 2;
                if node % 2 == 0 {
                    path.push(d.coord(site));
                }
                node = net.flow_targets(node).next().expect("flow is conserved");
            }
            path
        })
        .collect();
    DisjointCrossings {
        grid: grid.clone(),
        m_n,
        paths,
    }
}

/// Estimates `P(|C| >= n)` for the black cluster `C` of the box center.
///
/// Sites are sampled lazily as the cluster grows, each from the same stream
/// [`sample_configuration`] would use, and growth stops at `max(sizes)`.
pub fn estimate_cluster_tail(
    p: f64,
    sizes: &[usize],
    box_side: usize,
    trials: usize,
    seed: Seed,
) -> Result<TailFit> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("occupation probability must lie in [0, 1], got {p}")));
    }
    if p >= 0.5 {
        return Err(Error::Precondition(format!(
            "p = {p} is not subcritical on the triangular lattice"
        )));
    }
    let cap = match sizes.iter().copied().max() {
        Some(m) if m > 0 && !sizes.contains(&0) => m,
        _ => return Err(Error::domain("sizes must be nonempty and positive")),
    };
    if box_side < 4 * cap {
        return Err(Error::domain(format!(
            "box {box_side} too small for cluster sizes up to {cap}; need at least {}",
            4 * cap
        )));
    }
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let cfg = PercConfig::new(box_side, p)?;
    let samples: Vec<usize> = (0..trials as u64)
        .into_par_iter()
        .map(|t| center_cluster_size(&cfg, seed.derive(t), cap))
        .collect();
    TailFit::from_counts(p, sizes, &exceedance_counts(&samples, sizes), trials)
}

/// Size of the center's black cluster, capped at `cap`.
pub fn center_cluster_size(cfg: &PercConfig, seed: Seed, cap: usize) -> usize {
    let d = cfg.dims();
    let center = d.index(PixelCoord::new(d.height / 2, d.width / 2));
    let mut color: HashMap<usize, bool> = HashMap::new();
    let mut is_black = |i: usize| *color.entry(i).or_insert_with(|| site_black(seed, i, cfg.p));
    if !is_black(center) {
        return 0;
    }
    let mut in_cluster = std::collections::HashSet::from([center]);
    let mut stack = vec![center];
    let mut buf = [0usize; 6];
    while let Some(top) = stack.pop() {
        let k = neighbor_indices(top, d, Adjacency::Triangular, &mut buf);
        for &j in &buf[..k] {
            if !in_cluster.contains(&j) && is_black(j) {
                in_cluster.insert(j);
                if in_cluster.len() >= cap {
                    return cap;
                }
                stack.push(j);
            }
        }
    }
    in_cluster.len().min(cap)
}

/// Empirical `P(A)`, `P(B)`, `P(A & B)` for the black left-right (`A`) and
/// black top-bottom (`B`) crossings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkgReport {
    pub trials: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// Standard error of `p_ab - p_a * p_b`.
    pub joint_se: f64,
}

impl FkgReport {
    pub fn covariance(&self) -> f64 {
        self.p_ab - self.p_a * self.p_b
    }
}

pub fn check_fkg(cfg: &PercConfig, trials: usize, seed: Seed) -> Result<FkgReport> {
    if trials < 1000 {
        return Err(Error::domain(format!("need at least 1000 trials, got {trials}")));
    }
    let (a, b, ab) = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let g = sample_configuration(cfg, seed.derive(t));
            let a = has_crossing(&g, Color::Black, Direction::LeftRight, Adjacency::Triangular);
            let b = has_crossing(&g, Color::Black, Direction::TopBottom, Adjacency::Triangular);
            (a as usize, b as usize, (a && b) as usize)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    let t = trials as f64;
    let (p_a, p_b, p_ab) = (a as f64 / t, b as f64 / t, ab as f64 / t);
    // Influence function of p_ab - p_a p_b: 1_ab - p_b 1_a - p_a 1_b.
    let mean = p_ab - 2.0 * p_a * p_b;
    let second = p_ab + p_b * p_b * p_a + p_a * p_a * p_b - 2.0 * (p_a + p_b) * p_ab + 2.0 * p_a * p_b * p_ab;
    let joint_se = ((second - mean * mean).max(0.0) / t).sqrt();
    Ok(FkgReport {
        trials,
        p_a,
        p_b,
        p_ab,
        joint_se,
    })
}

/// Counts of box configurations by number of black sites, for events that
/// can then be evaluated exactly at any `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactEvent {
    pub sites: usize,
    /// `by_black[k]` = configurations with `k` black sites in the event.
    pub by_black: Vec<u64>,
}

impl ExactEvent {
    pub fn probability(&self, p: f64) -> f64 {
        self.by_black
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * p.powi(k as i32) * (1.0 - p).powi((self.sites - k) as i32))
            .sum()
    }

    pub fn configurations(&self) -> u64 {
        self.by_black.iter().sum()
    }
}

/// Exhaustive crossing statistics of the `(n+1)^2` box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCrossings {
    pub n: usize,
    /// Black left-right crossing.
    pub open_lr: ExactEvent,
    /// Black top-bottom crossing.
    pub open_tb: ExactEvent,
    /// Both black crossings.
    pub open_both: ExactEvent,
    /// White top-bottom crossing.
    pub closed_tb: ExactEvent,
    /// Configurations where exactly one of black LR / white TB holds.
    pub exclusive_count: u64,
    pub total: u64,
}

/// Enumerates all `2^((n+1)^2)` colorings; `n <= 3`.
pub fn enumerate_crossings(n: usize) -> Result<ExactCrossings> {
    if n > 3 {
        return Err(Error::domain(format!("exhaustive enumeration limited to n <= 3, got {n}")));
    }
    let d = GridDims::square(n + 1)?;
    let sites = d.len();
    let empty = || ExactEvent {
        sites,
        by_black: vec![0; sites + 1],
    };
    let (mut lr, mut tb, mut both, mut wtb) = (empty(), empty(), empty(), empty());
    let mut exclusive_count = 0;
    let total = 1u64 << sites;
    for bits in 0..total {
        let g = BinaryGrid::from_bits(d, bits);
        let k = bits.count_ones() as usize;
        let a = open_lr(&g);
        let b = has_crossing(&g, Color::Black, Direction::TopBottom, Adjacency::Triangular);
        let w = closed_tb(&g);
        lr.by_black[k] += a as u64;
        tb.by_black[k] += b as u64;
        both.by_black[k] += (a && b) as u64;
        wtb.by_black[k] += w as u64;
        exclusive_count += (a != w) as u64;
    }
    Ok(ExactCrossings {
        n,
        open_lr: lr,
        open_tb: tb,
        open_both: both,
        closed_tb: wtb,
        exclusive_count,
        total,
    })
}

/// One line of a lab report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub n: usize,
    pub p: f64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Writes rows as CSV with header `n,p,estimate,stderr`.
pub fn write_estimates_csv<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::io("<csv>", std::io::Error::other(e)))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

#[cfg(test)]
mod tests;
