//! Thresholding and monochrome cluster extraction.
//!
//! Clusters are found by an iterative depth-first search with an explicit
//! stack. Start pixels are taken in row-major order and neighbors are pushed
//! in a fixed stencil order, so every scan is reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Color, GrayGrid};
use crate::lattice::{neighbor_indices, Adjacency, GridDims, PixelCoord};

/// Thresholding level; pixels with `value >= threshold` turn black.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Threshold(value))
        } else {
            Err(Error::domain(format!("threshold must be finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold(0.5)
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A connected monochrome pixel set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub color: Color,
    pub pixels: Vec<PixelCoord>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.pixels.len()
    }

    /// Pixels sorted row-major.
    pub fn canonical(&self) -> Vec<PixelCoord> {
        let mut p = self.pixels.clone();
        p.sort_unstable();
        p
    }

    pub fn contains(&self, coord: PixelCoord) -> bool {
        self.pixels.contains(&coord)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterScan {
    pub clusters: Vec<Cluster>,
    pub max_size: usize,
    pub stopped_early: bool,
    /// Start-pixel inspections plus neighbor probes.
    pub visited_count: usize,
}

impl ClusterScan {
    /// Cluster pixel sets, each sorted, in sorted order.
    pub fn canonical_sets(&self) -> Vec<Vec<PixelCoord>> {
        let mut sets: Vec<_> = self.clusters.iter().map(Cluster::canonical).collect();
        sets.sort();
        sets
    }
}

/// Black iff `value >= theta`.
pub fn apply_threshold(observed: &GrayGrid, theta: Threshold) -> BinaryGrid {
    let values = observed.values().iter().map(|&v| v >= theta.value()).collect();
    BinaryGrid::new(observed.dims(), values).expect("same dims")
}

/// Outcome of growing one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Growth {
    Complete(usize),
    /// Reached the stop size; the frontier is still on the stack.
    Stopped(usize),
}

/// Resumable component walker over one color of a binary grid.
pub(crate) struct Walker<'g> {
    grid: &'g BinaryGrid,
    target: bool,
    adj: Adjacency,
    dims: GridDims,
    seen: Vec<bool>,
    stack: Vec<usize>,
    /// Stack entry whose neighbor probes were interrupted at a stop.
    pending: Option<(usize, usize)>,
    next_start: usize,
    current: usize,
    pub(crate) work: usize,
}

impl<'g> Walker<'g> {
    pub(crate) fn new(grid: &'g BinaryGrid, color: Color, adj: Adjacency) -> Self {
        let dims = grid.dims();
        Walker {
            grid,
            target: color.is_black(),
            adj,
            dims,
            seen: vec![false; dims.len()],
            stack: Vec::new(),
            pending: None,
            next_start: 0,
            current: 0,
            work: 0,
        }
    }

    /// Starts the next cluster in row-major order and grows it until it is
    /// complete or has `stop` pixels. `None` once every cluster is found.
    pub(crate) fn next_cluster(
        &mut self,
        stop: Option<usize>,
        sink: Option<&mut Vec<usize>>,
    ) -> Option<Growth> {
        let values = self.grid.values();
        while self.next_start < values.len() {
            let i = self.next_start;
            self.next_start += 1;
            self.work += 1;
            if values[i] == self.target && !self.seen[i] {
                self.seen[i] = true;
                self.stack.clear();
                self.pending = None;
                self.stack.push(i);
                self.current = 1;
                let mut sink = sink;
                if let Some(s) = sink.as_deref_mut() {
                    s.push(i);
                }
                if stop.is_some_and(|s| self.current >= s) {
                    return Some(Growth::Stopped(self.current));
                }
                return Some(self.grow(stop, sink));
            }
        }
        None
    }

    /// Continues growing the current cluster.
    pub(crate) fn grow(&mut self, stop: Option<usize>, mut sink: Option<&mut Vec<usize>>) -> Growth {
        let values = self.grid.values();
        let mut buf = [0usize; 6];
        loop {
            let (top, from) = match self.pending.take() {
                Some(resume) => resume,
                None => match self.stack.pop() {
                    Some(top) => (top, 0),
                    None => return Growth::Complete(self.current),
                },
            };
            let k = neighbor_indices(top, self.dims, self.adj, &mut buf);
            for (pos, &j) in buf[..k].iter().enumerate().skip(from) {
                self.work += 1;
                if values[j] == self.target && !self.seen[j] {
                    self.seen[j] = true;
                    self.stack.push(j);
                    self.current += 1;
                    if let Some(s) = sink.as_deref_mut() {
                        s.push(j);
                    }
                    if stop.is_some_and(|s| self.current >= s) {
                        self.pending = Some((top, pos + 1));
                        return Growth::Stopped(self.current);
                    }
                }
            }
        }
    }
}

fn to_cluster(dims: GridDims, color: Color, idx: &[usize]) -> Cluster {
    Cluster {
        color,
        pixels: idx.iter().map(|&i| dims.coord(i)).collect(),
    }
}

fn scan(grid: &BinaryGrid, color: Color, adj: Adjacency, stop: Option<usize>) -> ClusterScan {
    let dims = grid.dims();
    let mut walker = Walker::new(grid, color, adj);
    let mut clusters = Vec::new();
    let mut max_size = 0;
    let mut stopped_early = false;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        match walker.next_cluster(stop, Some(&mut buf)) {
            None => break,
            Some(growth) => {
                clusters.push(to_cluster(dims, color, &buf));
                match growth {
                    Growth::Complete(n) => max_size = max_size.max(n),
                    Growth::Stopped(n) => {
                        max_size = max_size.max(n);
                        stopped_early = true;
                        break;
                    }
                }
            }
        }
    }
    ClusterScan {
        clusters,
        max_size,
        stopped_early,
        visited_count: walker.work,
    }
}

/// All maximal clusters of `color`.
pub fn find_clusters(grid: &BinaryGrid, color: Color, adj: Adjacency) -> ClusterScan {
    scan(grid, color, adj, None)
}

/// Like [`find_clusters`], but halts as soon as one cluster reaches
/// `stop_size` pixels. That last cluster may then be partial.
pub fn scan_until(
    grid: &BinaryGrid,
    color: Color,
    adj: Adjacency,
    stop_size: usize,
) -> Result<ClusterScan> {
    if stop_size == 0 {
        return Err(Error::domain("stop size must be at least 1"));
    }
    Ok(scan(grid, color, adj, Some(stop_size)))
}

/// Size of the largest cluster of `color`, without collecting pixels.
pub fn max_cluster_size(grid: &BinaryGrid, color: Color, adj: Adjacency) -> usize {
    let mut walker = Walker::new(grid, color, adj);
    let mut max = 0;
    while let Some(g) = walker.next_cluster(None, None) {
        let (Growth::Complete(n) | Growth::Stopped(n)) = g;
        max = max.max(n);
    }
    max
}

/// Marks every `color` pixel reachable from the `color` pixels among
/// `sources`. Stops early once `goal` accepts a reached pixel and returns
/// whether it did.
pub(crate) fn flood_reaches(
    grid: &BinaryGrid,
    color: Color,
    adj: Adjacency,
    sources: impl IntoIterator<Item = usize>,
    goal: impl Fn(usize) -> bool,
) -> bool {
    let dims = grid.dims();
    let values = grid.values();
    let target = color.is_black();
    let mut seen = vec![false; dims.len()];
    let mut stack = Vec::new();
    for s in sources {
        if values[s] == target && !seen[s] {
            if goal(s) {
                return true;
            }
            seen[s] = true;
            stack.push(s);
        }
    }
    let mut buf = [0usize; 6];
    while let Some(top) = stack.pop() {
        let k = neighbor_indices(top, dims, adj, &mut buf);
        for &j in &buf[..k] {
            if values[j] == target && !seen[j] {
                if goal(j) {
                    return true;
                }
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    false
}
