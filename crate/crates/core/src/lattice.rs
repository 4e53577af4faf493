//! Pixel grids, lattice adjacency and region masks.
//!
//! Pixels are indexed row-major with `(0, 0)` at the top-left. The triangular
//! lattice is the square lattice with one diagonal added to every square,
//! always the `(+1, +1)` / `(-1, -1)` diagonal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
}

impl GridDims {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(GridDims { width, height })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, coord: PixelCoord) -> bool {
        coord.row < self.height && coord.col < self.width
    }

    #[inline]
    pub fn index(&self, coord: PixelCoord) -> usize {
        coord.row * self.width + coord.col
    }

    #[inline]
    pub fn coord(&self, index: usize) -> PixelCoord {
        PixelCoord {
            row: index / self.width,
            col: index % self.width,
        }
    }

    pub(crate) fn check(&self, coord: PixelCoord) -> Result<()> {
        if self.contains(coord) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "pixel ({}, {}) outside {}x{} grid",
                coord.row, coord.col, self.width, self.height
            )))
        }
    }
}

impl std::fmt::Display for GridDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        PixelCoord { row, col }
    }
}

impl From<(usize, usize)> for PixelCoord {
    fn from((row, col): (usize, usize)) -> Self {
        PixelCoord { row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    /// Square lattice plus the `(+1, +1)` diagonal: up to 6 neighbors.
    #[default]
    Triangular,
    /// Plain square lattice: up to 4 neighbors.
    Square,
}

/// Square stencil first, then the diagonal pair.
const OFFSETS: [(isize, isize); 6] = [(-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (1, 1)];

impl Adjacency {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Adjacency::Triangular => &OFFSETS,
            Adjacency::Square => &OFFSETS[..4],
        }
    }

    pub fn max_degree(self) -> usize {
        self.offsets().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Adjacency::Triangular => "triangular",
            Adjacency::Square => "square",
        }
    }
}

impl std::str::FromStr for Adjacency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "triangular" | "tri" => Ok(Adjacency::Triangular),
            "square" | "sq" => Ok(Adjacency::Square),
            other => Err(Error::domain(format!("unknown adjacency {other:?}"))),
        }
    }
}

impl std::fmt::Display for Adjacency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Writes the flat indices of the in-bounds neighbors of `index` into `out`
/// and returns how many there are.
#[inline]
pub(crate) fn neighbor_indices(
    index: usize,
    dims: GridDims,
    adj: Adjacency,
    out: &mut [usize; 6],
) -> usize {
    let row = (index / dims.width) as isize;
    let col = (index % dims.width) as isize;
    let (h, w) = (dims.height as isize, dims.width as isize);
    let mut n = 0;
    for &(dr, dc) in adj.offsets() {
        let (r, c) = (row + dr, col + dc);
        if r >= 0 && r < h && c >= 0 && c < w {
            out[n] = (r * w + c) as usize;
            n += 1;
        }
    }
    n
}

/// In-bounds lattice neighbors of `coord`.
pub fn neighbors(coord: PixelCoord, dims: GridDims, adj: Adjacency) -> Result<Vec<PixelCoord>> {
    dims.check(coord)?;
    let mut buf = [0usize; 6];
    let n = neighbor_indices(dims.index(coord), dims, adj, &mut buf);
    Ok(buf[..n].iter().map(|&i| dims.coord(i)).collect())
}

/// Partition of the pixels into an image region (`true`) and background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    dims: GridDims,
    membership: Vec<bool>,
}

impl RegionMask {
    pub fn empty(dims: GridDims) -> Self {
        RegionMask {
            dims,
            membership: vec![false; dims.len()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn contains(&self, coord: PixelCoord) -> bool {
        self.dims.contains(coord) && self.membership[self.dims.index(coord)]
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    pub fn image_count(&self) -> usize {
        self.membership.iter().filter(|&&m| m).count()
    }

    pub fn background_count(&self) -> usize {
        self.dims.len() - self.image_count()
    }

    pub fn insert(&mut self, coord: PixelCoord) -> Result<()> {
        self.dims.check(coord)?;
        let i = self.dims.index(coord);
        self.membership[i] = true;
        Ok(())
    }

    /// Union with another mask of the same dimensions.
    pub fn union_with(&mut self, other: &RegionMask) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::domain(format!(
                "mask dimensions differ: {} vs {}",
                self.dims, other.dims
            )));
        }
        for (a, &b) in self.membership.iter_mut().zip(&other.membership) {
            *a |= b;
        }
        Ok(())
    }
}

/// Mask that is `true` exactly on the `side` x `side` square at `top_left`.
pub fn square_mask(dims: GridDims, top_left: PixelCoord, side: usize) -> Result<RegionMask> {
    if side == 0 {
        return Err(Error::domain("square side must be positive"));
    }
    if top_left.row + side > dims.height || top_left.col + side > dims.width {
        return Err(Error::domain(format!(
            "square of side {side} at ({}, {}) exceeds {dims} grid",
            top_left.row, top_left.col
        )));
    }
    let mut mask = RegionMask::empty(dims);
    for r in top_left.row..top_left.row + side {
        let start = r * dims.width + top_left.col;
        mask.membership[start..start + side].fill(true);
    }
    Ok(mask)
}
