//! Grayscale and binary rasters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GridDims, PixelCoord, RegionMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Black,
    White,
}

impl Color {
    #[inline]
    pub fn is_black(self) -> bool {
        self == Color::Black
    }

    pub fn flipped(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

/// Observed real-valued raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayGrid {
    dims: GridDims,
    values: Vec<f64>,
}

impl GrayGrid {
    pub fn new(dims: GridDims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::domain(format!(
                "{} values for a {dims} grid",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let c = dims.coord(i);
            return Err(Error::domain(format!(
                "non-finite value at ({}, {})",
                c.row, c.col
            )));
        }
        Ok(GrayGrid { dims, values })
    }

    pub fn filled(dims: GridDims, value: f64) -> Result<Self> {
        Self::new(dims, vec![value; dims.len()])
    }

    /// Builds a grid from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let dims = GridDims::new(width, height)?;
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::domain("ragged rows"));
        }
        Self::new(dims, rows.iter().flat_map(|r| r.as_ref().to_vec()).collect())
    }

    pub(crate) fn from_parts_unchecked(dims: GridDims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.len());
        GrayGrid { dims, values }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, coord: PixelCoord) -> f64 {
        self.values[self.dims.index(coord)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Black/white raster; `true` is black.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryGrid {
    dims: GridDims,
    values: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(dims: GridDims, values: Vec<bool>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::domain(format!(
                "{} values for a {dims} grid",
                values.len()
            )));
        }
        Ok(BinaryGrid { dims, values })
    }

    pub fn filled(dims: GridDims, color: Color) -> Self {
        BinaryGrid {
            dims,
            values: vec![color.is_black(); dims.len()],
        }
    }

    pub fn from_mask(mask: &RegionMask) -> Self {
        BinaryGrid {
            dims: mask.dims(),
            values: mask.membership().to_vec(),
        }
    }

    /// Rows of 0/1 digits, e.g. `["010", "111"]`.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let dims = GridDims::new(width, height)?;
        let mut values = Vec::with_capacity(dims.len());
        for row in rows {
            if row.len() != width {
                return Err(Error::domain("ragged rows"));
            }
            for ch in row.chars() {
                match ch {
                    '1' => values.push(true),
                    '0' => values.push(false),
                    other => return Err(Error::domain(format!("bad pixel {other:?}"))),
                }
            }
        }
        Ok(BinaryGrid { dims, values })
    }

    /// The low `dims.len()` bits of `bits`, bit `i` being pixel `i`.
    pub fn from_bits(dims: GridDims, bits: u64) -> Self {
        assert!(dims.len() <= 64);
        BinaryGrid {
            dims,
            values: (0..dims.len()).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }


    #[inline]
    pub fn color_at(&self, index: usize) -> Color {
        if self.values[index] {
            Color::Black
        } else {
            Color::White
        }
    }

    pub fn get(&self, coord: PixelCoord) -> Color {
        self.color_at(self.dims.index(coord))
    }

    pub fn set(&mut self, coord: PixelCoord, color: Color) {
        let i = self.dims.index(coord);
        self.values[i] = color.is_black();
    }

    pub fn count(&self, color: Color) -> usize {
        let black = self.values.iter().filter(|&&v| v).count();
        match color {
            Color::Black => black,
            Color::White => self.values.len() - black,
        }
    }

    /// Every pixel recolored.
    pub fn inverted(&self) -> Self {
        BinaryGrid {
            dims: self.dims,
            values: self.values.iter().map(|v| !v).collect(),
        }
    }

    /// Pixelwise OR.
    pub fn union(&self, other: &BinaryGrid) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::domain("grid dimensions differ"));
        }
        Ok(BinaryGrid {
            dims: self.dims,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a | b).collect(),
        })
    }

    /// `true` if every black pixel of `self` is black in `other`.
    pub fn is_subset_of(&self, other: &BinaryGrid) -> bool {
        self.dims == other.dims && self.values.iter().zip(&other.values).all(|(&a, &b)| !a || b)
    }

    /// 0/1 intensities, the noiseless observation of this grid.
    pub fn to_gray(&self) -> GrayGrid {
        GrayGrid::from_parts_unchecked(
            self.dims,
            self.values.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }
}
