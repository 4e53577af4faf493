//! Synthetic scenes: unions of squares and mask images on a white screen.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, FormatError, Result};
use crate::grid::{BinaryGrid, Color};
use crate::io::read_gray;
use crate::lattice::{square_mask, GridDims, PixelCoord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum SceneObject {
    Square { row: usize, col: usize, side: usize },
    /// Raster whose pixels with value `>= 1/2` are black, placed with its
    /// top-left corner at `(row, col)`.
    Mask { row: usize, col: usize, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

impl SceneSpec {
    pub fn empty(dims: GridDims) -> Self {
        SceneSpec {
            width: dims.width,
            height: dims.height,
            objects: Vec::new(),
        }
    }

    /// One `side`-square centered on a square `n` screen.
    pub fn centered_square(n: usize, side: usize) -> Self {
        let off = n.saturating_sub(side) / 2;
        SceneSpec {
            width: n,
            height: n,
            objects: vec![SceneObject::Square {
                row: off,
                col: off,
                side,
            }],
        }
    }

    pub fn dims(&self) -> Result<GridDims> {
        GridDims::new(self.width, self.height)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(FormatError::Config(e.to_string())))
    }

    /// Parses a TOML scene file; relative mask paths resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for obj in &mut spec.objects {
            if let SceneObject::Mask { path: p, .. } = obj {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }
}

/// Black on the union of all objects, white elsewhere.
pub fn render_scene(spec: &SceneSpec) -> Result<BinaryGrid> {
    let dims = spec.dims()?;
    let mut grid = BinaryGrid::filled(dims, Color::White);
    for obj in &spec.objects {
        match obj {
            SceneObject::Square { row, col, side } => {
                let mask = square_mask(dims, PixelCoord::new(*row, *col), *side)?;
                grid = grid.union(&BinaryGrid::from_mask(&mask))?;
            }
            SceneObject::Mask { row, col, path } => {
                let (mask, _) = read_gray(path)?;
                let md = mask.dims();
                if row + md.height > dims.height || col + md.width > dims.width {
                    return Err(Error::domain(format!(
                        "mask {} ({md}) at ({row}, {col}) exceeds {dims} scene",
                        path.display()
                    )));
                }
                for (i, &v) in mask.values().iter().enumerate() {
                    if v >= 0.5 {
                        let c = md.coord(i);
                        grid.set(PixelCoord::new(row + c.row, col + c.col), Color::Black);
                    }
                }
            }
        }
    }
    Ok(grid)
}
