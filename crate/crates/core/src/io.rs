//! Raster file formats.
//!
//! `NGD1` is the lossless native format: the ASCII header
//! `NGD1 <width> <height>\n` followed by `width * height` row-major
//! little-endian IEEE-754 doubles. 8-bit PGM (`P5` binary, `P2` ASCII) is
//! supported for interoperability; values map affinely between `[0, maxval]`
//! and `[0, 1]`, so writing PGM clamps and quantizes.

use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::grid::GrayGrid;
use crate::lattice::GridDims;

pub const NGD1_MAGIC: &[u8; 4] = b"NGD1";
const MAX_HEADER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    Ngd1,
    PgmBinary,
    PgmAscii,
}

impl RasterFormat {
    pub fn is_lossy(self) -> bool {
        !matches!(self, RasterFormat::Ngd1)
    }

    /// `.pgm` selects binary PGM; anything else is NGD1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => RasterFormat::PgmBinary,
            _ => RasterFormat::Ngd1,
        }
    }
}

/// What a lossy write did to the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteReport {
    pub lossy: bool,
    /// Pixels outside `[0, 1]` that were clamped.
    pub clamped: usize,
}

pub fn encode_ngd1(grid: &GrayGrid) -> Vec<u8> {
    let d = grid.dims();
    let mut out = format!("NGD1 {} {}\n", d.width, d.height).into_bytes();
    out.reserve(8 * d.len());
    for v in grid.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_pgm(grid: &GrayGrid, format: RasterFormat) -> (Vec<u8>, WriteReport) {
    let d = grid.dims();
    let mut clamped = 0;
    let levels: Vec<u8> = grid
        .values()
        .iter()
        .map(|&v| {
            if !(0.0..=1.0).contains(&v) {
                clamped += 1;
            }
            (v.clamp(0.0, 1.0) * 255.0).round() as u8
        })
        .collect();
    let out = match format {
        RasterFormat::PgmAscii => {
            let mut s = format!("P2\n{} {}\n255\n", d.width, d.height);
            for row in levels.chunks(d.width) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
            s.into_bytes()
        }
        _ => {
            let mut out = format!("P5\n{} {}\n255\n", d.width, d.height).into_bytes();
            out.extend_from_slice(&levels);
            out
        }
    };
    (out, WriteReport { lossy: true, clamped })
}

pub fn decode_gray(bytes: &[u8]) -> Result<(GrayGrid, RasterFormat), FormatError> {
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(bytes, true).map(|g| (g, RasterFormat::PgmBinary)),
        Some(b"P2") => decode_pgm(bytes, false).map(|g| (g, RasterFormat::PgmAscii)),
        _ if bytes.starts_with(NGD1_MAGIC) => decode_ngd1(bytes).map(|g| (g, RasterFormat::Ngd1)),
        _ => Err(FormatError::UnknownMagic(bytes.iter().take(4).copied().collect())),
    }
}

fn dims_from(w: &str, h: &str) -> Result<GridDims, FormatError> {
    let parse = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| FormatError::MalformedHeader(format!("bad dimension {s:?}")))
    };
    let (w, h) = (parse(w)?, parse(h)?);
    w.checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| FormatError::MalformedHeader(format!("dimensions {w}x{h} overflow")))?;
    Ok(GridDims { width: w, height: h })
}

fn decode_ngd1(bytes: &[u8]) -> Result<GrayGrid, FormatError> {
    let end = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::MalformedHeader("no header terminator".into()))?;
    let header = std::str::from_utf8(&bytes[NGD1_MAGIC.len()..end])
        .map_err(|_| FormatError::MalformedHeader("header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    let [w, h] = fields[..] else {
        return Err(FormatError::MalformedHeader(format!(
            "expected width and height, found {header:?}"
        )));
    };
    let dims = dims_from(w, h)?;
    let payload = &bytes[end + 1..];
    let expected = 8 * dims.len();
    if payload.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(FormatError::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FormatError::InvalidValue(format!("non-finite value at index {i}")));
    }
    Ok(GrayGrid::from_parts_unchecked(dims, values))
}

/// Splits a PNM header into tokens, skipping `#` comments. Returns the
/// tokens and the offset just past the whitespace byte after the last one.
fn pnm_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize), FormatError> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(FormatError::MalformedHeader("header ended early".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(FormatError::MalformedHeader("missing whitespace after header".into()));
    }
    Ok((tokens, i + 1))
}

fn decode_pgm(bytes: &[u8], binary: bool) -> Result<GrayGrid, FormatError> {
    let (tokens, offset) = pnm_tokens(bytes, 4)?;
    let dims = dims_from(&tokens[1], &tokens[2])?;
    let maxval: u32 = tokens[3]
        .parse()
        .ok()
        .filter(|m| (1..=255).contains(m))
        .ok_or_else(|| FormatError::MalformedHeader(format!("8-bit maxval required, got {:?}", tokens[3])))?;
    let levels: Vec<u32> = if binary {
        let payload = &bytes[offset..];
        if payload.len() < dims.len() {
            return Err(FormatError::Truncated {
                expected: dims.len(),
                actual: payload.len(),
            });
        }
        payload[..dims.len()].iter().map(|&b| b as u32).collect()
    } else {
        let text = std::str::from_utf8(&bytes[offset..])
            .map_err(|_| FormatError::InvalidValue("P2 payload is not ASCII".into()))?;
        let levels = text
            .lines()
            .flat_map(|line| line.split('#').next().unwrap_or("").split_ascii_whitespace())
            .map(|t| t.parse::<u32>().map_err(|_| FormatError::InvalidValue(format!("{t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if levels.len() < dims.len() {
            return Err(FormatError::Truncated {
                expected: dims.len(),
                actual: levels.len(),
            });
        }
        levels
    };
    if let Some(v) = levels.iter().find(|&&v| v > maxval) {
        return Err(FormatError::InvalidValue(format!("level {v} exceeds maxval {maxval}")));
    }
    let scale = maxval as f64;
    Ok(GrayGrid::from_parts_unchecked(
        dims,
        levels[..dims.len()].iter().map(|&v| v as f64 / scale).collect(),
    ))
}

/// Reads NGD1 or PGM, detected from the magic bytes.
pub fn read_gray(path: impl AsRef<Path>) -> Result<(GrayGrid, RasterFormat)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_gray(&bytes)?)
}

/// Writes in the format implied by the file extension.
pub fn write_gray(path: impl AsRef<Path>, grid: &GrayGrid) -> Result<WriteReport> {
    let path = path.as_ref();
    write_gray_as(path, grid, RasterFormat::from_path(path))
}

pub fn write_gray_as(path: impl AsRef<Path>, grid: &GrayGrid, format: RasterFormat) -> Result<WriteReport> {
    let path = path.as_ref();
    let (bytes, report) = match format {
        RasterFormat::Ngd1 => (encode_ngd1(grid), WriteReport::default()),
        pgm => encode_pgm(grid, pgm),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(report)
}
