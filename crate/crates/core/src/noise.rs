//! Additive noise model `Y = Im + scale * eps` and exact exceedance
//! probabilities.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::cluster::Threshold;
use crate::error::{Error, FormatError, Result};
use crate::grid::{BinaryGrid, GrayGrid};
use crate::lattice::GridDims;
use crate::rng::Seed;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Standardized noise law. Gaussian, uniform and two-point have mean 0 and
/// variance 1 (two-point: variance `atom^2`); Cauchy is the standard Cauchy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseFamily {
    Gaussian,
    Cauchy,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
    /// Mass 1/2 at each of `-atom` and `+atom`.
    TwoPoint { atom: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    family: NoiseFamily,
    scale: f64,
}

impl NoiseModel {
    pub fn new(family: NoiseFamily, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::domain(format!("noise scale must be positive, got {scale}")));
        }
        if let NoiseFamily::TwoPoint { atom } = family {
            if !(atom.is_finite() && atom > 0.0) {
                return Err(Error::domain(format!("two-point atom must be positive, got {atom}")));
            }
        }
        Ok(NoiseModel { family, scale })
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::Gaussian, scale)
    }

    pub fn cauchy(scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::Cauchy, scale)
    }

    pub fn uniform(scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::Uniform, scale)
    }

    pub fn two_point(scale: f64, atom: f64) -> Result<Self> {
        Self::new(NoiseFamily::TwoPoint { atom }, scale)
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// One standardized draw `eps`.
    #[inline]
    pub fn sample_standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Cauchy => {
                let u: f64 = rng.random();
                (PI * (u - 0.5)).tan()
            }
            NoiseFamily::Uniform => {
                let u: f64 = rng.random();
                SQRT_3 * (2.0 * u - 1.0)
            }
            NoiseFamily::TwoPoint { atom } => {
                if rng.random::<bool>() {
                    atom
                } else {
                    -atom
                }
            }
        }
    }

    /// `P(eps >= z)`, exact.
    pub fn standard_survival(&self, z: f64) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => 0.5 * erfc(z * FRAC_1_SQRT_2),
            NoiseFamily::Cauchy => 0.5 - z.atan() / PI,
            NoiseFamily::Uniform => ((SQRT_3 - z) / (2.0 * SQRT_3)).clamp(0.0, 1.0),
            NoiseFamily::TwoPoint { atom } => {
                0.5 * ((-atom >= z) as u8 as f64) + 0.5 * ((atom >= z) as u8 as f64)
            }
        }
    }

    /// Whether the law has no flat stretch of its CDF of length >= 1 on the
    /// observation scale, the condition under which thresholding at 1/2
    /// separates white from black pixels. Only the two-point law can fail it.
    pub fn is_nondegenerate(&self) -> bool {
        match self.family {
            NoiseFamily::TwoPoint { atom } => 2.0 * atom * self.scale < 1.0,
            _ => true,
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            NoiseFamily::Gaussian => write!(f, "gaussian:{}", self.scale),
            NoiseFamily::Cauchy => write!(f, "cauchy:{}", self.scale),
            NoiseFamily::Uniform => write!(f, "uniform:{}", self.scale),
            NoiseFamily::TwoPoint { atom } => write!(f, "two-point:{}:{}", self.scale, atom),
        }
    }
}

/// Inline form `family:scale[:atom]`, e.g. `gaussian:1.8` or `two-point:0.4:1`.
impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Format(FormatError::Config(msg));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            let p = parts.get(i).ok_or_else(|| bad(format!("noise spec {s:?} is missing a field")))?;
            p.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("noise spec {s:?}: {p:?} is not a number")))
        };
        let family = match parts[0].trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => NoiseFamily::Gaussian,
            "cauchy" => NoiseFamily::Cauchy,
            "uniform" => NoiseFamily::Uniform,
            "two-point" | "twopoint" => NoiseFamily::TwoPoint {
                atom: if parts.len() > 2 { num(2)? } else { 1.0 },
            },
            other => return Err(bad(format!("unknown noise family {other:?}"))),
        };
        let expected = if matches!(family, NoiseFamily::TwoPoint { .. }) { 3 } else { 2 };
        if parts.len() > expected {
            return Err(bad(format!("noise spec {s:?} has trailing fields")));
        }
        NoiseModel::new(family, num(1)?)
    }
}

impl NoiseModel {
    /// Parses either the inline form or a TOML document such as
    /// `family = "gaussian"` / `scale = 1.8`.
    pub fn parse_config(text: &str) -> Result<Self> {
        let text = text.trim();
        if !text.contains('=') {
            return text.parse();
        }
        let model: NoiseModel = toml::from_str(text)
            .map_err(|e| Error::Format(FormatError::Config(e.to_string())))?;
        NoiseModel::new(model.family, model.scale)
    }

    pub fn to_config(&self) -> String {
        toml::to_string(self).expect("noise model serializes")
    }
}

/// `P(pixel_value + scale * eps >= threshold)` in closed form.
pub fn exceedance_probability(noise: &NoiseModel, pixel_value: f64, threshold: f64) -> f64 {
    noise.standard_survival((threshold - pixel_value) / noise.scale)
}

/// Per-pixel independent draw of `truth + scale * eps`, pixel `i` using
/// stream `i` of `seed`.
pub fn simulate_observation(truth: &BinaryGrid, noise: &NoiseModel, seed: Seed) -> GrayGrid {
    let dims = truth.dims();
    let values: Vec<f64> = truth
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, &black)| observe_pixel(black, noise, seed, i))
        .collect();
    GrayGrid::from_parts_unchecked(dims, values)
}

#[inline]
fn observe_pixel(black: bool, noise: &NoiseModel, seed: Seed, index: usize) -> f64 {
    let base = if black { 1.0 } else { 0.0 };
    base + noise.scale * noise.sample_standard(&mut seed.stream(index as u64))
}

/// Simulation fused with thresholding: identical to
/// `apply_threshold(&simulate_observation(truth, noise, seed), theta)`
/// without materializing the gray raster.
pub fn simulate_thresholded(
    truth: &BinaryGrid,
    noise: &NoiseModel,
    seed: Seed,
    theta: Threshold,
) -> BinaryGrid {
    let values = truth
        .values()
        .iter()
        .enumerate()
        .map(|(i, &black)| observe_pixel(black, noise, seed, i) >= theta.value())
        .collect();
    BinaryGrid::new(truth.dims(), values).expect("same dims")
}

/// Thresholded pure-noise observation of an empty scene.
pub fn simulate_null_thresholded(
    dims: GridDims,
    noise: &NoiseModel,
    seed: Seed,
    theta: Threshold,
) -> BinaryGrid {
    let values = (0..dims.len())
        .map(|i| observe_pixel(false, noise, seed, i) >= theta.value())
        .collect();
    BinaryGrid::new(dims, values).expect("same dims")
}
