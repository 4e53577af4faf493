//! Threshold-and-cluster detection, Monte Carlo calibration of the critical
//! cluster size, and empirical false-alarm decay rates.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{apply_threshold, max_cluster_size, Cluster, Growth, Threshold, Walker};
use crate::error::{Error, Result};
use crate::grid::{Color, GrayGrid};
use crate::lattice::{Adjacency, GridDims};
use crate::noise::{exceedance_probability, simulate_null_thresholded, NoiseModel};
use crate::rng::Seed;
use crate::tail::{exceedance_counts, TailFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub theta: Threshold,
    pub critical_size: usize,
    pub adjacency: Adjacency,
}

impl DetectionConfig {
    /// Threshold 1/2 on the triangular lattice.
    pub fn new(critical_size: usize) -> Result<Self> {
        if critical_size == 0 {
            return Err(Error::domain("critical size must be at least 1"));
        }
        Ok(DetectionConfig {
            theta: Threshold::default(),
            critical_size,
            adjacency: Adjacency::Triangular,
        })
    }

    pub fn with_theta(mut self, theta: Threshold) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_adjacency(mut self, adjacency: Adjacency) -> Self {
        self.adjacency = adjacency;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub detected: bool,
    pub max_black_cluster: usize,
    /// The first cluster to reach the critical size, grown to completion.
    pub evidence: Option<Cluster>,
    pub pixels_visited: usize,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

/// Thresholds `observed` and scans black clusters until one reaches the
/// critical size.
pub fn detect(observed: &GrayGrid, config: &DetectionConfig) -> Result<DetectionReport> {
    let dims = observed.dims();
    if config.critical_size == 0 || config.critical_size > dims.len() {
        return Err(Error::domain(format!(
            "critical size {} must lie in [1, {}] for a {dims} grid",
            config.critical_size,
            dims.len()
        )));
    }
    let start = Instant::now();
    let binary = apply_threshold(observed, config.theta);
    let mut walker = Walker::new(&binary, Color::Black, config.adjacency);
    let mut pixels = Vec::new();
    let mut max_black_cluster = 0;
    let mut evidence = None;
    loop {
        pixels.clear();
        match walker.next_cluster(Some(config.critical_size), Some(&mut pixels)) {
            None => break,
            Some(Growth::Complete(n)) => max_black_cluster = max_black_cluster.max(n),
            Some(Growth::Stopped(_)) => {
                let (Growth::Complete(n) | Growth::Stopped(n)) = walker.grow(None, Some(&mut pixels));
                max_black_cluster = max_black_cluster.max(n);
                evidence = Some(Cluster {
                    color: Color::Black,
                    pixels: pixels.iter().map(|&i| dims.coord(i)).collect(),
                });
                break;
            }
        }
    }
    Ok(DetectionReport {
        detected: evidence.is_some(),
        max_black_cluster,
        evidence,
        pixels_visited: walker.work,
        elapsed: start.elapsed(),
    })
}

/// Inputs of a calibration run; also the cache key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRequest {
    pub grid_size: usize,
    pub alpha: f64,
    pub noise: NoiseModel,
    pub theta: Threshold,
    pub adjacency: Adjacency,
    pub trials: usize,
    pub seed: Seed,
}

impl CalibrationRequest {
    /// Threshold 1/2, triangular lattice.
    pub fn new(grid_size: usize, alpha: f64, noise: NoiseModel, trials: usize, seed: Seed) -> Self {
        CalibrationRequest {
            grid_size,
            alpha,
            noise,
            theta: Threshold::default(),
            adjacency: Adjacency::Triangular,
            trials,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size == 0 {
            return Err(Error::domain("grid size must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let min_trials = (10.0 / self.alpha).ceil() as usize;
        if self.trials < min_trials {
            return Err(Error::domain(format!(
                "{} trials cannot resolve alpha = {}; need at least {min_trials}",
                self.trials, self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub grid_size: usize,
    pub alpha: f64,
    pub noise: NoiseModel,
    pub theta: Threshold,
    pub adjacency: Adjacency,
    pub trials: usize,
    pub seed: Seed,
    pub critical_size: usize,
    /// Largest black cluster of each null trial, ascending.
    pub null_max_sizes: Vec<usize>,
}

impl Calibration {
    pub fn request(&self) -> CalibrationRequest {
        CalibrationRequest {
            grid_size: self.grid_size,
            alpha: self.alpha,
            noise: self.noise,
            theta: self.theta,
            adjacency: self.adjacency,
            trials: self.trials,
            seed: self.seed,
        }
    }

    pub fn detection_config(&self) -> DetectionConfig {
        DetectionConfig {
            theta: self.theta,
            critical_size: self.critical_size,
            adjacency: self.adjacency,
        }
    }

    /// Fraction of null trials that would have been flagged.
    pub fn null_detection_rate(&self) -> f64 {
        let hits = self.null_max_sizes.iter().filter(|&&m| m >= self.critical_size).count();
        hits as f64 / self.trials as f64
    }
}

/// Largest black cluster of one thresholded pure-noise raster.
pub fn null_max_cluster(
    dims: GridDims,
    noise: &NoiseModel,
    theta: Threshold,
    adjacency: Adjacency,
    seed: Seed,
) -> usize {
    let binary = simulate_null_thresholded(dims, noise, seed, theta);
    max_cluster_size(&binary, Color::Black, adjacency)
}

fn null_max_sizes(
    dims: GridDims,
    noise: &NoiseModel,
    theta: Threshold,
    adjacency: Adjacency,
    trials: usize,
    seed: Seed,
) -> Vec<usize> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| null_max_cluster(dims, noise, theta, adjacency, seed.derive(t)))
        .collect()
}

/// Smallest `n` with `#{s >= n} <= alpha * len`; `sorted` ascending.
pub(crate) fn critical_size_from(sorted: &[usize], alpha: f64) -> usize {
    let trials = sorted.len();
    let allowed = alpha * trials as f64;
    let ok = |n: usize| {
        let below = sorted.partition_point(|&s| s < n);
        ((trials - below) as f64) <= allowed
    };
    if ok(1) {
        return 1;
    }
    // The exceedance count only drops just past an observed value.
    sorted
        .iter()
        .map(|&s| s + 1)
        .find(|&n| ok(n))
        .expect("n = max + 1 has zero exceedances")
}

/// Critical cluster size from `trials` simulated empty rasters: the
/// smallest size that at most a fraction `alpha` of them reach.
pub fn calibrate(request: &CalibrationRequest) -> Result<Calibration> {
    request.validate()?;
    let dims = GridDims::square(request.grid_size)?;
    let mut sizes = null_max_sizes(
        dims,
        &request.noise,
        request.theta,
        request.adjacency,
        request.trials,
        request.seed,
    );
    sizes.sort_unstable();
    Ok(Calibration {
        grid_size: request.grid_size,
        alpha: request.alpha,
        noise: request.noise,
        theta: request.theta,
        adjacency: request.adjacency,
        trials: request.trials,
        seed: request.seed,
        critical_size: critical_size_from(&sizes, request.alpha),
        null_max_sizes: sizes,
    })
}

/// Fits the exponential decay of `P(some false black cluster >= n)` on
/// `grid_size`-square pure-noise rasters.
pub fn fit_false_alarm_decay(
    grid_size: usize,
    noise: &NoiseModel,
    theta: Threshold,
    sizes: &[usize],
    trials: usize,
    seed: Seed,
) -> Result<TailFit> {
    let p_out = exceedance_probability(noise, 0.0, theta.value());
    if p_out >= 0.5 {
        return Err(Error::Precondition(format!(
            "noise {noise} at threshold {theta} marks white pixels black with probability {p_out:.4} >= 1/2"
        )));
    }
    if sizes.is_empty() || sizes.contains(&0) || trials == 0 {
        return Err(Error::domain("need positive sizes and trials"));
    }
    let dims = GridDims::square(grid_size)?;
    let maxima = null_max_sizes(dims, noise, theta, Adjacency::Triangular, trials, seed);
    TailFit::from_counts(p_out, sizes, &exceedance_counts(&maxima, sizes), trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::find_clusters;
    use crate::grid::BinaryGrid;
    use crate::lattice::{square_mask, PixelCoord};
    use crate::noise::simulate_observation;

    #[test]
    fn critical_size_rule() {
        // 20 trials, alpha 0.1: at most 2 may reach the critical size.
        let mut s: Vec<usize> = (1..=20).collect();
        s.sort();
        assert_eq!(critical_size_from(&s, 0.1), 19);
        assert_eq!(critical_size_from(&[0; 50], 0.05), 1);
        // Ties at the boundary push the size past the tied value.
        let s = [1, 2, 3, 5, 5, 5, 5, 5, 5, 5];
        assert_eq!(critical_size_from(&s, 0.2), 6);
        assert_eq!(critical_size_from(&s, 0.7), 4);
    }

    /// Independent oracle: scan every candidate size.
    fn brute_critical(samples: &[usize], alpha: f64) -> usize {
        (1..)
            .find(|&n| samples.iter().filter(|&&s| s >= n).count() as f64 <= alpha * samples.len() as f64)
            .unwrap()
    }

    #[test]
    fn critical_size_matches_brute_force() {
        for k in 0..200u64 {
            let len = 20 + (k as usize % 50);
            let mut s: Vec<usize> = (0..len)
                .map(|i| (Seed(k).uniform(i as u64) * 30.0) as usize)
                .collect();
            s.sort();
            let alpha = 0.01 + 0.5 * Seed(k).uniform(999);
            assert_eq!(critical_size_from(&s, alpha), brute_critical(&s, alpha));
        }
    }

    #[test]
    fn noiseless_square_is_detected_in_full() {
        let d = GridDims::square(120).unwrap();
        let mask = square_mask(d, PixelCoord::new(30, 50), 40).unwrap();
        let truth = BinaryGrid::from_mask(&mask);
        let y = simulate_observation(&truth, &NoiseModel::gaussian(1e-12).unwrap(), Seed(1));
        let r = detect(&y, &DetectionConfig::new(304).unwrap()).unwrap();
        assert!(r.detected);
        let ev = r.evidence.unwrap();
        assert!(mask_subset(&mask, &ev));
        assert_eq!(r.max_black_cluster, 1600);
        assert!(r.pixels_visited <= 7 * d.len());
    }

    fn mask_subset(mask: &crate::lattice::RegionMask, c: &Cluster) -> bool {
        let set: std::collections::HashSet<_> = c.pixels.iter().copied().collect();
        (0..mask.dims().len())
            .map(|i| mask.dims().coord(i))
            .filter(|&p| mask.contains(p))
            .all(|p| set.contains(&p))
    }

    #[test]
    fn white_scene_is_not_detected() {
        let d = GridDims::square(50).unwrap();
        let y = simulate_observation(
            &BinaryGrid::filled(d, Color::White),
            &NoiseModel::gaussian(1e-12).unwrap(),
            Seed(2),
        );
        for phi in [1, 10, 2500] {
            let r = detect(&y, &DetectionConfig::new(phi).unwrap()).unwrap();
            assert!(!r.detected);
            assert_eq!(r.max_black_cluster, 0);
            assert!(r.evidence.is_none());
        }
        assert!(detect(&y, &DetectionConfig::new(2501).unwrap()).is_err());
        assert!(DetectionConfig::new(0).is_err());
    }

    #[test]
    fn null_maximum_matches_full_scan() {
        let d = GridDims::square(64).unwrap();
        let noise = NoiseModel::gaussian(1.8).unwrap();
        let truth = BinaryGrid::filled(d, Color::White);
        for t in 0..100u64 {
            let y = simulate_observation(&truth, &noise, Seed(5).derive(t));
            let full = find_clusters(&apply_threshold(&y, Threshold::default()), Color::Black, Adjacency::Triangular);
            // A critical size above N^2/2 never fires, so the scan is complete.
            let r = detect(&y, &DetectionConfig::new(d.len()).unwrap()).unwrap();
            assert_eq!(r.max_black_cluster, full.max_size);
            assert_eq!(
                null_max_cluster(d, &noise, Threshold::default(), Adjacency::Triangular, Seed(5).derive(t)),
                full.max_size
            );
            // With a small critical size the verdict agrees with the full scan.
            let r = detect(&y, &DetectionConfig::new(40).unwrap()).unwrap();
            assert_eq!(r.detected, full.max_size >= 40);
            if r.detected {
                let ev = r.evidence.as_ref().unwrap();
                assert!(full.canonical_sets().contains(&ev.canonical()));
            }
        }
    }

    #[test]
    fn calibration_domain_errors() {
        let noise = NoiseModel::gaussian(1.8).unwrap();
        for alpha in [0.0, 1.0, 1.5, -0.1] {
            assert!(calibrate(&CalibrationRequest::new(16, alpha, noise, 1000, Seed(0))).is_err());
        }
        assert!(calibrate(&CalibrationRequest::new(16, 0.05, noise, 199, Seed(0))).is_err());
        assert!(calibrate(&CalibrationRequest::new(16, 0.05, noise, 200, Seed(0))).is_ok());
    }

    #[test]
    fn calibration_without_black_pixels() {
        // Support of 0.2 * U[-sqrt3, sqrt3] stays below 1/2.
        let noise = NoiseModel::uniform(0.2).unwrap();
        assert_eq!(exceedance_probability(&noise, 0.0, 0.5), 0.0);
        let c = calibrate(&CalibrationRequest::new(16, 0.05, noise, 200, Seed(4))).unwrap();
        assert_eq!(c.critical_size, 1);
        assert!(c.null_max_sizes.iter().all(|&m| m == 0));
    }

    #[test]
    fn calibration_is_deterministic_and_respects_alpha() {
        let noise = NoiseModel::gaussian(1.8).unwrap();
        let req = CalibrationRequest::new(48, 0.1, noise, 400, Seed(21));
        let a = calibrate(&req).unwrap();
        let b = calibrate(&req).unwrap();
        assert_eq!(a, b);
        assert!(a.null_detection_rate() <= 0.1);
        assert!(a.null_max_sizes.windows(2).all(|w| w[0] <= w[1]));
        // Any smaller size breaks the alpha budget.
        let hits = a.null_max_sizes.iter().filter(|&&m| m >= a.critical_size - 1).count();
        assert!(a.critical_size == 1 || hits as f64 > 0.1 * 400.0);
    }

    #[test]
    fn false_alarm_decay_preconditions() {
        let wide = NoiseModel::two_point(1.0, 1.0).unwrap();
        assert!(matches!(
            fit_false_alarm_decay(32, &wide, Threshold::new(-0.5).unwrap(), &[5, 10], 50, Seed(1)),
            Err(Error::Precondition(_))
        ));
        let silent = NoiseModel::uniform(0.2).unwrap();
        assert!(matches!(
            fit_false_alarm_decay(32, &silent, Threshold::default(), &[1, 2, 3], 50, Seed(1)),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn false_alarm_tail_decays() {
        let noise = NoiseModel::gaussian(1.8).unwrap();
        let sizes: Vec<usize> = (40..=160).step_by(20).collect();
        let fit = fit_false_alarm_decay(128, &noise, Threshold::default(), &sizes, 400, Seed(9)).unwrap();
        assert!(fit.lambda_hat > 0.0, "{fit:?}");
        // Nested events on shared samples: exactly nonincreasing.
        assert!(fit.estimates.windows(2).all(|w| w[0] >= w[1]));
    }
}
