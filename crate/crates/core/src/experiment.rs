//! Repeated detection on simulated scenes and on empty screens.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::CalibrationCache;
use crate::cluster::Threshold;
use crate::detection::{calibrate, detect, Calibration, CalibrationRequest};
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Color};
use crate::lattice::Adjacency;
use crate::noise::{simulate_observation, NoiseModel};
use crate::rng::Seed;
use crate::scene::{render_scene, SceneSpec};

const CALIBRATION_STREAM: u64 = 0;
const SCENE_STREAM: u64 = 1;
const NULL_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub noise: NoiseModel,
    pub alpha: f64,
    pub runs: usize,
    pub seed: Seed,
    pub theta: Threshold,
    pub adjacency: Adjacency,
    pub calibration_trials: usize,
}

impl ExperimentConfig {
    pub fn new(noise: NoiseModel, alpha: f64, runs: usize, seed: Seed) -> Self {
        ExperimentConfig {
            noise,
            alpha,
            runs,
            seed,
            theta: Threshold::default(),
            adjacency: Adjacency::Triangular,
            calibration_trials: 1000,
        }
    }

    pub fn calibration_request(&self, n: usize) -> CalibrationRequest {
        CalibrationRequest {
            grid_size: n,
            alpha: self.alpha,
            noise: self.noise,
            theta: self.theta,
            adjacency: self.adjacency,
            trials: self.calibration_trials,
            seed: self.calibration_seed(),
        }
    }

    pub fn calibration_seed(&self) -> Seed {
        self.seed.derive(CALIBRATION_STREAM)
    }

    /// Seed of scene run `r`.
    pub fn scene_seed(&self, r: usize) -> Seed {
        self.seed.derive(SCENE_STREAM).derive(r as u64)
    }

    /// Seed of empty-screen run `r`.
    pub fn null_seed(&self, r: usize) -> Seed {
        self.seed.derive(NULL_STREAM).derive(r as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub runs: usize,
    pub detections: usize,
    pub false_alarm_runs: usize,
    pub false_alarms: usize,
    pub calibration: Calibration,
    /// Largest black cluster seen by the detector on each scene run.
    pub per_run_max_cluster: Vec<usize>,
    /// Same for each empty-screen run.
    pub null_run_max_cluster: Vec<usize>,
}

impl ExperimentResult {
    pub fn detection_rate(&self) -> f64 {
        self.detections as f64 / self.runs as f64
    }

    pub fn false_alarm_rate(&self) -> f64 {
        self.false_alarms as f64 / self.false_alarm_runs as f64
    }
}

/// Calibrates (through `cache` when given), then detects on `runs` noisy
/// versions of the scene and `runs` noisy empty screens.
pub fn run_experiment(
    spec: &SceneSpec,
    config: &ExperimentConfig,
    cache: Option<&CalibrationCache>,
) -> Result<ExperimentResult> {
    if spec.width != spec.height {
        return Err(Error::domain(format!(
            "calibration needs a square screen, scene is {}x{}",
            spec.width, spec.height
        )));
    }
    if config.runs == 0 {
        return Err(Error::domain("need at least one run"));
    }
    let truth = render_scene(spec)?;
    let request = config.calibration_request(spec.width);
    let calibration = match cache {
        Some(c) => c.get_or_calibrate(&request)?.0,
        None => calibrate(&request)?,
    };
    run_with_calibration(&truth, config, calibration)
}

/// Same as [`run_experiment`] with a calibration already in hand.
pub fn run_with_calibration(
    truth: &BinaryGrid,
    config: &ExperimentConfig,
    calibration: Calibration,
) -> Result<ExperimentResult> {
    let detector = calibration.detection_config();
    let empty = BinaryGrid::filled(truth.dims(), Color::White);
    let tally = |scene: &BinaryGrid, seed_of: &(dyn Fn(usize) -> Seed + Sync)| -> Result<Vec<(bool, usize)>> {
        (0..config.runs)
            .into_par_iter()
            .map(|r| {
                let y = simulate_observation(scene, &config.noise, seed_of(r));
                let report = detect(&y, &detector)?;
                Ok((report.detected, report.max_black_cluster))
            })
            .collect()
    };
    let scene = tally(truth, &|r| config.scene_seed(r))?;
    let null = tally(&empty, &|r| config.null_seed(r))?;
    Ok(ExperimentResult {
        runs: config.runs,
        detections: scene.iter().filter(|r| r.0).count(),
        false_alarm_runs: config.runs,
        false_alarms: null.iter().filter(|r| r.0).count(),
        calibration,
        per_run_max_cluster: scene.iter().map(|r| r.1).collect(),
        null_run_max_cluster: null.iter().map(|r| r.1).collect(),
    })
}
