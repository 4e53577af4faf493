//! Detection of objects of unknown shape in noisy grayscale rasters.
//!
//! A raster is thresholded at 1/2 and the largest black cluster on the
//! triangular lattice is compared against a critical size calibrated by
//! Monte Carlo simulation of pure-noise images. The [`percolation`] module
//! checks the site-percolation facts the test relies on.

pub mod cache;
pub mod cluster;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod noise;
pub mod percolation;
pub mod rng;
pub mod scene;
pub mod tail;

pub use cluster::{apply_threshold, find_clusters, scan_until, Cluster, ClusterScan, Threshold};
pub use error::{Error, FormatError, Result};
pub use grid::{BinaryGrid, Color, GrayGrid};
pub use lattice::{neighbors, square_mask, Adjacency, GridDims, PixelCoord, RegionMask};
pub use noise::{exceedance_probability, simulate_observation, NoiseFamily, NoiseModel};
pub use rng::Seed;
pub use detection::{
    calibrate, detect, fit_false_alarm_decay, Calibration, CalibrationRequest, DetectionConfig,
    DetectionReport,
};
pub use tail::TailFit;
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult};
pub use scene::{render_scene, SceneObject, SceneSpec};
