//! `percdetect`: detect objects in noisy grayscale rasters by cluster size.
//!
//! Exit status: 0 no object, 10 object detected, 2 usage error, 3 data error.
//! Every command first prints its fully resolved configuration as one JSON
//! line on stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use percdetect::cache::{encode_calibration, CalibrationCache};
use percdetect::experiment::ExperimentConfig;
use percdetect::io::{read_gray, write_gray_as, RasterFormat};
use percdetect::percolation::{
    check_fkg, estimate_cluster_tail, estimate_crossing, max_disjoint_crossings, sample_configuration,
    write_estimates_csv, EstimateRow, PercConfig,
};
use percdetect::{
    calibrate, detect, render_scene, run_experiment, simulate_observation, Adjacency, Calibration,
    CalibrationRequest, DetectionConfig, NoiseModel, SceneSpec, Seed, Threshold,
};

const EXIT_DETECTED: u8 = 10;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "percdetect", version, about = "Percolation-based object detection in noisy rasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a raster contains an object.
    Detect(DetectArgs),
    /// Compute the critical cluster size for a screen size and noise law.
    Calibrate(CalibrateArgs),
    /// Percolation estimates, written as CSV.
    #[command(subcommand)]
    Percolate(Percolate),
    /// Detection and false-alarm rates on simulated scenes.
    Experiment(ExperimentArgs),
    /// Render a scene and add noise.
    Synth(SynthArgs),
}

/// Calibration settings shared by `detect`, `calibrate` and `experiment`.
#[derive(Args, Clone)]
struct NoiseArgs {
    /// Noise law, inline (`gaussian:1.8`, `two-point:0.4:1`) or a TOML file.
    #[arg(long)]
    noise: Option<String>,
    /// Binarization threshold.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Neighborhood: `triangular` or `square`.
    #[arg(long, default_value_t = Adjacency::Triangular)]
    adjacency: Adjacency,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DetectArgs {
    /// NGD1 or PGM raster.
    image: PathBuf,
    /// Critical cluster size; skips calibration.
    #[arg(long, conflicts_with_all = ["alpha", "calib_cache", "trials"])]
    phi: Option<usize>,
    /// False-alarm level to calibrate for (needs --noise).
    #[arg(long, required_unless_present = "phi", requires = "noise")]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Directory of cached calibrations.
    #[arg(long)]
    calib_cache: Option<PathBuf>,
    /// Write the evidence cluster's pixels as JSON.
    #[arg(long)]
    evidence: Option<PathBuf>,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Screen side length.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    calib_cache: Option<PathBuf>,
    /// Write the calibration document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct LabArgs {
    /// Occupation probabilities, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    p: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Percolate {
    /// Black left-right crossing frequency of the (n+1)^2 box.
    Crossing {
        /// Box sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "64")]
        n: Vec<usize>,
        #[command(flatten)]
        lab: LabArgs,
    },
    /// Tail `P(|C| >= n)` of the center's cluster, subcritical p only.
    Tail {
        /// Cluster sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30,35,40")]
        sizes: Vec<usize>,
        #[arg(long = "box", default_value_t = 200)]
        box_side: usize,
        #[command(flatten)]
        lab: LabArgs,
    },
    /// Mean number of vertex-disjoint black left-right crossings.
    Disjoint {
        #[arg(long, value_delimiter = ',', default_value = "16")]
        n: Vec<usize>,
        #[command(flatten)]
        lab: LabArgs,
    },
    /// Covariance of the black left-right and top-bottom crossings.
    Fkg {
        #[arg(long, value_delimiter = ',', default_value = "32")]
        n: Vec<usize>,
        #[command(flatten)]
        lab: LabArgs,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Scene TOML file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    runs: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Null trials used for calibration.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    calib_cache: Option<PathBuf>,
    /// Write the full result (per-run maxima included) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output raster; `.pgm` selects 8-bit PGM, anything else NGD1.
    #[arg(long)]
    out: PathBuf,
    /// Write plain-text PGM (P2) instead of binary.
    #[arg(long)]
    ascii: bool,
}

fn parse_noise(arg: &str) -> Result<NoiseModel> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    } else {
        arg.to_string()
    };
    Ok(NoiseModel::parse_config(&text)?)
}

fn echo(config: Value) {
    eprintln!("{config}");
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn obtain_calibration(request: &CalibrationRequest, cache: Option<&Path>) -> Result<(Calibration, bool)> {
    Ok(match cache {
        Some(dir) => CalibrationCache::new(dir).get_or_calibrate(request)?,
        None => (calibrate(request)?, false),
    })
}

fn request_from(n: usize, alpha: f64, trials: usize, noise: &NoiseArgs) -> Result<CalibrationRequest> {
    let Some(spec) = &noise.noise else { bail!("--noise is required") };
    Ok(CalibrationRequest {
        theta: Threshold::new(noise.theta)?,
        adjacency: noise.adjacency,
        ..CalibrationRequest::new(n, alpha, parse_noise(spec)?, trials, Seed(noise.seed))
    })
}

fn cmd_detect(a: DetectArgs) -> Result<u8> {
    let (image, format) = read_gray(&a.image)?;
    let dims = image.dims();
    let theta = Threshold::new(a.noise.theta)?;
    let (config, calibration) = match a.phi {
        Some(phi) => (
            DetectionConfig::new(phi)?.with_theta(theta).with_adjacency(a.noise.adjacency),
            Value::Null,
        ),
        None => {
            if dims.width != dims.height {
                bail!("calibration needs a square raster, got {}x{}", dims.width, dims.height);
            }
            let request = request_from(dims.width, a.alpha.expect("clap enforces"), a.trials, &a.noise)?;
            let (cal, hit) = obtain_calibration(&request, a.calib_cache.as_deref())?;
            (cal.detection_config(), json!({ "request": request, "critical_size": cal.critical_size, "cache_hit": hit }))
        }
    };
    echo(json!({
        "command": "detect",
        "image": a.image,
        "format": format!("{format:?}"),
        "width": dims.width,
        "height": dims.height,
        "detection": config,
        "calibration": calibration,
    }));
    let report = detect(&image, &config)?;
    if let (Some(path), Some(cluster)) = (&a.evidence, &report.evidence) {
        let text = serde_json::to_string(cluster)?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = json!({
        "detected": report.detected,
        "max_black_cluster": report.max_black_cluster,
        "evidence_size": report.evidence.as_ref().map(|c| c.size()),
        "pixels_visited": report.pixels_visited,
        "elapsed_s": report.elapsed.as_secs_f64(),
    });
    println!("{summary}");
    Ok(if report.detected { EXIT_DETECTED } else { 0 })
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<u8> {
    let request = request_from(a.n, a.alpha, a.trials, &a.noise)?;
    echo(json!({ "command": "calibrate", "request": request, "calib_cache": a.calib_cache }));
    let (cal, hit) = obtain_calibration(&request, a.calib_cache.as_deref())?;
    if a.calib_cache.is_some() {
        eprintln!("calibration cache {}", if hit { "hit" } else { "miss" });
    }
    write_or_print(a.out.as_deref(), &encode_calibration(&cal))?;
    Ok(0)
}

/// Row `(n_i, p_j)` gets seed `seed.derive(i).derive(j)`, or `seed.derive(j)`
/// when `per_p` (one shared simulation per `p`).
fn lab_rows<F>(name: &str, ns: &[usize], lab: &LabArgs, extra: Value, per_p: bool, mut estimate: F) -> Result<u8>
where
    F: FnMut(usize, f64, usize, Seed) -> Result<(f64, f64)>,
{
    let root = Seed(lab.seed);
    let mut seeds = Vec::new();
    let mut rows = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        for (j, &p) in lab.p.iter().enumerate() {
            let seed = if per_p { root.derive(j as u64) } else { root.derive(i as u64).derive(j as u64) };
            seeds.push(json!({ "n": n, "p": p, "seed": seed }));
            rows.push((n, p, seed));
        }
    }
    echo(json!({
        "command": format!("percolate {name}"),
        "trials": lab.trials,
        "seed": root,
        "derived_seeds": seeds,
        "params": extra,
        "out": lab.out,
    }));
    let mut out = Vec::new();
    for (n, p, seed) in rows {
        let (estimate, stderr) = estimate(n, p, lab.trials, seed)?;
        out.push(EstimateRow { n, p, estimate, stderr });
    }
    let mut buf = Vec::new();
    write_estimates_csv(&out, &mut buf)?;
    match &lab.out {
        Some(p) => fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(0)
}

fn cmd_percolate(cmd: Percolate) -> Result<u8> {
    match cmd {
        Percolate::Crossing { n, lab } => lab_rows("crossing", &n, &lab, Value::Null, false, |n, p, t, s| {
            let stats = estimate_crossing(&PercConfig::new(n, p)?, t, s)?;
            Ok((stats.a_frequency(), stats.a_stderr()))
        }),
        Percolate::Tail { sizes, box_side, lab } => {
            let extra = json!({ "box": box_side, "sizes": sizes });
            let mut fits = Vec::new();
            let code = lab_rows("tail", &sizes, &lab, extra, true, |size, p, t, seed| {
                // One fit per p covers every size; reuse it across rows.
                let j = lab.p.iter().position(|&q| q == p).expect("p from the list");
                if fits.len() <= j {
                    fits.push(estimate_cluster_tail(p, &sizes, box_side, t, seed)?);
                }
                let fit = &fits[j];
                let k = fit.sizes.iter().position(|&s| s == size).expect("size from the list");
                let e = fit.estimates[k];
                Ok((e, (e * (1.0 - e) / t as f64).sqrt()))
            })?;
            for fit in &fits {
                eprintln!(
                    "p = {}: lambda_hat = {:.5}, intercept = {:.5}, max residual = {:.2} SE",
                    fit.p,
                    fit.lambda_hat,
                    fit.intercept,
                    fit.max_standardized_residual()
                );
            }
            Ok(code)
        }
        Percolate::Disjoint { n, lab } => lab_rows("disjoint", &n, &lab, Value::Null, false, |n, p, t, s| {
            let cfg = PercConfig::new(n, p)?;
            let m: Vec<f64> = (0..t as u64)
                .map(|k| max_disjoint_crossings(&sample_configuration(&cfg, s.derive(k)), Adjacency::Triangular).m_n as f64)
                .collect();
            let mean = m.iter().sum::<f64>() / t as f64;
            let var = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t as f64 - 1.0).max(1.0);
            Ok((mean, (var / t as f64).sqrt()))
        }),
        Percolate::Fkg { n, lab } => lab_rows("fkg", &n, &lab, Value::Null, false, |n, p, t, s| {
            let r = check_fkg(&PercConfig::new(n, p)?, t, s)?;
            Ok((r.covariance(), r.joint_se))
        }),
    }
}

fn cmd_experiment(a: ExperimentArgs) -> Result<u8> {
    let spec = SceneSpec::load(&a.spec)?;
    let Some(noise) = &a.noise.noise else { bail!("--noise is required") };
    let mut config = ExperimentConfig::new(parse_noise(noise)?, a.alpha, a.runs, Seed(a.noise.seed));
    config.theta = Threshold::new(a.noise.theta)?;
    config.adjacency = a.noise.adjacency;
    config.calibration_trials = a.trials;
    echo(json!({
        "command": "experiment",
        "scene": spec,
        "config": config,
        "calibration_seed": config.calibration_seed(),
        "scene_stream_seed": config.seed.derive(1),
        "null_stream_seed": config.seed.derive(2),
        "calib_cache": a.calib_cache,
    }));
    let cache = a.calib_cache.as_ref().map(CalibrationCache::new);
    let result = run_experiment(&spec, &config, cache.as_ref())?;
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&result)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "{}",
        json!({
            "runs": result.runs,
            "detections": result.detections,
            "detection_rate": result.detection_rate(),
            "false_alarm_runs": result.false_alarm_runs,
            "false_alarms": result.false_alarms,
            "false_alarm_rate": result.false_alarm_rate(),
            "critical_size": result.calibration.critical_size,
        })
    );
    Ok(0)
}

fn cmd_synth(a: SynthArgs) -> Result<u8> {
    let spec = SceneSpec::load(&a.spec)?;
    let noise = parse_noise(&a.noise)?;
    let format = match RasterFormat::from_path(&a.out) {
        RasterFormat::PgmBinary if a.ascii => RasterFormat::PgmAscii,
        f => f,
    };
    echo(json!({
        "command": "synth",
        "scene": spec,
        "noise": noise,
        "seed": Seed(a.seed),
        "out": a.out,
        "format": format!("{format:?}"),
    }));
    let truth = render_scene(&spec)?;
    let y = simulate_observation(&truth, &noise, Seed(a.seed));
    let report = write_gray_as(&a.out, &y, format)?;
    if report.lossy {
        eprintln!(
            "warning: {} is 8-bit PGM; values were quantized and {} clamped to [0, 1]",
            a.out.display(),
            report.clamped
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Percolate(p) => cmd_percolate(p),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
