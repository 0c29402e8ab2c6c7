//! The `edgesplat` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgesplat_core::edge::EdgeMap;
use edgesplat_core::init::initialize_from_edge_map;
use edgesplat_core::metrics::{self, Trajectory};
use edgesplat_core::sim::{self, ReferenceScene, SyntheticScene};
use edgesplat_core::slam::{chunk_edge_map, pipeline_chunks, run_pipeline};
use edgesplat_core::splat::rasterize;
use edgesplat_core::{CameraIntrinsics, EventStream, Grid, PoseSE3, SeededRng};
use rand::SeedableRng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::formats::csv::{format_eval, format_loss_log, EvalRow};
use crate::formats::events::{read_events, write_events, EventFormat};
use crate::formats::pgm::{read_pgm, write_pgm};
use crate::formats::ply::{read_ply, write_ply};
use crate::formats::scene::{read_camera, read_scene, write_camera, write_scene};
use crate::formats::tum::{parse_pose, read_tum, write_tum};
use crate::formats::write_string;

/// Name of the effective-configuration snapshot written into every output directory.
pub const SNAPSHOT_NAME: &str = "effective_config.txt";

#[derive(Parser, Debug)]
#[command(name = "edgesplat", version, about = "Edge-guided reconstruction from event-camera data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a scene along a trajectory into events and ground-truth files.
    Simulate(SimulateArgs),
    /// Detect edges in every chunk of an event file.
    DetectEdges(DetectArgs),
    /// Lift an edge map to an initial Gaussian set.
    InitGaussians(InitArgs),
    /// Estimate the camera trajectory and a Gaussian scene from events.
    Reconstruct(ReconstructArgs),
    /// Compare an estimated trajectory (and optionally an image) with ground truth.
    Eval(EvalArgs),
    /// Render a Gaussian scene from one pose.
    Render(RenderArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Binary,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Built-in sequence: single-line, line-grid, textured-plane or line-orbit.
    #[arg(long, conflicts_with_all = ["scene", "camera", "trajectory"])]
    pub reference: Option<String>,
    /// Scene description file.
    #[arg(long, requires_all = ["camera", "trajectory"])]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Camera trajectory in TUM format.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Dilation of the ground-truth edge masks, pixels.
    #[arg(long, default_value_t = 2)]
    pub mask_dilation: usize,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub events: PathBuf,
    /// Supplies the resolution for text event files without a directive.
    #[arg(long)]
    pub camera: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InitArgs {
    #[command(flatten)]
    pub common: Common,
    /// Edge map as PGM.
    #[arg(long)]
    pub edge_map: PathBuf,
    #[arg(long)]
    pub camera: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub camera: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Estimated trajectory (TUM).
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Ground-truth trajectory (TUM).
    #[arg(long)]
    pub gt: PathBuf,
    /// Predicted image (PGM); needs `--gt-image`.
    #[arg(long, requires = "gt_image")]
    pub image: Option<PathBuf>,
    #[arg(long, requires = "image")]
    pub gt_image: Option<PathBuf>,
    /// Value of the `scene` column.
    #[arg(long, default_value = "scene")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: Common,
    /// Gaussian scene (PLY).
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub camera: PathBuf,
    /// Camera-to-world pose `tx ty tz qx qy qz qw`; identity when omitted.
    #[arg(long, conflicts_with = "trajectory", allow_hyphen_values = true)]
    pub pose: Option<String>,
    /// Trajectory (TUM) sampled at `--time-us`.
    #[arg(long, requires = "time_us")]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub time_us: Option<u64>,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate(a) => &a.common,
            Command::DetectEdges(a) => &a.common,
            Command::InitGaussians(a) => &a.common,
            Command::Reconstruct(a) => &a.common,
            Command::Eval(a) => &a.common,
            Command::Render(a) => &a.common,
        }
    }
}

/// Loads the config file, then applies `--set` and `--seed` in that order.
pub fn effective_config(common: &Common) -> Result<Config> {
    let mut config = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for o in &common.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| Error::usage(format!("--set expects KEY=VALUE, got '{o}'")))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(s) = common.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn prepare_out(common: &Common, config: &Config) -> Result<PathBuf> {
    let out = common.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_string(&out.join(SNAPSHOT_NAME), &config.snapshot())?;
    Ok(out)
}

fn rng(config: &Config) -> SeededRng {
    SeededRng::seed_from_u64(config.seed)
}

/// Parses arguments and runs one subcommand.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return Err(Error::usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    execute(&cli.command)
}

pub fn execute(command: &Command) -> Result<()> {
    let config = effective_config(command.common())?;
    let out = prepare_out(command.common(), &config)?;
    match command {
        Command::Simulate(a) => simulate(a, &config, &out),
        Command::DetectEdges(a) => detect(a, &config, &out),
        Command::InitGaussians(a) => init(a, &config, &out),
        Command::Reconstruct(a) => reconstruct(a, &config, &out),
        Command::Eval(a) => eval(a, &config, &out),
        Command::Render(a) => render(a, &config, &out),
    }
}

fn simulate(a: &SimulateArgs, config: &Config, out: &Path) -> Result<()> {
    let (scene, k, trajectory): (SyntheticScene, CameraIntrinsics, Vec<(u64, PoseSE3)>) = match &a.reference {
        Some(name) => {
            let r = ReferenceScene::from_name(name).ok_or_else(|| {
                let names: Vec<_> = ReferenceScene::ALL.iter().map(|s| s.name()).collect();
                Error::usage(format!("unknown reference '{name}', expected one of {}", names.join(", ")))
            })?;
            let seq = r.sequence();
            (seq.scene, seq.intrinsics, seq.trajectory)
        }
        None => {
            let (Some(s), Some(c), Some(t)) = (&a.scene, &a.camera, &a.trajectory) else {
                return Err(Error::usage("simulate needs --reference or all of --scene, --camera, --trajectory"));
            };
            (read_scene(s)?, read_camera(c)?, read_tum(t)?)
        }
    };
    let sim = &config.sim;
    let clean = sim::generate_ideal_events(&scene, &trajectory, &k, sim.contrast_threshold, sim.frame_dt_us)?;
    let rate = if sim.noise_ratio > 0.0 { sim::noise_rate_for_ratio(&clean, sim.noise_ratio) } else { sim.noise_rate };
    let stream = sim::inject_noise(&clean, rate, &mut rng(config))?;
    let (format, file) = match a.format {
        FormatArg::Text => (EventFormat::Text, "events.txt"),
        FormatArg::Binary => (EventFormat::Binary, "events.bin"),
    };
    write_events(&out.join(file), &stream, format)?;
    write_tum(&out.join("trajectory_gt.tum"), &trajectory)?;
    write_camera(&out.join("camera.txt"), &k)?;
    write_scene(&out.join("scene.txt"), &scene)?;
    for (label, (_, pose)) in [("first", trajectory[0]), ("last", trajectory[trajectory.len() - 1])] {
        write_pgm(&out.join(format!("brightness_{label}.pgm")), &sim::render_brightness(&scene, &pose, &k)?)?;
        let mask = sim::ground_truth_edge_mask(&scene, &pose, &k, a.mask_dilation);
        write_pgm(&out.join(format!("edge_mask_{label}.pgm")), &mask.map(|&b| if b { 1.0 } else { 0.0 }))?;
    }
    Ok(())
}

fn load_stream(events: &Path, camera: Option<&CameraIntrinsics>) -> Result<EventStream> {
    let stream = read_events(events, camera.map(|k| (k.width, k.height)))?;
    if let Some(k) = camera {
        if (stream.width(), stream.height()) != (k.width, k.height) {
            return Err(Error::usage(format!(
                "event resolution {}x{} differs from camera {}x{}",
                stream.width(),
                stream.height(),
                k.width,
                k.height
            )));
        }
    }
    Ok(stream)
}

fn detect(a: &DetectArgs, config: &Config, out: &Path) -> Result<()> {
    let k = a.camera.as_deref().map(read_camera).transpose()?;
    let stream = load_stream(&a.events, k.as_ref())?;
    let slam = &config.slam;
    for chunk in pipeline_chunks(&stream, slam.chunk_duration)? {
        let map = chunk_edge_map(&chunk, &slam.detector, slam.supervision.contrast_threshold)?;
        write_pgm(&out.join(format!("edges_{:04}.pgm", chunk.index)), &map.values)?;
    }
    Ok(())
}

fn init(a: &InitArgs, config: &Config, out: &Path) -> Result<()> {
    let k = read_camera(&a.camera)?;
    let values = read_pgm(&a.edge_map)?;
    if values.dims() != (k.width, k.height) {
        return Err(Error::usage(format!(
            "edge map is {}x{} but the camera is {}x{}",
            values.width(),
            values.height(),
            k.width,
            k.height
        )));
    }
    let map = EdgeMap { values, params: config.slam.detector };
    let (_, gaussians) = initialize_from_edge_map(&map, &k, &PoseSE3::identity(), &config.slam.init, &mut rng(config))?;
    write_ply(&out.join("gaussians.ply"), &gaussians)
}

fn reconstruct(a: &ReconstructArgs, config: &Config, out: &Path) -> Result<()> {
    let k = read_camera(&a.camera)?;
    let stream = load_stream(&a.events, Some(&k))?;
    let result = run_pipeline(&stream, &k, &config.slam, &mut rng(config))?;
    write_tum(&out.join("trajectory.tum"), &result.trajectory)?;
    write_ply(&out.join("scene.ply"), &result.scene)?;
    write_ply(&out.join("scene_initial.ply"), &result.initial_scene)?;
    write_string(&out.join("loss.csv"), &format_loss_log(&result.log))
}

fn eval(a: &EvalArgs, config: &Config, out: &Path) -> Result<()> {
    if a.name.contains([',', '"', '\n', '\r']) {
        return Err(Error::usage("--name may not contain commas, quotes or line breaks"));
    }
    let est = Trajectory::new(read_tum(&a.trajectory)?)?;
    let gt = Trajectory::new(read_tum(&a.gt)?)?;
    let report = metrics::ate(&est, &gt, config.eval.association_tolerance_us, config.eval.scale_alignment)?;
    let (psnr_db, ssim) = match (&a.image, &a.gt_image) {
        (Some(p), Some(g)) => metrics::image_quality(&read_pgm(p)?, &read_pgm(g)?)?,
        _ => (f64::NAN, f64::NAN),
    };
    let row =
        EvalRow { scene: a.name.clone(), psnr_db, ssim, ate_rmse_m: report.rmse, n_pairs: report.alignment.n_pairs };
    write_string(&out.join("metrics.csv"), &format_eval(&[row]))
}

fn render(a: &RenderArgs, config: &Config, out: &Path) -> Result<()> {
    let gaussians = read_ply(&a.scene)?;
    let k = read_camera(&a.camera)?;
    let pose = match (&a.pose, &a.trajectory, a.time_us) {
        (Some(p), _, _) => {
            let fields: Vec<&str> = p.split_whitespace().collect();
            parse_pose(&fields).map_err(|m| Error::usage(format!("--pose: {m}")))?
        }
        (None, Some(t), Some(time)) => {
            let samples = read_tum(t)?;
            edgesplat_core::geometry::interpolate_samples(&samples, time)
                .ok_or_else(|| Error::usage("trajectory file holds no poses"))?
        }
        _ => PoseSE3::identity(),
    };
    let image: Grid<f64> = rasterize(&gaussians, &pose, &k, config.slam.supervision.background).image;
    write_pgm(&out.join("render.pgm"), &image)
}

/// Single-line diagnostic for `err`: `error[<kind>]: <message>`.
pub fn error_line(err: &Error) -> String {
    let msg = err.to_string().replace(['\n', '\r'], " ");
    format!("error[{}]: {}", err.kind(), msg)
}
