//! The `clsplat` command line.
//!
//! Exit codes: 0 on success, 1 on I/O failures, 2 on contract violations
//! (bad inputs, broken invariants), 64 on usage errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::{self, BenchmarkSpec, ChangeOp};
use crate::camera::{load_cameras, save_cameras, Camera};
use crate::change2d::detect_changes;
use crate::continual::{update_scene, UpdateConfig};
use crate::error::{Error, Result};
use crate::gaussian::GaussianScene;
use crate::history::{merge_concurrent, merged_delta, recover_state, ConcurrentUpdate, DeltaRecord};
use crate::image::BinaryImage;
use crate::lift3d::init_new_gaussians;
use crate::optim::train::{train, TrainScope, View};
use crate::posed::{load_masks, load_posed_dir, save_masks, save_posed_dir};
use crate::raster::render;
use crate::real::Real;
use crate::scene_io::{load_scene, save_scene};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Parser)]
#[command(name = "clsplat", version, about = "Continual Gaussian-splatting scene updates")]
pub struct Cli {
    /// Seed for every random choice (sampling, densification, generation).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses one per core. Results are reproducible for a fixed count.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// JSON config: update settings for init/detect/update, benchmark layout for gen.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Arithmetic used for rendering and optimization. Files always store f32.
    #[arg(long, global = true, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a new scene from a directory of posed images.
    Init(InitArgs),
    /// Render a scene from every camera of a camera file.
    Render(RenderArgs),
    /// Write per-view change masks of new images against a scene.
    Detect(DetectArgs),
    /// Update a scene to match new images; writes the scene, its delta and the change set.
    Update(UpdateArgs),
    /// Rebuild an earlier scene from the current one and its deltas.
    Recover(RecoverArgs),
    /// Merge independent updates of one previous scene.
    Merge(MergeArgs),
    /// Generate a synthetic change benchmark.
    Gen(GenArgs),
    /// Score an updated scene against a generated benchmark.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Posed image directory (cameras.json and 000.png, 001.png, …).
    #[arg(long)]
    pub images: PathBuf,
    /// Output scene file.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of initial Gaussians.
    #[arg(long, default_value_t = 2000)]
    pub points: usize,
    /// Optimization iterations; overrides the config.
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Per-iteration training log (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Camera file (JSON).
    #[arg(long)]
    pub cameras: PathBuf,
    /// Output directory; receives a posed image directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Scene file the images are compared against.
    #[arg(long)]
    pub scene: PathBuf,
    /// Posed image directory.
    #[arg(long)]
    pub images: PathBuf,
    /// Output directory for mask_000.png, mask_001.png, ….
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    /// Previous scene file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Posed image directory of the changed scene.
    #[arg(long)]
    pub images: PathBuf,
    /// Output scene file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output delta file.
    #[arg(long)]
    pub delta: PathBuf,
    /// Time index of the updated scene.
    #[arg(long, default_value_t = 1)]
    pub time: u32,
    /// Change-set JSON (changed indices and spheres).
    #[arg(long)]
    pub changes: Option<PathBuf>,
    /// Per-iteration training log (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Optimization iterations; overrides the config.
    #[arg(long)]
    pub iterations: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Current scene file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Time index of the current scene; defaults to the newest delta.
    #[arg(long)]
    pub time: Option<u32>,
    /// Delta files, in any order.
    #[arg(long, num_args = 1.., required = true)]
    pub deltas: Vec<PathBuf>,
    /// Time index to recover.
    #[arg(long)]
    pub to: u32,
    /// Output scene file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Previous scene shared by all updates.
    #[arg(long)]
    pub prev: PathBuf,
    /// An updated scene and its delta as `SCENE:DELTA`; repeat per update.
    #[arg(long = "update", num_args = 1.., required = true, value_parser = parse_pair)]
    pub updates: Vec<(PathBuf, PathBuf)>,
    /// Output scene file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output delta file that undoes the merge.
    #[arg(long)]
    pub delta: Option<PathBuf>,
    /// Time index of the merged scene.
    #[arg(long, default_value_t = 1)]
    pub time: u32,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Change applied to the scene; overrides the config.
    #[arg(long, value_parser = parse_op)]
    pub op: Option<ChangeOp>,
    /// Image width; overrides the config.
    #[arg(long)]
    pub width: Option<usize>,
    /// Image height; overrides the config.
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Benchmark directory written by `gen`.
    #[arg(long)]
    pub bench: PathBuf,
    /// Updated scene to score.
    #[arg(long)]
    pub scene: PathBuf,
    /// Directory of predicted masks for the update views; detected from the previous scene if absent.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Report JSON; a CSV with the same fields is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(PathBuf, PathBuf), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected SCENE:DELTA, got {s:?}"))?;
    Ok((a.into(), b.into()))
}

fn parse_op(s: &str) -> std::result::Result<ChangeOp, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_CONTRACT
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match cli.precision {
        Precision::F32 => dispatch::<f32>(cli),
        Precision::F64 => dispatch::<f64>(cli),
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

fn update_config(cli: &Cli) -> Result<UpdateConfig> {
    let mut c = match &cli.config {
        Some(p) => UpdateConfig::from_json(&read_text(p)?)?,
        None => UpdateConfig::default(),
    };
    c.seed = cli.seed;
    Ok(c)
}

fn load<T: Real>(path: &Path) -> Result<GaussianScene<T>> {
    Ok(load_scene(path)?.cast())
}

fn store<T: Real>(scene: &GaussianScene<T>, path: &Path) -> Result<()> {
    save_scene(&scene.cast(), path)
}

fn dispatch<T: Real>(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Init(a) => init::<T>(cli, a),
        Command::Render(a) => {
            let scene = load::<T>(&a.scene)?;
            let cameras = load_cameras(&a.cameras)?;
            let images = cameras
                .iter()
                .map(|c| render(&scene, c, None).map(|r| r.image))
                .collect::<Result<Vec<_>>>()?;
            save_posed_dir(&a.out, &images, &cameras)
        }
        Command::Detect(a) => {
            let scene = load::<T>(&a.scene)?;
            let (images, cameras) = load_posed_dir::<T>(&a.images)?;
            let c = update_config(cli)?;
            let masks = detect_changes(&scene, &images, &cameras, &c.extractor, c.tau)?;
            let masks: Vec<BinaryImage> = masks.into_iter().map(|m| m.mask).collect();
            log::info!("{} changed pixels over {} views", masks.iter().map(|m| m.count()).sum::<usize>(), masks.len());
            save_masks(&a.out, &masks)
        }
        Command::Update(a) => update::<T>(cli, a),
        Command::Recover(a) => {
            let scene = load_scene(&a.scene)?;
            let deltas = a.deltas.iter().map(DeltaRecord::load).collect::<Result<Vec<_>>>()?;
            let time = match a.time {
                Some(t) => t,
                None => deltas.iter().map(|d| d.time).max().ok_or(Error::EmptyInput)?,
            };
            save_scene(&recover_state(&scene, time, &deltas, a.to)?, &a.out)
        }
        Command::Merge(a) => {
            let prev = load_scene(&a.prev)?;
            let updates = a
                .updates
                .iter()
                .map(|(s, d)| ConcurrentUpdate::from_scene(&load_scene(s)?, &DeltaRecord::load(d)?))
                .collect::<Result<Vec<_>>>()?;
            save_scene(&merge_concurrent(&prev, &updates)?, &a.out)?;
            if let Some(p) = &a.delta {
                merged_delta(&prev, &updates, a.time)?.save(p)?;
            }
            Ok(())
        }
        Command::Gen(a) => gen(cli, a),
        Command::Eval(a) => eval::<T>(a),
    }
}

/// Point closest (least squares) to every camera's optical axis.
fn axes_meet(cameras: &[Camera]) -> Vector3<f64> {
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for c in cameras {
        let d = c.rotation.transpose() * Vector3::z();
        let p = Matrix3::identity() - d * d.transpose();
        let o = c.center();
        a += p;
        b += p * o;
    }
    a.try_inverse().map(|inv| inv * b).unwrap_or_else(|| {
        cameras.iter().map(|c| c.center()).sum::<Vector3<f64>>() / cameras.len() as f64
    })
}

fn init<T: Real>(cli: &Cli, a: &InitArgs) -> Result<()> {
    let (images, cameras) = load_posed_dir::<T>(&a.images)?;
    if cameras.is_empty() {
        return Err(Error::NoViews);
    }
    if a.points < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: a.points });
    }
    let mut config = update_config(cli)?;
    if let Some(n) = a.iterations {
        config.optim.iterations = n;
    }
    // candidates around where the cameras look, kept if at least half the views see them
    let center = axes_meet(&cameras);
    let reach = cameras.iter().map(|c| (c.center() - center).norm()).sum::<f64>() / cameras.len() as f64 * 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut points = Vec::with_capacity(a.points);
    for _ in 0..a.points * 200 {
        if points.len() == a.points {
            break;
        }
        let p = center + Vector3::from_fn(|_, _| rng.random_range(-reach..reach));
        let seen = cameras.iter().filter(|c| c.project_point(&p).in_image(c.width, c.height)).count();
        if 2 * seen >= cameras.len() {
            points.push(p);
        }
    }
    if points.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: points.len() });
    }
    let full: Vec<BinaryImage> = cameras.iter().map(|c| BinaryImage::filled(c.width, c.height, true)).collect();
    let gs = init_new_gaussians(&points, 0, &full, &images, &cameras, &GaussianScene::<T>::default())?;
    let mut scene = GaussianScene::new(gs);
    let views: Vec<View<T>> = images
        .into_iter()
        .zip(cameras)
        .map(|(image, camera)| View { camera, image })
        .collect();
    let report = train(&mut scene, &views, &TrainScope::default(), &config.optim, &mut rng)?;
    if let Some(p) = &a.log {
        report.write_csv(p)?;
    }
    log::info!("initialized {} Gaussians", scene.len());
    store(&scene, &a.out)
}

fn update<T: Real>(cli: &Cli, a: &UpdateArgs) -> Result<()> {
    let bytes = std::fs::read(&a.scene).map_err(|e| Error::io(&a.scene, e))?;
    let prev: GaussianScene<T> = crate::scene_io::scene_from_bytes(&bytes)?.cast();
    let (images, cameras) = load_posed_dir::<T>(&a.images)?;
    let mut config = update_config(cli)?;
    if let Some(n) = a.iterations {
        config.optim.iterations = n;
    }
    let out = update_scene(&prev, &images, &cameras, &config, a.time)?;
    if out.no_change {
        // the unchanged input, byte for byte
        std::fs::write(&a.out, &bytes).map_err(|e| Error::io(&a.out, e))?;
    } else {
        store(&out.scene, &a.out)?;
        log::info!(
            "updated {} Gaussians in {} spheres",
            out.change_set.indices.len(),
            out.change_set.spheres.len()
        );
    }
    let delta = DeltaRecord {
        time: out.delta.time,
        static_count: out.delta.static_count,
        bitmap: out.delta.bitmap.clone(),
        old_changed: out.delta.old_changed.iter().map(|g| g.cast()).collect(),
    };
    delta.save(&a.delta)?;
    if let Some(p) = &a.changes {
        write_json(p, &out.change_set)?;
    }
    if let Some(p) = &a.log {
        out.report.write_csv(p)?;
    }
    Ok(())
}

pub const SPEC_FILE: &str = "bench.json";

fn gen(cli: &Cli, a: &GenArgs) -> Result<()> {
    let mut spec: BenchmarkSpec = match &cli.config {
        Some(p) => serde_json::from_str(&read_text(p)?)?,
        None => BenchmarkSpec::default(),
    };
    spec.seed = cli.seed;
    if let Some(op) = a.op {
        spec.op = op;
    }
    if let Some(w) = a.width {
        spec.width = w;
    }
    if let Some(h) = a.height {
        spec.height = h;
    }
    let b = bench::build_benchmark(&spec)?;
    let dir = &a.out;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(SPEC_FILE), &spec)?;
    save_scene(&b.before.scene, dir.join("before.bin"))?;
    save_scene(&b.after.scene, dir.join("after.bin"))?;
    let images = bench::render_views(&b.after.scene, &b.update_cameras)?;
    save_posed_dir(dir.join("update"), &images, &b.update_cameras)?;
    save_cameras(dir.join("test_cameras.json"), &b.test_cameras)?;
    log::info!("{:?} benchmark with changed objects {:?}", spec.op, b.changed);
    Ok(())
}

fn eval<T: Real>(a: &EvalArgs) -> Result<()> {
    let spec: BenchmarkSpec = serde_json::from_str(&read_text(&a.bench.join(SPEC_FILE))?)?;
    let b = bench::build_benchmark(&spec)?;
    let updated = load_scene(&a.scene)?;
    let masks = match &a.masks {
        Some(dir) => load_masks(dir, b.update_cameras.len())?,
        None => {
            let prev: GaussianScene<T> = b.before.scene.cast();
            let images: Vec<_> = bench::render_views(&b.after.scene, &b.update_cameras)?
                .iter()
                .map(|i| i.cast::<T>())
                .collect();
            let c = UpdateConfig::default();
            detect_changes(&prev, &images, &b.update_cameras, &c.extractor, c.tau)?
                .into_iter()
                .map(|m| m.mask)
                .collect()
        }
    };
    let report = bench::evaluate(&b, &updated, &masks)?;
    write_json(&a.out, &report)?;
    report.write_csv(a.out.with_extension("csv"))?;
    println!(
        "precision {:.4} recall {:.4} psnr {:.2} -> {:.2} dB ssim {:.4} -> {:.4}",
        report.precision, report.recall, report.psnr_pre, report.psnr_post, report.ssim_pre, report.ssim_post
    );
    Ok(())
}
