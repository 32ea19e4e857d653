//! Synthetic benchmark scenes, scripted changes, orbit cameras, and the
//! evaluation metrics used to score updates.
//!
//! A generated scene is a textured ground plane with a few labeled blobs of
//! Gaussians ("objects") standing on it. Objects sit in fixed slots on a
//! circle; the free slots are where objects are added or moved to.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, Intrinsics};
use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, GaussianScene};
use crate::image::{BinaryImage, Image};
use crate::optim::train::{train, TrainReport, TrainScope, View};
use crate::optim::OptimConfig;
use crate::raster::render;
use crate::raster::tiles::compute_tile_mask;
use crate::real::Real;
use crate::ssim::mean_ssim;

/// Label of ground Gaussians; objects are numbered from 1.
pub const GROUND: u32 = 0;

/// Per-channel color difference above which a pixel counts as changed.
pub const GT_THRESHOLD: f64 = 1.0 / 255.0;

const SLOT_RADIUS: f64 = 0.5;
const OBJECT_HALF: f64 = 0.12;
const FREE_SLOTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub n_gaussians: usize,
    pub objects: usize,
    /// Half side of the square ground plane.
    pub extent: f64,
    /// Object colors, cycled by object id.
    pub palette: Vec<[f32; 3]>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            n_gaussians: 1500,
            objects: 4,
            extent: 2.0,
            palette: vec![
                [0.85, 0.2, 0.15],
                [0.15, 0.45, 0.85],
                [0.95, 0.8, 0.1],
                [0.2, 0.7, 0.3],
                [0.7, 0.25, 0.75],
                [0.95, 0.55, 0.15],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectBox {
    pub id: u32,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl ObjectBox {
    pub fn center(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| 0.5 * (self.min[i] + self.max[i]))
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// A scene whose Gaussians carry object labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScene {
    pub scene: GaussianScene<f32>,
    pub labels: Vec<u32>,
    pub objects: Vec<ObjectBox>,
    pub spec: SceneSpec,
}

impl LabeledScene {
    fn half(&self) -> f64 {
        OBJECT_HALF * self.spec.extent
    }

    /// Slot centers on the ground; objects occupy some of them.
    pub fn slots(&self) -> Vec<Vector3<f64>> {
        slot_centers(&self.spec)
    }

    fn free_slots(&self) -> Vec<Vector3<f64>> {
        let h = self.half();
        self.slots()
            .into_iter()
            .filter(|s| {
                self.objects.iter().all(|o| {
                    let c = o.center();
                    (c.x - s.x).hypot(c.y - s.y) > 2.5 * h
                })
            })
            .collect()
    }

    pub fn object_indices(&self, id: u32) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == id).collect()
    }

    /// Mean center of the object's Gaussians.
    pub fn centroid(&self, id: u32) -> Option<Vector3<f64>> {
        let idx = self.object_indices(id);
        if idx.is_empty() {
            return None;
        }
        let pos = self.scene.positions();
        Some(idx.iter().map(|&i| pos[i]).sum::<Vector3<f64>>() / idx.len() as f64)
    }

    pub fn object(&self, id: u32) -> Option<&ObjectBox> {
        self.objects.iter().find(|o| o.id == id)
    }
}

fn slot_centers(spec: &SceneSpec) -> Vec<Vector3<f64>> {
    let n = spec.objects + FREE_SLOTS;
    let r = SLOT_RADIUS * spec.extent;
    (0..n)
        .map(|k| {
            let a = k as f64 / n as f64 * std::f64::consts::TAU + 0.3;
            Vector3::new(r * a.cos(), r * a.sin(), 0.0)
        })
        .collect()
}

/// One object standing on the ground at `base`: `count` small Gaussians
/// covering the surface of an ellipsoid, shaded darker towards the bottom.
fn make_object(
    id: u32,
    base: Vector3<f64>,
    half: f64,
    color: [f32; 3],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Gaussian<f32>>, ObjectBox) {
    let bbox = ObjectBox {
        id,
        min: [base.x - half, base.y - half, 0.0],
        max: [base.x + half, base.y + half, 2.0 * half],
    };
    let axes = [0.8 * half, 0.8 * half, 0.9 * half];
    // enough splat area to cover the surface about twice over
    let area = 4.0 * std::f64::consts::PI * axes[0].powi(2);
    let scale = (2.0 * area / (count.max(1) as f64 * std::f64::consts::PI)).sqrt() / 2.0;
    let gs = (0..count)
        .map(|_| {
            let dir: [f64; 3] = rand_distr::Distribution::sample(&rand_distr::UnitSphere, rng);
            let p = [
                base.x + axes[0] * dir[0],
                base.y + axes[1] * dir[1],
                half + axes[2] * dir[2],
            ];
            let shade = (0.7 + 0.3 * (dir[2] + 1.0) / 2.0) as f32;
            let col = color.map(|c| (c * shade + rng.random_range(-0.04f32..0.04)).clamp(0.0, 1.0));
            Gaussian::isotropic(p.map(|v| v as f32), scale as f32, 0.95, col)
        })
        .collect();
    (gs, bbox)
}

fn object_size(spec: &SceneSpec) -> usize {
    if spec.objects == 0 {
        return 0;
    }
    (spec.n_gaussians / 2 / spec.objects).max(1)
}

/// Generates a labeled scene; deterministic per seed.
pub fn gen_scene(seed: u64, spec: &SceneSpec) -> Result<LabeledScene> {
    if spec.n_gaussians < 10 {
        return Err(Error::InvalidArgument(format!(
            "a benchmark scene needs at least 10 Gaussians, got {}",
            spec.n_gaussians
        )));
    }
    if spec.palette.is_empty() || !(spec.extent > 0.0) {
        return Err(Error::InvalidArgument("empty palette or non-positive extent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_object = object_size(spec);
    let n_ground = spec.n_gaussians - per_object * spec.objects;
    let e = spec.extent;

    let mut gaussians = Vec::with_capacity(spec.n_gaussians);
    let mut labels = Vec::with_capacity(spec.n_gaussians);
    let g = (n_ground as f64).sqrt().floor().max(1.0) as usize;
    let step = 2.0 * e / g as f64;
    // neutral gray checker with per-Gaussian luminance texture
    let tiles = [0.62f32, 0.38];
    for k in 0..n_ground {
        let (x, y) = if k < g * g {
            let (i, j) = (k % g, k / g);
            (-e + (i as f64 + 0.5) * step, -e + (j as f64 + 0.5) * step)
        } else {
            (rng.random_range(-e..e), rng.random_range(-e..e))
        };
        let cell = ((x + e) / (e / 2.0)).floor() as i64 + ((y + e) / (e / 2.0)).floor() as i64;
        let lum = tiles[cell.rem_euclid(2) as usize] + rng.random_range(-0.1f32..0.1);
        let col = [0; 3].map(|_| (lum + rng.random_range(-0.02f32..0.02)).clamp(0.0, 1.0));
        let s = (0.7 * step) as f32;
        let mut gs = Gaussian::isotropic([x as f32, y as f32, 0.0], s, 0.95, col);
        gs.log_scale[2] = (0.1 * s).ln();
        gaussians.push(gs);
        labels.push(GROUND);
    }

    let slots = slot_centers(spec);
    let half = OBJECT_HALF * e;
    let mut objects = Vec::with_capacity(spec.objects);
    for (k, slot) in slots.iter().take(spec.objects).enumerate() {
        let id = k as u32 + 1;
        let color = spec.palette[k % spec.palette.len()];
        let (gs, bbox) = make_object(id, *slot, half, color, per_object, &mut rng);
        labels.extend(std::iter::repeat_n(id, gs.len()));
        gaussians.extend(gs);
        objects.push(bbox);
    }
    Ok(LabeledScene {
        scene: GaussianScene::new(gaussians),
        labels,
        objects,
        spec: spec.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeOp {
    None,
    Add,
    Remove,
    Move,
    Multi,
}

impl std::str::FromStr for ChangeOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ChangeOp::None),
            "add" => Ok(ChangeOp::Add),
            "remove" => Ok(ChangeOp::Remove),
            "move" => Ok(ChangeOp::Move),
            "multi" => Ok(ChangeOp::Multi),
            other => Err(Error::InvalidArgument(format!("unknown change op {other:?}"))),
        }
    }
}

/// A changed scene and the ids of the objects the change touched.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedChange {
    pub scene: LabeledScene,
    pub changed: Vec<u32>,
}

/// Adds a new object in a free slot.
pub fn add_object(s: &LabeledScene, seed: u64) -> Result<AppliedChange> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = s.free_slots();
    if free.is_empty() {
        return Err(Error::InvalidArgument("no free slot for a new object".into()));
    }
    let slot = free[rng.random_range(0..free.len())];
    Ok(add_at(s, slot, &mut rng))
}

fn add_at(s: &LabeledScene, slot: Vector3<f64>, rng: &mut ChaCha8Rng) -> AppliedChange {
    let id = s.objects.iter().map(|o| o.id).max().unwrap_or(GROUND) + 1;
    let color = s.spec.palette[(id as usize - 1) % s.spec.palette.len()];
    let count = object_size(&s.spec).max(s.spec.n_gaussians / 10);
    let (gs, bbox) = make_object(id, slot, s.half(), color, count, rng);
    let mut out = s.clone();
    out.labels.extend(std::iter::repeat_n(id, gs.len()));
    out.scene.gaussians.extend(gs);
    out.objects.push(bbox);
    AppliedChange {
        scene: out,
        changed: vec![id],
    }
}

/// The free slot closest to `p` (on the ground plane), other than one at `p` itself.
fn nearest_free_slot(s: &LabeledScene, p: Vector3<f64>) -> Result<Vector3<f64>> {
    let d = |q: &Vector3<f64>| (q.x - p.x).hypot(q.y - p.y);
    s.free_slots()
        .into_iter()
        .filter(|q| d(q) > s.half())
        .min_by(|a, b| d(a).total_cmp(&d(b)))
        .ok_or_else(|| Error::InvalidArgument("no free slot near the changed object".into()))
}

/// Deletes every Gaussian of object `id`.
pub fn remove_object(s: &LabeledScene, id: u32) -> Result<AppliedChange> {
    if s.object(id).is_none() {
        return Err(Error::InvalidArgument(format!("no object with id {id}")));
    }
    let mut out = s.clone();
    let keep: Vec<usize> = (0..s.labels.len()).filter(|&i| s.labels[i] != id).collect();
    out.scene.gaussians = keep.iter().map(|&i| s.scene.gaussians[i]).collect();
    out.labels = keep.iter().map(|&i| s.labels[i]).collect();
    out.objects.retain(|o| o.id != id);
    Ok(AppliedChange {
        scene: out,
        changed: vec![id],
    })
}

/// Rigidly translates object `id` by `delta`.
pub fn move_object(s: &LabeledScene, id: u32, delta: [f32; 3]) -> Result<AppliedChange> {
    if s.object(id).is_none() {
        return Err(Error::InvalidArgument(format!("no object with id {id}")));
    }
    let mut out = s.clone();
    for i in s.object_indices(id) {
        let p = &mut out.scene.gaussians[i].position;
        for k in 0..3 {
            p[k] += delta[k];
        }
    }
    for o in out.objects.iter_mut().filter(|o| o.id == id) {
        for k in 0..3 {
            o.min[k] += delta[k] as f64;
            o.max[k] += delta[k] as f64;
        }
    }
    Ok(AppliedChange {
        scene: out,
        changed: vec![id],
    })
}

fn pick_object(s: &LabeledScene, rng: &mut ChaCha8Rng) -> Result<u32> {
    if s.objects.is_empty() {
        return Err(Error::NoObjects);
    }
    Ok(s.objects[rng.random_range(0..s.objects.len())].id)
}

/// Applies `op` with object and slot choices drawn from `seed`.
///
/// `move` takes an object to the nearest free slot; `multi` removes one
/// object and adds a new one in the free slot nearest to it. Both changes
/// then fit the views of one orbit.
pub fn apply_change(s: &LabeledScene, op: ChangeOp, seed: u64) -> Result<AppliedChange> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match op {
        ChangeOp::None => Ok(AppliedChange {
            scene: s.clone(),
            changed: Vec::new(),
        }),
        ChangeOp::Add => add_object(s, rng.random()),
        ChangeOp::Remove => remove_object(s, pick_object(s, &mut rng)?),
        ChangeOp::Move => {
            let id = pick_object(s, &mut rng)?;
            let from = s.object(id).map(|o| o.center()).unwrap_or_default();
            let to = nearest_free_slot(s, from)?;
            move_object(s, id, [(to.x - from.x) as f32, (to.y - from.y) as f32, 0.0])
        }
        ChangeOp::Multi => {
            let id = pick_object(s, &mut rng)?;
            let at = s.object(id).map(|o| o.center()).unwrap_or_default();
            let removed = remove_object(s, id)?;
            let slot = nearest_free_slot(&removed.scene, at)?;
            let mut added = add_at(&removed.scene, slot, &mut rng);
            added.changed.insert(0, id);
            Ok(added)
        }
    }
}

/// `n` cameras evenly spaced on a horizontal circle, all looking at `center`.
pub fn orbit_cameras(
    n: usize,
    center: Vector3<f64>,
    radius: f64,
    height: f64,
    intrinsics: Intrinsics,
) -> Result<Vec<Camera>> {
    orbit_cameras_from(n, 0.0, center, radius, height, intrinsics)
}

/// Like [`orbit_cameras`], starting at azimuth `phase` (radians).
pub fn orbit_cameras_from(
    n: usize,
    phase: f64,
    center: Vector3<f64>,
    radius: f64,
    height: f64,
    intrinsics: Intrinsics,
) -> Result<Vec<Camera>> {
    if n == 0 {
        return Err(Error::InvalidArgument("orbit needs at least one camera".into()));
    }
    (0..n)
        .map(|k| {
            let a = phase + k as f64 / n as f64 * std::f64::consts::TAU;
            let eye = center + Vector3::new(radius * a.cos(), radius * a.sin(), height);
            Camera::look_at(eye, center, Vector3::z(), intrinsics)
        })
        .collect()
}

fn check_same<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<()> {
    if a.same_size(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )))
    }
}

fn sq_err<T: Real>(a: &Image<T>, b: &Image<T>) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x.to_f64() - y.to_f64()).powi(2))
        .sum()
}

fn psnr_of_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

/// PSNR in dB for images in [0, 1]; identical images give `f64::INFINITY`.
pub fn psnr<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    check_same(a, b)?;
    Ok(psnr_of_mse(sq_err(a, b) / a.data.len().max(1) as f64))
}

/// PSNR of the pooled squared error over several image pairs.
pub fn psnr_pooled<T: Real>(a: &[Image<T>], b: &[Image<T>]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} images", a.len(), b.len())));
    }
    let (mut se, mut n) = (0.0, 0usize);
    for (x, y) in a.iter().zip(b) {
        check_same(x, y)?;
        se += sq_err(x, y);
        n += x.data.len();
    }
    Ok(psnr_of_mse(se / n.max(1) as f64))
}

/// Mean local SSIM over all pixels and channels.
pub fn ssim<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    check_same(a, b)?;
    Ok(mean_ssim(a, b))
}

/// Pixel counts of a prediction against ground truth, over all views.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    /// 1.0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        let d = self.tp + self.fp;
        if d == 0 {
            1.0
        } else {
            self.tp as f64 / d as f64
        }
    }

    /// 1.0 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        let d = self.tp + self.fn_;
        if d == 0 {
            1.0
        } else {
            self.tp as f64 / d as f64
        }
    }
}

pub fn confusion(predicted: &[BinaryImage], truth: &[BinaryImage]) -> Result<Confusion> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted vs {} ground-truth masks",
            predicted.len(),
            truth.len()
        )));
    }
    let mut c = Confusion::default();
    for (p, t) in predicted.iter().zip(truth) {
        if p.width != t.width || p.height != t.height {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs {}x{}",
                p.width, p.height, t.width, t.height
            )));
        }
        for (&a, &b) in p.bits.iter().zip(&t.bits) {
            match (a, b) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

/// Pixel-level (precision, recall) aggregated over all views.
pub fn mask_pr(predicted: &[BinaryImage], truth: &[BinaryImage]) -> Result<(f64, f64)> {
    let c = confusion(predicted, truth)?;
    Ok((c.precision(), c.recall()))
}

/// Pixels where the two images differ by more than [`GT_THRESHOLD`] in any channel.
pub fn diff_mask<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<BinaryImage> {
    check_same(a, b)?;
    let mut m = BinaryImage::new(a.width, a.height);
    for (i, (pa, pb)) in a.data.chunks_exact(3).zip(b.data.chunks_exact(3)).enumerate() {
        let d = (0..3)
            .map(|c| (pa[c].to_f64() - pb[c].to_f64()).abs())
            .fold(0.0, f64::max);
        m.bits[i] = d > GT_THRESHOLD;
    }
    Ok(m)
}

/// Renders every camera in parallel.
pub fn render_views<T: Real>(scene: &GaussianScene<T>, cameras: &[Camera]) -> Result<Vec<Image<T>>> {
    cameras
        .par_iter()
        .map(|c| render(scene, c, None).map(|r| r.image))
        .collect()
}

/// Ground-truth change masks: render-diff of the two scenes per view.
pub fn ground_truth_masks(
    before: &GaussianScene<f32>,
    after: &GaussianScene<f32>,
    cameras: &[Camera],
) -> Result<Vec<BinaryImage>> {
    let a = render_views(before, cameras)?;
    let b = render_views(after, cameras)?;
    a.iter().zip(&b).map(|(x, y)| diff_mask(x, y)).collect()
}

/// Benchmark layout: one scene, one change, and the two camera sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSpec {
    pub scene: SceneSpec,
    pub op: ChangeOp,
    pub seed: u64,
    pub update_views: usize,
    pub test_views: usize,
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view in degrees.
    pub fov_deg: f64,
    /// Orbit radius and height around the changed region, in scene extents.
    pub orbit_radius: f64,
    pub orbit_height: f64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            scene: SceneSpec::default(),
            op: ChangeOp::Add,
            seed: 0,
            update_views: 25,
            test_views: 10,
            width: 192,
            height: 144,
            fov_deg: 50.0,
            orbit_radius: 0.85,
            orbit_height: 0.55,
        }
    }
}

impl BenchmarkSpec {
    pub fn intrinsics(&self) -> Intrinsics {
        let f = self.width as f64 / (2.0 * (self.fov_deg.to_radians() / 2.0).tan());
        Intrinsics::centered(f, self.width, self.height)
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub spec: BenchmarkSpec,
    pub before: LabeledScene,
    pub after: LabeledScene,
    pub changed: Vec<u32>,
    /// Point the sparse cameras look at.
    pub focus: Vector3<f64>,
    pub update_cameras: Vec<Camera>,
    /// Held-out views of the changed region, between the update views.
    pub test_cameras: Vec<Camera>,
}

/// Center of the changed objects over both scenes (a moved object counts twice).
fn change_focus(before: &LabeledScene, after: &LabeledScene, changed: &[u32]) -> Vector3<f64> {
    let mut pts: Vec<Vector3<f64>> = Vec::new();
    for &id in changed {
        for s in [before, after] {
            if let Some(o) = s.object(id) {
                pts.push(o.center());
            }
        }
    }
    if pts.is_empty() {
        return Vector3::new(0.0, 0.0, OBJECT_HALF * before.spec.extent);
    }
    pts.iter().sum::<Vector3<f64>>() / pts.len() as f64
}

pub fn build_benchmark(spec: &BenchmarkSpec) -> Result<Benchmark> {
    let before = gen_scene(spec.seed, &spec.scene)?;
    let applied = apply_change(&before, spec.op, spec.seed.wrapping_add(1))?;
    let focus = change_focus(&before, &applied.scene, &applied.changed);
    let e = spec.scene.extent;
    let (r, h) = (spec.orbit_radius * e, spec.orbit_height * e);
    let k = spec.intrinsics();
    let update_cameras = orbit_cameras(spec.update_views, focus, r, h, k)?;
    let phase = std::f64::consts::TAU / (2.0 * spec.update_views as f64);
    let test_cameras = orbit_cameras_from(spec.test_views, phase, focus, 1.1 * r, 1.15 * h, k)?;
    Ok(Benchmark {
        spec: spec.clone(),
        before,
        after: applied.scene,
        changed: applied.changed,
        focus,
        update_cameras,
        test_cameras,
    })
}

/// Scores of one update against the benchmark ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    /// Held-out views: previous scene and updated scene against the changed truth.
    pub psnr_pre: f64,
    pub psnr_post: f64,
    pub ssim_pre: f64,
    pub ssim_post: f64,
    pub threads: usize,
}

impl EvalReport {
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(Error::Csv)?;
        w.serialize(self)?;
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Scores `masks` (one per update camera) and `updated` on the held-out views.
pub fn evaluate(bench: &Benchmark, updated: &GaussianScene<f32>, masks: &[BinaryImage]) -> Result<EvalReport> {
    let truth = ground_truth_masks(&bench.before.scene, &bench.after.scene, &bench.update_cameras)?;
    let c = confusion(masks, &truth)?;
    let gt = render_views(&bench.after.scene, &bench.test_cameras)?;
    let pre = render_views(&bench.before.scene, &bench.test_cameras)?;
    let post = render_views(updated, &bench.test_cameras)?;
    let mean_ssim_of = |xs: &[Image<f32>]| -> Result<f64> {
        let s: Result<Vec<f64>> = xs.iter().zip(&gt).map(|(a, b)| ssim(a, b)).collect();
        Ok(s?.iter().sum::<f64>() / xs.len().max(1) as f64)
    };
    Ok(EvalReport {
        precision: c.precision(),
        recall: c.recall(),
        psnr_pre: psnr_pooled(&pre, &gt)?,
        psnr_post: psnr_pooled(&post, &gt)?,
        ssim_pre: mean_ssim_of(&pre)?,
        ssim_post: mean_ssim_of(&post)?,
        threads: rayon::current_num_threads(),
    })
}

/// Pixel masks of the tiles covered by the `changed` Gaussians in each view.
pub fn tile_pixel_masks<T: Real>(scene: &GaussianScene<T>, changed: &[usize], cameras: &[Camera]) -> Vec<BinaryImage> {
    cameras
        .iter()
        .map(|c| compute_tile_mask(scene, changed, c).to_pixel_mask(c.width, c.height))
        .collect()
}

/// The baseline an update should beat: every Gaussian optimized full-frame
/// on the sparse views, with no change detection.
pub fn naive_reoptimize<T: Real>(
    prev: &GaussianScene<T>,
    views: &[View<T>],
    config: &OptimConfig,
    seed: u64,
) -> Result<(GaussianScene<T>, TrainReport)> {
    let mut scene = prev.clone();
    let scope = TrainScope {
        active_start: 0,
        tile_masked: false,
        spheres: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = train(&mut scene, views, &scope, config, &mut rng)?;
    Ok((scene, report))
}
