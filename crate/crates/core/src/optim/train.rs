//! The optimization loop shared by full reconstruction and local updates.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::{in_sphere_union, ChangeSet, GaussianScene, Sphere};
use crate::image::{BinaryImage, Image};
use crate::raster::{compute_tile_mask, PreparedView, TileMask};
use crate::real::Real;
use crate::ssim::RADIUS;

use super::adam::{adam_step, AdamState};
use super::config::OptimConfig;
use super::densify::{densify_and_prune, remove_flagged, suffix_start, GradStats};
use super::loss::photometric_loss;

/// A posed target image.
#[derive(Debug, Clone)]
pub struct View<T = f32> {
    pub camera: Camera,
    pub image: Image<T>,
}

/// How a run restricts its work.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainScope {
    /// Gaussians from this index on are optimized; the prefix is frozen.
    pub active_start: usize,
    /// Render, loss, and backward only on tiles covered by the optimized
    /// Gaussians. Otherwise every pass is full-frame.
    pub tile_masked: bool,
    /// Optimized Gaussians whose centers leave these spheres are removed
    /// every `prune_interval` iterations. Empty disables sphere pruning.
    pub spheres: Vec<Sphere>,
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub loss: f64,
    pub active_tiles: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub log: Vec<IterationRecord>,
    pub sphere_pruned: usize,
    pub densified: usize,
    /// Start of the optimized suffix after the run.
    pub active_start: usize,
}

impl TrainReport {
    /// Mean wall time per iteration in milliseconds, skipping `warmup` rows.
    pub fn mean_iteration_ms(&self, warmup: usize) -> f64 {
        let rows = &self.log[warmup.min(self.log.len())..];
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().map(|r| r.wall_ms).sum::<f64>() / rows.len() as f64
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_log(self, file)
    }
}

/// Radius of the camera cloud, used to scale position rates and the
/// clone/split boundary.
pub fn camera_extent(cameras: &[Camera]) -> f64 {
    if cameras.is_empty() {
        return 1.0;
    }
    let centers: Vec<_> = cameras.iter().map(Camera::center).collect();
    let mean = centers.iter().fold(nalgebra::Vector3::zeros(), |a, c| a + c) / centers.len() as f64;
    let r = centers.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max);
    if r > 0.0 {
        r * 1.1
    } else {
        1.0
    }
}

/// Removes optimized Gaussians whose centers lie outside every sphere.
pub fn prune_outside_spheres<T: Real>(
    scene: &mut GaussianScene<T>,
    active_start: usize,
    spheres: &[Sphere],
) -> usize {
    let flags = outside_flags(scene, active_start, spheres);
    let count = flags.iter().filter(|&&f| f).count();
    let mut k = 0;
    scene.gaussians.retain(|_| {
        k += 1;
        !flags[k - 1]
    });
    count
}

fn outside_flags<T: Real>(scene: &GaussianScene<T>, active_start: usize, spheres: &[Sphere]) -> Vec<bool> {
    scene
        .gaussians
        .iter()
        .enumerate()
        .map(|(i, g)| i >= active_start && !in_sphere_union(spheres, &g.position.map(|x| x.to_f64())))
        .collect()
}

/// Runs `config.iterations` optimization steps over `views` in round-robin
/// order. Gaussians before `scope.active_start` are never modified.
///
/// When a masked view sees none of the optimized Gaussians the iteration
/// does no work and no step is taken.
pub fn train<T: Real, R: Rng>(
    scene: &mut GaussianScene<T>,
    views: &[View<T>],
    scope: &TrainScope,
    config: &OptimConfig,
    rng: &mut R,
) -> Result<TrainReport> {
    config.validate()?;
    if views.is_empty() {
        return Err(Error::NoViews);
    }
    for v in views {
        if v.image.width != v.camera.width || v.image.height != v.camera.height {
            return Err(Error::DimensionMismatch(format!(
                "image {}x{} vs camera {}x{}",
                v.image.width, v.image.height, v.camera.width, v.camera.height
            )));
        }
    }
    if scope.active_start > scene.len() {
        return Err(Error::IndexOutOfRange {
            index: scope.active_start,
            len: scene.len(),
        });
    }
    let cameras: Vec<Camera> = views.iter().map(|v| v.camera.clone()).collect();
    let extent = camera_extent(&cameras);
    let mut lr = config.lr;
    lr.spatial_scale *= extent;
    let full_masks: Vec<BinaryImage> = views
        .iter()
        .map(|v| BinaryImage::filled(v.camera.width, v.camera.height, true))
        .collect();
    let change_set = ChangeSet {
        indices: Vec::new(),
        spheres: scope.spheres.clone(),
    };

    let start = scope.active_start;
    let mut state = AdamState::<T>::new(scene.len());
    let mut stats = GradStats::new(scene.len());
    let mut report = TrainReport {
        active_start: start,
        ..Default::default()
    };

    for it in 1..=config.iterations {
        let t0 = Instant::now();
        let view_idx = ((it - 1) % views.len() as u64) as usize;
        let view = &views[view_idx];
        let active: Vec<usize> = (start..scene.len()).collect();
        let tile_mask: Option<TileMask> = scope
            .tile_masked
            .then(|| compute_tile_mask(scene, &active, &view.camera));
        let mut loss_value = f64::NAN;
        let active_tiles = match &tile_mask {
            Some(m) => m.active_count(),
            None => TileMask::for_camera(&view.camera, true).active_count(),
        };
        if active_tiles > 0 && !active.is_empty() {
            // SSIM windows near the mask border read up to 2·RADIUS pixels past it
            let prepared = match &tile_mask {
                Some(m) => PreparedView::with_margin(&scene.gaussians, &view.camera, m, 2 * RADIUS)?,
                None => PreparedView::new(&scene.gaussians, &view.camera, None)?,
            };
            let out = prepared.render();
            let pixel_mask = match &tile_mask {
                Some(m) => m.to_pixel_mask(view.camera.width, view.camera.height),
                None => full_masks[view_idx].clone(),
            };
            let (loss, grad_image) = photometric_loss(&out.image, &view.image, &pixel_mask, config.lambda_dssim)?;
            loss_value = loss.to_f64();
            let grads = prepared.backward(&grad_image, &active)?;
            drop(prepared);
            stats.accumulate(&grads);
            let lrs = lr.per_param(it - 1, config.iterations);
            adam_step(scene, &grads, &mut state, &active, &lrs)?;
        }

        if !scope.spheres.is_empty() && it % config.prune_interval == 0 {
            let flags = outside_flags(scene, start, &scope.spheres);
            let n = flags.iter().filter(|&&f| f).count();
            if n > 0 {
                remove_flagged(scene, &mut state, &mut stats, &flags);
                report.sphere_pruned += n;
            }
        }

        let d = &config.densify;
        if d.enabled && it >= d.from_iter && it <= d.until_iter && it % d.interval == 0 {
            let active: Vec<usize> = (start..scene.len()).collect();
            let before = scene.len();
            let (new_active, rep) =
                densify_and_prune(scene, &mut stats, &mut state, &active, &change_set, config, extent, rng)?;
            debug_assert_eq!(suffix_start(&new_active, scene.len())?, start);
            report.densified += rep.cloned + rep.split;
            log::debug!(
                "iteration {it}: cloned {}, split {}, pruned {} ({} -> {} Gaussians)",
                rep.cloned,
                rep.split,
                rep.pruned,
                before,
                scene.len()
            );
        }

        report.log.push(IterationRecord {
            iteration: it,
            loss: loss_value,
            active_tiles,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }
    report.active_start = start;
    Ok(report)
}

/// Writes the training log as CSV to any writer.
pub fn write_log<W: Write>(report: &TrainReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in &report.log {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<log>", e))?;
    Ok(())
}
