//! End-to-end scene updates from a few new posed photographs.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::change2d::{detect_changes_staged, ChangeMask2D, Extractor, TAU};
use crate::error::{Error, Result};
use crate::gaussian::{ChangeSet, GaussianScene, Sphere};
use crate::history::{record_delta, DeltaRecord};
use crate::image::{BinaryImage, Image};
use crate::lift3d::{cluster, default_min_cluster_size, fit_spheres, init_new_gaussians, sample_points, vote, ClusterSet};
use crate::optim::densify::suffix_start;
use crate::optim::train::{prune_outside_spheres, train, TrainReport, TrainScope, View};
use crate::optim::OptimConfig;
use crate::real::Real;

/// Fewest views an update accepts.
pub const MIN_VIEWS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdateConfig {
    pub optim: OptimConfig,
    pub extractor: Extractor,
    /// Cosine-similarity threshold for change masks.
    pub tau: f64,
    /// Overrides the size-dependent default when set.
    pub min_cluster_size: Option<usize>,
    /// Target point count for new-point sampling.
    pub samples: usize,
    pub max_sampling_rounds: usize,
    pub seed: u64,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            optim: OptimConfig::default(),
            extractor: Extractor::default(),
            tau: TAU,
            min_cluster_size: None,
            samples: 500,
            max_sampling_rounds: 50,
            seed: 0,
        }
    }
}

impl UpdateConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: UpdateConfig = serde_json::from_str(text)?;
        c.optim.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone)]
pub struct UpdateOutcome<T = f32> {
    pub scene: GaussianScene<T>,
    /// The optimized suffix and the spheres bounding it.
    pub change_set: ChangeSet,
    /// Undoes this update; recorded before optimization.
    pub delta: DeltaRecord<T>,
    /// Dilated per-view change masks.
    pub masks: Vec<ChangeMask2D>,
    pub report: TrainReport,
    /// Nothing changed; `scene` equals the input.
    pub no_change: bool,
}

/// Locally optimizes the suffix `changed` of `scene` against `views`.
///
/// Every pass is restricted to tiles covered by the changed Gaussians, and
/// changed Gaussians that leave all `spheres` are removed every
/// `prune_interval` iterations and once more at the end. The prefix of the
/// scene is never modified.
pub fn optimize_local<T: Real>(
    scene: &mut GaussianScene<T>,
    changed: &[usize],
    spheres: &[Sphere],
    views: &[View<T>],
    config: &OptimConfig,
    seed: u64,
) -> Result<TrainReport> {
    let start = suffix_start(changed, scene.len())?;
    if spheres.is_empty() {
        return Err(Error::InvalidArgument("local optimization needs at least one sphere".into()));
    }
    let scope = TrainScope {
        active_start: start,
        tile_masked: true,
        spheres: spheres.to_vec(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = train(scene, views, &scope, config, &mut rng)?;
    if config.iterations > 0 {
        report.sphere_pruned += prune_outside_spheres(scene, start, spheres);
    }
    Ok(report)
}

/// Clusters the changed points; without any dense cluster all points form one.
fn region_clusters(points: &[Vector3<f64>], min_cluster_size: usize) -> ClusterSet {
    let cs = cluster(points, min_cluster_size);
    if cs.clusters.is_empty() {
        ClusterSet {
            clusters: vec![(0..points.len()).collect()],
            noise: Vec::new(),
        }
    } else {
        cs
    }
}

/// Everything an update knows before optimization starts.
#[derive(Debug, Clone)]
pub struct Lifted<T = f32> {
    /// Reordered scene with freshly sampled Gaussians appended.
    pub scene: GaussianScene<T>,
    /// First index of the changed suffix.
    pub start: usize,
    /// Legal region for the changed suffix.
    pub spheres: Vec<Sphere>,
    pub delta: DeltaRecord<T>,
    /// Raw (undilated) per-view change masks.
    pub raw_masks: Vec<ChangeMask2D>,
    /// Dilated per-view change masks.
    pub masks: Vec<ChangeMask2D>,
    /// Number of Gaussians sampled into the changed region.
    pub sampled: usize,
}

impl<T: Real> Lifted<T> {
    pub fn changed(&self) -> Vec<usize> {
        (self.start..self.scene.len()).collect()
    }
}

fn check_views(cameras: &[Camera]) -> Result<()> {
    if cameras.is_empty() {
        return Err(Error::NoViews);
    }
    if cameras.len() < MIN_VIEWS {
        return Err(Error::InvalidArgument(format!(
            "an update needs at least {MIN_VIEWS} views, got {}",
            cameras.len()
        )));
    }
    Ok(())
}

/// Detects changes and lifts them to a changed suffix bounded by spheres.
///
/// Changes are detected per view, lifted to changed Gaussians by voting,
/// recorded in a delta, moved to the end of the scene, supplemented with
/// freshly sampled Gaussians, and bounded by spheres. Returns `None` when
/// nothing changed.
pub fn lift_changes<T: Real>(
    prev: &GaussianScene<T>,
    images: &[Image<T>],
    cameras: &[Camera],
    config: &UpdateConfig,
    time: u32,
) -> Result<(Option<Lifted<T>>, Vec<ChangeMask2D>)> {
    check_views(cameras)?;
    let staged = detect_changes_staged(prev, images, cameras, &config.extractor, config.tau)?;
    let (raw_masks, masks): (Vec<_>, Vec<_>) = staged.into_iter().unzip();
    let bin: Vec<BinaryImage> = masks.iter().map(|m| m.mask.clone()).collect();
    if bin.iter().all(|m| m.count() == 0) {
        return Ok((None, masks));
    }

    let changed = vote(prev, &bin, cameras)?;
    let (mut scene, delta) = record_delta(prev, &changed, time)?;
    let start = delta.static_count;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let changed_pos: Vec<Vector3<f64>> = scene.positions()[start..].to_vec();
    let sampled = match sample_points(
        &changed_pos,
        prev,
        &bin,
        cameras,
        config.samples,
        config.max_sampling_rounds,
        &mut rng,
    ) {
        Ok(s) => s,
        Err(Error::SamplingStalled(_)) if changed.is_empty() => return Ok((None, masks)),
        Err(e) => return Err(e),
    };
    if sampled.points.is_empty() {
        return Ok((None, masks));
    }
    let fresh = sampled.points.len() - sampled.new_start;
    if fresh > 0 {
        let gs = init_new_gaussians(&sampled.points, sampled.new_start, &bin, images, cameras, prev)?;
        scene.gaussians.extend(gs);
    }
    log::info!(
        "{} changed Gaussians, {} sampled in {} rounds",
        changed.len(),
        fresh,
        sampled.rounds
    );

    let region = &sampled.points;
    let mcs = config.min_cluster_size.unwrap_or_else(|| default_min_cluster_size(region.len()));
    let spheres = fit_spheres(region, &region_clusters(region, mcs))?;
    Ok((
        Some(Lifted {
            scene,
            start,
            spheres,
            delta,
            raw_masks,
            masks: masks.clone(),
            sampled: fresh,
        }),
        masks,
    ))
}

/// Pairs cameras with their images.
pub fn make_views<T: Real>(images: &[Image<T>], cameras: &[Camera]) -> Vec<View<T>> {
    cameras
        .iter()
        .zip(images)
        .map(|(c, i)| View {
            camera: c.clone(),
            image: i.clone(),
        })
        .collect()
}

/// Updates `prev` (the scene at time `time − 1`) to match `images`.
///
/// Runs [`lift_changes`] and then [`optimize_local`] on the changed suffix.
/// With no change, `prev` is returned as is with an empty delta.
pub fn update_scene<T: Real>(
    prev: &GaussianScene<T>,
    images: &[Image<T>],
    cameras: &[Camera],
    config: &UpdateConfig,
    time: u32,
) -> Result<UpdateOutcome<T>> {
    check_views(cameras)?;
    config.optim.validate()?;
    let (lifted, masks) = lift_changes(prev, images, cameras, config, time)?;
    let Some(lifted) = lifted else {
        log::info!("no change detected");
        return Ok(UpdateOutcome {
            scene: prev.clone(),
            change_set: ChangeSet::default(),
            delta: DeltaRecord::empty(time, prev.len()),
            masks,
            report: TrainReport {
                active_start: prev.len(),
                ..Default::default()
            },
            no_change: true,
        });
    };
    let Lifted {
        mut scene,
        start,
        spheres,
        delta,
        ..
    } = lifted;
    let views = make_views(images, cameras);
    let active: Vec<usize> = (start..scene.len()).collect();
    let report = optimize_local(&mut scene, &active, &spheres, &views, &config.optim, config.seed ^ 0x5eed)?;
    let change_set = ChangeSet::new(start..scene.len(), spheres);
    Ok(UpdateOutcome {
        scene,
        change_set,
        delta,
        masks,
        report,
        no_change: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use crate::gaussian::Gaussian;
    use crate::raster::render;

    fn cams(n: usize) -> Vec<Camera> {
        (0..n)
            .map(|i| {
                let a = i as f64 / n as f64 * std::f64::consts::TAU;
                Camera::look_at(
                    Vector3::new(3.0 * a.cos(), 3.0 * a.sin(), 1.5),
                    Vector3::zeros(),
                    Vector3::new(0.0, 0.0, 1.0),
                    Intrinsics::centered(60.0, 64, 64),
                )
                .unwrap()
            })
            .collect()
    }

    fn scene() -> GaussianScene<f32> {
        GaussianScene::new(
            (0..40)
                .map(|i| {
                    let a = i as f32 * 0.7;
                    Gaussian::isotropic([0.5 * a.cos(), 0.5 * a.sin(), 0.02 * i as f32 - 0.4], 0.12, 0.8, [0.8, 0.3, 0.2])
                })
                .collect(),
        )
    }

    #[test]
    fn identical_images_leave_scene_untouched() {
        let s = scene();
        let cams = cams(4);
        let images: Vec<_> = cams.iter().map(|c| render(&s, c, None).unwrap().image).collect();
        let out = update_scene(&s, &images, &cams, &UpdateConfig::default(), 1).unwrap();
        assert!(out.no_change);
        assert_eq!(out.scene.param_bits(), s.param_bits());
        assert!(out.delta.is_empty());
        assert_eq!(out.delta.static_count, s.len());
    }

    #[test]
    fn too_few_views_rejected() {
        let s = scene();
        let cams = cams(2);
        let images: Vec<_> = cams.iter().map(|c| render(&s, c, None).unwrap().image).collect();
        assert!(matches!(
            update_scene(&s, &images, &cams, &UpdateConfig::default(), 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_iterations_and_pruning() {
        let mut s = scene();
        let cams = cams(3);
        let views: Vec<View<f32>> = cams
            .iter()
            .map(|c| View {
                camera: c.clone(),
                image: render(&s, c, None).unwrap().image,
            })
            .collect();
        let sphere = Sphere {
            center: [0.0, 0.0, 0.0],
            radius: 0.45,
        };
        let mut cfg = OptimConfig {
            iterations: 0,
            ..Default::default()
        };
        let before = s.clone();
        let changed: Vec<usize> = (30..40).collect();
        optimize_local(&mut s, &changed, &[sphere], &views, &cfg, 1).unwrap();
        assert_eq!(s, before);

        // one changed Gaussian placed far outside the sphere is gone after 15 iterations
        s.gaussians[39].position = [0.0, 0.0, 5.0];
        cfg.iterations = 15;
        cfg.densify.enabled = false;
        let r = optimize_local(&mut s, &changed, &[sphere], &views, &cfg, 1).unwrap();
        assert!(r.sphere_pruned >= 1);
        assert!(s.gaussians[30..].iter().all(|g| sphere.contains(&g.position.map(|x| x as f64))));
        assert_eq!(&s.gaussians[..30], &before.gaussians[..30]);
        assert!(matches!(
            optimize_local(&mut s, &[1, 2], &[sphere], &views, &cfg, 1),
            Err(Error::ActiveSetNotSuffix)
        ));
    }
}
