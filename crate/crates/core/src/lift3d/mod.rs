//! Lifting 2D change masks to a set of changed Gaussians and a 3D region.
//!
//! Gaussians are voted into the changed set by how many views see them
//! inside a mask, grouped by density clustering, and enclosed in spheres.
//! When too few Gaussians are found, extra points are sampled in the scene
//! bounds or around the changed set and kept only if they pass the same vote.

pub mod hdbscan;
pub mod kmeans;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::{knn_mean_distance, scene_aabb, Gaussian, GaussianScene, Sphere};
use crate::image::{BinaryImage, Image};
use crate::real::{logit, Real};

pub use hdbscan::{cluster, ClusterSet};
pub use kmeans::{kmeans, KMeans};

/// Quantile of center distances that sets a sphere's radius.
pub const SPHERE_QUANTILE: f64 = 0.98;
/// Inflation applied to the quantile distance.
pub const SPHERE_INFLATION: f64 = 1.1;
/// Radius floor for degenerate clusters, in world units.
pub const MIN_RADIUS: f64 = 1e-3;
/// Number of mixture components used around the changed set.
pub const REGION_COMPONENTS: usize = 10;
/// Variance floor of a mixture component, per axis.
pub const MIN_VARIANCE: f64 = 1e-6;
/// Opacity given to freshly initialized Gaussians.
pub const INIT_OPACITY: f64 = 0.1;
const INIT_KNN: usize = 3;

/// Per-point view counts: `in_mask` views see the point on a mask pixel,
/// `outside` views see it off-image or behind the camera.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VoteCounts {
    pub in_mask: Vec<u32>,
    pub outside: Vec<u32>,
    pub views: u32,
}

impl VoteCounts {
    pub fn passes(&self, i: usize) -> bool {
        passes_vote(self.in_mask[i], self.outside[i], self.views)
    }
}

/// The majority rule `(4/3)·o < N < 2·c`, evaluated in integers.
pub fn passes_vote(in_mask: u32, outside: u32, views: u32) -> bool {
    let (c, o, n) = (in_mask as u64, outside as u64, views as u64);
    4 * o < 3 * n && n < 2 * c
}

fn check_views(masks: &[BinaryImage], cameras: &[Camera]) -> Result<()> {
    if cameras.is_empty() {
        return Err(Error::NoViews);
    }
    if masks.len() != cameras.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} masks for {} cameras",
            masks.len(),
            cameras.len()
        )));
    }
    for (m, c) in masks.iter().zip(cameras) {
        if m.width != c.width || m.height != c.height {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs camera {}x{}",
                m.width, m.height, c.width, c.height
            )));
        }
    }
    Ok(())
}

/// `(in_mask, outside)` for one point over all views.
fn count_point(p: &Vector3<f64>, masks: &[BinaryImage], cameras: &[Camera]) -> (u32, u32) {
    let (mut c, mut o) = (0, 0);
    for (m, cam) in masks.iter().zip(cameras) {
        let pr = cam.project_point(p);
        if pr.behind || !pr.in_image(cam.width, cam.height) {
            o += 1;
        } else if m.get(pr.u as usize, pr.v as usize) {
            c += 1;
        }
    }
    (c, o)
}

/// View counts for arbitrary points.
pub fn vote_counts(points: &[Vector3<f64>], masks: &[BinaryImage], cameras: &[Camera]) -> Result<VoteCounts> {
    check_views(masks, cameras)?;
    let (in_mask, outside) = points.par_iter().map(|p| count_point(p, masks, cameras)).unzip();
    Ok(VoteCounts {
        in_mask,
        outside,
        views: cameras.len() as u32,
    })
}

/// Indices of the Gaussians that pass the majority vote.
pub fn vote<T: Real>(scene: &GaussianScene<T>, masks: &[BinaryImage], cameras: &[Camera]) -> Result<Vec<usize>> {
    let counts = vote_counts(&scene.positions(), masks, cameras)?;
    Ok((0..scene.len()).filter(|&i| counts.passes(i)).collect())
}

/// The points that pass the majority vote, in input order.
pub fn vote_filter(points: &[Vector3<f64>], masks: &[BinaryImage], cameras: &[Camera]) -> Result<Vec<Vector3<f64>>> {
    let counts = vote_counts(points, masks, cameras)?;
    Ok(points
        .iter()
        .enumerate()
        .filter(|&(i, _)| counts.passes(i))
        .map(|(_, p)| *p)
        .collect())
}

/// Linear-interpolated quantile; `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    hdbscan::quantile_sorted(&v, q)
}

/// One sphere per cluster: centered on the mean, radius 1.1 times the 98th
/// percentile distance to the center, floored at [`MIN_RADIUS`].
pub fn fit_spheres(points: &[Vector3<f64>], clusters: &ClusterSet) -> Result<Vec<Sphere>> {
    clusters
        .clusters
        .iter()
        .enumerate()
        .map(|(k, members)| {
            if members.is_empty() {
                return Err(Error::EmptyCluster(k));
            }
            let center = members.iter().fold(Vector3::zeros(), |a, &i| a + points[i]) / members.len() as f64;
            let d: Vec<f64> = members.iter().map(|&i| (points[i] - center).norm()).collect();
            let radius = (SPHERE_INFLATION * quantile(&d, SPHERE_QUANTILE)).max(MIN_RADIUS);
            Ok(Sphere {
                center: [center.x, center.y, center.z],
                radius,
            })
        })
        .collect()
}

/// Default minimum cluster size for a changed set of `n` Gaussians.
pub fn default_min_cluster_size(n: usize) -> usize {
    20.max(n.div_ceil(100))
}

/// Points drawn uniformly in the scene's bounding box that pass the vote.
pub fn random_sample<T: Real, R: Rng>(
    scene: &GaussianScene<T>,
    masks: &[BinaryImage],
    cameras: &[Camera],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vector3<f64>>> {
    let (lo, hi) = scene_aabb(scene)?;
    check_views(masks, cameras)?;
    let drawn: Vec<Vector3<f64>> = (0..n)
        .map(|_| Vector3::from_fn(|k, _| if hi[k] > lo[k] { rng.random_range(lo[k]..=hi[k]) } else { lo[k] }))
        .collect();
    vote_filter(&drawn, masks, cameras)
}

/// Equal-weight mixture of axis-aligned Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub means: Vec<Vector3<f64>>,
    pub variances: Vec<Vector3<f64>>,
}

impl Mixture {
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Vector3<f64>> {
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        (0..n)
            .map(|_| {
                let k = rng.random_range(0..self.means.len());
                let (m, v) = (self.means[k], self.variances[k]);
                Vector3::from_fn(|a, _| m[a] + v[a].sqrt() * unit.sample(rng))
            })
            .collect()
    }
}

/// Mixture fitted to `points` by k-means with up to [`REGION_COMPONENTS`]
/// components. Each component's per-axis variance is the squared offset
/// from its centroid to its farthest member, floored at [`MIN_VARIANCE`].
/// A single-member component would never spread, so it takes the per-axis
/// variance of the whole point set instead.
pub fn region_mixture<R: Rng>(points: &[Vector3<f64>], rng: &mut R) -> Result<Mixture> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let km = kmeans(points, REGION_COMPONENTS.min(points.len()), rng);
    let k = km.centroids.len();
    let mut far = vec![(-1.0f64, Vector3::zeros()); k];
    for (p, &c) in points.iter().zip(&km.assignment) {
        let off = p - km.centroids[c];
        let d = off.norm_squared();
        if d > far[c].0 {
            far[c] = (d, off);
        }
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector3<f64>>() / n;
    let spread = points.iter().map(|p| (p - mean).component_mul(&(p - mean))).sum::<Vector3<f64>>() / n;
    let mut means = Vec::new();
    let mut variances = Vec::new();
    for c in 0..k {
        if far[c].0 < 0.0 {
            continue; // empty component
        }
        means.push(km.centroids[c]);
        let v = if far[c].0 == 0.0 { spread } else { far[c].1.map(|x| x * x) };
        variances.push(v.map(|x| x.max(MIN_VARIANCE)));
    }
    Ok(Mixture { means, variances })
}

/// Number of candidates drawn per region-sampling call for a target of `n`.
pub fn region_draw_count(n: usize) -> usize {
    n.div_ceil(5)
}

/// Candidates drawn around `points` that pass the vote.
pub fn sample_region<R: Rng>(
    points: &[Vector3<f64>],
    masks: &[BinaryImage],
    cameras: &[Camera],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vector3<f64>>> {
    let mix = region_mixture(points, rng)?;
    let drawn = mix.sample(region_draw_count(n), rng);
    vote_filter(&drawn, masks, cameras)
}

/// Result of iterative point sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPoints {
    /// The changed set's own positions first, then accepted samples.
    pub points: Vec<Vector3<f64>>,
    /// Index in `points` where sampled additions begin.
    pub new_start: usize,
    pub rounds: usize,
    /// The round cap was reached before `n` points were gathered.
    pub capped: bool,
}

impl SampledPoints {
    pub fn new_points(&self) -> &[Vector3<f64>] {
        &self.points[self.new_start..]
    }
}

/// Grows the changed set's point cloud to at least `n` points.
///
/// With no changed Gaussians, candidates come from the whole scene box;
/// otherwise from a mixture around the current points. Each round keeps
/// only candidates that pass the vote. After `max_rounds` rounds whatever
/// was gathered is returned with `capped` set.
#[allow(clippy::too_many_arguments)]
pub fn sample_points<T: Real, R: Rng>(
    changed: &[Vector3<f64>],
    scene: &GaussianScene<T>,
    masks: &[BinaryImage],
    cameras: &[Camera],
    n: usize,
    max_rounds: usize,
    rng: &mut R,
) -> Result<SampledPoints> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    check_views(masks, cameras)?;
    let mut points = changed.to_vec();
    let mut rounds = 0;
    while points.len() < n {
        if rounds == max_rounds {
            if points.is_empty() {
                return Err(Error::SamplingStalled(rounds));
            }
            log::warn!("point sampling capped after {rounds} rounds with {} of {n} points", points.len());
            return Ok(SampledPoints {
                points,
                new_start: changed.len(),
                rounds,
                capped: true,
            });
        }
        let accepted = if points.is_empty() {
            random_sample(scene, masks, cameras, n, rng)?
        } else {
            sample_region(&points, masks, cameras, n, rng)?
        };
        points.extend(accepted);
        rounds += 1;
    }
    Ok(SampledPoints {
        points,
        new_start: changed.len(),
        rounds,
        capped: false,
    })
}

/// Median of per-Gaussian mean scale, used when too few points exist for k-NN.
fn median_scale<T: Real>(scene: &GaussianScene<T>) -> Option<f64> {
    if scene.is_empty() {
        return None;
    }
    let s: Vec<f64> = scene
        .gaussians
        .iter()
        .map(|g| g.scale().iter().map(|v| v.to_f64()).sum::<f64>() / 3.0)
        .collect();
    Some(quantile(&s, 0.5))
}

/// New Gaussians at `points[from..]`.
///
/// Scale is the mean distance to the 3 nearest neighbors among all of
/// `points` (isotropic). Color is the mean target pixel over views where the
/// point projects onto a mask pixel, or mid-gray if there is none. Opacity
/// starts at [`INIT_OPACITY`] and rotation at identity.
pub fn init_new_gaussians<T: Real>(
    points: &[Vector3<f64>],
    from: usize,
    masks: &[BinaryImage],
    images: &[Image<T>],
    cameras: &[Camera],
    scene: &GaussianScene<T>,
) -> Result<Vec<Gaussian<T>>> {
    if points.is_empty() || from >= points.len() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    check_views(masks, cameras)?;
    if images.len() != cameras.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} images for {} cameras",
            images.len(),
            cameras.len()
        )));
    }
    let scales: Vec<f64> = if points.len() > INIT_KNN {
        knn_mean_distance(points, INIT_KNN)?
    } else {
        let s = median_scale(scene).ok_or(Error::TooFewPoints {
            needed: INIT_KNN + 1,
            got: points.len(),
        })?;
        vec![s; points.len()]
    };
    let opacity = T::lit(logit(INIT_OPACITY));
    Ok((from..points.len())
        .map(|i| {
            let p = &points[i];
            let mut sum = [0.0f64; 3];
            let mut hits = 0usize;
            for ((m, img), cam) in masks.iter().zip(images).zip(cameras) {
                let pr = cam.project_point(p);
                if pr.behind || !pr.in_image(cam.width, cam.height) {
                    continue;
                }
                let (x, y) = (pr.u as usize, pr.v as usize);
                if m.get(x, y) {
                    let px = img.pixel(x, y);
                    for c in 0..3 {
                        sum[c] += px[c].to_f64();
                    }
                    hits += 1;
                }
            }
            let color = if hits == 0 { [0.5; 3] } else { sum.map(|s| s / hits as f64) };
            let log_s = T::lit(scales[i].max(MIN_RADIUS * 1e-3).ln());
            Gaussian::new(
                [p.x, p.y, p.z].map(T::lit),
                [log_s; 3],
                opacity,
                color.map(|c| T::lit(c.clamp(0.0, 1.0))),
            )
        })
        .collect())
}
