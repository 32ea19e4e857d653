#![allow(dead_code)]

use clsplat::raster::{self, contribution_trace};
use clsplat::{Camera, Gaussian, GaussianScene, Image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn camera32() -> Camera {
    Camera::identity_pose(40.0, 40.0, 16.0, 16.0, 32, 32).unwrap()
}

/// Random Gaussians in front of `camera32`, with opacities low enough that
/// the alpha clamp and early termination never trigger.
pub fn random_scene(rng: &mut ChaCha8Rng, n: usize) -> GaussianScene<f64> {
    let gs = (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(2.0..4.0);
            let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            Gaussian {
                position: [rng.random_range(-0.3..0.3) * z, rng.random_range(-0.3..0.3) * z, z],
                rotation: q,
                log_scale: std::array::from_fn(|_| rng.random_range((0.03f64).ln()..(0.15f64).ln())),
                opacity_logit: rng.random_range(-2.9..-0.62),
                color: std::array::from_fn(|_| rng.random_range(0.1..0.9)),
            }
        })
        .collect();
    GaussianScene::new(gs)
}

pub fn random_weights(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image<f64> {
    Image::from_vec(w, h, (0..w * h * 3).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn weighted_sum(scene: &GaussianScene<f64>, cam: &Camera, weights: &Image<f64>) -> f64 {
    let out = raster::render(scene, cam, None).unwrap();
    out.image.data.iter().zip(&weights.data).map(|(a, b)| a * b).sum()
}

/// Relative error with the denominator floored at 1e-8.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

pub struct FdReport {
    pub max_rel: f64,
    pub checked: usize,
    /// Gaussian and parameter index of the largest error.
    pub worst: (usize, usize),
}

/// Central differences for every parameter of every Gaussian. Returns `None`
/// when a perturbation changes the set of contributing splats (the loss is
/// not differentiable there).
pub fn finite_difference_check(scene: &GaussianScene<f64>, cam: &Camera, weights: &Image<f64>, eps: f64) -> Option<FdReport> {
    let base_trace = contribution_trace(scene, cam);
    let all: Vec<usize> = (0..scene.len()).collect();
    let grads = raster::backward(scene, cam, None, weights, &all).unwrap();
    let mut max_rel: f64 = 0.0;
    let mut checked = 0;
    let mut worst = (0, 0);
    for i in 0..scene.len() {
        let an = grads.grads[i].to_array();
        let p0 = scene.gaussians[i].to_array();
        for k in 0..p0.len() {
            let mut plus = scene.clone();
            let mut minus = scene.clone();
            let mut a = p0;
            a[k] += eps;
            plus.gaussians[i] = Gaussian::from_array(&a);
            let mut b = p0;
            b[k] -= eps;
            minus.gaussians[i] = Gaussian::from_array(&b);
            if contribution_trace(&plus, cam) != base_trace || contribution_trace(&minus, cam) != base_trace {
                return None;
            }
            let fd = (weighted_sum(&plus, cam, weights) - weighted_sum(&minus, cam, weights)) / (2.0 * eps);
            let e = rel_err(an[k], fd);
            if e > max_rel {
                max_rel = e;
                worst = (i, k);
            }
            checked += 1;
        }
    }
    Some(FdReport { max_rel, checked, worst })
}
