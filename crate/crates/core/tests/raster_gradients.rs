mod common;

use clsplat::raster::{self, compute_tile_mask};
use common::*;
use rand::Rng;

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut r = rng(101);
    let mut passed = 0;
    let mut attempts = 0;
    while passed < 5 {
        attempts += 1;
        assert!(attempts < 100, "too many non-differentiable samples");
        let n = r.random_range(1..=5);
        let scene = random_scene(&mut r, n);
        let weights = random_weights(&mut r, 32, 32);
        if let Some(rep) = finite_difference_check(&scene, &camera32(), &weights, 1e-4) {
            assert!(rep.max_rel < 1e-5, "max relative error {}", rep.max_rel);
            passed += 1;
        }
    }
}

#[test]
fn masked_backward_equals_full_frame() {
    let mut r = rng(202);
    let cam = clsplat::Camera::identity_pose(60.0, 60.0, 32.0, 32.0, 64, 64).unwrap();
    for _ in 0..10 {
        let scene = random_scene(&mut r, 10).cast::<f32>();
        let active: Vec<usize> = (0..10).filter(|_| r.random_bool(0.4)).collect();
        let weights = random_weights(&mut r, 64, 64).cast::<f32>();
        let mask = compute_tile_mask(&scene, &active, &cam);
        let full = raster::backward(&scene, &cam, None, &weights, &active).unwrap();
        let masked = raster::backward(&scene, &cam, Some(&mask), &weights, &active).unwrap();
        for (a, b) in full.grads.iter().zip(&masked.grads) {
            for (x, y) in a.to_array().iter().zip(b.to_array().iter()) {
                assert!(rel_err(*x as f64, *y as f64) < 1e-6);
            }
        }
    }
}

#[test]
fn gradients_exact_through_frustum_clamp() {
    use clsplat::{Gaussian, GaussianScene};
    let mut r = rng(303);
    let mut passed = 0;
    let mut attempts = 0;
    while passed < 5 {
        attempts += 1;
        assert!(attempts < 100, "too many non-differentiable samples");
        // centers beyond 1.3× the half field of view, wide enough to reach the image
        let gs = (0..3)
            .map(|_| {
                let z: f64 = r.random_range(2.0..3.0);
                let sx = if r.random_bool(0.5) { 1.0 } else { -1.0 };
                Gaussian {
                    position: [sx * r.random_range(0.56..0.62) * z, r.random_range(-0.55..0.55) * z, z],
                    rotation: std::array::from_fn(|_| r.random_range(-1.0..1.0)),
                    log_scale: std::array::from_fn(|_| r.random_range((0.2f64).ln()..(0.35f64).ln())),
                    opacity_logit: r.random_range(-2.9..-0.62),
                    color: std::array::from_fn(|_| r.random_range(0.1..0.9)),
                }
            })
            .collect();
        let scene = GaussianScene::new(gs);
        let weights = random_weights(&mut r, 32, 32);
        if let Some(rep) = finite_difference_check(&scene, &camera32(), &weights, 1e-4) {
            assert!(rep.checked > 0);
            assert!(rep.max_rel < 1e-5, "max relative error {}", rep.max_rel);
            passed += 1;
        }
    }
}

#[test]
fn masked_training_pass_equals_full_frame_pass() {
    use clsplat::optim::photometric_loss;
    use clsplat::raster::PreparedView;
    use clsplat::ssim::RADIUS;
    use clsplat::BinaryImage;
    let mut r = rng(404);
    let cam = clsplat::Camera::identity_pose(70.0, 70.0, 48.0, 40.0, 96, 80).unwrap();
    for _ in 0..5 {
        let scene = random_scene(&mut r, 12);
        let active: Vec<usize> = (0..12).filter(|_| r.random_bool(0.3)).collect();
        if active.is_empty() {
            continue;
        }
        let mut target = random_weights(&mut r, 96, 80);
        target.data.iter_mut().for_each(|v| *v = 0.5 + 0.5 * *v);
        let full_view = PreparedView::new(&scene.gaussians, &cam, None).unwrap();
        let (_, g) = photometric_loss(&full_view.render().image, &target, &BinaryImage::filled(96, 80, true), 0.2).unwrap();
        let full = full_view.backward(&g, &active).unwrap();

        let core = compute_tile_mask(&scene, &active, &cam);
        let view = PreparedView::with_margin(&scene.gaussians, &cam, &core, 2 * RADIUS).unwrap();
        let (_, g) = photometric_loss(&view.render().image, &target, &core.to_pixel_mask(96, 80), 0.2).unwrap();
        let masked = view.backward(&g, &active).unwrap();
        for (a, b) in full.grads.iter().zip(&masked.grads) {
            for (x, y) in a.to_array().iter().zip(b.to_array().iter()) {
                assert!(rel_err(*x, *y) < 1e-12, "{x} vs {y}");
            }
        }
    }
}
