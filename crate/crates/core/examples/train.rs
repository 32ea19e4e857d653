//! Fits a perturbed scene back to its renders with full-frame optimization,
//! logging the loss as it goes.
//!
//! cargo run --release --example train -- [iterations]

use clsplat::bench::{self, psnr_pooled, SceneSpec};
use clsplat::continual::make_views;
use clsplat::optim::{train, OptimConfig, TrainScope};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> clsplat::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let truth = bench::gen_scene(2, &SceneSpec {
        n_gaussians: 600,
        ..Default::default()
    })?
    .scene;
    let k = clsplat::Intrinsics::centered(100.0, 128, 96);
    let cams = bench::orbit_cameras(12, Vector3::new(0.0, 0.0, 0.2), 3.0, 2.0, k)?;
    let photos = bench::render_views(&truth, &cams)?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut scene = truth.clone();
    for g in &mut scene.gaussians {
        for c in &mut g.color {
            *c = (*c + rng.random_range(-0.3f32..0.3)).clamp(0.0, 1.0);
        }
        g.position[2] += rng.random_range(-0.05f32..0.05);
    }
    let before = psnr_pooled(&bench::render_views(&scene, &cams)?, &photos)?;

    let config = OptimConfig {
        iterations,
        ..Default::default()
    };
    let scope = TrainScope {
        active_start: 0,
        tile_masked: false,
        spheres: Vec::new(),
    };
    let report = train(&mut scene, &make_views(&photos, &cams), &scope, &config, &mut rng)?;
    for r in report.log.iter().step_by((iterations as usize / 10).max(1)) {
        println!("iteration {:4}: loss {:.5}", r.iteration, r.loss);
    }
    let after = psnr_pooled(&bench::render_views(&scene, &cams)?, &photos)?;
    println!("PSNR {before:.2} -> {after:.2} dB, {} Gaussians after densification", scene.len());
    Ok(())
}
