//! Runs one continual update per change type on the synthetic benchmark and
//! compares it with naive full re-optimization on the same sparse views.
//!
//! cargo run --release --example benchmark -- [iterations] [width] [height] [config.json]

use std::time::Instant;

use clsplat::bench::{self, BenchmarkSpec, ChangeOp};
use clsplat::continual::{lift_changes, make_views, optimize_local, UpdateConfig};

fn main() -> clsplat::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let iterations = arg(0, 1000) as u64;
    let (width, height) = (arg(1, 192), arg(2, 144));

    for op in [ChangeOp::Add, ChangeOp::Remove, ChangeOp::Move, ChangeOp::Multi] {
        let spec = BenchmarkSpec {
            op,
            width,
            height,
            ..Default::default()
        };
        let b = bench::build_benchmark(&spec)?;
        let images = bench::render_views(&b.after.scene, &b.update_cameras)?;
        let mut config = match args.get(3) {
            Some(p) => UpdateConfig::from_json(&std::fs::read_to_string(p).expect("readable config"))?,
            None => UpdateConfig::default(),
        };
        config.optim.iterations = iterations;

        let t = Instant::now();
        let (lifted, masks) = lift_changes(&b.before.scene, &images, &b.update_cameras, &config, 1)?;
        let lifted = lifted.expect("benchmark change must be detected");
        let truth = bench::ground_truth_masks(&b.before.scene, &b.after.scene, &b.update_cameras)?;
        let dilated: Vec<_> = masks.iter().map(|m| m.mask.clone()).collect();
        let raw: Vec<_> = lifted.raw_masks.iter().map(|m| m.mask.clone()).collect();
        let tiles = bench::tile_pixel_masks(&lifted.scene, &lifted.changed(), &b.update_cameras);
        let (dp, dr) = bench::mask_pr(&dilated, &truth)?;
        let (rp, rr) = bench::mask_pr(&raw, &truth)?;
        let (tp, tr) = bench::mask_pr(&tiles, &truth)?;

        let views = make_views(&images, &b.update_cameras);
        let mut scene = lifted.scene.clone();
        let report = optimize_local(&mut scene, &lifted.changed(), &lifted.spheres, &views, &config.optim, 7)?;
        let update_s = t.elapsed().as_secs_f64();
        let eval = bench::evaluate(&b, &scene, &dilated)?;

        let t = Instant::now();
        let (naive, _) = bench::naive_reoptimize(&b.before.scene, &views, &config.optim, 7)?;
        let naive_s = t.elapsed().as_secs_f64();
        let naive_eval = bench::evaluate(&b, &naive, &dilated)?;

        println!(
            "{op:?}: changed {} (+{} sampled), spheres {}, final {}",
            lifted.delta.changed_indices().len(),
            lifted.sampled,
            lifted.spheres.len(),
            scene.len() - report.active_start
        );
        println!("  masks  raw P {rp:.3} R {rr:.3} | dilated P {dp:.3} R {dr:.3} | tiles P {tp:.3} R {tr:.3}");
        println!(
            "  psnr   pre {:.2} post {:.2} naive {:.2} | ssim post {:.4} naive {:.4}",
            eval.psnr_pre, eval.psnr_post, naive_eval.psnr_post, eval.ssim_post, naive_eval.ssim_post
        );
        println!(
            "  time   update {update_s:.1}s ({:.2} ms/it) naive {naive_s:.1}s",
            report.mean_iteration_ms(10)
        );
    }
    Ok(())
}
