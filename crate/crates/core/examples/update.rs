//! One continual update: detect, lift, and locally re-optimize the changed
//! region, then report quality against the held-out views.
//!
//! cargo run --release --example update -- [add|remove|move|multi] [iterations] [out_dir]

use clsplat::bench::{self, BenchmarkSpec, ChangeOp};
use clsplat::continual::{update_scene, UpdateConfig};
use clsplat::scene_io::save_scene;

fn main() -> clsplat::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let op = match args.first().map(String::as_str) {
        Some("remove") => ChangeOp::Remove,
        Some("move") => ChangeOp::Move,
        Some("multi") => ChangeOp::Multi,
        _ => ChangeOp::Add,
    };
    let mut config = UpdateConfig::default();
    config.optim.iterations = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(600);
    config.optim.densify.from_iter = config.optim.iterations / 5;
    config.optim.densify.until_iter = config.optim.iterations * 7 / 10;
    let out = args.get(2).cloned().unwrap_or_else(|| "out/update".into());

    let b = bench::build_benchmark(&BenchmarkSpec { op, ..Default::default() })?;
    let photos = bench::render_views(&b.after.scene, &b.update_cameras)?;
    let u = update_scene(&b.before.scene, &photos, &b.update_cameras, &config, 1)?;
    let masks: Vec<_> = u.masks.iter().map(|m| m.mask.clone()).collect();
    let eval = bench::evaluate(&b, &u.scene, &masks)?;

    println!(
        "{op:?}: {} changed Gaussians, {} after optimization, {} spheres",
        u.delta.old_changed.len(),
        u.scene.len() - u.delta.static_count,
        u.change_set.spheres.len()
    );
    println!(
        "held-out PSNR {:.2} -> {:.2} dB, SSIM {:.3} -> {:.3}, {:.1} ms per iteration",
        eval.psnr_pre,
        eval.psnr_post,
        eval.ssim_pre,
        eval.ssim_post,
        u.report.mean_iteration_ms(10)
    );
    std::fs::create_dir_all(&out).map_err(|e| clsplat::Error::io(&out, e))?;
    save_scene(&u.scene, format!("{out}/scene.bin"))?;
    u.delta.save(format!("{out}/delta.bin"))?;
    u.report.write_csv(format!("{out}/train.csv"))?;
    Ok(())
}
