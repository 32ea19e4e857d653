//! A chain of three updates followed by recovery of every earlier scene
//! from the latest one and the stored deltas.
//!
//! cargo run --release --example history

use clsplat::bench::{self, BenchmarkSpec, ChangeOp};
use clsplat::continual::{update_scene, UpdateConfig};
use clsplat::history::recover_state;
use clsplat::scene_io::{scene_to_bytes, GAUSSIAN_RECORD_BYTES};

fn main() -> clsplat::Result<()> {
    let spec = |op| BenchmarkSpec {
        op,
        width: 128,
        height: 96,
        ..Default::default()
    };
    let mut config = UpdateConfig::default();
    config.optim.iterations = 200;
    config.optim.densify.from_iter = 40;
    config.optim.densify.until_iter = 150;

    let mut scenes = vec![bench::build_benchmark(&spec(ChangeOp::Add))?.before.scene];
    let mut deltas = Vec::new();
    for (t, op) in [ChangeOp::Add, ChangeOp::Remove, ChangeOp::Move].into_iter().enumerate() {
        let b = bench::build_benchmark(&spec(op))?;
        let photos = bench::render_views(&b.after.scene, &b.update_cameras)?;
        let u = update_scene(scenes.last().unwrap(), &photos, &b.update_cameras, &config, t as u32 + 1)?;
        let bytes = u.delta.to_bytes().len();
        println!(
            "t={}: {op:?}, {} Gaussians, delta {bytes} bytes ({} per record) vs scene {} bytes",
            t + 1,
            u.scene.len(),
            GAUSSIAN_RECORD_BYTES,
            scene_to_bytes(&u.scene).len()
        );
        scenes.push(u.scene);
        deltas.push(u.delta);
    }
    for target in 0..3 {
        let r = recover_state(&scenes[3], 3, &deltas, target)?;
        let exact = scene_to_bytes(&r) == scene_to_bytes(&scenes[target as usize]);
        println!("recovered t={target}: {}", if exact { "bit-exact" } else { "differs" });
    }
    Ok(())
}
