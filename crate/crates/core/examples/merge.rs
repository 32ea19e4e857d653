//! Two updates of different regions made independently from the same scene,
//! merged into one scene with a single delta back to the original.
//!
//! cargo run --release --example merge

use clsplat::bench::{self, BenchmarkSpec, SceneSpec};
use clsplat::continual::{update_scene, UpdateConfig};
use clsplat::history::{merge_concurrent, merged_delta, undo_delta, ConcurrentUpdate};

fn main() -> clsplat::Result<()> {
    let base = bench::gen_scene(11, &SceneSpec::default())?;
    let spec = BenchmarkSpec {
        width: 128,
        height: 96,
        ..Default::default()
    };
    let (r, h) = (spec.orbit_radius * spec.scene.extent, spec.orbit_height * spec.scene.extent);
    let mut config = UpdateConfig::default();
    config.optim.iterations = 200;

    let first = base.objects[0].id;
    let last = base.objects[base.objects.len() - 1].id;
    let mut parts = Vec::new();
    for id in [first, last] {
        let after = bench::remove_object(&base, id)?.scene;
        let cams = bench::orbit_cameras(25, base.object(id).unwrap().center(), r, h, spec.intrinsics())?;
        let photos = bench::render_views(&after.scene, &cams)?;
        let u = update_scene(&base.scene, &photos, &cams, &config, 1)?;
        println!("object {id}: {} Gaussians replaced", u.delta.old_changed.len());
        parts.push(ConcurrentUpdate::from_scene(&u.scene, &u.delta)?);
    }
    let merged = merge_concurrent(&base.scene, &parts)?;
    let delta = merged_delta(&base.scene, &parts, 1)?;
    let back = undo_delta(&merged, &delta)?;
    println!(
        "merged scene has {} Gaussians; undo restores the base {}",
        merged.len(),
        if back.param_bits() == base.scene.param_bits() { "bit-exactly" } else { "with differences" }
    );
    Ok(())
}
