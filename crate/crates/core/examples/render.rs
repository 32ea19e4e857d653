//! Renders a synthetic scene from an orbit of cameras and writes PNGs plus a
//! lossless raw dump of the first view.
//!
//! cargo run --release --example render -- [out_dir]

use clsplat::bench::{self, SceneSpec};
use clsplat::raster;
use nalgebra::Vector3;

fn main() -> clsplat::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/render".into());
    std::fs::create_dir_all(&out).map_err(|e| clsplat::Error::io(&out, e))?;

    let scene = bench::gen_scene(0, &SceneSpec::default())?;
    let k = clsplat::Intrinsics::centered(160.0, 256, 192);
    let cams = bench::orbit_cameras(8, Vector3::new(0.0, 0.0, 0.2), 3.0, 2.0, k)?;
    for (i, cam) in cams.iter().enumerate() {
        let r = raster::render(&scene.scene, cam, None)?;
        let covered = r.transmittance.iter().filter(|&&t| t < 0.5).count();
        println!(
            "view {i}: {} of {} pixels mostly covered",
            covered,
            cam.pixel_count()
        );
        r.image.save_png(format!("{out}/{i:03}.png"))?;
        if i == 0 {
            r.image.save_raw(format!("{out}/000.raw"))?;
        }
    }
    clsplat::scene_io::save_scene(&scene.scene, format!("{out}/scene.bin"))?;
    Ok(())
}
