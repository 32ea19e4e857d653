//! Compares a scene against photographs of a changed version of it and
//! writes the raw and dilated change masks of every view.
//!
//! cargo run --release --example detect_changes -- [out_dir]

use clsplat::bench::{self, BenchmarkSpec, ChangeOp};
use clsplat::change2d::{detect_changes_staged, Extractor, TAU};

fn main() -> clsplat::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/detect".into());
    let b = bench::build_benchmark(&BenchmarkSpec {
        op: ChangeOp::Remove,
        ..Default::default()
    })?;
    let photos = bench::render_views(&b.after.scene, &b.update_cameras)?;
    let staged = detect_changes_staged(&b.before.scene, &photos, &b.update_cameras, &Extractor::default(), TAU)?;
    let truth = bench::ground_truth_masks(&b.before.scene, &b.after.scene, &b.update_cameras)?;

    let (raw, dilated): (Vec<_>, Vec<_>) = staged.into_iter().map(|(r, d)| (r.mask, d.mask)).unzip();
    for (name, masks) in [("raw", &raw), ("dilated", &dilated)] {
        let (p, r) = bench::mask_pr(masks, &truth)?;
        println!("{name:8} precision {p:.3} recall {r:.3}");
        clsplat::posed::save_masks(format!("{out}/{name}"), masks)?;
    }
    Ok(())
}
