//! Lifts 2D change masks into 3D: votes Gaussians into the changed set,
//! clusters them, and fits the spheres that bound the update.
//!
//! cargo run --release --example lift_changes

use clsplat::bench::{self, BenchmarkSpec, ChangeOp};
use clsplat::change2d::{detect_changes, Extractor, TAU};
use clsplat::lift3d::{cluster, default_min_cluster_size, fit_spheres, vote, vote_counts};

fn main() -> clsplat::Result<()> {
    let b = bench::build_benchmark(&BenchmarkSpec {
        op: ChangeOp::Move,
        ..Default::default()
    })?;
    let photos = bench::render_views(&b.after.scene, &b.update_cameras)?;
    let masks: Vec<_> = detect_changes(&b.before.scene, &photos, &b.update_cameras, &Extractor::default(), TAU)?
        .into_iter()
        .map(|m| m.mask)
        .collect();

    let changed = vote(&b.before.scene, &masks, &b.update_cameras)?;
    let counts = vote_counts(&b.before.scene.positions(), &masks, &b.update_cameras)?;
    let truly: Vec<usize> = b.changed.iter().flat_map(|&id| b.before.object_indices(id)).collect();
    let hits = changed.iter().filter(|i| truly.contains(i)).count();
    println!(
        "voted {} Gaussians ({hits} belong to the moved object of {}), N = {}",
        changed.len(),
        truly.len(),
        counts.views
    );

    let positions = b.before.scene.positions();
    let points: Vec<_> = changed.iter().map(|&i| positions[i]).collect();
    let clusters = cluster(&points, default_min_cluster_size(points.len()));
    println!("{} clusters, {} noise points", clusters.clusters.len(), clusters.noise.len());
    for s in fit_spheres(&points, &clusters)? {
        println!(
            "sphere at ({:.2}, {:.2}, {:.2}) radius {:.3}",
            s.center[0], s.center[1], s.center[2], s.radius
        );
    }
    Ok(())
}
