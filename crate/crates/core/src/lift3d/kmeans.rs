//! k-means with k-means++ seeding and a fixed number of Lloyd iterations.

use nalgebra::Vector3;
use rand::Rng;

pub const LLOYD_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vector3<f64>>,
    /// Cluster of each input point.
    pub assignment: Vec<usize>,
}

fn nearest(p: &Vector3<f64>, centroids: &[Vector3<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = (p - c).norm_squared();
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Clusters `points` into `k` groups. `k` is clamped to `1..=points.len()`.
///
/// Panics on empty input.
pub fn kmeans<R: Rng>(points: &[Vector3<f64>], k: usize, rng: &mut R) -> KMeans {
    assert!(!points.is_empty(), "k-means on no points");
    let k = k.clamp(1, points.len());
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| (p - centroids[0]).norm_squared()).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            // every point coincides with a centroid
            rng.random_range(0..points.len())
        };
        centroids.push(points[next]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min((p - points[next]).norm_squared());
        }
    }
    let mut assignment = vec![0; points.len()];
    for _ in 0..LLOYD_ITERATIONS {
        for (i, p) in points.iter().enumerate() {
            assignment[i] = nearest(p, &centroids).0;
        }
        let mut sums = vec![Vector3::zeros(); k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sums[assignment[i]] += p;
            counts[assignment[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            }
        }
    }
    for (i, p) in points.iter().enumerate() {
        assignment[i] = nearest(p, &centroids).0;
    }
    KMeans { centroids, assignment }
}
