//! Clone/split densification and opacity pruning, restricted to the
//! optimized suffix of the scene.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gaussian::{in_sphere_union, ChangeSet, Gaussian, GaussianScene};
use crate::raster::project::quat_to_matrix;
use crate::raster::SparseGrads;
use crate::real::{sigmoid, Real};

use super::adam::AdamState;
use super::config::OptimConfig;

const SPLIT_TRIES: usize = 8;

/// Running mean of the screen-space positional gradient per Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GradStats {
    pub sum: Vec<f64>,
    pub count: Vec<u32>,
}

impl GradStats {
    pub fn new(len: usize) -> Self {
        GradStats {
            sum: vec![0.0; len],
            count: vec![0; len],
        }
    }

    /// Adds one view's statistic for every Gaussian that received a gradient.
    pub fn accumulate<T: Real>(&mut self, grads: &SparseGrads<T>) {
        for (&i, &s) in grads.indices.iter().zip(&grads.screen_grad) {
            let s = s.to_f64();
            if s > 0.0 {
                self.sum[i] += s;
                self.count[i] += 1;
            }
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        if self.count[i] == 0 {
            0.0
        } else {
            self.sum[i] / self.count[i] as f64
        }
    }
}

/// Start of the active suffix, or an error if `active_set` is not `start..len`.
pub fn suffix_start(active_set: &[usize], len: usize) -> Result<usize> {
    let start = len - active_set.len().min(len);
    if active_set.len() > len || active_set.iter().enumerate().any(|(k, &i)| i != start + k) {
        return Err(Error::ActiveSetNotSuffix);
    }
    Ok(start)
}

/// Removes flagged Gaussians from the scene and every parallel array.
pub(crate) fn remove_flagged<T: Real>(
    scene: &mut GaussianScene<T>,
    state: &mut AdamState<T>,
    stats: &mut GradStats,
    remove: &[bool],
) {
    let mut k = 0;
    scene.gaussians.retain(|_| {
        k += 1;
        !remove[k - 1]
    });
    state.retain_mask(remove);
    let mut k = 0;
    stats.sum.retain(|_| {
        k += 1;
        !remove[k - 1]
    });
    let mut k = 0;
    stats.count.retain(|_| {
        k += 1;
        !remove[k - 1]
    });
}

/// Outcome of one densification round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

/// Clones small and splits large high-gradient Gaussians, then prunes
/// near-transparent ones. Only members of `active_set` (which must be the
/// scene's suffix) are considered; new Gaussians are appended and join the
/// active set. Returns the new active set.
///
/// Split children are drawn inside `change_set.spheres` when any are given.
/// `extent` is the scene scale against which "small" and "large" are judged.
#[allow(clippy::too_many_arguments)]
pub fn densify_and_prune<T: Real, R: Rng>(
    scene: &mut GaussianScene<T>,
    stats: &mut GradStats,
    state: &mut AdamState<T>,
    active_set: &[usize],
    change_set: &ChangeSet,
    config: &OptimConfig,
    extent: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, DensifyReport)> {
    let n = scene.len();
    let start = suffix_start(active_set, n)?;
    let d = &config.densify;
    let boundary = d.percent_dense * extent;
    let mut report = DensifyReport::default();
    let mut new: Vec<Gaussian<T>> = Vec::new();
    let mut remove = vec![false; n];
    let mut budget = d.max_count.saturating_sub(active_set.len());

    for i in start..n {
        if budget == 0 {
            break;
        }
        if stats.mean(i) < d.grad_threshold {
            continue;
        }
        let g = scene.gaussians[i];
        if g.max_scale().to_f64() <= boundary {
            new.push(g);
            report.cloned += 1;
            budget -= 1;
        } else {
            let rot = quat_to_matrix(&g.rotation).map(|x| x.to_f64());
            let scale = g.scale().map(|s| s.to_f64());
            let shrink = T::lit(d.split_factor.ln());
            let parent = g.position.map(|x| x.to_f64());
            for _ in 0..2 {
                let mut child = g;
                for k in 0..3 {
                    child.log_scale[k] = g.log_scale[k] - shrink;
                }
                // children that would leave the change region are redrawn,
                // and kept at the parent's center if that keeps failing
                for _ in 0..SPLIT_TRIES {
                    let z = Vector3::new(
                        rng.sample::<f64, _>(StandardNormal) * scale[0],
                        rng.sample::<f64, _>(StandardNormal) * scale[1],
                        rng.sample::<f64, _>(StandardNormal) * scale[2],
                    );
                    let off = rot * z;
                    let p = [parent[0] + off[0], parent[1] + off[1], parent[2] + off[2]];
                    if change_set.spheres.is_empty() || in_sphere_union(&change_set.spheres, &p) {
                        child.position = p.map(T::lit);
                        break;
                    }
                }
                new.push(child);
            }
            remove[i] = true;
            report.split += 1;
            budget = budget.saturating_sub(1);
        }
    }
    let thr = T::lit(config.opacity_prune_threshold);
    for i in start..n {
        if !remove[i] && sigmoid(scene.gaussians[i].opacity_logit) < thr {
            remove[i] = true;
            report.pruned += 1;
        }
    }

    let added = new.len();
    scene.gaussians.extend(new);
    state.push_fresh(added);
    remove.extend(std::iter::repeat_n(false, added));
    *stats = GradStats::new(scene.len());
    remove_flagged(scene, state, stats, &remove);
    let new_len = scene.len();
    Ok(((start..new_len).collect(), report))
}
