//! Gaussian primitives, the ordered scene container, and small geometric
//! queries over Gaussian centers.

use std::collections::BTreeSet;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{sigmoid, Real};

/// Number of scalar parameters per Gaussian.
pub const PARAM_COUNT: usize = 14;

/// One anisotropic 3D Gaussian with a degree-0 (RGB) color.
///
/// `rotation` is a quaternion stored as `(w, x, y, z)`. Scale and opacity are
/// kept in log and logit space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gaussian<T = f32> {
    pub position: [T; 3],
    pub rotation: [T; 4],
    pub log_scale: [T; 3],
    pub opacity_logit: T,
    pub color: [T; 3],
}

impl<T: Real> Gaussian<T> {
    pub fn new(position: [T; 3], log_scale: [T; 3], opacity_logit: T, color: [T; 3]) -> Self {
        Gaussian {
            position,
            rotation: [T::one(), T::zero(), T::zero(), T::zero()],
            log_scale,
            opacity_logit,
            color,
        }
    }

    /// Isotropic Gaussian from activated quantities.
    pub fn isotropic(position: [T; 3], scale: T, opacity: T, color: [T; 3]) -> Self {
        let ls = scale.ln();
        Self::new(position, [ls; 3], crate::real::logit(opacity), color)
    }

    #[inline]
    pub fn opacity(&self) -> T {
        sigmoid(self.opacity_logit)
    }

    #[inline]
    pub fn scale(&self) -> [T; 3] {
        self.log_scale.map(|s| s.exp())
    }

    pub fn max_scale(&self) -> T {
        let s = self.scale();
        s[0].max(s[1]).max(s[2])
    }

    #[inline]
    pub fn center(&self) -> Vector3<T> {
        Vector3::from(self.position)
    }

    /// Parameters flattened in declaration order.
    pub fn to_array(&self) -> [T; PARAM_COUNT] {
        let p = &self.position;
        let q = &self.rotation;
        let s = &self.log_scale;
        let c = &self.color;
        [
            p[0], p[1], p[2], q[0], q[1], q[2], q[3], s[0], s[1], s[2], self.opacity_logit, c[0], c[1], c[2],
        ]
    }

    pub fn from_array(a: &[T; PARAM_COUNT]) -> Self {
        Gaussian {
            position: [a[0], a[1], a[2]],
            rotation: [a[3], a[4], a[5], a[6]],
            log_scale: [a[7], a[8], a[9]],
            opacity_logit: a[10],
            color: [a[11], a[12], a[13]],
        }
    }

    pub fn cast<U: Real>(&self) -> Gaussian<U> {
        let a = self.to_array().map(|x| U::lit(x.to_f64()));
        Gaussian::from_array(&a)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite_val()) && self.scale().iter().all(|s| s.is_finite_val())
    }

    /// Rescale the quaternion to unit length.
    pub fn normalize_rotation(&mut self) {
        let q = &mut self.rotation;
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if n > T::zero() {
            for c in q.iter_mut() {
                *c /= n;
            }
        } else {
            *q = [T::one(), T::zero(), T::zero(), T::zero()];
        }
    }
}

/// Ordered collection of Gaussians. Position in `gaussians` is identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussianScene<T = f32> {
    pub gaussians: Vec<Gaussian<T>>,
}

impl<T: Real> GaussianScene<T> {
    pub fn new(gaussians: Vec<Gaussian<T>>) -> Self {
        GaussianScene { gaussians }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn cast<U: Real>(&self) -> GaussianScene<U> {
        GaussianScene {
            gaussians: self.gaussians.iter().map(|g| g.cast()).collect(),
        }
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.gaussians
            .iter()
            .map(|g| Vector3::new(g.position[0].to_f64(), g.position[1].to_f64(), g.position[2].to_f64()))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.gaussians.iter().all(|g| g.is_finite())
    }
}

impl GaussianScene<f32> {
    /// Byte-level image of all parameters, for bit-exact comparisons.
    pub fn param_bits(&self) -> Vec<u32> {
        self.gaussians
            .iter()
            .flat_map(|g| g.to_array().map(f32::to_bits))
            .collect()
    }
}

/// Component-wise bounds of all Gaussian centers.
pub fn scene_aabb<T: Real>(scene: &GaussianScene<T>) -> Result<([f64; 3], [f64; 3])> {
    let mut it = scene.gaussians.iter();
    let first = it.next().ok_or(Error::EmptyScene)?;
    let p0 = first.position.map(|x| x.to_f64());
    Ok(it.fold((p0, p0), |(mut lo, mut hi), g| {
        for k in 0..3 {
            let x = g.position[k].to_f64();
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
        (lo, hi)
    }))
}

/// Mean distance from each point to its `k` nearest neighbors, excluding itself.
///
/// Brute force; each row keeps a sorted buffer of the `k` smallest distances.
pub fn knn_mean_distance(positions: &[Vector3<f64>], k: usize) -> Result<Vec<f64>> {
    if k == 0 || positions.len() < k + 1 {
        return Err(Error::TooFewPoints {
            needed: k + 1,
            got: positions.len(),
        });
    }
    let mut out = Vec::with_capacity(positions.len());
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (i, p) in positions.iter().enumerate() {
        best.clear();
        for (j, q) in positions.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2 = (p - q).norm_squared();
            if best.len() < k || d2 < best[k - 1] {
                let at = best.partition_point(|&b| b <= d2);
                best.insert(at, d2);
                best.truncate(k);
            }
        }
        out.push(best.iter().map(|d| d.sqrt()).sum::<f64>() / k as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Sphere {
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        let d2: f64 = (0..3).map(|k| (p[k] - self.center[k]).powi(2)).sum();
        d2 <= self.radius * self.radius
    }
}

/// True if `p` lies in at least one sphere.
pub fn in_sphere_union(spheres: &[Sphere], p: &[f64; 3]) -> bool {
    spheres.iter().any(|s| s.contains(p))
}

/// Changed Gaussians of an update and the spheres bounding their region.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChangeSet {
    pub indices: Vec<usize>,
    pub spheres: Vec<Sphere>,
}

impl ChangeSet {
    /// Builds a change set, sorting and deduplicating `indices`.
    pub fn new(indices: impl IntoIterator<Item = usize>, spheres: Vec<Sphere>) -> Self {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        ChangeSet {
            indices: set.into_iter().collect(),
            spheres,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Checks ordering, bounds and sphere containment against `scene`.
    pub fn validate<T: Real>(&self, scene: &GaussianScene<T>) -> Result<()> {
        if !self.indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("change-set indices not strictly increasing".into()));
        }
        for &i in &self.indices {
            let g = scene.gaussians.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                len: scene.len(),
            })?;
            let p = g.position.map(|x| x.to_f64());
            if !self.spheres.is_empty() && !in_sphere_union(&self.spheres, &p) {
                return Err(Error::InvalidArgument(format!("Gaussian {i} lies outside every sphere")));
            }
        }
        Ok(())
    }
}

/// Checks that `indices` is sorted, unique and in range for a scene of `len`.
pub(crate) fn check_index_set(indices: &[usize], len: usize) -> Result<()> {
    for (k, &i) in indices.iter().enumerate() {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        if k > 0 && indices[k - 1] >= i {
            return Err(Error::InvalidArgument("index set must be sorted and unique".into()));
        }
    }
    Ok(())
}
