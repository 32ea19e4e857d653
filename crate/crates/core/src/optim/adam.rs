use crate::error::{Error, Result};
use crate::gaussian::{check_index_set, Gaussian, GaussianScene, PARAM_COUNT};
use crate::raster::SparseGrads;
use crate::real::Real;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments for every Gaussian of a scene.
///
/// Bias correction uses a per-Gaussian step count, so Gaussians that join
/// mid-run start their own correction schedule and Gaussians that are never
/// stepped keep zero moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T = f32> {
    pub m: Vec<[T; PARAM_COUNT]>,
    pub v: Vec<[T; PARAM_COUNT]>,
    pub steps: Vec<u32>,
    /// Global iteration, drives the position learning-rate schedule.
    pub iteration: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![[T::zero(); PARAM_COUNT]; len],
            v: vec![[T::zero(); PARAM_COUNT]; len],
            steps: vec![0; len],
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Appends fresh (zero) state for `n` new Gaussians.
    pub fn push_fresh(&mut self, n: usize) {
        self.m.extend(std::iter::repeat_n([T::zero(); PARAM_COUNT], n));
        self.v.extend(std::iter::repeat_n([T::zero(); PARAM_COUNT], n));
        self.steps.extend(std::iter::repeat_n(0, n));
    }

    /// Drops entries flagged in `remove`, preserving order.
    pub fn retain_mask(&mut self, remove: &[bool]) {
        let mut k = 0;
        self.m.retain(|_| {
            k += 1;
            !remove[k - 1]
        });
        k = 0;
        self.v.retain(|_| {
            k += 1;
            !remove[k - 1]
        });
        k = 0;
        self.steps.retain(|_| {
            k += 1;
            !remove[k - 1]
        });
    }
}

/// One Adam update of the Gaussians in `active_set`.
///
/// Every entry of `grads` must name a member of `active_set`. Gaussians
/// outside the set, and their moments, are left untouched bit for bit.
/// `lrs` holds one learning rate per scalar parameter.
pub fn adam_step<T: Real>(
    scene: &mut GaussianScene<T>,
    grads: &SparseGrads<T>,
    state: &mut AdamState<T>,
    active_set: &[usize],
    lrs: &[f64; PARAM_COUNT],
) -> Result<()> {
    let n = scene.len();
    check_index_set(active_set, n)?;
    if state.len() != n {
        return Err(Error::DimensionMismatch(format!("Adam state for {} Gaussians, scene has {n}", state.len())));
    }
    for &i in &grads.indices {
        if i >= n || active_set.binary_search(&i).is_err() {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
    }
    let b1 = T::lit(BETA1);
    let b2 = T::lit(BETA2);
    let eps = T::lit(EPSILON);
    let lrs = lrs.map(T::lit);
    for (&i, g) in grads.indices.iter().zip(&grads.grads) {
        let grad = g.to_array();
        state.steps[i] += 1;
        let t = state.steps[i] as i32;
        let bc1 = T::one() - b1.powi(t);
        let bc2 = T::one() - b2.powi(t);
        let mut p = scene.gaussians[i].to_array();
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for k in 0..PARAM_COUNT {
            m[k] = b1 * m[k] + (T::one() - b1) * grad[k];
            v[k] = b2 * v[k] + (T::one() - b2) * grad[k] * grad[k];
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            p[k] -= lrs[k] * m_hat / (v_hat.sqrt() + eps);
        }
        let mut updated = Gaussian::from_array(&p);
        updated.normalize_rotation();
        scene.gaussians[i] = updated;
    }
    state.iteration += 1;
    Ok(())
}
