use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-field Adam learning rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningRates {
    pub position_init: f64,
    pub position_final: f64,
    /// Multiplies both position rates; usually the scene extent.
    pub spatial_scale: f64,
    pub rotation: f64,
    pub scale: f64,
    pub opacity: f64,
    pub color: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates {
            position_init: 1.6e-4,
            position_final: 1.6e-6,
            spatial_scale: 1.0,
            rotation: 1e-3,
            scale: 5e-3,
            opacity: 5e-2,
            color: 2.5e-3,
        }
    }
}

impl LearningRates {
    /// Log-linear decay of the position rate over `max_steps`.
    pub fn position_at(&self, step: u64, max_steps: u64) -> f64 {
        let t = if max_steps == 0 {
            1.0
        } else {
            (step as f64 / max_steps as f64).clamp(0.0, 1.0)
        };
        let lr = ((1.0 - t) * self.position_init.ln() + t * self.position_final.ln()).exp();
        lr * self.spatial_scale
    }

    /// Rates for every scalar parameter in declaration order.
    pub fn per_param(&self, step: u64, max_steps: u64) -> [f64; crate::gaussian::PARAM_COUNT] {
        let p = self.position_at(step, max_steps);
        [
            p,
            p,
            p,
            self.rotation,
            self.rotation,
            self.rotation,
            self.rotation,
            self.scale,
            self.scale,
            self.scale,
            self.opacity,
            self.color,
            self.color,
            self.color,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensifyConfig {
    pub enabled: bool,
    pub interval: u64,
    /// First iteration at which densification may run.
    pub from_iter: u64,
    /// Last iteration at which densification may run.
    pub until_iter: u64,
    pub grad_threshold: f64,
    /// Upper bound on the number of optimized Gaussians.
    pub max_count: usize,
    /// Clone/split boundary as a fraction of the scene extent.
    pub percent_dense: f64,
    pub split_factor: f64,
}

impl Default for DensifyConfig {
    fn default() -> Self {
        DensifyConfig {
            enabled: true,
            interval: 100,
            from_iter: 500,
            until_iter: 15_000,
            grad_threshold: 2e-4,
            max_count: 50_000,
            percent_dense: 0.01,
            split_factor: 1.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub iterations: u64,
    pub lr: LearningRates,
    pub lambda_dssim: f64,
    /// Sphere-pruning period, in iterations.
    pub prune_interval: u64,
    pub densify: DensifyConfig,
    pub opacity_prune_threshold: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            iterations: 5000,
            lr: LearningRates::default(),
            lambda_dssim: 0.2,
            prune_interval: 15,
            densify: DensifyConfig::default(),
            opacity_prune_threshold: 5e-3,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prune_interval == 0 {
            return Err(Error::InvalidArgument("prune_interval must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda_dssim) {
            return Err(Error::InvalidArgument(format!("lambda_dssim {} outside [0, 1]", self.lambda_dssim)));
        }
        if self.densify.enabled && self.densify.interval == 0 {
            return Err(Error::InvalidArgument("densify interval must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: OptimConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
