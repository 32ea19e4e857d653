//! Continual Gaussian-splatting scene updates.
//!
//! A scene of 3D Gaussians is compared against a handful of new posed
//! photographs. Changed regions are found in 2D, lifted to a set of changed
//! Gaussians in 3D, and re-optimized locally while the rest of the scene is
//! frozen. Each update leaves behind a compact delta from which any earlier
//! scene can be recovered bit-exactly, and independent updates of disjoint
//! regions can be merged.

pub mod bench;
pub mod camera;
pub mod change2d;
pub mod cli;
pub mod continual;
pub mod error;
pub mod gaussian;
pub mod history;
pub mod image;
pub mod lift3d;
pub mod optim;
pub mod posed;
pub mod raster;
pub mod real;
pub mod scene_io;
pub mod ssim;

pub use camera::{Camera, Intrinsics, Projection};
pub use error::{Error, Result};
pub use gaussian::{ChangeSet, Gaussian, GaussianScene, Sphere};
pub use image::{BinaryImage, Image};
pub use real::Real;
