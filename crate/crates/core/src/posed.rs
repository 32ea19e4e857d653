//! Directories of posed photographs: `cameras.json` plus one PNG per camera,
//! named by its index (`000.png`, `001.png`, …).

use std::path::{Path, PathBuf};

use crate::camera::{load_cameras, save_cameras, Camera};
use crate::error::{Error, Result};
use crate::image::{BinaryImage, Image};
use crate::real::Real;

pub const CAMERAS_FILE: &str = "cameras.json";

pub fn view_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("{i:03}.png"))
}

pub fn mask_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("mask_{i:03}.png"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads every view of `dir`, checking each image against its camera size.
pub fn load_posed_dir<T: Real>(dir: impl AsRef<Path>) -> Result<(Vec<Image<T>>, Vec<Camera>)> {
    let dir = dir.as_ref();
    let cameras = load_cameras(dir.join(CAMERAS_FILE))?;
    let images = cameras
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let img = Image::<T>::load_png(view_path(dir, i))?;
            if img.width != c.width || img.height != c.height {
                return Err(Error::DimensionMismatch(format!(
                    "view {i} is {}x{}, camera expects {}x{}",
                    img.width, img.height, c.width, c.height
                )));
            }
            Ok(img)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((images, cameras))
}

pub fn save_posed_dir<T: Real>(dir: impl AsRef<Path>, images: &[Image<T>], cameras: &[Camera]) -> Result<()> {
    let dir = dir.as_ref();
    if images.len() != cameras.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} images for {} cameras",
            images.len(),
            cameras.len()
        )));
    }
    ensure_dir(dir)?;
    save_cameras(dir.join(CAMERAS_FILE), cameras)?;
    for (i, img) in images.iter().enumerate() {
        img.save_png(view_path(dir, i))?;
    }
    Ok(())
}

pub fn save_masks(dir: impl AsRef<Path>, masks: &[BinaryImage]) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    for (i, m) in masks.iter().enumerate() {
        m.save_png(mask_path(dir, i))?;
    }
    Ok(())
}

pub fn load_masks(dir: impl AsRef<Path>, count: usize) -> Result<Vec<BinaryImage>> {
    let dir = dir.as_ref();
    (0..count).map(|i| BinaryImage::load_png(mask_path(dir, i))).collect()
}
