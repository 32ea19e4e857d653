//! Per-view 2D change detection.
//!
//! A view's previous-scene render and the new photograph are reduced to
//! per-patch feature grids, compared cell by cell with cosine similarity,
//! upsampled back to pixels, and dilated.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::GaussianScene;
use crate::image::{BinaryImage, Image};
use crate::raster::render;
use crate::real::Real;
use crate::ssim::ssim_map;

/// Default patch side.
pub const PATCH: usize = 14;
/// Dimension of the built-in descriptor.
pub const BUILTIN_DIM: usize = 14;
/// Default cosine-similarity threshold; cells at or below it are changed.
pub const TAU: f64 = 0.5;
const ORIENTATION_BINS: usize = 8;
const FEATURE_MAGIC: &[u8; 7] = b"CLFEAT1";

/// Per-patch feature vectors on a `grid_w × grid_h` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub grid_w: usize,
    pub grid_h: usize,
    pub dim: usize,
    pub patch: usize,
    /// Cell-major: the vector of cell `(gx, gy)` starts at `(gy·grid_w + gx)·dim`.
    pub data: Vec<f32>,
}

impl FeatureMap {
    pub fn cell(&self, gx: usize, gy: usize) -> &[f32] {
        let i = (gy * self.grid_w + gx) * self.dim;
        &self.data[i..i + self.dim]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(23 + self.data.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        for v in [self.grid_w, self.grid_h, self.dim, self.patch] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 23 || &bytes[..7] != FEATURE_MAGIC {
            return Err(Error::Format("not a feature file".into()));
        }
        let u = |k: usize| u32::from_le_bytes(bytes[7 + 4 * k..11 + 4 * k].try_into().unwrap()) as usize;
        let (grid_w, grid_h, dim, patch) = (u(0), u(1), u(2), u(3));
        let n = grid_w * grid_h * dim;
        if bytes.len() != 23 + 4 * n {
            return Err(Error::Format(format!(
                "feature file holds {} bytes, header implies {}",
                bytes.len(),
                23 + 4 * n
            )));
        }
        let data = bytes[23..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect::<Vec<_>>();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite feature value".into()));
        }
        Ok(FeatureMap {
            grid_w,
            grid_h,
            dim,
            patch,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Where a feature grid comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    /// The built-in patch descriptor with the given patch side.
    Builtin { patch: usize },
    /// A precomputed grid stored in a feature file.
    File(PathBuf),
}

/// Detection method used by [`detect_changes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extractor {
    /// Built-in patch features on both render and photograph.
    BuiltinPatch { patch: usize },
    /// Precomputed feature files, one per view for renders and photographs.
    ExternalFiles {
        rendered: Vec<PathBuf>,
        observed: Vec<PathBuf>,
    },
    /// Pixel baseline: changed where the RGB distance exceeds `threshold`.
    ColorL2 { threshold: f64 },
    /// Pixel baseline: changed where channel-mean local SSIM is below `threshold`.
    Ssim { threshold: f64 },
}

impl Default for Extractor {
    fn default() -> Self {
        Extractor::BuiltinPatch { patch: PATCH }
    }
}

/// Whether a mask is the raw comparison or its dilation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskStage {
    Raw,
    Dilated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeMask2D {
    pub mask: BinaryImage,
    pub stage: MaskStage,
}

/// Cell-wise comparison of two feature grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeGrid {
    pub grid_w: usize,
    pub grid_h: usize,
    pub patch: usize,
    /// Cosine similarity per cell.
    pub similarity: Vec<f32>,
    /// `similarity ≤ τ` per cell.
    pub changed: Vec<bool>,
}

impl ChangeGrid {
    /// A grid given only as changed/unchanged cells; similarity is 0 for
    /// changed and 1 for unchanged cells.
    pub fn from_binary(grid_w: usize, grid_h: usize, patch: usize, changed: Vec<bool>) -> Result<Self> {
        if changed.len() != grid_w * grid_h {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {grid_w}x{grid_h} grid",
                changed.len()
            )));
        }
        let similarity = changed.iter().map(|&c| if c { 0.0 } else { 1.0 }).collect();
        Ok(ChangeGrid {
            grid_w,
            grid_h,
            patch,
            similarity,
            changed,
        })
    }
}

/// Offset and size of the centered crop whose sides are multiples of `patch`.
pub fn crop_window(width: usize, height: usize, patch: usize) -> (usize, usize, usize, usize) {
    let cw = width - width % patch;
    let ch = height - height % patch;
    ((width - cw) / 2, (height - ch) / 2, cw, ch)
}

/// Per-patch features of `image`.
///
/// The image is center-cropped to multiples of the patch side. The built-in
/// descriptor concatenates mean color minus 0.5, per-channel standard
/// deviation, and a gradient-magnitude-weighted 8-bin luminance orientation
/// histogram, then normalizes to unit length.
pub fn extract_features<T: Real>(image: &Image<T>, source: &FeatureSource) -> Result<FeatureMap> {
    match source {
        FeatureSource::Builtin { patch } => builtin_features(image, *patch),
        FeatureSource::File(path) => {
            let map = FeatureMap::load(path)?;
            check_grid(&map, image.width, image.height)?;
            Ok(map)
        }
    }
}

fn check_grid(map: &FeatureMap, width: usize, height: usize) -> Result<()> {
    if map.patch == 0 || width < map.patch || height < map.patch {
        return Err(Error::ImageTooSmall {
            width,
            height,
            patch: map.patch,
        });
    }
    if map.grid_w != width / map.patch || map.grid_h != height / map.patch {
        return Err(Error::FeatureFileMismatch(format!(
            "grid {}x{} with patch {} does not fit a {width}x{height} image",
            map.grid_w, map.grid_h, map.patch
        )));
    }
    Ok(())
}

/// Orientation bin of a gradient; bins are centered on multiples of 45°.
fn orientation_bin(gx: f64, gy: f64) -> usize {
    let step = std::f64::consts::FRAC_PI_4;
    let theta = gy.atan2(gx);
    (((theta + step / 2.0) / step).floor() as isize).rem_euclid(ORIENTATION_BINS as isize) as usize
}

fn builtin_features<T: Real>(image: &Image<T>, patch: usize) -> Result<FeatureMap> {
    let (w, h) = (image.width, image.height);
    if patch == 0 || w < patch || h < patch {
        return Err(Error::ImageTooSmall { width: w, height: h, patch });
    }
    let (x0, y0, cw, ch) = crop_window(w, h, patch);
    let (gw, gh) = (cw / patch, ch / patch);
    let lum = image.luminance();
    let data: Vec<f32> = (0..gw * gh)
        .into_par_iter()
        .flat_map_iter(|cell| {
            let (gx, gy) = (cell % gw, cell / gw);
            let px0 = x0 + gx * patch;
            let py0 = y0 + gy * patch;
            let mut f = [0.0f64; BUILTIN_DIM];
            let n = (patch * patch) as f64;
            let mut sum = [0.0; 3];
            let mut sq = [0.0; 3];
            for y in py0..py0 + patch {
                for x in px0..px0 + patch {
                    let p = image.pixel(x, y);
                    for c in 0..3 {
                        let v = p[c].to_f64();
                        sum[c] += v;
                        sq[c] += v * v;
                    }
                }
            }
            for c in 0..3 {
                let mean = sum[c] / n;
                f[c] = mean - 0.5;
                f[3 + c] = (sq[c] / n - mean * mean).max(0.0).sqrt();
            }
            // gradients stay inside the patch (edge samples are replicated)
            let at = |x: usize, y: usize| lum[y * w + x];
            let last = patch - 1;
            for ly in 0..patch {
                for lx in 0..patch {
                    let (xl, xr) = (lx.saturating_sub(1), (lx + 1).min(last));
                    let (yu, yd) = (ly.saturating_sub(1), (ly + 1).min(last));
                    let gxv = 0.5 * (at(px0 + xr, py0 + ly) - at(px0 + xl, py0 + ly));
                    let gyv = 0.5 * (at(px0 + lx, py0 + yd) - at(px0 + lx, py0 + yu));
                    let mag = (gxv * gxv + gyv * gyv).sqrt();
                    if mag > 0.0 {
                        f[6 + orientation_bin(gxv, gyv)] += mag / n;
                    }
                }
            }
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                f.iter_mut().for_each(|v| *v /= norm);
            }
            f.map(|v| v as f32)
        })
        .collect();
    Ok(FeatureMap {
        grid_w: gw,
        grid_h: gh,
        dim: BUILTIN_DIM,
        patch,
        data,
    })
}

/// Cosine similarity; a zero vector on either side counts as identical.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        1.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// Marks cells whose cosine similarity is at most `tau`.
pub fn change_mask(prev: &FeatureMap, new: &FeatureMap, tau: f64) -> Result<ChangeGrid> {
    if prev.grid_w != new.grid_w || prev.grid_h != new.grid_h || prev.dim != new.dim || prev.patch != new.patch {
        return Err(Error::DimensionMismatch(format!(
            "feature grids {}x{}x{} (patch {}) vs {}x{}x{} (patch {})",
            prev.grid_w, prev.grid_h, prev.dim, prev.patch, new.grid_w, new.grid_h, new.dim, new.patch
        )));
    }
    let mut similarity = Vec::with_capacity(prev.grid_w * prev.grid_h);
    let mut changed = Vec::with_capacity(similarity.capacity());
    for gy in 0..prev.grid_h {
        for gx in 0..prev.grid_w {
            let s = cosine(prev.cell(gx, gy), new.cell(gx, gy));
            similarity.push(s as f32);
            changed.push(s <= tau);
        }
    }
    Ok(ChangeGrid {
        grid_w: prev.grid_w,
        grid_h: prev.grid_h,
        patch: prev.patch,
        similarity,
        changed,
    })
}

/// Bilinearly upsamples the similarity grid to the cropped image, marks
/// pixels at or below `tau`, and pads the crop margins as unchanged.
pub fn upsample_and_pad(grid: &ChangeGrid, width: usize, height: usize, tau: f64) -> Result<ChangeMask2D> {
    let p = grid.patch;
    if p == 0 || width < p || height < p {
        return Err(Error::ImageTooSmall { width, height, patch: p });
    }
    let (x0, y0, cw, ch) = crop_window(width, height, p);
    if cw / p != grid.grid_w || ch / p != grid.grid_h {
        return Err(Error::DimensionMismatch(format!(
            "grid {}x{} does not match a {width}x{height} image at patch {p}",
            grid.grid_w, grid.grid_h
        )));
    }
    // sample positions in grid coordinates, cell centers at integers
    let coords = |n: usize, cells: usize| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|i| {
                let u = ((i as f64 + 0.5) / p as f64 - 0.5).clamp(0.0, (cells - 1) as f64);
                let lo = u.floor() as usize;
                let hi = (lo + 1).min(cells - 1);
                (lo, hi, u - lo as f64)
            })
            .collect()
    };
    let xs = coords(cw, grid.grid_w);
    let ys = coords(ch, grid.grid_h);
    let s = |gx: usize, gy: usize| grid.similarity[gy * grid.grid_w + gx] as f64;
    let mut mask = BinaryImage::new(width, height);
    for (y, &(ya, yb, fy)) in ys.iter().enumerate() {
        for (x, &(xa, xb, fx)) in xs.iter().enumerate() {
            let top = s(xa, ya) * (1.0 - fx) + s(xb, ya) * fx;
            let bottom = s(xa, yb) * (1.0 - fx) + s(xb, yb) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            if v <= tau {
                mask.set(x0 + x, y0 + y, true);
            }
        }
    }
    Ok(ChangeMask2D {
        mask,
        stage: MaskStage::Raw,
    })
}

/// Side of the dilation square for an image of width `width`: 2% of the
/// width, rounded half up, forced odd, at least 3.
pub fn dilation_side(width: usize) -> usize {
    let side = (0.02 * width as f64 + 0.5).floor() as usize;
    let side = if side % 2 == 0 { side + 1 } else { side };
    side.max(3)
}

/// Binary dilation with an all-ones square of side [`dilation_side`].
pub fn dilate(mask: &ChangeMask2D) -> ChangeMask2D {
    let side = dilation_side(mask.mask.width);
    ChangeMask2D {
        mask: dilate_square(&mask.mask, side / 2),
        stage: MaskStage::Dilated,
    }
}

/// Dilation by a `(2r+1)`-square, computed as two separable running-max passes.
pub fn dilate_square(mask: &BinaryImage, r: usize) -> BinaryImage {
    let (w, h) = (mask.width, mask.height);
    let pass = |get: &dyn Fn(usize) -> bool, n: usize| -> Vec<bool> {
        // prefix counts make each window test O(1)
        let mut prefix = vec![0u32; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + get(i) as u32;
        }
        (0..n)
            .map(|i| prefix[(i + r + 1).min(n)] > prefix[i.saturating_sub(r)])
            .collect()
    };
    let mut rows = BinaryImage::new(w, h);
    for y in 0..h {
        let line = pass(&|x| mask.get(x, y), w);
        rows.bits[y * w..(y + 1) * w].copy_from_slice(&line);
    }
    let mut out = BinaryImage::new(w, h);
    for x in 0..w {
        let col = pass(&|y| rows.get(x, y), h);
        for (y, v) in col.into_iter().enumerate() {
            out.set(x, y, v);
        }
    }
    out
}

/// Raw per-pixel mask from a pixel-space baseline.
fn pixel_baseline<T: Real>(rendered: &Image<T>, observed: &Image<T>, extractor: &Extractor) -> BinaryImage {
    let (w, h) = (rendered.width, rendered.height);
    let mut mask = BinaryImage::new(w, h);
    match extractor {
        Extractor::ColorL2 { threshold } => {
            for i in 0..w * h {
                let d2: f64 = (0..3)
                    .map(|c| (rendered.data[i * 3 + c] - observed.data[i * 3 + c]).to_f64().powi(2))
                    .sum();
                mask.bits[i] = d2.sqrt() > *threshold;
            }
        }
        Extractor::Ssim { threshold } => {
            let map = ssim_map(rendered, observed);
            for i in 0..w * h {
                let s = (map[i * 3].to_f64() + map[i * 3 + 1].to_f64() + map[i * 3 + 2].to_f64()) / 3.0;
                mask.bits[i] = s < *threshold;
            }
        }
        _ => unreachable!("feature extractors are handled separately"),
    }
    mask
}

/// Raw (undilated) change mask for one view.
pub fn raw_change_mask<T: Real>(
    rendered: &Image<T>,
    observed: &Image<T>,
    extractor: &Extractor,
    view: usize,
    tau: f64,
) -> Result<ChangeMask2D> {
    if !rendered.same_size(observed) {
        return Err(Error::DimensionMismatch(format!(
            "render {}x{} vs image {}x{}",
            rendered.width, rendered.height, observed.width, observed.height
        )));
    }
    let (prev, new) = match extractor {
        Extractor::BuiltinPatch { patch } => {
            let src = FeatureSource::Builtin { patch: *patch };
            (extract_features(rendered, &src)?, extract_features(observed, &src)?)
        }
        Extractor::ExternalFiles { rendered: r, observed: o } => {
            let (Some(rp), Some(op)) = (r.get(view), o.get(view)) else {
                return Err(Error::FeatureFileMismatch(format!("no feature files for view {view}")));
            };
            (
                extract_features(rendered, &FeatureSource::File(rp.clone()))?,
                extract_features(observed, &FeatureSource::File(op.clone()))?,
            )
        }
        _ => {
            return Ok(ChangeMask2D {
                mask: pixel_baseline(rendered, observed, extractor),
                stage: MaskStage::Raw,
            })
        }
    };
    let grid = change_mask(&prev, &new, tau)?;
    upsample_and_pad(&grid, rendered.width, rendered.height, tau)
}

/// Renders `prev_scene` at every camera and returns one dilated change mask
/// per view.
pub fn detect_changes<T: Real>(
    prev_scene: &GaussianScene<T>,
    images: &[Image<T>],
    cameras: &[Camera],
    extractor: &Extractor,
    tau: f64,
) -> Result<Vec<ChangeMask2D>> {
    Ok(detect_changes_staged(prev_scene, images, cameras, extractor, tau)?
        .into_iter()
        .map(|(_, dilated)| dilated)
        .collect())
}

/// Like [`detect_changes`] but also returns each view's raw mask.
pub fn detect_changes_staged<T: Real>(
    prev_scene: &GaussianScene<T>,
    images: &[Image<T>],
    cameras: &[Camera],
    extractor: &Extractor,
    tau: f64,
) -> Result<Vec<(ChangeMask2D, ChangeMask2D)>> {
    if cameras.is_empty() {
        return Err(Error::NoViews);
    }
    if images.len() != cameras.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} images for {} cameras",
            images.len(),
            cameras.len()
        )));
    }
    (0..cameras.len())
        .into_par_iter()
        .map(|i| {
            let rendered = render(prev_scene, &cameras[i], None)?.image;
            let raw = raw_change_mask(&rendered, &images[i], extractor, i, tau)?;
            let dilated = dilate(&raw);
            Ok((raw, dilated))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_image(w: usize, h: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_vec(w, h, (0..w * h * 3).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn crop_arithmetic() {
        assert_eq!(crop_window(960, 540, 14), (4, 4, 952, 532));
        let map = extract_features(&Image::<f32>::new(960, 540), &FeatureSource::Builtin { patch: 14 }).unwrap();
        assert_eq!((map.grid_w, map.grid_h), (68, 38));
    }

    #[test]
    fn too_small() {
        let r = extract_features(&Image::<f32>::new(10, 20), &FeatureSource::Builtin { patch: 14 });
        assert!(matches!(r, Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn uniform_gray_identical_cells() {
        let img = Image::<f32>::filled(70, 42, [0.3, 0.3, 0.3]);
        let map = extract_features(&img, &FeatureSource::Builtin { patch: 14 }).unwrap();
        let first = map.cell(0, 0).to_vec();
        for gy in 0..map.grid_h {
            for gx in 0..map.grid_w {
                assert_eq!(map.cell(gx, gy), &first[..]);
            }
        }
    }

    #[test]
    fn rotation_permutes_histogram() {
        let img = noise_image(14, 14, 3);
        // rotate 90° counter-clockwise on screen: new(x, y) = old(w-1-y, x)
        let mut rot = Image::<f64>::new(14, 14);
        for y in 0..14 {
            for x in 0..14 {
                rot.set_pixel(x, y, img.pixel(13 - y, x));
            }
        }
        let src = FeatureSource::Builtin { patch: 14 };
        let a = extract_features(&img, &src).unwrap();
        let b = extract_features(&rot, &src).unwrap();
        for k in 0..6 {
            assert!((a.data[k] - b.data[k]).abs() < 1e-6, "component {k}");
        }
        let ha = &a.data[6..14];
        let hb = &b.data[6..14];
        let shift = (0..8)
            .find(|&s| (0..8).all(|k| (ha[k] - hb[(k + s) % 8]).abs() < 1e-6))
            .expect("histograms are a cyclic shift of each other");
        assert!(shift == 2 || shift == 6);
    }

    #[test]
    fn orientation_bins_on_axes() {
        assert_eq!(orientation_bin(1.0, 0.0), 0);
        assert_eq!(orientation_bin(1.0, 1.0), 1);
        assert_eq!(orientation_bin(0.0, 1.0), 2);
        assert_eq!(orientation_bin(-1.0, 0.0), 4);
        assert_eq!(orientation_bin(0.0, -1.0), 6);
        assert_eq!(orientation_bin(1.0, -0.1), 0);
    }

    fn map_of(cells: Vec<Vec<f32>>) -> FeatureMap {
        let dim = cells[0].len();
        FeatureMap {
            grid_w: cells.len(),
            grid_h: 1,
            dim,
            patch: 14,
            data: cells.concat(),
        }
    }

    #[test]
    fn cosine_threshold_cases() {
        let a = map_of(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]]);
        let b = map_of(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.6, 0.8],
            vec![0.0, 1.0],
        ]);
        let g = change_mask(&a, &b, 0.5).unwrap();
        assert_eq!(g.changed, vec![false, true, false, false]);
        let g2 = change_mask(&b, &a, 0.5).unwrap();
        assert_eq!(g.changed, g2.changed);
        assert_eq!(g.similarity, g2.similarity);
    }

    #[test]
    fn exact_half_cosine_is_changed() {
        let a = map_of(vec![vec![1.0, 0.0, 0.0, 0.0]]);
        let b = map_of(vec![vec![1.0, 1.0, 1.0, 1.0]]);
        let g = change_mask(&a, &b, 0.5).unwrap();
        assert_eq!(g.similarity, vec![0.5]);
        assert_eq!(g.changed, vec![true]);
        let m = upsample_and_pad(&g, 14, 14, 0.5).unwrap();
        assert_eq!(m.mask.count(), 196);
    }

    #[test]
    fn mismatched_grids() {
        let a = map_of(vec![vec![1.0, 0.0]]);
        let b = map_of(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert!(matches!(change_mask(&a, &b, 0.5), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn upsample_all_zero_and_all_one() {
        let (gw, gh) = (68, 38);
        let zero = ChangeGrid::from_binary(gw, gh, 14, vec![false; gw * gh]).unwrap();
        assert_eq!(upsample_and_pad(&zero, 960, 540, 0.5).unwrap().mask.count(), 0);
        let one = ChangeGrid::from_binary(gw, gh, 14, vec![true; gw * gh]).unwrap();
        let m = upsample_and_pad(&one, 960, 540, 0.5).unwrap().mask;
        for y in 0..540 {
            for x in 0..960 {
                let inside = (4..956).contains(&x) && (4..536).contains(&y);
                assert_eq!(m.get(x, y), inside, "({x}, {y})");
            }
        }
        assert_eq!(m.count(), 952 * 532);
    }

    #[test]
    fn single_cell_blob() {
        let (gw, gh) = (5, 4);
        let mut cells = vec![false; gw * gh];
        cells[2 * gw + 3] = true;
        let g = ChangeGrid::from_binary(gw, gh, 14, cells).unwrap();
        let m = upsample_and_pad(&g, 70, 56, 0.5).unwrap().mask;
        let on: Vec<(usize, usize)> = (0..56)
            .flat_map(|y| (0..70).map(move |x| (x, y)))
            .filter(|&(x, y)| m.get(x, y))
            .collect();
        let xmin = on.iter().map(|p| p.0).min().unwrap();
        let xmax = on.iter().map(|p| p.0).max().unwrap();
        let ymin = on.iter().map(|p| p.1).min().unwrap();
        let ymax = on.iter().map(|p| p.1).max().unwrap();
        // the blob spans the changed cell's full extent on both axes
        assert_eq!((xmin, xmax, ymin, ymax), (42, 55, 28, 41));
        // and is one 4-connected component
        let mut seen = vec![false; 70 * 56];
        let mut stack = vec![on[0]];
        let mut reached = 0;
        while let Some((x, y)) = stack.pop() {
            if seen[y * 70 + x] || !m.get(x, y) {
                continue;
            }
            seen[y * 70 + x] = true;
            reached += 1;
            if x > 0 {
                stack.push((x - 1, y));
            }
            if x + 1 < 70 {
                stack.push((x + 1, y));
            }
            if y > 0 {
                stack.push((x, y - 1));
            }
            if y + 1 < 56 {
                stack.push((x, y + 1));
            }
        }
        assert_eq!(reached, on.len());
    }

    #[test]
    fn kernel_side() {
        assert_eq!(dilation_side(960), 19);
        assert_eq!(dilation_side(100), 3);
        assert_eq!(dilation_side(32), 3);
        assert_eq!(dilation_side(1000), 21);
        assert_eq!(dilation_side(475), 11);
    }

    fn naive_dilate(m: &BinaryImage, r: usize) -> BinaryImage {
        let mut out = BinaryImage::new(m.width, m.height);
        for y in 0..m.height {
            for x in 0..m.width {
                let mut any = false;
                for yy in y.saturating_sub(r)..=(y + r).min(m.height - 1) {
                    for xx in x.saturating_sub(r)..=(x + r).min(m.width - 1) {
                        any |= m.get(xx, yy);
                    }
                }
                out.set(x, y, any);
            }
        }
        out
    }

    #[test]
    fn dilation_single_pixel_and_oracle() {
        let mut m = BinaryImage::new(960, 60);
        m.set(500, 30, true);
        let d = dilate(&ChangeMask2D {
            mask: m.clone(),
            stage: MaskStage::Raw,
        });
        assert_eq!(d.stage, MaskStage::Dilated);
        assert_eq!(d.mask.count(), 19 * 19);
        assert!(d.mask.get(491, 21) && d.mask.get(509, 39) && !d.mask.get(510, 30));

        m = BinaryImage::new(960, 60);
        m.set(2, 1, true);
        let d = dilate(&ChangeMask2D {
            mask: m.clone(),
            stage: MaskStage::Raw,
        });
        assert_eq!(d.mask, naive_dilate(&m, 9));
        assert_eq!(d.mask.count(), 12 * 11);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut r = BinaryImage::new(40, 30);
        r.bits.iter_mut().for_each(|b| *b = rng.random::<f64>() < 0.02);
        assert_eq!(dilate_square(&r, 3), naive_dilate(&r, 3));
        assert_eq!(
            dilate(&ChangeMask2D {
                mask: BinaryImage::new(40, 30),
                stage: MaskStage::Raw
            })
            .mask
            .count(),
            0
        );
    }

    #[test]
    fn feature_file_round_trip_and_mismatch() {
        let img = noise_image(30, 28, 1);
        let map = extract_features(&img, &FeatureSource::Builtin { patch: 14 }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.clfeat");
        map.save(&p).unwrap();
        assert_eq!(extract_features(&img, &FeatureSource::File(p.clone())).unwrap(), map);
        let bigger = noise_image(60, 28, 1);
        assert!(matches!(
            extract_features(&bigger, &FeatureSource::File(p)),
            Err(Error::FeatureFileMismatch(_))
        ));
        assert!(FeatureMap::from_bytes(b"CLFEAT0xxxxxxxxxxxxxxxxxxx").is_err());
    }
}
