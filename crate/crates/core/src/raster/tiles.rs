//! 16×16 tile grid, per-tile depth ordering, and the boolean render mask.

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::GaussianScene;
use crate::image::BinaryImage;
use crate::real::Real;

use super::project::{project, CameraT, Projected, Splat2D};

/// Tile side in pixels.
pub const TILE: usize = 16;

/// One boolean per 16×16 tile, row-major (`tiles_y` rows of `tiles_x`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileMask {
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub bits: Vec<bool>,
}

impl TileMask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        let tiles_x = width.div_ceil(TILE);
        let tiles_y = height.div_ceil(TILE);
        TileMask {
            tiles_x,
            tiles_y,
            bits: vec![value; tiles_x * tiles_y],
        }
    }

    pub fn for_camera(camera: &Camera, value: bool) -> Self {
        Self::new(camera.width, camera.height, value)
    }

    #[inline]
    pub fn get(&self, tx: usize, ty: usize) -> bool {
        self.bits[ty * self.tiles_x + tx]
    }

    #[inline]
    pub fn set(&mut self, tx: usize, ty: usize, v: bool) {
        self.bits[ty * self.tiles_x + tx] = v;
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn active_fraction(&self) -> f64 {
        self.active_count() as f64 / self.bits.len().max(1) as f64
    }

    pub fn matches(&self, width: usize, height: usize) -> bool {
        self.tiles_x == width.div_ceil(TILE) && self.tiles_y == height.div_ceil(TILE)
    }

    pub(crate) fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.matches(width, height) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "tile mask {}x{} does not fit a {width}x{height} image",
                self.tiles_x, self.tiles_y
            )))
        }
    }

    /// Pixel raster: true for every pixel inside an active tile.
    pub fn to_pixel_mask(&self, width: usize, height: usize) -> BinaryImage {
        let mut m = BinaryImage::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.set(x, y, self.get(x / TILE, y / TILE));
            }
        }
        m
    }

    /// This mask grown by one tile in every direction (diagonals included).
    pub fn dilated(&self) -> TileMask {
        let mut out = self.clone();
        for ty in 0..self.tiles_y {
            for tx in 0..self.tiles_x {
                if !self.get(tx, ty) {
                    continue;
                }
                for y in ty.saturating_sub(1)..(ty + 2).min(self.tiles_y) {
                    for x in tx.saturating_sub(1)..(tx + 2).min(self.tiles_x) {
                        out.set(x, y, true);
                    }
                }
            }
        }
        out
    }

    pub fn union_with(&mut self, other: &TileMask) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }
}

/// Inclusive tile index range covered by a splat's 3σ box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileRect {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl TileRect {
    pub fn tiles(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..=self.y1).flat_map(move |ty| (self.x0..=self.x1).map(move |tx| (tx, ty)))
    }
}

/// Tiles overlapped by the box `center ± extent`, or `None` when it misses the image.
pub(crate) fn tile_rect<T: Real>(center: [T; 2], extent: [T; 2], width: usize, height: usize) -> Option<TileRect> {
    let tiles_x = width.div_ceil(TILE) as i64;
    let tiles_y = height.div_ceil(TILE) as i64;
    let lo_x = (center[0] - extent[0]).to_f64();
    let hi_x = (center[0] + extent[0]).to_f64();
    let lo_y = (center[1] - extent[1]).to_f64();
    let hi_y = (center[1] + extent[1]).to_f64();
    if !(lo_x.is_finite() && hi_x.is_finite() && lo_y.is_finite() && hi_y.is_finite()) {
        return None;
    }
    if hi_x < 0.0 || hi_y < 0.0 || lo_x >= width as f64 || lo_y >= height as f64 {
        return None;
    }
    let t = TILE as f64;
    let x0 = ((lo_x / t).floor() as i64).clamp(0, tiles_x - 1) as usize;
    let x1 = ((hi_x / t).floor() as i64).clamp(0, tiles_x - 1) as usize;
    let y0 = ((lo_y / t).floor() as i64).clamp(0, tiles_y - 1) as usize;
    let y1 = ((hi_y / t).floor() as i64).clamp(0, tiles_y - 1) as usize;
    Some(TileRect { x0, x1, y0, y1 })
}

/// 3σ tile rectangle of a public splat.
pub fn splat_tile_rect<T: Real>(s: &Splat2D<T>, width: usize, height: usize) -> Option<TileRect> {
    let three = T::lit(3.0);
    let extent = [three * s.cov2d[0][0].sqrt(), three * s.cov2d[1][1].sqrt()];
    tile_rect(s.mean2d, extent, width, height)
}

/// Per-tile splat lists sorted front to back; ties broken by splat index.
pub fn bin_tiles<T: Real>(splats: &[Splat2D<T>], width: usize, height: usize) -> Vec<Vec<usize>> {
    let grid = TileMask::new(width, height, true);
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); grid.len()];
    for (i, s) in splats.iter().enumerate() {
        if let Some(r) = splat_tile_rect(s, width, height) {
            for (tx, ty) in r.tiles() {
                bins[ty * grid.tiles_x + tx].push(i);
            }
        }
    }
    for b in bins.iter_mut() {
        b.sort_by(|&a, &c| splats[a].depth.partial_cmp(&splats[c].depth).unwrap().then(a.cmp(&c)));
    }
    bins
}

/// Projected scene for one camera: visible splats and their tile rectangles.
pub(crate) struct Frame<T: Real> {
    pub cam: CameraT<T>,
    pub splats: Vec<Option<(Projected<T>, TileRect)>>,
}

impl<T: Real> Frame<T> {
    pub fn project(gaussians: &[crate::gaussian::Gaussian<T>], camera: &Camera) -> Self {
        let cam = CameraT::new(camera);
        let splats = gaussians
            .iter()
            .map(|g| {
                let p = project(&cam, g)?;
                let r = tile_rect(p.mean, p.extent, camera.width, camera.height)?;
                Some((p, r))
            })
            .collect();
        Frame { cam, splats }
    }

    /// Depth-sorted index lists for tiles selected by `mask` (all tiles if `None`).
    pub fn bin(&self, mask: Option<&TileMask>) -> Vec<Vec<u32>> {
        let tiles_x = self.cam.width.div_ceil(TILE);
        let tiles_y = self.cam.height.div_ceil(TILE);
        let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
        for (i, s) in self.splats.iter().enumerate() {
            let Some((_, r)) = s else { continue };
            for ty in r.y0..=r.y1 {
                for tx in r.x0..=r.x1 {
                    let t = ty * tiles_x + tx;
                    if mask.is_none_or(|m| m.bits[t]) {
                        bins[t].push(i as u32);
                    }
                }
            }
        }
        for b in bins.iter_mut() {
            b.sort_by(|&a, &c| {
                let da = self.splats[a as usize].as_ref().unwrap().0.depth;
                let dc = self.splats[c as usize].as_ref().unwrap().0.depth;
                da.partial_cmp(&dc).unwrap().then(a.cmp(&c))
            });
        }
        bins
    }
}

/// Marks every tile overlapped by the 3σ box of at least one active Gaussian.
pub fn compute_tile_mask<T: Real>(scene: &GaussianScene<T>, active_set: &[usize], camera: &Camera) -> TileMask {
    let cam = CameraT::new(camera);
    let mut mask = TileMask::for_camera(camera, false);
    for &i in active_set {
        let Some(g) = scene.gaussians.get(i) else { continue };
        let Some(p) = project(&cam, g) else { continue };
        if let Some(r) = tile_rect(p.mean, p.extent, camera.width, camera.height) {
            for (tx, ty) in r.tiles() {
                mask.set(tx, ty, true);
            }
        }
    }
    mask
}
