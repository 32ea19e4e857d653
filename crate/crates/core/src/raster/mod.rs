//! Deterministic tile-based splatting renderer with an analytic backward
//! pass restricted to a tile mask.
//!
//! Work is split per 16×16 tile. Inside a tile the pixel loop is sequential
//! and tiles are reduced in row-major order, so results do not depend on the
//! number of worker threads.

pub mod project;
pub mod tiles;

use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::{check_index_set, Gaussian, GaussianScene};
use crate::image::Image;
use crate::real::Real;

pub use project::{project_gaussian, Splat2D, COV2D_FLOOR};
pub use tiles::{bin_tiles, compute_tile_mask, splat_tile_rect, TileMask, TileRect, TILE};

use project::{project_backward, ScreenGrad};
use tiles::Frame;

/// Upper clamp on per-splat alpha.
pub const ALPHA_MAX: f64 = 0.999;
/// Splats with alpha below this are skipped.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Compositing stops before transmittance would fall below this.
pub const TRANSMITTANCE_MIN: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct RenderOutput<T = f32> {
    pub image: Image<T>,
    /// Final transmittance per pixel.
    pub transmittance: Vec<T>,
    /// Number of splats composited per pixel.
    pub contrib_counts: Vec<u32>,
    /// Tiles that were rendered; pixels elsewhere are black.
    pub tile_mask: TileMask,
    /// Gaussian evaluations performed in each tile.
    pub tile_evaluations: Vec<u64>,
}

impl<T: Real> RenderOutput<T> {
    pub fn pixel_active(&self, x: usize, y: usize) -> bool {
        self.tile_mask.get(x / TILE, y / TILE)
    }
}

/// Gradients for a subset of a scene's Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrads<T = f32> {
    /// Sorted scene indices.
    pub indices: Vec<usize>,
    /// Parameter gradients, aligned with `indices`.
    pub grads: Vec<Gaussian<T>>,
    /// Norm of the gradient w.r.t. the splat center in normalized device
    /// coordinates, used as the densification statistic.
    pub screen_grad: Vec<T>,
}

impl<T: Real> SparseGrads<T> {
    pub fn empty() -> Self {
        SparseGrads {
            indices: Vec::new(),
            grads: Vec::new(),
            screen_grad: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// One splat's attributes as the pixel loop reads them.
#[derive(Clone, Copy)]
struct SplatRec<T> {
    mx: T,
    my: T,
    ca: T,
    cb: T,
    cc: T,
    op: T,
    /// Powers below this certainly give alpha under `ALPHA_MIN`, so `exp` is skipped.
    cut: T,
    col: [T; 3],
}

impl<T: Real> SplatRec<T> {
    #[inline(always)]
    fn power(&self, px: T, py: T) -> (T, T, T) {
        let dx = px - self.mx;
        let dy = py - self.my;
        let half = T::lit(0.5);
        (-half * (self.ca * dx * dx + self.cc * dy * dy) - self.cb * dx * dy, dx, dy)
    }
}

/// Depth-ordered splats of one tile.
struct TileSplats<T> {
    ids: Vec<u32>,
    recs: Vec<SplatRec<T>>,
}

impl<T: Real> TileSplats<T> {
    fn gather(frame: &Frame<T>, list: &[u32]) -> Self {
        let recs = list
            .iter()
            .map(|&i| {
                let (p, _) = frame.splats[i as usize].as_ref().expect("binned splat is visible");
                SplatRec {
                    mx: p.mean[0],
                    my: p.mean[1],
                    ca: p.conic[0],
                    cb: p.conic[1],
                    cc: p.conic[2],
                    op: p.opacity,
                    cut: T::lit((ALPHA_MIN / p.opacity.to_f64()).ln() - 1e-3),
                    col: p.color,
                }
            })
            .collect();
        TileSplats {
            ids: list.to_vec(),
            recs,
        }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }
}

/// One composited splat at a pixel.
#[derive(Clone, Copy)]
struct Hit<T> {
    slot: u32,
    alpha: T,
    t_before: T,
    clamped: bool,
}

/// Front-to-back compositing of one pixel. Returns color, final
/// transmittance, composited count and Gaussian evaluations.
#[inline(always)]
fn composite<T: Real>(ts: &TileSplats<T>, px: T, py: T, mut on_hit: impl FnMut(Hit<T>)) -> ([T; 3], T, u32, u64) {
    let amax = T::lit(ALPHA_MAX);
    let amin = T::lit(ALPHA_MIN);
    let tmin = T::lit(TRANSMITTANCE_MIN);
    let mut tr = T::one();
    let mut c = [T::zero(); 3];
    let mut count = 0u32;
    let mut evals = 0u64;
    for (s, r) in ts.recs.iter().enumerate() {
        evals += 1;
        let (power, _, _) = r.power(px, py);
        if power > T::zero() || power < r.cut {
            continue;
        }
        let raw = r.op * power.exp();
        let clamped = raw > amax;
        let alpha = if clamped { amax } else { raw };
        if alpha < amin {
            continue;
        }
        let next = tr * (T::one() - alpha);
        if next < tmin {
            break;
        }
        on_hit(Hit {
            slot: s as u32,
            alpha,
            t_before: tr,
            clamped,
        });
        let w = alpha * tr;
        let col = r.col;
        c[0] += col[0] * w;
        c[1] += col[1] * w;
        c[2] += col[2] * w;
        tr = next;
        count += 1;
    }
    (c, tr, count, evals)
}

fn tile_pixels(tile: usize, tiles_x: usize, width: usize, height: usize) -> (usize, usize, usize, usize) {
    let tx = tile % tiles_x;
    let ty = tile / tiles_x;
    let x0 = tx * TILE;
    let y0 = ty * TILE;
    (x0, (x0 + TILE).min(width), y0, (y0 + TILE).min(height))
}

/// A scene projected and binned for one camera, ready for forward and
/// backward passes over the selected tiles.
pub struct PreparedView<'a, T: Real> {
    gaussians: &'a [Gaussian<T>],
    frame: Frame<T>,
    bins: Vec<Vec<u32>>,
    mask: TileMask,
    /// Tiles rendered in full and how far into the neighboring tiles the
    /// forward pass reaches; `None` renders every active tile in full.
    core: Option<(TileMask, usize)>,
    width: usize,
    height: usize,
}

impl<'a, T: Real> PreparedView<'a, T> {
    /// Projects and bins `gaussians`. With `mask = None` every tile is active.
    pub fn new(gaussians: &'a [Gaussian<T>], camera: &Camera, mask: Option<&TileMask>) -> Result<Self> {
        if let Some(m) = mask {
            m.check_dims(camera.width, camera.height)?;
        }
        let frame = Frame::project(gaussians, camera);
        let bins = frame.bin(mask);
        let mask = mask.cloned().unwrap_or_else(|| TileMask::for_camera(camera, true));
        Ok(PreparedView {
            gaussians,
            frame,
            bins,
            mask,
            core: None,
            width: camera.width,
            height: camera.height,
        })
    }

    /// Prepares the tiles of `core` plus a margin of `reach` pixels around
    /// them (at most one tile). Only those pixels are rendered; backward
    /// works as with the ring of neighboring tiles as the mask.
    pub fn with_margin(gaussians: &'a [Gaussian<T>], camera: &Camera, core: &TileMask, reach: usize) -> Result<Self> {
        core.check_dims(camera.width, camera.height)?;
        let reach = reach.min(TILE);
        let mut view = Self::new(gaussians, camera, Some(&core.dilated()))?;
        view.core = Some((core.clone(), reach));
        Ok(view)
    }

    /// Whether pixel `(x, y)` of `tile` is rendered.
    fn renders(&self, tile: usize, x: usize, y: usize) -> bool {
        let Some((core, reach)) = &self.core else {
            return true;
        };
        let (tx, ty) = (tile % core.tiles_x, tile / core.tiles_x);
        if core.get(tx, ty) {
            return true;
        }
        // Chebyshev distance from the pixel to each core neighbor
        let dist = |p: usize, t: usize| {
            let (lo, hi) = (t * TILE, t * TILE + TILE - 1);
            if p < lo {
                lo - p
            } else {
                p.saturating_sub(hi)
            }
        };
        for ny in ty.saturating_sub(1)..=(ty + 1).min(core.tiles_y - 1) {
            for nx in tx.saturating_sub(1)..=(tx + 1).min(core.tiles_x - 1) {
                if core.get(nx, ny) && dist(x, nx).max(dist(y, ny)) <= *reach {
                    return true;
                }
            }
        }
        false
    }

    pub fn tile_mask(&self) -> &TileMask {
        &self.mask
    }

    fn active_tiles(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&t| self.mask.bits[t]).collect()
    }

    pub fn render(&self) -> RenderOutput<T> {
        let (w, h) = (self.width, self.height);
        let tiles_x = self.mask.tiles_x;
        let half = T::lit(0.5);
        let results: Vec<(usize, Vec<[T; 3]>, Vec<T>, Vec<u32>, u64)> = self
            .active_tiles()
            .into_par_iter()
            .map(|tile| {
                let ts = TileSplats::gather(&self.frame, &self.bins[tile]);
                let (x0, x1, y0, y1) = tile_pixels(tile, tiles_x, w, h);
                let n = (x1 - x0) * (y1 - y0);
                let mut cols = Vec::with_capacity(n);
                let mut trs = Vec::with_capacity(n);
                let mut cnts = Vec::with_capacity(n);
                let mut evals = 0u64;
                for y in y0..y1 {
                    let py = T::lit(y as f64) + half;
                    for x in x0..x1 {
                        if !self.renders(tile, x, y) {
                            cols.push([T::zero(); 3]);
                            trs.push(T::one());
                            cnts.push(0);
                            continue;
                        }
                        let px = T::lit(x as f64) + half;
                        let (c, tr, k, e) = composite(&ts, px, py, |_| {});
                        cols.push(c);
                        trs.push(tr);
                        cnts.push(k);
                        evals += e;
                    }
                }
                (tile, cols, trs, cnts, evals)
            })
            .collect();

        let mut image = Image::new(w, h);
        let mut transmittance = vec![T::one(); w * h];
        let mut contrib_counts = vec![0u32; w * h];
        let mut tile_evaluations = vec![0u64; self.mask.len()];
        for (tile, cols, trs, cnts, evals) in results {
            let (x0, x1, y0, y1) = tile_pixels(tile, tiles_x, w, h);
            let mut k = 0;
            for y in y0..y1 {
                for x in x0..x1 {
                    image.set_pixel(x, y, cols[k]);
                    transmittance[y * w + x] = trs[k];
                    contrib_counts[y * w + x] = cnts[k];
                    k += 1;
                }
            }
            tile_evaluations[tile] = evals;
        }
        RenderOutput {
            image,
            transmittance,
            contrib_counts,
            tile_mask: self.mask.clone(),
            tile_evaluations,
        }
    }

    /// Gradients of `Σ grad_image · image` w.r.t. the Gaussians in `active_set`.
    ///
    /// Only pixels of active tiles are visited. Every active Gaussian's
    /// footprint must lie inside active tiles, otherwise the result would
    /// miss contributions and [`Error::MaskTooSmall`] is returned.
    pub fn backward(&self, grad_image: &Image<T>, active_set: &[usize]) -> Result<SparseGrads<T>> {
        let (w, h) = (self.width, self.height);
        if grad_image.width != w || grad_image.height != h {
            return Err(Error::DimensionMismatch(format!(
                "gradient image {}x{} vs camera {w}x{h}",
                grad_image.width, grad_image.height
            )));
        }
        check_index_set(active_set, self.gaussians.len())?;
        if active_set.is_empty() {
            return Ok(SparseGrads::empty());
        }
        let mut slot_of = vec![u32::MAX; self.gaussians.len()];
        for (k, &i) in active_set.iter().enumerate() {
            slot_of[i] = k as u32;
            if let Some((_, r)) = &self.frame.splats[i] {
                if r.tiles().any(|(tx, ty)| !self.mask.get(tx, ty)) {
                    return Err(Error::MaskTooSmall(i));
                }
            }
        }

        let tiles_x = self.mask.tiles_x;
        let half = T::lit(0.5);
        let per_tile: Vec<Vec<(u32, ScreenGrad<T>)>> = self
            .active_tiles()
            .into_par_iter()
            .map(|tile| {
                let list = &self.bins[tile];
                let slots: Vec<u32> = list.iter().map(|&i| slot_of[i as usize]).collect();
                if slots.iter().all(|&s| s == u32::MAX) {
                    return Vec::new();
                }
                let ts = TileSplats::gather(&self.frame, list);
                let mut acc = vec![ScreenGrad::<T>::default(); ts.len()];
                let mut hits: Vec<Hit<T>> = Vec::with_capacity(64);
                let (x0, x1, y0, y1) = tile_pixels(tile, tiles_x, w, h);
                for y in y0..y1 {
                    let py = T::lit(y as f64) + half;
                    for x in x0..x1 {
                        let gi = (y * w + x) * 3;
                        let g = [grad_image.data[gi], grad_image.data[gi + 1], grad_image.data[gi + 2]];
                        if g.iter().all(|v| *v == T::zero()) {
                            continue;
                        }
                        let px = T::lit(x as f64) + half;
                        hits.clear();
                        composite(&ts, px, py, |hit| hits.push(hit));
                        let mut behind = [T::zero(); 3];
                        for hit in hits.iter().rev() {
                            let s = hit.slot as usize;
                            let r = &ts.recs[s];
                            let col = r.col;
                            let wgt = hit.alpha * hit.t_before;
                            if slots[s] != u32::MAX {
                                let a = &mut acc[s];
                                a.color[0] += wgt * g[0];
                                a.color[1] += wgt * g[1];
                                a.color[2] += wgt * g[2];
                                if !hit.clamped {
                                    let dot_c = col[0] * g[0] + col[1] * g[1] + col[2] * g[2];
                                    let dot_b = behind[0] * g[0] + behind[1] * g[1] + behind[2] * g[2];
                                    let dl_dalpha = hit.t_before * dot_c - dot_b / (T::one() - hit.alpha);
                                    let (_, dx, dy) = r.power(px, py);
                                    let gauss = hit.alpha / r.op;
                                    a.opacity += dl_dalpha * gauss;
                                    let dl_dpower = dl_dalpha * hit.alpha;
                                    a.mean[0] += dl_dpower * (r.ca * dx + r.cb * dy);
                                    a.mean[1] += dl_dpower * (r.cc * dy + r.cb * dx);
                                    a.conic[0] += dl_dpower * (-half * dx * dx);
                                    a.conic[1] += dl_dpower * (-dx * dy);
                                    a.conic[2] += dl_dpower * (-half * dy * dy);
                                }
                            }
                            behind[0] += col[0] * wgt;
                            behind[1] += col[1] * wgt;
                            behind[2] += col[2] * wgt;
                        }
                    }
                }
                (0..ts.len())
                    .filter(|&s| slots[s] != u32::MAX)
                    .map(|s| (slots[s], acc[s]))
                    .collect()
            })
            .collect();

        let mut screen = vec![ScreenGrad::<T>::default(); active_set.len()];
        for tile in per_tile {
            for (slot, g) in tile {
                screen[slot as usize].add(&g);
            }
        }
        let half_w = T::lit(w as f64 * 0.5);
        let half_h = T::lit(h as f64 * 0.5);
        let grads = active_set
            .iter()
            .zip(&screen)
            .map(|(&i, sg)| project_backward(&self.frame.cam, &self.gaussians[i], sg))
            .collect();
        let screen_grad = screen
            .iter()
            .map(|sg| {
                let a = sg.mean[0] * half_w;
                let b = sg.mean[1] * half_h;
                (a * a + b * b).sqrt()
            })
            .collect();
        Ok(SparseGrads {
            indices: active_set.to_vec(),
            grads,
            screen_grad,
        })
    }
}

/// Renders `scene`; with a tile mask only active tiles are composited.
pub fn render<T: Real>(scene: &GaussianScene<T>, camera: &Camera, tile_mask: Option<&TileMask>) -> Result<RenderOutput<T>> {
    Ok(PreparedView::new(&scene.gaussians, camera, tile_mask)?.render())
}

/// Gradients of `Σ grad_image · render(scene)` for the Gaussians in `active_set`.
pub fn backward<T: Real>(
    scene: &GaussianScene<T>,
    camera: &Camera,
    tile_mask: Option<&TileMask>,
    grad_image: &Image<T>,
    active_set: &[usize],
) -> Result<SparseGrads<T>> {
    PreparedView::new(&scene.gaussians, camera, tile_mask)?.backward(grad_image, active_set)
}

/// Per-pixel list of `(gaussian index, clamped)` for every composited splat.
///
/// Finite-difference checks use this to confirm a perturbation did not
/// change which splats contribute where.
#[doc(hidden)]
pub fn contribution_trace<T: Real>(scene: &GaussianScene<T>, camera: &Camera) -> Vec<Vec<(u32, bool)>> {
    let view = PreparedView::new(&scene.gaussians, camera, None).expect("full mask always fits");
    let (w, h) = (camera.width, camera.height);
    let mut out = vec![Vec::new(); w * h];
    let half = T::lit(0.5);
    for tile in 0..view.mask.len() {
        let ts = TileSplats::gather(&view.frame, &view.bins[tile]);
        let (x0, x1, y0, y1) = tile_pixels(tile, view.mask.tiles_x, w, h);
        for y in y0..y1 {
            for x in x0..x1 {
                let px = T::lit(x as f64) + half;
                let py = T::lit(y as f64) + half;
                let cell = &mut out[y * w + x];
                composite(&ts, px, py, |hit| cell.push((ts.ids[hit.slot as usize], hit.clamped)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam32() -> Camera {
        Camera::identity_pose(40.0, 40.0, 16.0, 16.0, 32, 32).unwrap()
    }

    #[test]
    fn margin_render_matches_full_within_reach() {
        let gs = (0..30)
            .map(|i| {
                let a = i as f64 * 0.9;
                Gaussian::isotropic([0.6 * a.cos(), 0.5 * a.sin(), 3.0 + 0.02 * i as f64], 0.25, 0.6, [0.7, 0.2, 0.4])
            })
            .collect();
        let scene = GaussianScene::<f64>::new(gs);
        let cam = Camera::identity_pose(50.0, 50.0, 40.0, 32.0, 80, 64).unwrap();
        let mut core = TileMask::for_camera(&cam, false);
        core.set(2, 1, true);
        core.set(3, 2, true);
        let full = render(&scene, &cam, None).unwrap().image;
        let part = PreparedView::with_margin(&scene.gaussians, &cam, &core, 10).unwrap().render().image;
        let near = |x: usize, y: usize| {
            (0..core.tiles_y).any(|ty| {
                (0..core.tiles_x).any(|tx| {
                    let d = |p: usize, t: usize| (t * TILE).saturating_sub(p).max(p.saturating_sub(t * TILE + TILE - 1));
                    core.get(tx, ty) && d(x, tx).max(d(y, ty)) <= 10
                })
            })
        };
        let mut rendered = 0;
        for y in 0..64 {
            for x in 0..80 {
                if near(x, y) {
                    assert_eq!(part.pixel(x, y), full.pixel(x, y));
                    rendered += 1;
                } else {
                    assert_eq!(part.pixel(x, y), [0.0; 3]);
                }
            }
        }
        assert_eq!(rendered, 36 * 36 + 36 * 36 - 20 * 20);
    }

    #[test]
    fn empty_scene_is_black() {
        let out = render(&GaussianScene::<f32>::default(), &cam32(), None).unwrap();
        assert!(out.image.data.iter().all(|&v| v == 0.0));
        assert!(out.transmittance.iter().all(|&t| t == 1.0));
    }

    #[test]
    fn single_splat_matches_scalar_oracle() {
        let g = Gaussian::<f64>::new([0.01, -0.02, 2.0], [(-2.5f64); 3], 1.2, [0.9, 0.4, 0.1]);
        let scene = GaussianScene::new(vec![g]);
        let cam = cam32();
        let out = render(&scene, &cam, None).unwrap();
        // scalar oracle: isotropic Σ = s²I, so the screen covariance is s²·J·Jᵀ
        let (x3, y3, z3) = (0.01f64, -0.02f64, 2.0f64);
        let s2 = (-5.0f64).exp();
        let f = 40.0;
        let j = [[f / z3, 0.0, -f * x3 / (z3 * z3)], [0.0, f / z3, -f * y3 / (z3 * z3)]];
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cxx = s2 * dot(j[0], j[0]) + COV2D_FLOOR;
        let cxy = s2 * dot(j[0], j[1]);
        let cyy = s2 * dot(j[1], j[1]) + COV2D_FLOOR;
        let det = cxx * cyy - cxy * cxy;
        let u = f * x3 / z3 + 16.0;
        let v = f * y3 / z3 + 16.0;
        let op = 1.0 / (1.0 + (-1.2f64).exp());
        for (x, y) in [(16usize, 16usize), (15, 15), (17, 14)] {
            let dx = x as f64 + 0.5 - u;
            let dy = y as f64 + 0.5 - v;
            let q = (cyy * dx * dx - 2.0 * cxy * dx * dy + cxx * dy * dy) / det;
            let alpha = (op * (-0.5 * q).exp()).min(ALPHA_MAX);
            let px = out.image.pixel(x, y);
            assert!((px[0] - 0.9 * alpha).abs() < 1e-6);
            assert!((px[1] - 0.4 * alpha).abs() < 1e-6);
            assert!((px[2] - 0.1 * alpha).abs() < 1e-6);
        }
    }

    #[test]
    fn full_mask_equals_no_mask() {
        let scene = GaussianScene::new(vec![
            Gaussian::<f32>::isotropic([0.1, 0.0, 2.0], 0.1, 0.7, [1.0, 0.0, 0.0]),
            Gaussian::<f32>::isotropic([-0.1, 0.1, 3.0], 0.2, 0.5, [0.0, 1.0, 0.0]),
        ]);
        let cam = cam32();
        let a = render(&scene, &cam, None).unwrap();
        let b = render(&scene, &cam, Some(&TileMask::for_camera(&cam, true))).unwrap();
        assert_eq!(a.image.data, b.image.data);
    }

    #[test]
    fn mask_dimension_mismatch() {
        let m = TileMask::new(64, 64, true);
        assert!(matches!(
            render(&GaussianScene::<f32>::default(), &cam32(), Some(&m)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn empty_active_set() {
        let scene = GaussianScene::new(vec![Gaussian::<f32>::isotropic([0.0, 0.0, 2.0], 0.1, 0.7, [1.0; 3])]);
        let g = Image::filled(32, 32, [1.0f32; 3]);
        assert!(backward(&scene, &cam32(), None, &g, &[]).unwrap().is_empty());
    }

    #[test]
    fn too_small_mask_rejected() {
        let scene = GaussianScene::new(vec![Gaussian::<f32>::isotropic([0.0, 0.0, 2.0], 0.1, 0.7, [1.0; 3])]);
        let cam = cam32();
        let mut m = compute_tile_mask(&scene, &[0], &cam);
        let first = m.bits.iter().position(|&b| b).unwrap();
        m.bits[first] = false;
        let g = Image::filled(32, 32, [1.0f32; 3]);
        assert!(matches!(backward(&scene, &cam, Some(&m), &g, &[0]), Err(Error::MaskTooSmall(0))));
    }

    #[test]
    fn inactive_tiles_untouched() {
        let scene = GaussianScene::new(vec![
            Gaussian::<f32>::isotropic([-0.3, -0.3, 2.0], 0.05, 0.7, [1.0; 3]),
            Gaussian::<f32>::isotropic([0.3, 0.3, 2.0], 0.05, 0.7, [1.0; 3]),
        ]);
        let cam = Camera::identity_pose(40.0, 40.0, 32.0, 32.0, 64, 64).unwrap();
        let m = compute_tile_mask(&scene, &[0], &cam);
        let out = render(&scene, &cam, Some(&m)).unwrap();
        for t in 0..m.len() {
            if !m.bits[t] {
                assert_eq!(out.tile_evaluations[t], 0);
            }
        }
        for y in 0..64 {
            for x in 0..64 {
                if !out.pixel_active(x, y) {
                    assert_eq!(out.image.pixel(x, y), [0.0; 3]);
                }
            }
        }
    }
}
