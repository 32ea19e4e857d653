//! Structural similarity with an 11×11 Gaussian window (σ = 1.5) and
//! reflect padding, plus the gradient of its masked mean.
//!
//! The window is applied separably; the gradient runs the exact adjoint of
//! the two 1D passes.

use crate::image::{BinaryImage, Image};
use crate::real::Real;

pub const WINDOW: usize = 11;
pub const RADIUS: usize = WINDOW / 2;
pub const SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
pub fn window_1d() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    for (k, v) in w.iter_mut().enumerate() {
        let d = k as f64 - RADIUS as f64;
        *v = (-(d * d) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Mirror index into `[0, n)` without repeating the edge sample.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

impl Rect {
    fn w(&self) -> usize {
        self.x1 - self.x0
    }
    fn h(&self) -> usize {
        self.y1 - self.y0
    }
}

fn bbox(mask: &BinaryImage) -> Option<Rect> {
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                x0 = x0.min(x);
                x1 = x1.max(x + 1);
                y0 = y0.min(y);
                y1 = y1.max(y + 1);
            }
        }
    }
    (x0 != usize::MAX).then_some(Rect { x0, x1, y0, y1 })
}

/// Windowed first and second moments at every pixel of `out` (window
/// centers), reading sources from the whole image with reflect padding.
struct Stats<T> {
    mu_x: Vec<T>,
    mu_y: Vec<T>,
    exx: Vec<T>,
    eyy: Vec<T>,
    exy: Vec<T>,
}

/// `dst[i] += w · src[i]` for each window tap, with `src` shifted by the tap.
#[inline]
fn convolve_into<T: Real>(dst: &mut [T], src: &[T], w: &[T; WINDOW]) {
    let n = dst.len();
    for (k, &wk) in w.iter().enumerate() {
        for (d, &v) in dst.iter_mut().zip(&src[k..k + n]) {
            *d += wk * v;
        }
    }
}

fn local_stats<T: Real>(x: &[T], y: &[T], width: usize, height: usize, out: Rect) -> Stats<T> {
    let w = window_1d().map(T::lit);
    // rows needed by the vertical pass
    let ry0 = out.y0.saturating_sub(RADIUS);
    let ry1 = (out.y1 + RADIUS).min(height);
    let rows = ry1 - ry0;
    let ow = out.w();
    let padded = ow + 2 * RADIUS;
    let cols: Vec<usize> = (0..padded)
        .map(|j| reflect(out.x0 as isize + j as isize - RADIUS as isize, width))
        .collect();
    let mut h: [Vec<T>; 5] = std::array::from_fn(|_| vec![T::zero(); rows * ow]);
    let mut pad: [Vec<T>; 5] = std::array::from_fn(|_| vec![T::zero(); padded]);
    for yy in ry0..ry1 {
        let row = yy * width;
        for (j, &sx) in cols.iter().enumerate() {
            let (a, b) = (x[row + sx], y[row + sx]);
            pad[0][j] = a;
            pad[1][j] = b;
            pad[2][j] = a * a;
            pad[3][j] = b * b;
            pad[4][j] = a * b;
        }
        let base = (yy - ry0) * ow;
        for q in 0..5 {
            convolve_into(&mut h[q][base..base + ow], &pad[q], &w);
        }
    }
    let n = ow * out.h();
    let mut m: [Vec<T>; 5] = std::array::from_fn(|_| vec![T::zero(); n]);
    for (cy, yy) in (out.y0..out.y1).enumerate() {
        for (k, &wk) in w.iter().enumerate() {
            let sy = reflect(yy as isize + k as isize - RADIUS as isize, height);
            let src = (sy - ry0) * ow;
            for q in 0..5 {
                let (dst, s) = (&mut m[q][cy * ow..(cy + 1) * ow], &h[q][src..src + ow]);
                for (d, &v) in dst.iter_mut().zip(s) {
                    *d += wk * v;
                }
            }
        }
    }
    let [mu_x, mu_y, exx, eyy, exy] = m;
    Stats {
        mu_x,
        mu_y,
        exx,
        eyy,
        exy,
    }
}

/// Splits an interleaved RGB image into three planes.
fn planes<T: Real>(img: &Image<T>) -> [Vec<T>; 3] {
    let mut p: [Vec<T>; 3] = std::array::from_fn(|_| Vec::with_capacity(img.width * img.height));
    for px in img.data.chunks_exact(3) {
        for c in 0..3 {
            p[c].push(px[c]);
        }
    }
    p
}

#[inline]
fn ssim_terms<T: Real>(mx: T, my: T, exx: T, eyy: T, exy: T) -> (T, T, T, T, T) {
    let two = T::lit(2.0);
    let sxx = exx - mx * mx;
    let syy = eyy - my * my;
    let sxy = exy - mx * my;
    let a1 = two * mx * my + T::lit(C1);
    let a2 = two * sxy + T::lit(C2);
    let b1 = mx * mx + my * my + T::lit(C1);
    let b2 = sxx + syy + T::lit(C2);
    (a1, a2, b1, b2, a1 * a2 / (b1 * b2))
}

/// SSIM at every pixel and channel (interleaved like the input).
pub fn ssim_map<T: Real>(a: &Image<T>, b: &Image<T>) -> Vec<T> {
    assert!(a.same_size(b), "ssim_map on images of different size");
    let full = Rect {
        x0: 0,
        x1: a.width,
        y0: 0,
        y1: a.height,
    };
    let pa = planes(a);
    let pb = planes(b);
    let mut out = vec![T::zero(); a.data.len()];
    for c in 0..3 {
        let s = local_stats(&pa[c], &pb[c], a.width, a.height, full);
        for i in 0..a.width * a.height {
            out[i * 3 + c] = ssim_terms(s.mu_x[i], s.mu_y[i], s.exx[i], s.eyy[i], s.exy[i]).4;
        }
    }
    out
}

/// Mean SSIM over all pixels and channels.
pub fn mean_ssim<T: Real>(a: &Image<T>, b: &Image<T>) -> f64 {
    let m = ssim_map(a, b);
    m.iter().map(|v| v.to_f64()).sum::<f64>() / m.len() as f64
}

/// Mean SSIM of `x` against `y` over pixels in `mask` (all channels), and
/// its gradient w.r.t. `x`. The gradient is returned for every pixel; the
/// caller decides what to keep outside the mask.
pub fn masked_ssim_grad<T: Real>(x: &Image<T>, y: &Image<T>, mask: &BinaryImage) -> (T, Image<T>) {
    let (w, h) = (x.width, x.height);
    let mut grad = Image::new(w, h);
    let Some(out) = bbox(mask) else {
        return (T::zero(), grad);
    };
    let count = mask.count();
    let norm = T::one() / T::lit((3 * count) as f64);
    let px = planes(x);
    let py = planes(y);
    let win = window_1d().map(T::lit);
    let two = T::lit(2.0);
    let ow = out.w();
    let mut total = T::zero();

    for c in 0..3 {
        let s = local_stats(&px[c], &py[c], w, h, out);
        // dS/dμx, dS/dE[x²], dS/dE[xy] at masked window centers
        let mut d: [Vec<T>; 3] = std::array::from_fn(|_| vec![T::zero(); ow * out.h()]);
        for (cy, yy) in (out.y0..out.y1).enumerate() {
            for (cx, xx) in (out.x0..out.x1).enumerate() {
                if !mask.get(xx, yy) {
                    continue;
                }
                let i = cy * ow + cx;
                let (mx, my) = (s.mu_x[i], s.mu_y[i]);
                let (a1, a2, b1, b2, ssim) = ssim_terms(mx, my, s.exx[i], s.eyy[i], s.exy[i]);
                total += ssim;
                let b12 = b1 * b2;
                let d_mu = (two * my * (a2 - a1) - ssim * two * mx * (b2 - b1)) / b12;
                let d_exx = -ssim / b2;
                let d_exy = two * a1 / b12;
                d[0][i] = d_mu * norm;
                d[1][i] = d_exx * norm;
                d[2][i] = d_exy * norm;
            }
        }
        // adjoint of the vertical pass into the row buffer
        let ry0 = out.y0.saturating_sub(RADIUS);
        let ry1 = (out.y1 + RADIUS).min(h);
        let mut hadj: [Vec<T>; 3] = std::array::from_fn(|_| vec![T::zero(); (ry1 - ry0) * ow]);
        for (cy, yy) in (out.y0..out.y1).enumerate() {
            for (k, &wk) in win.iter().enumerate() {
                let sy = reflect(yy as isize + k as isize - RADIUS as isize, h);
                let dst = (sy - ry0) * ow;
                for q in 0..3 {
                    let (t, s) = (&mut hadj[q][dst..dst + ow], &d[q][cy * ow..(cy + 1) * ow]);
                    for (a, &v) in t.iter_mut().zip(s) {
                        *a += wk * v;
                    }
                }
            }
        }
        // adjoint of the horizontal pass into pixels
        let padded = ow + 2 * RADIUS;
        let cols: Vec<usize> = (0..padded)
            .map(|j| reflect(out.x0 as isize + j as isize - RADIUS as isize, w))
            .collect();
        let mut padj: [Vec<T>; 3] = std::array::from_fn(|_| vec![T::zero(); padded]);
        for yy in ry0..ry1 {
            let base = (yy - ry0) * ow;
            for q in 0..3 {
                padj[q].fill(T::zero());
                let src = &hadj[q][base..base + ow];
                for (k, &wk) in win.iter().enumerate() {
                    for (a, &v) in padj[q][k..k + ow].iter_mut().zip(src) {
                        *a += wk * v;
                    }
                }
            }
            let row = yy * w;
            for (j, &sx) in cols.iter().enumerate() {
                let q = row + sx;
                grad.data[q * 3 + c] += padj[0][j] + two * px[c][q] * padj[1][j] + py[c][q] * padj[2][j];
            }
        }
    }
    (total * norm, grad)
}
