use crate::error::{Error, Result};
use crate::image::{BinaryImage, Image};
use crate::real::Real;
use crate::change2d::dilate_square;
use crate::ssim::{masked_ssim_grad, RADIUS};

/// `(1 − λ)·L1 + λ·(1 − SSIM)` as seen by the pixels in `pixel_mask`.
///
/// Both terms are sums divided by the image's pixel count, so they are the
/// share of the full-image loss that depends on masked pixels: L1 over masked
/// pixels, SSIM over windows centered within [`RADIUS`] of the mask. The
/// returned gradient is exactly the full-image gradient on masked pixels and
/// zero elsewhere, provided `rendered` is correct within `2·RADIUS` of the
/// mask (windows there read unmasked pixels).
pub fn photometric_loss<T: Real>(
    rendered: &Image<T>,
    target: &Image<T>,
    pixel_mask: &BinaryImage,
    lambda_dssim: f64,
) -> Result<(T, Image<T>)> {
    let (w, h) = (rendered.width, rendered.height);
    if !rendered.same_size(target) || w != pixel_mask.width || h != pixel_mask.height {
        return Err(Error::DimensionMismatch(format!(
            "rendered {}x{}, target {}x{}, mask {}x{}",
            w, h, target.width, target.height, pixel_mask.width, pixel_mask.height
        )));
    }
    let Some((x0, x1, y0, y1)) = pixel_mask.bounds() else {
        return Err(Error::EmptyMask);
    };
    let full = pixel_mask.bits.iter().all(|&b| b);
    // everything the loss reads lies within 2·RADIUS of the mask; reflection
    // only happens where the window meets the true image border
    let m = 2 * RADIUS;
    let (x0, y0) = (x0.saturating_sub(m), y0.saturating_sub(m));
    let (x1, y1) = ((x1 + m).min(w), (y1 + m).min(h));
    if full || (x0, y0, x1, y1) == (0, 0, w, h) {
        return Ok(window_loss(rendered, target, pixel_mask, lambda_dssim, w * h, full));
    }
    let (cw, ch) = (x1 - x0, y1 - y0);
    let (loss, g) = window_loss(
        &rendered.crop(x0, y0, cw, ch),
        &target.crop(x0, y0, cw, ch),
        &pixel_mask.crop(x0, y0, cw, ch),
        lambda_dssim,
        w * h,
        false,
    );
    let mut grad = Image::new(w, h);
    for y in 0..ch {
        let dst = ((y0 + y) * w + x0) * 3;
        grad.data[dst..dst + cw * 3].copy_from_slice(&g.data[y * cw * 3..(y + 1) * cw * 3]);
    }
    Ok((loss, grad))
}

/// The loss on one window of the image, normalized by the full image's
/// `pixels`.
fn window_loss<T: Real>(
    rendered: &Image<T>,
    target: &Image<T>,
    pixel_mask: &BinaryImage,
    lambda_dssim: f64,
    pixels: usize,
    full: bool,
) -> (T, Image<T>) {
    let lambda = T::lit(lambda_dssim);
    let l1_w = T::one() - lambda;
    let norm = T::one() / T::lit((3 * pixels) as f64);
    let mut grad = Image::new(rendered.width, rendered.height);
    let mut l1 = T::zero();
    for (p, &on) in pixel_mask.bits.iter().enumerate() {
        if !on {
            continue;
        }
        for c in 0..3 {
            let d = rendered.data[p * 3 + c] - target.data[p * 3 + c];
            l1 += d.abs();
            let sign = if d > T::zero() {
                T::one()
            } else if d < T::zero() {
                -T::one()
            } else {
                T::zero()
            };
            grad.data[p * 3 + c] = l1_w * norm * sign;
        }
    }
    let mut loss = l1_w * l1 * norm;

    if lambda_dssim > 0.0 {
        let centers = if full {
            pixel_mask.clone()
        } else {
            dilate_square(pixel_mask, RADIUS)
        };
        let (ssim, sgrad) = masked_ssim_grad(rendered, target, &centers);
        let lambda = lambda * T::lit(centers.count() as f64 / pixels as f64);
        loss += lambda * (T::one() - ssim);
        for (p, &on) in pixel_mask.bits.iter().enumerate() {
            if on {
                for c in 0..3 {
                    grad.data[p * 3 + c] -= lambda * sgrad.data[p * 3 + c];
                }
            }
        }
    }
    (loss, grad)
}
