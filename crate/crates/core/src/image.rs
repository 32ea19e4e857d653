//! Minimal RGB image buffer plus PNG and raw-float I/O.

use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major, channel-interleaved RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T = f32> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![T::zero(); width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [T; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Image { width, height, data }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [T; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// The `w × h` block whose top-left pixel is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y0 + h {
            let i = (y * self.width + x0) * 3;
            data.extend_from_slice(&self.data[i..i + w * 3]);
        }
        Image { width: w, height: h, data }
    }

    pub fn same_size<U>(&self, other: &Image<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&x| U::lit(x.to_f64())).collect(),
        }
    }

    /// Rec. 601 luminance plane.
    pub fn luminance(&self) -> Vec<f64> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0].to_f64() + 0.587 * p[1].to_f64() + 0.114 * p[2].to_f64())
            .collect()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.data.iter().map(|&v| to_u8(v.to_f64())).collect();
        image::save_buffer(path, &bytes, self.width as u32, self.height as u32, image::ColorType::Rgb8)
            .map_err(|e| Error::Image {
                path: path.into(),
                message: e.to_string(),
            })
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|e| Error::Image {
                path: path.into(),
                message: e.to_string(),
            })?
            .to_rgb8();
        let (w, h) = img.dimensions();
        let data = img.into_raw().into_iter().map(|b| T::lit(b as f64 / 255.0)).collect();
        Ok(Image {
            width: w as usize,
            height: h as usize,
            data,
        })
    }

    /// Raw dump: `u32` width, height, channels, then row-major `f32` values, little endian.
    pub fn to_raw_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(12 + self.data.len() * 4);
        for v in [self.width as u32, self.height as u32, 3u32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.data {
            buf.extend_from_slice(&v.as_f32().to_le_bytes());
        }
        buf
    }

    pub fn from_raw_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = crate::scene_io::Reader::new(bytes);
        let w = r.u32()? as usize;
        let h = r.u32()? as usize;
        let c = r.u32()? as usize;
        if c != 3 {
            return Err(Error::Format(format!("expected 3 channels, found {c}")));
        }
        if r.remaining() != w * h * 3 * 4 {
            return Err(Error::Format("raw image payload size mismatch".into()));
        }
        let data = (0..w * h * 3).map(|_| r.f32().map(T::of_f32)).collect::<Result<_>>()?;
        Ok(Image { width: w, height: h, data })
    }

    pub fn save_raw(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_raw_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_raw(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_raw_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        BinaryImage {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        let mut bits = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            bits.extend_from_slice(&self.bits[y * self.width + x0..y * self.width + x0 + w]);
        }
        BinaryImage { width: w, height: h, bits }
    }

    /// `(x0, x1, y0, y1)` of the set pixels, half-open; `None` when empty.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
        for (y, row) in self.bits.chunks(self.width).enumerate() {
            let Some(first) = row.iter().position(|&b| b) else {
                continue;
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            x0 = x0.min(first);
            x1 = x1.max(last + 1);
            y0 = y0.min(y);
            y1 = y + 1;
        }
        (x0 != usize::MAX).then_some((x0, x1, y0, y1))
    }

    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::save_buffer(path, &bytes, self.width as u32, self.height as u32, image::ColorType::L8)
            .map_err(|e| Error::Image {
                path: path.into(),
                message: e.to_string(),
            })
    }

    /// Loads a grayscale PNG; any value ≥ 128 is true.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|e| Error::Image {
                path: path.into(),
                message: e.to_string(),
            })?
            .to_luma8();
        let (w, h) = img.dimensions();
        Ok(BinaryImage {
            width: w as usize,
            height: h as usize,
            bits: img.into_raw().into_iter().map(|b| b >= 128).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_roundtrip() {
        let mut img = Image::<f32>::new(17, 5);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = i as f32 * 0.01;
        }
        assert_eq!(Image::<f32>::from_raw_bytes(&img.to_raw_bytes()).unwrap(), img);
    }

    #[test]
    fn png_roundtrip_quantized() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = Image::<f32>::filled(20, 10, [1.0, 0.0, 128.0 / 255.0]);
        img.save_png(&p).unwrap();
        let back = Image::<f32>::load_png(&p).unwrap();
        assert_eq!(back, img);

        let mut m = BinaryImage::new(9, 4);
        m.set(3, 2, true);
        let q = dir.path().join("m.png");
        m.save_png(&q).unwrap();
        assert_eq!(BinaryImage::load_png(&q).unwrap(), m);
    }
}
