//! Binary scene files.
//!
//! Layout (little endian): 8-byte magic `CLSPLAT1`, `u64` Gaussian count,
//! then 14 `f32` per Gaussian in declaration order, then a CRC-32 of all
//! preceding bytes as `u32`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, GaussianScene, PARAM_COUNT};

pub const SCENE_MAGIC: &[u8; 8] = b"CLSPLAT1";

/// Bytes used by one serialized Gaussian.
pub const GAUSSIAN_RECORD_BYTES: usize = PARAM_COUNT * 4;

pub(crate) fn put_gaussian(buf: &mut Vec<u8>, g: &Gaussian<f32>) {
    for x in g.to_array() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

/// Little-endian cursor over a byte slice.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn gaussian(&mut self) -> Result<Gaussian<f32>> {
        let mut a = [0f32; PARAM_COUNT];
        for x in a.iter_mut() {
            *x = self.f32()?;
        }
        Ok(Gaussian::from_array(&a))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Splits off and verifies the CRC-32 trailer, returning the payload.
pub(crate) fn verify_checksum(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 4 {
        return Err(Error::Format("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    Ok(body)
}

pub(crate) fn check_magic(found: &[u8], expected: &[u8; 8]) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    if found[..7] == expected[..7] {
        return Err(Error::Version(format!(
            "expected {}, found {}",
            String::from_utf8_lossy(expected),
            String::from_utf8_lossy(found)
        )));
    }
    Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(found))))
}

pub fn scene_to_bytes(scene: &GaussianScene<f32>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 + 8 + scene.len() * GAUSSIAN_RECORD_BYTES + 4);
    buf.extend_from_slice(SCENE_MAGIC);
    buf.extend_from_slice(&(scene.len() as u64).to_le_bytes());
    for g in &scene.gaussians {
        put_gaussian(&mut buf, g);
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn scene_from_bytes(bytes: &[u8]) -> Result<GaussianScene<f32>> {
    if bytes.len() < 8 {
        return Err(Error::Format("file too short".into()));
    }
    check_magic(&bytes[..8], SCENE_MAGIC)?;
    let body = verify_checksum(bytes)?;
    let mut r = Reader::new(&body[8..]);
    let count = r.u64()? as usize;
    if r.remaining() != count.saturating_mul(GAUSSIAN_RECORD_BYTES) {
        return Err(Error::Format(format!(
            "count {count} does not match payload of {} bytes",
            r.remaining()
        )));
    }
    let gaussians = (0..count).map(|_| r.gaussian()).collect::<Result<Vec<_>>>()?;
    Ok(GaussianScene::new(gaussians))
}

pub fn save_scene(scene: &GaussianScene<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scene_to_bytes(scene)).map_err(|e| Error::io(path, e))
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<GaussianScene<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    scene_from_bytes(&bytes)
}
