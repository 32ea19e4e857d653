//! Scene history: per-update deltas, exact recovery of earlier scenes, and
//! merging of independent updates of disjoint regions.
//!
//! Before an update is optimized, its changed Gaussians are moved to the end
//! of the scene (a stable partition) and copied into a [`DeltaRecord`]
//! together with a bitmap of their original positions. Optimization only
//! ever touches that suffix, so the static prefix of the updated scene plus
//! the record is enough to rebuild the scene as it was.

use std::path::Path;

use crate::error::{Error, Result};
use crate::gaussian::{check_index_set, Gaussian, GaussianScene};
use crate::real::Real;
use crate::scene_io::{check_magic, put_gaussian, verify_checksum, Reader, GAUSSIAN_RECORD_BYTES};

pub const DELTA_MAGIC: &[u8; 8] = b"CLDELTA1";
/// Fixed bytes of a delta file besides the bitmap and the records.
pub const DELTA_HEADER_BYTES: usize = 8 + 4 + 8 + 8 + 8 + 4;

/// What one update changed, recorded before it was optimized.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRecord<T = f32> {
    /// Time index of the scene produced by the update.
    pub time: u32,
    /// Number of unchanged Gaussians, which form the prefix after reordering.
    pub static_count: usize,
    /// One bit per Gaussian of the previous scene, in its original order;
    /// set for changed Gaussians.
    pub bitmap: Vec<bool>,
    /// The changed Gaussians as they were, in original order.
    pub old_changed: Vec<Gaussian<T>>,
}

impl<T: Real> DeltaRecord<T> {
    /// An update that changed nothing in a scene of `len` Gaussians.
    pub fn empty(time: u32, len: usize) -> Self {
        DeltaRecord {
            time,
            static_count: len,
            bitmap: vec![false; len],
            old_changed: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.old_changed.is_empty()
    }

    /// Checks that bitmap, record count, and static count agree.
    pub fn validate(&self) -> Result<()> {
        let ones = self.bitmap.iter().filter(|&&b| b).count();
        if ones != self.old_changed.len() {
            return Err(Error::BitmapMismatch(format!(
                "{ones} set bits for {} changed Gaussians",
                self.old_changed.len()
            )));
        }
        if self.bitmap.len() - ones != self.static_count {
            return Err(Error::BitmapMismatch(format!(
                "{} clear bits for static count {}",
                self.bitmap.len() - ones,
                self.static_count
            )));
        }
        Ok(())
    }

    /// Indices flagged as changed.
    pub fn changed_indices(&self) -> Vec<usize> {
        self.bitmap.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }
}

/// Moves the Gaussians at `changed` (sorted, unique) to the end of the scene,
/// keeping relative order on both sides, and records them.
pub fn record_delta<T: Real>(
    scene: &GaussianScene<T>,
    changed: &[usize],
    time: u32,
) -> Result<(GaussianScene<T>, DeltaRecord<T>)> {
    check_index_set(changed, scene.len())?;
    let mut bitmap = vec![false; scene.len()];
    for &i in changed {
        bitmap[i] = true;
    }
    let mut statics = Vec::with_capacity(scene.len() - changed.len());
    let mut moved = Vec::with_capacity(changed.len());
    for (g, &b) in scene.gaussians.iter().zip(&bitmap) {
        if b {
            moved.push(*g);
        } else {
            statics.push(*g);
        }
    }
    let static_count = statics.len();
    statics.extend_from_slice(&moved);
    Ok((
        GaussianScene::new(statics),
        DeltaRecord {
            time,
            static_count,
            bitmap,
            old_changed: moved,
        },
    ))
}

/// Undoes one update: the first `static_count` Gaussians of `current` go to
/// the clear bits of the bitmap, the recorded Gaussians to the set bits.
pub fn undo_delta<T: Real>(current: &GaussianScene<T>, delta: &DeltaRecord<T>) -> Result<GaussianScene<T>> {
    delta.validate()?;
    if current.len() < delta.static_count {
        return Err(Error::BitmapMismatch(format!(
            "scene has {} Gaussians, fewer than static count {}",
            current.len(),
            delta.static_count
        )));
    }
    let mut statics = current.gaussians[..delta.static_count].iter();
    let mut old = delta.old_changed.iter();
    let gaussians = delta
        .bitmap
        .iter()
        .map(|&b| *if b { old.next() } else { statics.next() }.expect("counts validated"))
        .collect();
    Ok(GaussianScene::new(gaussians))
}

/// Rebuilds the scene at time `target` from the scene at time `current_time`
/// by undoing deltas `current_time, current_time − 1, …, target + 1`.
pub fn recover_state<T: Real>(
    current: &GaussianScene<T>,
    current_time: u32,
    deltas: &[DeltaRecord<T>],
    target: u32,
) -> Result<GaussianScene<T>> {
    if target > current_time {
        return Err(Error::InvalidArgument(format!(
            "cannot recover time {target} from time {current_time}"
        )));
    }
    let mut scene = current.clone();
    for t in (target + 1..=current_time).rev() {
        let d = deltas.iter().find(|d| d.time == t).ok_or(Error::MissingDelta(t))?;
        scene = undo_delta(&scene, d)?;
    }
    Ok(scene)
}

/// The optimized changed suffix of one update and the bitmap of what it
/// replaced in the shared previous scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrentUpdate<T = f32> {
    pub changed: Vec<Gaussian<T>>,
    pub bitmap: Vec<bool>,
}

impl<T: Real> ConcurrentUpdate<T> {
    /// Takes the suffix after the static prefix of an updated scene.
    pub fn from_scene(updated: &GaussianScene<T>, delta: &DeltaRecord<T>) -> Result<Self> {
        if updated.len() < delta.static_count {
            return Err(Error::BitmapMismatch(format!(
                "updated scene has {} Gaussians, fewer than static count {}",
                updated.len(),
                delta.static_count
            )));
        }
        Ok(ConcurrentUpdate {
            changed: updated.gaussians[delta.static_count..].to_vec(),
            bitmap: delta.bitmap.clone(),
        })
    }
}

/// Union of the update bitmaps; fails if any index is flagged twice.
fn union_bitmap<T: Real>(prev_len: usize, updates: &[ConcurrentUpdate<T>]) -> Result<Vec<bool>> {
    let mut flagged = vec![false; prev_len];
    for u in updates {
        if u.bitmap.len() != prev_len {
            return Err(Error::BitmapMismatch(format!(
                "bitmap of {} bits for a scene of {prev_len}",
                u.bitmap.len()
            )));
        }
        for (i, &b) in u.bitmap.iter().enumerate() {
            if b {
                if flagged[i] {
                    return Err(Error::OverlappingChanges(i));
                }
                flagged[i] = true;
            }
        }
    }
    Ok(flagged)
}

/// Combines updates made independently from `prev`: unflagged Gaussians of
/// `prev` in order, then each update's changed suffix in update order.
pub fn merge_concurrent<T: Real>(prev: &GaussianScene<T>, updates: &[ConcurrentUpdate<T>]) -> Result<GaussianScene<T>> {
    let flagged = union_bitmap(prev.len(), updates)?;
    let mut out: Vec<Gaussian<T>> = prev
        .gaussians
        .iter()
        .zip(&flagged)
        .filter(|(_, &f)| !f)
        .map(|(g, _)| *g)
        .collect();
    for u in updates {
        out.extend_from_slice(&u.changed);
    }
    Ok(GaussianScene::new(out))
}

/// The delta that takes a merge result back to `prev`.
pub fn merged_delta<T: Real>(prev: &GaussianScene<T>, updates: &[ConcurrentUpdate<T>], time: u32) -> Result<DeltaRecord<T>> {
    let bitmap = union_bitmap(prev.len(), updates)?;
    let old_changed: Vec<Gaussian<T>> = prev
        .gaussians
        .iter()
        .zip(&bitmap)
        .filter(|(_, &f)| f)
        .map(|(g, _)| *g)
        .collect();
    Ok(DeltaRecord {
        time,
        static_count: prev.len() - old_changed.len(),
        bitmap,
        old_changed,
    })
}

impl DeltaRecord<f32> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let packed = self.bitmap.len().div_ceil(8);
        let mut buf =
            Vec::with_capacity(DELTA_HEADER_BYTES + packed + self.old_changed.len() * GAUSSIAN_RECORD_BYTES);
        buf.extend_from_slice(DELTA_MAGIC);
        buf.extend_from_slice(&self.time.to_le_bytes());
        buf.extend_from_slice(&(self.static_count as u64).to_le_bytes());
        buf.extend_from_slice(&(self.bitmap.len() as u64).to_le_bytes());
        let mut bytes = vec![0u8; packed];
        for (i, &b) in self.bitmap.iter().enumerate() {
            if b {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        buf.extend_from_slice(&bytes);
        buf.extend_from_slice(&(self.old_changed.len() as u64).to_le_bytes());
        for g in &self.old_changed {
            put_gaussian(&mut buf, g);
        }
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Format("file too short".into()));
        }
        check_magic(&bytes[..8], DELTA_MAGIC)?;
        let body = verify_checksum(bytes)?;
        let mut r = Reader::new(&body[8..]);
        let time = r.u32()?;
        let static_count = r.u64()? as usize;
        let bits = r.u64()? as usize;
        let packed = r.take(bits.div_ceil(8))?;
        let bitmap = (0..bits).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
        let count = r.u64()? as usize;
        if r.remaining() != count.saturating_mul(GAUSSIAN_RECORD_BYTES) {
            return Err(Error::Format(format!(
                "count {count} does not match payload of {} bytes",
                r.remaining()
            )));
        }
        let old_changed = (0..count).map(|_| r.gaussian()).collect::<Result<Vec<_>>>()?;
        let d = DeltaRecord {
            time,
            static_count,
            bitmap,
            old_changed,
        };
        d.validate()?;
        Ok(d)
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

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tagged(n: usize) -> GaussianScene<f32> {
        GaussianScene::new(
            (0..n)
                .map(|i| Gaussian::isotropic([i as f32, 0.0, 0.0], 0.1, 0.5, [0.5; 3]))
                .collect(),
        )
    }

    fn ids(s: &GaussianScene<f32>) -> Vec<usize> {
        s.gaussians.iter().map(|g| g.position[0] as usize).collect()
    }

    #[test]
    fn stable_partition_example() {
        let s = tagged(4);
        let (r, d) = record_delta(&s, &[1, 3], 1).unwrap();
        assert_eq!(ids(&r), vec![0, 2, 1, 3]);
        assert_eq!(d.old_changed, vec![s.gaussians[1], s.gaussians[3]]);
        assert_eq!(d.bitmap, vec![false, true, false, true]);
        assert_eq!(d.static_count, 2);
        assert_eq!(undo_delta(&r, &d).unwrap(), s);
    }

    #[test]
    fn empty_change_keeps_order() {
        let s = tagged(5);
        let (r, d) = record_delta(&s, &[], 1).unwrap();
        assert_eq!(r, s);
        assert!(d.is_empty());
        assert_eq!(d, DeltaRecord::empty(1, 5));
        assert!(matches!(record_delta(&s, &[7], 1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn recover_same_time_is_identity() {
        let s = tagged(3);
        assert_eq!(recover_state(&s, 4, &[], 4).unwrap(), s);
        assert!(matches!(recover_state(&s, 4, &[], 2), Err(Error::MissingDelta(4))));
    }

    #[test]
    fn bitmap_mismatch_detected() {
        let s = tagged(4);
        let (r, mut d) = record_delta(&s, &[1, 3], 1).unwrap();
        d.static_count = 3;
        assert!(matches!(undo_delta(&r, &d), Err(Error::BitmapMismatch(_))));
    }

    #[test]
    fn merge_disjoint_and_overlap() {
        let prev = tagged(6);
        let a = ConcurrentUpdate {
            changed: vec![Gaussian::isotropic([10.0, 0.0, 0.0], 0.1, 0.5, [0.5; 3])],
            bitmap: vec![false, true, false, false, false, false],
        };
        let b = ConcurrentUpdate {
            changed: vec![
                Gaussian::isotropic([20.0, 0.0, 0.0], 0.1, 0.5, [0.5; 3]),
                Gaussian::isotropic([21.0, 0.0, 0.0], 0.1, 0.5, [0.5; 3]),
            ],
            bitmap: vec![false, false, false, true, true, false],
        };
        let m = merge_concurrent(&prev, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(ids(&m), vec![0, 2, 5, 10, 20, 21]);
        let d = merged_delta(&prev, &[a.clone(), b.clone()], 1).unwrap();
        assert_eq!(undo_delta(&m, &d).unwrap(), prev);
        let c = ConcurrentUpdate {
            changed: vec![],
            bitmap: vec![false, false, false, false, true, false],
        };
        assert!(matches!(merge_concurrent(&prev, &[b, c]), Err(Error::OverlappingChanges(4))));
    }

    #[test]
    fn file_round_trip_and_size() {
        let s = tagged(37);
        let (_, d) = record_delta(&s, &[0, 5, 36], 3).unwrap();
        let bytes = d.to_bytes();
        assert_eq!(bytes.len(), DELTA_HEADER_BYTES + 5 + 3 * GAUSSIAN_RECORD_BYTES);
        assert_eq!(DeltaRecord::from_bytes(&bytes).unwrap(), d);
        let mut bad = bytes.clone();
        bad[20] ^= 1;
        assert!(matches!(DeltaRecord::from_bytes(&bad), Err(Error::Checksum { .. })));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.cldelta");
        d.save(&p).unwrap();
        assert_eq!(DeltaRecord::load(&p).unwrap(), d);
    }

    proptest! {
        #[test]
        fn record_then_undo_is_identity(n in 0usize..60, seed in any::<u64>()) {
            let s = tagged(n);
            let changed: Vec<usize> = (0..n).filter(|i| (seed >> (i % 64)) & 1 == 1).collect();
            let (r, d) = record_delta(&s, &changed, 1).unwrap();
            prop_assert_eq!(d.bitmap.iter().filter(|&&b| b).count(), d.old_changed.len());
            prop_assert_eq!(d.bitmap.len(), n);
            prop_assert!(d.to_bytes().len() <= d.old_changed.len() * GAUSSIAN_RECORD_BYTES + n.div_ceil(8) + 64);
            prop_assert_eq!(undo_delta(&r, &d).unwrap(), s);
        }
    }
}
