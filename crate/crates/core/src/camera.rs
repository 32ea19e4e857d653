//! Pinhole cameras with a rigid world-to-camera pose.
//!
//! Conventions: camera looks down +z, x to the right, y down. Pixel centers
//! sit at half-integer coordinates, so pixel `(i, j)` covers
//! `[i, i+1) x [j, j+1)`.

use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depth at or below which a point is treated as behind the camera.
pub const MIN_DEPTH: f64 = 1e-6;

const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub width: usize,
    pub height: usize,
}

/// Result of projecting a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
    pub behind: bool,
}

impl Projection {
    /// True when the point is in front of the camera and lands inside the image.
    pub fn in_image(&self, width: usize, height: usize) -> bool {
        !self.behind
            && self.u >= 0.0
            && self.v >= 0.0
            && self.u < width as f64
            && self.v < height as f64
    }
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let cam = Camera {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at the world origin looking down +z.
    pub fn identity_pose(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(fx, fy, cx, cy, Matrix3::identity(), Vector3::zeros(), width, height)
    }

    /// Camera at `eye` looking at `target`, with `up` as the approximate world up.
    pub fn look_at(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        intrinsics: Intrinsics,
    ) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("eye coincides with target".into()))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("view direction parallel to up".into()))?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        Self::new(
            intrinsics.fx,
            intrinsics.fy,
            intrinsics.cx,
            intrinsics.cy,
            rotation,
            translation,
            intrinsics.width,
            intrinsics.height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidCamera(format!(
                "image must be at least 16x16, got {}x{}",
                self.width, self.height
            )));
        }
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidCamera(format!("rotation not orthonormal (error {err:e})")));
        }
        if self.rotation.determinant() < 0.0 {
            return Err(Error::InvalidCamera("rotation is a reflection".into()));
        }
        if !self.translation.iter().all(|t| t.is_finite())
            || ![self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidCamera("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    #[inline]
    pub fn world_to_camera(&self, xyz: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * xyz + self.translation
    }

    /// Pinhole projection of a world point.
    pub fn project_point(&self, xyz: &Vector3<f64>) -> Projection {
        let p = self.world_to_camera(xyz);
        let behind = p.z <= MIN_DEPTH;
        let (u, v) = if behind {
            (f64::NAN, f64::NAN)
        } else {
            (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
        };
        Projection { u, v, depth: p.z, behind }
    }

    /// Homogeneous 4x4 world-to-camera matrix.
    pub fn view_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Free-standing helper mirroring [`Camera::project_point`].
pub fn project_point(camera: &Camera, xyz: [f64; 3]) -> Projection {
    camera.project_point(&Vector3::from(xyz))
}

/// Pinhole intrinsics and image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    /// Square pixels with the principal point at the image center.
    pub fn centered(focal: f64, width: usize, height: usize) -> Self {
        Intrinsics {
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }
}

/// On-disk camera record: row-major rotation.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CameraRecord {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl From<&Camera> for CameraRecord {
    fn from(c: &Camera) -> Self {
        let r = &c.rotation;
        CameraRecord {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            rotation: [
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)],
            ],
            translation: [c.translation.x, c.translation.y, c.translation.z],
        }
    }
}

impl TryFrom<CameraRecord> for Camera {
    type Error = Error;

    fn try_from(r: CameraRecord) -> Result<Self> {
        Camera::new(
            r.fx,
            r.fy,
            r.cx,
            r.cy,
            Matrix3::from_row_slice(&r.rotation),
            Vector3::from(r.translation),
            r.width,
            r.height,
        )
    }
}

pub fn cameras_to_json(cameras: &[Camera]) -> Result<String> {
    let records: Vec<CameraRecord> = cameras.iter().map(CameraRecord::from).collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

pub fn cameras_from_json(text: &str) -> Result<Vec<Camera>> {
    let records: Vec<CameraRecord> = serde_json::from_str(text)?;
    records.into_iter().map(Camera::try_from).collect()
}

pub fn load_cameras(path: impl AsRef<Path>) -> Result<Vec<Camera>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    cameras_from_json(&text)
}

pub fn save_cameras(path: impl AsRef<Path>, cameras: &[Camera]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cameras_to_json(cameras)?).map_err(|e| Error::io(path, e))
}

/// Homogeneous-coordinate projection, used as an independent check of
/// [`Camera::project_point`].
pub fn project_homogeneous(camera: &Camera, xyz: &Vector3<f64>) -> (f64, f64, f64) {
    let k = Matrix4::new(
        camera.fx, 0.0, camera.cx, 0.0, //
        0.0, camera.fy, camera.cy, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    );
    let h = k * camera.view_matrix() * Vector4::new(xyz.x, xyz.y, xyz.z, 1.0);
    (h.x / h.z, h.y / h.z, h.z)
}
