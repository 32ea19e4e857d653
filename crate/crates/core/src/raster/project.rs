//! Projection of 3D Gaussians to screen-space splats and its adjoint.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector3};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::real::{sigmoid, Real};

/// Diagonal added to every 2D covariance, in px².
pub const COV2D_FLOOR: f64 = 0.3;

/// Splats closer to the camera than this are culled.
pub const NEAR_PLANE: f64 = 0.2;

/// The Jacobian sees view-space offsets clamped to this multiple of the
/// half field of view, so splats far outside the frustum stay bounded.
pub const FRUSTUM_GUARD: f64 = 1.3;

/// Public view of a projected Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2D<T = f32> {
    pub mean2d: [T; 2],
    pub cov2d: [[T; 2]; 2],
    pub depth: T,
}

/// Camera parameters converted to the working precision.
#[derive(Debug, Clone)]
pub(crate) struct CameraT<T: Real> {
    pub r: Matrix3<T>,
    pub t: Vector3<T>,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
    /// Limits on x/z and y/z used by the Jacobian.
    pub lim: [T; 2],
}

impl<T: Real> CameraT<T> {
    pub fn new(c: &Camera) -> Self {
        CameraT {
            r: c.rotation.map(T::lit),
            t: c.translation.map(T::lit),
            fx: T::lit(c.fx),
            fy: T::lit(c.fy),
            cx: T::lit(c.cx),
            cy: T::lit(c.cy),
            width: c.width,
            height: c.height,
            lim: [
                T::lit(FRUSTUM_GUARD * c.cx.max(c.width as f64 - c.cx) / c.fx),
                T::lit(FRUSTUM_GUARD * c.cy.max(c.height as f64 - c.cy) / c.fy),
            ],
        }
    }
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub(crate) fn quat_to_matrix<T: Real>(q: &[T; 4]) -> Matrix3<T> {
    let two = T::lit(2.0);
    let one = T::one();
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        one - two * (y * y + z * z),
        two * (x * y - w * z),
        two * (x * z + w * y),
        two * (x * y + w * z),
        one - two * (x * x + z * z),
        two * (y * z - w * x),
        two * (x * z - w * y),
        two * (y * z + w * x),
        one - two * (x * x + y * y),
    )
}

/// Gradient of a scalar through [`quat_to_matrix`], given dL/dR.
pub(crate) fn quat_to_matrix_grad<T: Real>(q: &[T; 4], g: &Matrix3<T>) -> [T; 4] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let gw = two * (-z * g[(0, 1)] + y * g[(0, 2)] + z * g[(1, 0)] - x * g[(1, 2)] - y * g[(2, 0)] + x * g[(2, 1)]);
    let gx = two * (y * g[(0, 1)] + z * g[(0, 2)] + y * g[(1, 0)] - w * g[(1, 2)] + z * g[(2, 0)] + w * g[(2, 1)])
        - four * x * (g[(1, 1)] + g[(2, 2)]);
    let gy = two * (x * g[(0, 1)] + w * g[(0, 2)] + x * g[(1, 0)] + z * g[(1, 2)] - w * g[(2, 0)] + z * g[(2, 1)])
        - four * y * (g[(0, 0)] + g[(2, 2)]);
    let gz = two * (-w * g[(0, 1)] + x * g[(0, 2)] + w * g[(1, 0)] + y * g[(1, 2)] + x * g[(2, 0)] + y * g[(2, 1)])
        - four * z * (g[(0, 0)] + g[(1, 1)]);
    [gw, gx, gy, gz]
}

/// Everything the rasterizer needs about one visible Gaussian.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Projected<T: Real> {
    pub mean: [T; 2],
    /// Inverse 2D covariance `(a, b, c)` for `[[a, b], [b, c]]`.
    pub conic: [T; 3],
    /// 2D covariance `(xx, xy, yy)` including the floor.
    pub cov: [T; 3],
    pub depth: T,
    pub opacity: T,
    pub color: [T; 3],
    /// Half extents of the 3σ bounding box, px.
    pub extent: [T; 2],
}

/// Intermediate values reused by the adjoint.
struct Forward<T: Real> {
    qn: [T; 4],
    qnorm: T,
    rot: Matrix3<T>,
    scale: [T; 3],
    sigma: Matrix3<T>,
    tcam: Vector3<T>,
    /// tcam x and y after the frustum clamp, and whether each was clamped.
    tclamp: [T; 2],
    clamped: [bool; 2],
    m: Matrix2x3<T>,
    cov: Matrix2<T>,
}

fn forward<T: Real>(cam: &CameraT<T>, g: &Gaussian<T>) -> Option<Forward<T>> {
    let q = &g.rotation;
    let qnorm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if !(qnorm > T::zero()) {
        return None;
    }
    let qn = q.map(|c| c / qnorm);
    let rot = quat_to_matrix(&qn);
    let scale = g.log_scale.map(|s| s.exp());
    let l = rot * Matrix3::from_diagonal(&Vector3::from(scale));
    let sigma = l * l.transpose();
    let tcam = cam.r * Vector3::from(g.position) + cam.t;
    if tcam.z <= T::lit(NEAR_PLANE) {
        return None;
    }
    let iz = T::one() / tcam.z;
    let iz2 = iz * iz;
    let mut tclamp = [tcam.x, tcam.y];
    let mut clamped = [false; 2];
    for k in 0..2 {
        let r = tclamp[k] * iz;
        if r > cam.lim[k] || r < -cam.lim[k] {
            tclamp[k] = r.max(-cam.lim[k]).min(cam.lim[k]) * tcam.z;
            clamped[k] = true;
        }
    }
    let j = Matrix2x3::new(
        cam.fx * iz,
        T::zero(),
        -cam.fx * tclamp[0] * iz2,
        T::zero(),
        cam.fy * iz,
        -cam.fy * tclamp[1] * iz2,
    );
    let m = j * cam.r;
    let floor = T::lit(COV2D_FLOOR);
    let mut cov = m * sigma * m.transpose();
    // exact symmetry regardless of rounding
    let off = (cov[(0, 1)] + cov[(1, 0)]) * T::lit(0.5);
    cov[(0, 1)] = off;
    cov[(1, 0)] = off;
    cov[(0, 0)] += floor;
    cov[(1, 1)] += floor;
    Some(Forward {
        qn,
        qnorm,
        rot,
        scale,
        sigma,
        tcam,
        tclamp,
        clamped,
        m,
        cov,
    })
}

pub(crate) fn project<T: Real>(cam: &CameraT<T>, g: &Gaussian<T>) -> Option<Projected<T>> {
    let f = forward(cam, g)?;
    let (a, b, c) = (f.cov[(0, 0)], f.cov[(0, 1)], f.cov[(1, 1)]);
    let det = a * c - b * b;
    if !(det > T::zero()) {
        return None;
    }
    let idet = T::one() / det;
    let iz = T::one() / f.tcam.z;
    let three = T::lit(3.0);
    Some(Projected {
        mean: [cam.fx * f.tcam.x * iz + cam.cx, cam.fy * f.tcam.y * iz + cam.cy],
        conic: [c * idet, -b * idet, a * idet],
        cov: [a, b, c],
        depth: f.tcam.z,
        opacity: sigmoid(g.opacity_logit),
        color: g.color.map(|x| x.max(T::zero()).min(T::one())),
        extent: [three * a.sqrt(), three * c.sqrt()],
    })
}

/// Projects one Gaussian into `camera`.
pub fn project_gaussian<T: Real>(camera: &Camera, g: &Gaussian<T>) -> Result<Splat2D<T>> {
    let cam = CameraT::new(camera);
    let depth = (cam.r * Vector3::from(g.position) + cam.t).z;
    if depth <= T::lit(NEAR_PLANE) {
        return Err(Error::BehindCamera(depth.to_f64()));
    }
    let p = project(&cam, g).ok_or(Error::BehindCamera(depth.to_f64()))?;
    Ok(Splat2D {
        mean2d: p.mean,
        cov2d: [[p.cov[0], p.cov[1]], [p.cov[1], p.cov[2]]],
        depth: p.depth,
    })
}

/// Screen-space gradient accumulated over pixels for one Gaussian.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ScreenGrad<T> {
    pub mean: [T; 2],
    /// dL/d(conic a, conic b, conic c) with `b` the shared off-diagonal entry.
    pub conic: [T; 3],
    pub opacity: T,
    pub color: [T; 3],
}

impl<T: Real> ScreenGrad<T> {
    pub fn add(&mut self, o: &ScreenGrad<T>) {
        self.mean[0] += o.mean[0];
        self.mean[1] += o.mean[1];
        for k in 0..3 {
            self.conic[k] += o.conic[k];
            self.color[k] += o.color[k];
        }
        self.opacity += o.opacity;
    }
}

/// Chains a screen-space gradient back to the Gaussian's parameters.
pub(crate) fn project_backward<T: Real>(cam: &CameraT<T>, g: &Gaussian<T>, sg: &ScreenGrad<T>) -> Gaussian<T> {
    let mut out = Gaussian::<T>::default();
    out.rotation = [T::zero(); 4];
    let Some(f) = forward(cam, g) else {
        return out;
    };
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    // color (clamped at render time)
    for k in 0..3 {
        let c = g.color[k];
        out.color[k] = if c >= T::zero() && c <= T::one() { sg.color[k] } else { T::zero() };
    }
    let s = sigmoid(g.opacity_logit);
    out.opacity_logit = sg.opacity * s * (T::one() - s);

    // conic -> covariance
    let (a, b, c) = (f.cov[(0, 0)], f.cov[(0, 1)], f.cov[(1, 1)]);
    let idet = T::one() / (a * c - b * b);
    let q = Matrix2::new(c * idet, -b * idet, -b * idet, a * idet);
    let gq = Matrix2::new(sg.conic[0], sg.conic[1] * half, sg.conic[1] * half, sg.conic[2]);
    let gcov = -(q * gq * q);

    // covariance -> (M, Σ)
    let gsigma = f.m.transpose() * gcov * f.m;
    let gm = (gcov * f.m * f.sigma) * two;
    let gj = gm * cam.r.transpose();

    let (tx, ty, tz) = (f.tcam.x, f.tcam.y, f.tcam.z);
    let iz = T::one() / tz;
    let iz2 = iz * iz;
    let iz3 = iz2 * iz;
    let (du, dv) = (sg.mean[0], sg.mean[1]);
    // a clamped entry is lim·tz: no x/y dependence, half the z dependence
    let (jx, jzx) = if f.clamped[0] { (T::zero(), T::one()) } else { (-cam.fx * iz2, two) };
    let (jy, jzy) = if f.clamped[1] { (T::zero(), T::one()) } else { (-cam.fy * iz2, two) };
    let gtx = gj[(0, 2)] * jx + du * cam.fx * iz;
    let gty = gj[(1, 2)] * jy + dv * cam.fy * iz;
    let gtz = gj[(0, 0)] * (-cam.fx * iz2)
        + gj[(0, 2)] * (jzx * cam.fx * f.tclamp[0] * iz3)
        + gj[(1, 1)] * (-cam.fy * iz2)
        + gj[(1, 2)] * (jzy * cam.fy * f.tclamp[1] * iz3)
        + du * (-cam.fx * tx * iz2)
        + dv * (-cam.fy * ty * iz2);
    let gp = cam.r.transpose() * Vector3::new(gtx, gty, gtz);
    out.position = [gp.x, gp.y, gp.z];

    // Σ = L Lᵀ, L = R S
    let l = f.rot * Matrix3::from_diagonal(&Vector3::from(f.scale));
    let gsym = (gsigma + gsigma.transpose()) * half;
    let gl = gsym * l * two;
    let mut grot = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            grot[(i, j)] = gl[(i, j)] * f.scale[j];
        }
    }
    for j in 0..3 {
        let mut gs = T::zero();
        for i in 0..3 {
            gs += gl[(i, j)] * f.rot[(i, j)];
        }
        out.log_scale[j] = gs * f.scale[j];
    }
    let gqn = quat_to_matrix_grad(&f.qn, &grot);
    let dot = gqn[0] * f.qn[0] + gqn[1] * f.qn[1] + gqn[2] * f.qn[2] + gqn[3] * f.qn[3];
    for k in 0..4 {
        out.rotation[k] = (gqn[k] - f.qn[k] * dot) / f.qnorm;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> Camera {
        Camera::identity_pose(120.0, 90.0, 32.0, 32.0, 64, 64).unwrap()
    }

    #[test]
    fn axis_aligned_closed_form() {
        for &(s, z) in &[(0.05f64, 2.0f64), (0.1, 3.0), (0.02, 1.0)] {
            let g = Gaussian::<f64>::new([0.0, 0.0, z], [s.ln(); 3], 0.0, [0.5; 3]);
            let sp = project_gaussian(&cam(), &g).unwrap();
            let ex = (120.0 * s / z).powi(2) + COV2D_FLOOR;
            let ey = (90.0 * s / z).powi(2) + COV2D_FLOOR;
            assert!((sp.cov2d[0][0] - ex).abs() < 1e-6);
            assert!((sp.cov2d[1][1] - ey).abs() < 1e-6);
            assert!(sp.cov2d[0][1].abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_depth_quarters_covariance() {
        let s: f64 = 0.1;
        let near = project_gaussian(&cam(), &Gaussian::<f64>::new([0.0, 0.0, 2.0], [s.ln(); 3], 0.0, [0.5; 3])).unwrap();
        let far = project_gaussian(&cam(), &Gaussian::<f64>::new([0.0, 0.0, 4.0], [s.ln(); 3], 0.0, [0.5; 3])).unwrap();
        for k in 0..2 {
            let a = near.cov2d[k][k] - COV2D_FLOOR;
            let b = far.cov2d[k][k] - COV2D_FLOOR;
            assert!((a / 4.0 - b).abs() < 1e-9);
        }
    }

    #[test]
    fn behind_camera_is_error() {
        let g = Gaussian::<f32>::new([0.0, 0.0, -1.0], [0.0; 3], 0.0, [0.5; 3]);
        assert!(matches!(project_gaussian(&cam(), &g), Err(Error::BehindCamera(_))));
    }

    #[test]
    fn quat_matrix_is_rotation() {
        let mut q = [0.3f64, -0.4, 0.5, 0.2];
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.iter_mut().for_each(|x| *x /= n);
        let r = quat_to_matrix(&q);
        assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quat_grad_matches_finite_difference() {
        let q = [0.8f64, -0.3, 0.4, 0.25];
        let g = Matrix3::new(0.3, -1.0, 0.2, 0.7, 0.1, -0.4, 0.9, 0.5, -0.6);
        let f = |q: &[f64; 4]| quat_to_matrix(q).component_mul(&g).sum();
        let an = quat_to_matrix_grad(&q, &g);
        for k in 0..4 {
            let mut p = q;
            let mut m = q;
            p[k] += 1e-6;
            m[k] -= 1e-6;
            let fd = (f(&p) - f(&m)) / 2e-6;
            assert!((fd - an[k]).abs() < 1e-8, "{k}: {fd} vs {}", an[k]);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cov2d_symmetric_with_floor(
                x in -0.5f64..0.5, y in -0.5f64..0.5, z in 0.5f64..5.0,
                ls in proptest::array::uniform3(-5.0f64..0.0),
                q in proptest::array::uniform4(-1.0f64..1.0),
            ) {
                prop_assume!(q.iter().map(|c| c * c).sum::<f64>() > 1e-3);
                let mut g = Gaussian::<f64>::new([x, y, z], ls, 0.0, [0.5; 3]);
                g.rotation = q;
                let sp = project_gaussian(&cam(), &g).unwrap();
                prop_assert_eq!(sp.cov2d[0][1], sp.cov2d[1][0]);
                let (a, b, c) = (sp.cov2d[0][0], sp.cov2d[0][1], sp.cov2d[1][1]);
                let tr = a + c;
                let disc = ((a - c) * (a - c) / 4.0 + b * b).sqrt();
                prop_assert!(tr / 2.0 - disc >= COV2D_FLOOR - 1e-9);
            }
        }
    }
}
