//! Pinhole intrinsics, rigid poses and the SO(3) helpers used by the
//! analytic gradients.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector2, Vector3, Vector6};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(invalid("focal lengths must be positive"));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64 && self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(invalid("principal point must lie inside the image"));
        }
        Ok(())
    }

    /// Camera-frame point to pixel coordinates. Pixel `(i, j)` has its center at `(i, j)`.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// `K⁻¹ [u, v, 1]ᵀ`; the z-component is 1.
    #[inline]
    pub fn unproject(&self, pixel: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy, 1.0)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Rigid transform from the camera frame to the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3 {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Default for PoseSE3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl PoseSE3 {
    pub fn identity() -> Self {
        Self { rotation: UnitQuaternion::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// From a quaternion given as `(qw, qx, qy, qz)`; normalizes it.
    pub fn from_parts(q: [f64; 4], t: [f64; 3]) -> Result<Self> {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let n = quat.norm();
        if !(n.is_finite() && n > 1e-12) {
            return Err(invalid("quaternion has zero norm"));
        }
        Ok(Self::new(UnitQuaternion::new_normalize(quat), Vector3::new(t[0], t[1], t[2])))
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), t)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn compose(&self, rhs: &PoseSE3) -> PoseSE3 {
        PoseSE3 {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> PoseSE3 {
        let r_inv = self.rotation.inverse();
        PoseSE3 { rotation: r_inv, translation: -(r_inv * self.translation) }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse_transform_vector(&(p - self.translation))
    }

    /// Left perturbation `[Exp(φ) | ρ] · self` with `xi = (ρ, φ)`.
    pub fn retract_left(&self, xi: &Vector6<f64>) -> PoseSE3 {
        let rho = Vector3::new(xi[0], xi[1], xi[2]);
        let phi = Vector3::new(xi[3], xi[4], xi[5]);
        let e = so3_exp(&phi);
        PoseSE3 { rotation: e * self.rotation, translation: e * self.translation + rho }
    }

    /// Relative motion `self⁻¹ · other`.
    pub fn between(&self, other: &PoseSE3) -> PoseSE3 {
        self.inverse().compose(other)
    }

    /// Rotation angle (radians) and translation distance separating two poses.
    pub fn distance(&self, other: &PoseSE3) -> (f64, f64) {
        let rel = self.between(other);
        (rel.rotation.angle(), rel.translation.norm())
    }

    pub fn to_tum(&self) -> ([f64; 3], [f64; 4]) {
        let q = self.rotation.quaternion();
        ([self.translation.x, self.translation.y, self.translation.z], [q.i, q.j, q.k, q.w])
    }
}

/// Geodesic rotation (shortest-arc slerp) and linear translation between two
/// poses. `alpha = 0` and `alpha = 1` return the endpoints exactly.
pub fn interpolate(start: &PoseSE3, end: &PoseSE3, alpha: f64) -> PoseSE3 {
    if alpha == 0.0 {
        return *start;
    }
    if alpha == 1.0 {
        return *end;
    }
    let omega = so3_log(&(start.rotation.inverse() * end.rotation));
    PoseSE3 {
        rotation: start.rotation * so3_exp(&(omega * alpha)),
        translation: start.translation * (1.0 - alpha) + end.translation * alpha,
    }
}

/// Pose at time `t` along a time-sorted list of samples; clamps outside the range.
pub fn interpolate_samples(samples: &[(u64, PoseSE3)], t: u64) -> Option<PoseSE3> {
    let first = samples.first()?;
    let last = samples.last()?;
    if t <= first.0 {
        return Some(first.1);
    }
    if t >= last.0 {
        return Some(last.1);
    }
    let i = samples.partition_point(|s| s.0 <= t);
    let (ta, pa) = samples[i - 1];
    let (tb, pb) = samples[i];
    if t == ta {
        return Some(pa);
    }
    let alpha = (t - ta) as f64 / (tb - ta) as f64;
    Some(interpolate(&pa, &pb, alpha))
}

#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn so3_exp(phi: &Vector3<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_scaled_axis(*phi)
}

/// Principal logarithm, angle in `[0, π]`.
pub fn so3_log(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    q.scaled_axis()
}

/// Right Jacobian of SO(3): `Exp(φ + δ) ≈ Exp(φ) Exp(J_r(φ) δ)`.
pub fn so3_right_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = skew(phi);
    if theta < 1e-6 {
        return Matrix3::identity() - 0.5 * k + (1.0 / 6.0) * k * k;
    }
    let t2 = theta * theta;
    Matrix3::identity() - ((1.0 - theta.cos()) / t2) * k + ((theta - theta.sin()) / (t2 * theta)) * k * k
}

/// Inverse of the left Jacobian of SO(3): `Log(Exp(δ) Exp(φ)) ≈ φ + J_l⁻¹(φ) δ`.
pub fn so3_left_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = skew(phi);
    if theta < 1e-6 {
        return Matrix3::identity() - 0.5 * k + (1.0 / 12.0) * k * k;
    }
    let half = 0.5 * theta;
    let cot = half.cos() / half.sin();
    Matrix3::identity() - 0.5 * k + ((1.0 - half * cot) / (theta * theta)) * k * k
}
