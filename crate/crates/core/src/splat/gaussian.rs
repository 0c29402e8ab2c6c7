use nalgebra::{Matrix3, Quaternion, Vector3, Vector4};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Random,
    Edge,
}

/// Anisotropic 3D Gaussian with grayscale color.
///
/// The covariance is `R · diag(scale²) · Rᵀ` where `R` is the rotation of the
/// normalized `rotation` quaternion; the stored quaternion need not be unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    pub mean: Vector3<f64>,
    pub scale: Vector3<f64>,
    pub rotation: Quaternion<f64>,
    pub opacity: f64,
    pub color: f64,
    pub origin: Origin,
}

impl Gaussian3D {
    pub fn isotropic(mean: Vector3<f64>, sigma: f64, opacity: f64, color: f64) -> Self {
        Self {
            mean,
            scale: Vector3::repeat(sigma),
            rotation: Quaternion::identity(),
            opacity,
            color,
            origin: Origin::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(invalid("gaussian mean must be finite"));
        }
        if !self.scale.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(invalid("gaussian scales must be positive"));
        }
        if !(self.rotation.norm() > 0.0) {
            return Err(invalid("gaussian rotation must be a nonzero quaternion"));
        }
        if !(self.opacity > 0.0 && self.opacity < 1.0) {
            return Err(invalid("gaussian opacity must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.color) {
            return Err(invalid("gaussian color must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        quat_to_matrix(&self.rotation)
    }

    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        let s2 = Matrix3::from_diagonal(&self.scale.component_mul(&self.scale));
        r * s2 * r.transpose()
    }

    /// Quaternion as `(w, x, y, z)`.
    pub fn rotation_wxyz(&self) -> [f64; 4] {
        [self.rotation.w, self.rotation.i, self.rotation.j, self.rotation.k]
    }
}

/// Rotation matrix of `q / |q|`.
pub fn quat_to_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    let n = q.norm();
    let (w, x, y, z) = (q.w / n, q.i / n, q.j / n, q.k / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Pulls a gradient on the rotation matrix back to the raw quaternion
/// `(w, x, y, z)`, including the normalization.
pub fn quat_matrix_grad(q: &Quaternion<f64>, grad_r: &Matrix3<f64>) -> Vector4<f64> {
    let n = q.norm();
    let u = Vector4::new(q.w / n, q.i / n, q.j / n, q.k / n);
    let (w, x, y, z) = (u[0], u[1], u[2], u[3]);
    let dw = Matrix3::new(0.0, -z, y, z, 0.0, -x, -y, x, 0.0) * 2.0;
    let dx = Matrix3::new(0.0, y, z, y, -2.0 * x, -w, z, w, -2.0 * x) * 2.0;
    let dy = Matrix3::new(-2.0 * y, x, w, x, 0.0, z, -w, z, -2.0 * y) * 2.0;
    let dz = Matrix3::new(-2.0 * z, -w, x, w, -2.0 * z, y, x, y, 0.0) * 2.0;
    let g_unit = Vector4::new(
        grad_r.component_mul(&dw).sum(),
        grad_r.component_mul(&dx).sum(),
        grad_r.component_mul(&dy).sum(),
        grad_r.component_mul(&dz).sum(),
    );
    (g_unit - u * u.dot(&g_unit)) / n
}
