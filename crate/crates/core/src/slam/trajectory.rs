use nalgebra::{Matrix3, Matrix6, Vector6};

use crate::geometry::{interpolate, skew, so3_left_jacobian_inv, so3_log, so3_right_jacobian, PoseSE3};

/// Boundary poses of one chunk; poses in between are interpolated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkTrajectory {
    pub chunk_index: usize,
    pub t_start: PoseSE3,
    pub t_end: PoseSE3,
    pub time_start: u64,
    pub time_end: u64,
}

impl ChunkTrajectory {
    pub fn new(chunk_index: usize, t_start: PoseSE3, t_end: PoseSE3, time_start: u64, time_end: u64) -> Self {
        Self { chunk_index, t_start, t_end, time_start, time_end }
    }

    /// Fraction of the chunk elapsed at time `t`, clamped to `[0, 1]`.
    pub fn alpha_at(&self, t: u64) -> f64 {
        if self.time_end <= self.time_start || t <= self.time_start {
            return 0.0;
        }
        if t >= self.time_end {
            return 1.0;
        }
        (t - self.time_start) as f64 / (self.time_end - self.time_start) as f64
    }

    pub fn pose_at(&self, t: u64) -> PoseSE3 {
        interpolate_pose(self, self.alpha_at(t))
    }
}

/// Slerp on rotation, linear on translation; exact at both ends.
pub fn interpolate_pose(traj: &ChunkTrajectory, alpha: f64) -> PoseSE3 {
    interpolate(&traj.t_start, &traj.t_end, alpha)
}

/// Jacobians of the interpolated pose's left tangent with respect to left
/// perturbations of the start and end poses.
pub fn interpolation_jacobians(start: &PoseSE3, end: &PoseSE3, alpha: f64) -> (Matrix6<f64>, Matrix6<f64>) {
    let pose = interpolate(start, end, alpha);
    let omega = so3_log(&(start.rotation.inverse() * end.rotation));
    let r_alpha = pose.rotation_matrix();
    let core = alpha
        * r_alpha
        * so3_right_jacobian(&(omega * alpha))
        * so3_left_jacobian_inv(&omega)
        * start.rotation_matrix().transpose();
    let a_end = core;
    let a_start = Matrix3::identity() - core;
    let t_skew = skew(&pose.translation);
    let block = |w: f64, t_b: &nalgebra::Vector3<f64>, a: &Matrix3<f64>| {
        let mut j = Matrix6::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * w));
        j.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-w * skew(t_b) + t_skew * a));
        j.fixed_view_mut::<3, 3>(3, 3).copy_from(a);
        j
    };
    (block(1.0 - alpha, &start.translation, &a_start), block(alpha, &end.translation, &a_end))
}

/// Pulls a gradient on the interpolated pose back to the two boundary poses.
pub fn pull_back_pose_gradient(
    start: &PoseSE3,
    end: &PoseSE3,
    alpha: f64,
    grad: &Vector6<f64>,
) -> (Vector6<f64>, Vector6<f64>) {
    let (js, je) = interpolation_jacobians(start, end, alpha);
    (js.transpose() * grad, je.transpose() * grad)
}
