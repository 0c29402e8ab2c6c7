use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Quaternion, Vector3, Vector6};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::geometry::PoseSE3;
use crate::splat::{Gaussian3D, GaussianGrad};

pub const MIN_OPACITY: f64 = 1e-3;
pub const MAX_OPACITY: f64 = 0.999;
pub const MIN_SCALE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// Per-class step sizes. Scale steps act on `ln s`, opacity steps on
/// `logit o`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub pose_translation: f64,
    pub pose_rotation: f64,
    pub mean: f64,
    pub scale: f64,
    pub rotation: f64,
    pub opacity: f64,
    pub color: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            pose_translation: 2e-3,
            pose_rotation: 1e-3,
            mean: 2e-3,
            scale: 1e-2,
            rotation: 1e-2,
            opacity: 2e-2,
            color: 1e-2,
        }
    }
}

impl LearningRates {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            pose_translation: self.pose_translation * k,
            pose_rotation: self.pose_rotation * k,
            mean: self.mean * k,
            scale: self.scale * k,
            rotation: self.rotation * k,
            opacity: self.opacity * k,
            color: self.color * k,
        }
    }

    /// Rates at iteration `iter` of `total` under exponential decay to
    /// `final_factor` of the initial value.
    pub fn at(&self, iter: usize, total: usize, final_factor: f64) -> Self {
        if total <= 1 {
            return *self;
        }
        self.scaled(final_factor.powf(iter as f64 / (total - 1) as f64))
    }

    pub fn validate(&self) -> Result<()> {
        let all =
            [self.pose_translation, self.pose_rotation, self.mean, self.scale, self.rotation, self.opacity, self.color];
        if all.iter().all(|v| *v >= 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(invalid("learning rates must be finite and non-negative"))
        }
    }
}

/// Bias-corrected Adam moments for a flat parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    steps: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], steps: 0 }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Returns the update direction `m̂ / (√v̂ + ε)` (to be scaled by `-lr`).
    pub fn direction(&mut self, grad: &[f64], p: &AdamParams) -> Vec<f64> {
        debug_assert_eq!(grad.len(), self.m.len());
        self.steps += 1;
        let c1 = 1.0 - p.beta1.powi(self.steps);
        let c2 = 1.0 - p.beta2.powi(self.steps);
        let mut out = Vec::with_capacity(grad.len());
        for ((m, v), &g) in self.m.iter_mut().zip(self.v.iter_mut()).zip(grad) {
            *m = p.beta1 * *m + (1.0 - p.beta1) * g;
            *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
            out.push((*m / c1) / ((*v / c2).sqrt() + p.epsilon));
        }
        out
    }
}

pub const PARAMS_PER_GAUSSIAN: usize = 12;

fn logit(o: f64) -> f64 {
    (o / (1.0 - o)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Flattens scene gradients into the optimizer's parameterization
/// `(μ, ln s, q, logit o, c)`.
pub fn scene_gradient_vector(scene: &[Gaussian3D], grads: &[GaussianGrad]) -> Vec<f64> {
    let mut out = Vec::with_capacity(scene.len() * PARAMS_PER_GAUSSIAN);
    for (g, d) in scene.iter().zip(grads) {
        out.extend_from_slice(d.mean.as_slice());
        out.extend((0..3).map(|k| d.scale[k] * g.scale[k]));
        out.extend_from_slice(d.rotation.as_slice());
        out.push(d.opacity * g.opacity * (1.0 - g.opacity));
        out.push(d.color);
    }
    out
}

/// Applies `-lr ⊙ direction` to every Gaussian and projects back to the
/// valid parameter ranges.
pub fn apply_scene_step(scene: &mut [Gaussian3D], direction: &[f64], lr: &LearningRates) {
    for (g, d) in scene.iter_mut().zip(direction.chunks_exact(PARAMS_PER_GAUSSIAN)) {
        g.mean -= Vector3::new(d[0], d[1], d[2]) * lr.mean;
        for k in 0..3 {
            g.scale[k] = (g.scale[k].ln() - lr.scale * d[3 + k]).exp().max(MIN_SCALE);
        }
        let q = Quaternion::new(g.rotation.w, g.rotation.i, g.rotation.j, g.rotation.k)
            - Quaternion::new(d[6], d[7], d[8], d[9]) * lr.rotation;
        let n = q.norm();
        g.rotation = if n > 0.0 { q / n } else { Quaternion::identity() };
        g.opacity = sigmoid(logit(g.opacity) - lr.opacity * d[10]).clamp(MIN_OPACITY, MAX_OPACITY);
        g.color = (g.color - lr.color * d[11]).clamp(0.0, 1.0);
    }
}

/// Left-retracts `pose` by `-lr ⊙ direction` in the `(ρ, φ)` tangent.
pub fn apply_pose_step(pose: &PoseSE3, direction: &[f64], lr: &LearningRates) -> PoseSE3 {
    let xi = Vector6::new(
        -lr.pose_translation * direction[0],
        -lr.pose_translation * direction[1],
        -lr.pose_translation * direction[2],
        -lr.pose_rotation * direction[3],
        -lr.pose_rotation * direction[4],
        -lr.pose_rotation * direction[5],
    );
    pose.retract_left(&xi)
}
