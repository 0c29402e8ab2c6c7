use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3, Vector4, Vector6};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::gaussian::{quat_matrix_grad, Gaussian3D};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, PoseSE3};
use crate::grid::Grid;

/// Added to the diagonal of every projected covariance (pixels²).
pub const LOW_PASS_VARIANCE: f64 = 0.3;
pub const ALPHA_MAX: f64 = 0.99;
/// Rendered brightness is clamped to `[BRIGHTNESS_FLOOR, 1]`.
pub const BRIGHTNESS_FLOOR: f64 = 1e-5;
pub const DEFAULT_NEAR: f64 = 0.01;
// Pixels where the unclamped alpha falls below this are skipped.
const ALPHA_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2D {
    /// Position of the source Gaussian in the input list.
    pub index: usize,
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    pub depth: f64,
    pub opacity: f64,
    pub color: f64,
}

impl Splat2D {
    pub fn conic(&self) -> Matrix2<f64> {
        let (p, r, s) = (self.cov2d[(0, 0)], self.cov2d[(0, 1)], self.cov2d[(1, 1)]);
        let det = p * s - r * r;
        Matrix2::new(s / det, -r / det, -r / det, p / det)
    }

    pub fn max_std(&self) -> f64 {
        let (p, r, s) = (self.cov2d[(0, 0)], self.cov2d[(0, 1)], self.cov2d[(1, 1)]);
        let mid = 0.5 * (p + s);
        let half = 0.5 * (p - s);
        (mid + (half * half + r * r).sqrt()).sqrt()
    }

    /// Unclamped alpha at pixel center `(x, y)`.
    pub fn alpha_at(&self, x: f64, y: f64) -> f64 {
        let a = self.conic();
        let d = Vector2::new(x, y) - self.mean2d;
        self.opacity * (-0.5 * d.dot(&(a * d))).exp()
    }

    // Inclusive pixel box outside of which alpha < ALPHA_CUTOFF.
    fn pixel_box(&self, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
        if self.opacity <= ALPHA_CUTOFF {
            return None;
        }
        let m2 = 2.0 * (self.opacity / ALPHA_CUTOFF).ln();
        let rx = (m2 * self.cov2d[(0, 0)]).sqrt();
        let ry = (m2 * self.cov2d[(1, 1)]).sqrt();
        let x0 = (self.mean2d.x - rx).ceil().max(0.0);
        let x1 = (self.mean2d.x + rx).floor().min(width as f64 - 1.0);
        let y0 = (self.mean2d.y - ry).ceil().max(0.0);
        let y1 = (self.mean2d.y + ry).floor().min(height as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            return None;
        }
        Some((x0 as usize, x1 as usize, y0 as usize, y1 as usize))
    }
}

// Intermediate quantities kept for the backward pass.
#[derive(Debug, Clone)]
struct Projection {
    splat: Splat2D,
    p_cam: Vector3<f64>,
    world_to_cam: Matrix3<f64>,
    jac: Matrix2x3<f64>,
    cov_cam: Matrix3<f64>,
    cov_world: Matrix3<f64>,
    rot: Matrix3<f64>,
}

fn project_full(index: usize, g: &Gaussian3D, pose: &PoseSE3, k: &CameraIntrinsics, near: f64) -> Option<Projection> {
    let w = pose.rotation_matrix().transpose();
    let p = w * (g.mean - pose.translation);
    let z = p.z;
    if !(z > near) {
        return None;
    }
    let (fx, fy) = (k.fx, k.fy);
    let jac = Matrix2x3::new(fx / z, 0.0, -fx * p.x / (z * z), 0.0, fy / z, -fy * p.y / (z * z));
    let rot = g.rotation_matrix();
    let s2 = Matrix3::from_diagonal(&g.scale.component_mul(&g.scale));
    let cov_world = rot * s2 * rot.transpose();
    let cov_cam = w * cov_world * w.transpose();
    let mut cov2d = jac * cov_cam * jac.transpose();
    cov2d[(0, 0)] += LOW_PASS_VARIANCE;
    cov2d[(1, 1)] += LOW_PASS_VARIANCE;
    // Exact symmetry keeps the conic symmetric too.
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;
    let mean2d = Vector2::new(fx * p.x / z + k.cx, fy * p.y / z + k.cy);
    let splat = Splat2D { index, mean2d, cov2d, depth: z, opacity: g.opacity, color: g.color };
    let margin = 3.0 * splat.max_std();
    let (wf, hf) = (k.width as f64, k.height as f64);
    if mean2d.x < -0.5 - margin
        || mean2d.x > wf - 0.5 + margin
        || mean2d.y < -0.5 - margin
        || mean2d.y > hf - 0.5 + margin
    {
        return None;
    }
    Some(Projection { splat, p_cam: p, world_to_cam: w, jac, cov_cam, cov_world, rot })
}

/// Projects one Gaussian; `None` when culled.
pub fn project(g: &Gaussian3D, pose: &PoseSE3, k: &CameraIntrinsics, near: f64) -> Option<Splat2D> {
    project_full(0, g, pose, k, near).map(|p| p.splat)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    pixel: u32,
    alpha: f64,
    // Unclamped Gaussian falloff exp(−½ δᵀAδ).
    gauss: f64,
    // Transmittance in front of this splat.
    trans: f64,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    /// Clamped brightness.
    pub image: Grid<f64>,
    /// Blended brightness before clamping.
    pub raw: Grid<f64>,
    /// Transmittance left after the last splat.
    pub transmittance: Grid<f64>,
    pub background: f64,
    n_gaussians: usize,
    projections: Vec<Projection>,
    entries: Vec<Entry>,
    ranges: Vec<(usize, usize)>,
}

impl RenderOutput {
    /// Visible splats in blend order.
    pub fn splats(&self) -> impl Iterator<Item = &Splat2D> {
        self.projections.iter().map(|p| &p.splat)
    }

    /// `(gaussian index, alpha, transmittance before)` for every splat touching
    /// pixel `(x, y)`, front to back.
    pub fn contributors(&self, x: usize, y: usize) -> Vec<(usize, f64, f64)> {
        let pixel = (y * self.image.width() + x) as u32;
        let mut out = Vec::new();
        for (proj, &(a, b)) in self.projections.iter().zip(&self.ranges) {
            for e in &self.entries[a..b] {
                if e.pixel == pixel {
                    out.push((proj.splat.index, e.alpha, e.trans));
                }
            }
        }
        out
    }
}

pub fn rasterize(gaussians: &[Gaussian3D], pose: &PoseSE3, k: &CameraIntrinsics, background: f64) -> RenderOutput {
    rasterize_near(gaussians, pose, k, background, DEFAULT_NEAR)
}

pub fn rasterize_near(
    gaussians: &[Gaussian3D],
    pose: &PoseSE3,
    k: &CameraIntrinsics,
    background: f64,
    near: f64,
) -> RenderOutput {
    let (width, height) = (k.width, k.height);
    let mut projections: Vec<Projection> =
        gaussians.iter().enumerate().filter_map(|(i, g)| project_full(i, g, pose, k, near)).collect();
    // Stable sort keeps input order on equal depth.
    projections.sort_by(|a, b| a.splat.depth.total_cmp(&b.splat.depth));

    let n = width * height;
    let mut color = vec![0.0; n];
    let mut trans = vec![1.0; n];
    let mut entries = Vec::new();
    let mut ranges = Vec::with_capacity(projections.len());
    for proj in &projections {
        let s = &proj.splat;
        let start = entries.len();
        if let Some((x0, x1, y0, y1)) = s.pixel_box(width, height) {
            let a = s.conic();
            let (a00, a01, a11) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
            let cutoff_q = 2.0 * (s.opacity / ALPHA_CUTOFF).ln();
            for y in y0..=y1 {
                let dy = y as f64 - s.mean2d.y;
                for x in x0..=x1 {
                    let dx = x as f64 - s.mean2d.x;
                    let q = a00 * dx * dx + 2.0 * a01 * dx * dy + a11 * dy * dy;
                    if q > cutoff_q {
                        continue;
                    }
                    let gauss = (-0.5 * q).exp();
                    let alpha = (s.opacity * gauss).min(ALPHA_MAX);
                    let idx = y * width + x;
                    let t = trans[idx];
                    color[idx] += s.color * alpha * t;
                    trans[idx] = t * (1.0 - alpha);
                    entries.push(Entry { pixel: idx as u32, alpha, gauss, trans: t });
                }
            }
        }
        ranges.push((start, entries.len()));
    }
    let raw: Vec<f64> = color.iter().zip(&trans).map(|(c, t)| c + background * t).collect();
    let image: Vec<f64> = raw.iter().map(|v| v.clamp(BRIGHTNESS_FLOOR, 1.0)).collect();
    RenderOutput {
        image: Grid::from_vec(width, height, image).expect("sized"),
        raw: Grid::from_vec(width, height, raw).expect("sized"),
        transmittance: Grid::from_vec(width, height, trans).expect("sized"),
        background,
        n_gaussians: gaussians.len(),
        projections,
        entries,
        ranges,
    }
}

/// `log(next) − log(prev)` per pixel.
pub fn synthesize_event_map(prev: &Grid<f64>, next: &Grid<f64>) -> Result<Grid<f64>> {
    prev.ensure_same_shape(next)?;
    for img in [prev, next] {
        if let Some(i) = img.iter().position(|&v| !(v > 0.0)) {
            let (x, y) = (i % img.width(), i / img.width());
            return Err(Error::NonPositiveBrightness { x, y, value: img.as_slice()[i] });
        }
    }
    prev.zip_map(next, |a, b| b.ln() - a.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianGrad {
    pub mean: Vector3<f64>,
    pub scale: Vector3<f64>,
    /// With respect to the raw quaternion `(w, x, y, z)`.
    pub rotation: Vector4<f64>,
    pub opacity: f64,
    pub color: f64,
}

impl GaussianGrad {
    pub fn add_scaled(&mut self, other: &GaussianGrad, k: f64) {
        self.mean += other.mean * k;
        self.scale += other.scale * k;
        self.rotation += other.rotation * k;
        self.opacity += other.opacity * k;
        self.color += other.color * k;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderGrad {
    pub gaussians: Vec<GaussianGrad>,
    /// Left-perturbation tangent `(ρ, φ)` at the render pose.
    pub pose: Vector6<f64>,
}

impl RenderGrad {
    pub fn zeros(n: usize) -> Self {
        Self { gaussians: vec![GaussianGrad::default(); n], pose: Vector6::zeros() }
    }

    pub fn add_scaled(&mut self, other: &RenderGrad, k: f64) {
        for (a, b) in self.gaussians.iter_mut().zip(&other.gaussians) {
            a.add_scaled(b, k);
        }
        self.pose += other.pose * k;
    }
}

/// Gradient of `Σ upstream(x)·image(x)` for a previous forward pass.
pub fn backward(
    out: &RenderOutput,
    gaussians: &[Gaussian3D],
    k: &CameraIntrinsics,
    upstream: &Grid<f64>,
) -> Result<RenderGrad> {
    out.image.ensure_same_shape(upstream)?;
    if gaussians.len() != out.n_gaussians {
        return Err(Error::ShapeMismatch { expected: (out.n_gaussians, 1), actual: (gaussians.len(), 1) });
    }
    let width = out.image.width();
    let g_img: Vec<f64> = out
        .raw
        .iter()
        .zip(upstream.iter())
        .map(|(&r, &g)| if (BRIGHTNESS_FLOOR..=1.0).contains(&r) { g } else { 0.0 })
        .collect();
    let mut behind: Vec<f64> = out.transmittance.iter().map(|t| out.background * t).collect();
    let mut grad = RenderGrad::zeros(gaussians.len());
    let (fx, fy) = (k.fx, k.fy);

    for (proj, &(a, b)) in out.projections.iter().zip(&out.ranges).rev() {
        let s = &proj.splat;
        let conic = s.conic();
        let (a00, a01, a11) = (conic[(0, 0)], conic[(0, 1)], conic[(1, 1)]);
        let mut g_color = 0.0;
        let mut g_opacity = 0.0;
        let mut g_mean2d: Vector2<f64> = Vector2::zeros();
        // Gradients on conic entries a, b (off-diagonal, counted once), c.
        let (mut g_a, mut g_b, mut g_c) = (0.0, 0.0, 0.0);
        for e in &out.entries[a..b] {
            let idx = e.pixel as usize;
            let gp = g_img[idx];
            let contrib = s.color * e.alpha * e.trans;
            if gp != 0.0 {
                g_color += gp * e.alpha * e.trans;
                let gauss = e.gauss;
                if s.opacity * gauss < ALPHA_MAX {
                    let dx = (idx % width) as f64 - s.mean2d.x;
                    let dy = (idx / width) as f64 - s.mean2d.y;
                    let g_alpha = gp * (s.color * e.trans - behind[idx] / (1.0 - e.alpha));
                    g_opacity += g_alpha * gauss;
                    let ga = g_alpha * e.alpha;
                    g_mean2d.x += ga * (a00 * dx + a01 * dy);
                    g_mean2d.y += ga * (a01 * dx + a11 * dy);
                    g_a -= 0.5 * ga * dx * dx;
                    g_b -= ga * dx * dy;
                    g_c -= 0.5 * ga * dy * dy;
                }
            }
            behind[idx] += contrib;
        }

        let gg = &mut grad.gaussians[s.index];
        gg.color = g_color;
        gg.opacity = g_opacity;
        if g_mean2d == Vector2::zeros() && g_a == 0.0 && g_b == 0.0 && g_c == 0.0 {
            continue;
        }

        // Conic = inverse of [[p, r], [r, s]].
        let (p, r, sv) = (s.cov2d[(0, 0)], s.cov2d[(0, 1)], s.cov2d[(1, 1)]);
        let det = p * sv - r * r;
        let d2 = det * det;
        let g_p = g_a * (-sv * sv / d2) + g_b * (r * sv / d2) + g_c * (-r * r / d2);
        let g_r = g_a * (2.0 * r * sv / d2) + g_b * (-1.0 / det - 2.0 * r * r / d2) + g_c * (2.0 * p * r / d2);
        let g_s = g_a * (-r * r / d2) + g_b * (r * p / d2) + g_c * (-p * p / d2);
        let g_m = Matrix2::new(g_p, 0.5 * g_r, 0.5 * g_r, g_s);

        let jac = &proj.jac;
        let w = &proj.world_to_cam;
        let g_jac: Matrix2x3<f64> = 2.0 * g_m * jac * proj.cov_cam;
        let g_cov_cam: Matrix3<f64> = jac.transpose() * g_m * jac;
        let g_cov_world = w.transpose() * g_cov_cam * w;
        let g_w: Matrix3<f64> = 2.0 * g_cov_cam * w * proj.cov_world;

        let g = &gaussians[s.index];
        let s2 = Matrix3::from_diagonal(&g.scale.component_mul(&g.scale));
        let g_rot = 2.0 * g_cov_world * proj.rot * s2;
        let inner = proj.rot.transpose() * g_cov_world * proj.rot;
        gg.scale = Vector3::new(
            2.0 * g.scale.x * inner[(0, 0)],
            2.0 * g.scale.y * inner[(1, 1)],
            2.0 * g.scale.z * inner[(2, 2)],
        );
        gg.rotation = quat_matrix_grad(&g.rotation, &g_rot);

        let pc = &proj.p_cam;
        let (x, y, z) = (pc.x, pc.y, pc.z);
        let (z2, z3) = (z * z, z * z * z);
        let mut g_pc = Vector3::new(
            -g_jac[(0, 2)] * fx / z2,
            -g_jac[(1, 2)] * fy / z2,
            -g_jac[(0, 0)] * fx / z2 + g_jac[(0, 2)] * 2.0 * fx * x / z3 - g_jac[(1, 1)] * fy / z2
                + g_jac[(1, 2)] * 2.0 * fy * y / z3,
        );
        g_pc += Vector3::new(
            g_mean2d.x * fx / z,
            g_mean2d.y * fy / z,
            -g_mean2d.x * fx * x / z2 - g_mean2d.y * fy * y / z2,
        );
        let g_mu = w.transpose() * g_pc;
        gg.mean = g_mu;

        let m = g_w.transpose() * w;
        let rho = -g_mu;
        let phi =
            g_mu.cross(&g.mean) - Vector3::new(m[(1, 2)] - m[(2, 1)], m[(2, 0)] - m[(0, 2)], m[(0, 1)] - m[(1, 0)]);
        grad.pose += Vector6::new(rho.x, rho.y, rho.z, phi.x, phi.y, phi.z);
    }
    Ok(grad)
}

pub fn rasterize_with_grad(
    gaussians: &[Gaussian3D],
    pose: &PoseSE3,
    k: &CameraIntrinsics,
    background: f64,
    upstream: &Grid<f64>,
) -> Result<(RenderOutput, RenderGrad)> {
    let out = rasterize(gaussians, pose, k, background);
    let grad = backward(&out, gaussians, k, upstream)?;
    Ok((out, grad))
}
