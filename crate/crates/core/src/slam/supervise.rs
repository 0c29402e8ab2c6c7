use alloc::vec::Vec;

use nalgebra::Vector6;
use rand::Rng;

use super::loss::{total_loss_with_grad, LossBreakdown, LossWeights};
use super::trajectory::{interpolate_pose, pull_back_pose_gradient, ChunkTrajectory};
use crate::error::{invalid, Result};
use crate::event::{sample_interval, Chunk};
use crate::geometry::CameraIntrinsics;
use crate::grid::Grid;
use crate::splat::{backward, rasterize, synthesize_event_map, Gaussian3D, GaussianGrad, RenderGrad};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisionParams {
    pub n_samples: usize,
    /// Bounds on the sampled interval length, microseconds.
    pub dt_min: u64,
    pub dt_max: u64,
    pub contrast_threshold: f64,
    /// Brightness behind all Gaussians.
    pub background: f64,
    pub weights: LossWeights,
}

impl Default for SupervisionParams {
    fn default() -> Self {
        Self {
            n_samples: 8,
            dt_min: 5_000,
            dt_max: 20_000,
            contrast_threshold: 0.2,
            background: 0.25,
            weights: LossWeights::default(),
        }
    }
}

impl SupervisionParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("n_samples must be positive"));
        }
        if self.dt_min == 0 || self.dt_min > self.dt_max {
            return Err(invalid("interval bounds must satisfy 0 < dt_min <= dt_max"));
        }
        if !(self.contrast_threshold > 0.0) {
            return Err(invalid("contrast threshold must be positive"));
        }
        if !(self.background > 0.0 && self.background <= 1.0) {
            return Err(invalid("background brightness must lie in (0, 1]"));
        }
        self.weights.validate()
    }
}

/// Loss averaged over the sampled intervals with gradients for both boundary
/// poses and every Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    pub loss: LossBreakdown,
    pub grad_start: Vector6<f64>,
    pub grad_end: Vector6<f64>,
    pub scene: Vec<GaussianGrad>,
}

/// Draws `n_samples` intervals inside the chunk; ends past the chunk are
/// clamped to its end.
pub fn draw_intervals<R: Rng + ?Sized>(
    chunk: &Chunk<'_>,
    params: &SupervisionParams,
    rng: &mut R,
) -> Result<Vec<(u64, u64)>> {
    if chunk.duration() == 0 {
        return Err(invalid("cannot supervise an empty chunk"));
    }
    (0..params.n_samples)
        .map(|_| {
            let t = rng.random_range(chunk.t_start..chunk.t_end);
            let (t0, t1) = sample_interval(rng, t, params.dt_min, params.dt_max)?;
            Ok((t0, t1.min(chunk.t_end)))
        })
        .collect()
}

struct SampleResult {
    loss: LossBreakdown,
    grad_start: Vector6<f64>,
    grad_end: Vector6<f64>,
    render: RenderGrad,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_one(
    chunk: &Chunk<'_>,
    traj: &ChunkTrajectory,
    scene: &[Gaussian3D],
    k: &CameraIntrinsics,
    edge_map: &Grid<f64>,
    params: &SupervisionParams,
    (t0, t1): (u64, u64),
) -> Result<SampleResult> {
    let measured = chunk.accumulate(t0, t1, params.contrast_threshold)?.values();
    let (a0, a1) = (traj.alpha_at(t0), traj.alpha_at(t1));
    let (p0, p1) = (interpolate_pose(traj, a0), interpolate_pose(traj, a1));
    let r0 = rasterize(scene, &p0, k, params.background);
    let r1 = rasterize(scene, &p1, k, params.background);
    let e_hat = synthesize_event_map(&r0.image, &r1.image)?;
    let (loss, g) = total_loss_with_grad(&e_hat, &measured, edge_map, &params.weights)?;
    let up0 = g.zip_map(&r0.image, |gi, i| -gi / i)?;
    let up1 = g.zip_map(&r1.image, |gi, i| gi / i)?;
    let mut render = backward(&r0, scene, k, &up0)?;
    let g1 = backward(&r1, scene, k, &up1)?;
    let (s0, e0) = pull_back_pose_gradient(&traj.t_start, &traj.t_end, a0, &render.pose);
    let (s1, e1) = pull_back_pose_gradient(&traj.t_start, &traj.t_end, a1, &g1.pose);
    render.add_scaled(&g1, 1.0);
    Ok(SampleResult { loss, grad_start: s0 + s1, grad_end: e0 + e1, render })
}

/// Deterministic evaluation over fixed intervals.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_intervals(
    chunk: &Chunk<'_>,
    traj: &ChunkTrajectory,
    scene: &[Gaussian3D],
    k: &CameraIntrinsics,
    edge_map: &Grid<f64>,
    params: &SupervisionParams,
    intervals: &[(u64, u64)],
) -> Result<Supervision> {
    params.validate()?;
    let results = crate::par::map_indexed(intervals.len(), |i| {
        evaluate_one(chunk, traj, scene, k, edge_map, params, intervals[i])
    });
    let w = 1.0 / intervals.len().max(1) as f64;
    let mut out = Supervision {
        loss: LossBreakdown::default(),
        grad_start: Vector6::zeros(),
        grad_end: Vector6::zeros(),
        scene: alloc::vec![GaussianGrad::default(); scene.len()],
    };
    for r in results {
        let r = r?;
        out.loss.add_scaled(&r.loss, w);
        out.grad_start += r.grad_start * w;
        out.grad_end += r.grad_end * w;
        for (a, b) in out.scene.iter_mut().zip(&r.render.gaussians) {
            a.add_scaled(b, w);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn supervise_chunk<R: Rng + ?Sized>(
    chunk: &Chunk<'_>,
    traj: &ChunkTrajectory,
    scene: &[Gaussian3D],
    k: &CameraIntrinsics,
    edge_map: &Grid<f64>,
    params: &SupervisionParams,
    rng: &mut R,
) -> Result<Supervision> {
    params.validate()?;
    let intervals = draw_intervals(chunk, params, rng)?;
    evaluate_intervals(chunk, traj, scene, k, edge_map, params, &intervals)
}
