use alloc::vec::Vec;

use nalgebra::Vector6;
use rand::{Rng, RngCore};

use super::loss::LossBreakdown;
use super::optim::{apply_pose_step, apply_scene_step, scene_gradient_vector, Adam, AdamParams, LearningRates};
use super::supervise::{supervise_chunk, SupervisionParams};
use super::trajectory::ChunkTrajectory;
use crate::edge::{detect_edges, DetectorParams, EdgeMap};
use crate::error::{invalid, Error, Result};
use crate::event::{chunk_stream, Chunk, EventStream};
use crate::geometry::{CameraIntrinsics, PoseSE3};
use crate::init::{initialize_from_edge_map, InitParams};
use crate::splat::Gaussian3D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Tracking,
    Mapping,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Tracking => "tracking",
            Phase::Mapping => "mapping",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iter: usize,
    pub chunk: usize,
    pub phase: Phase,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlamParams {
    /// Microseconds.
    pub chunk_duration: u64,
    /// Number of chunks jointly refined by bundle adjustment.
    pub window: usize,
    pub tracking_iterations: usize,
    pub mapping_iterations: usize,
    pub supervision: SupervisionParams,
    pub detector: DetectorParams,
    pub init: InitParams,
    pub learning_rates: LearningRates,
    pub adam: AdamParams,
    /// Loss growth over the initial value that counts as divergence.
    pub divergence_factor: f64,
    /// Learning rates decay exponentially to this fraction over each
    /// tracking or mapping run.
    pub lr_decay: f64,
}

impl Default for SlamParams {
    fn default() -> Self {
        Self {
            chunk_duration: 50_000,
            window: 4,
            tracking_iterations: 150,
            mapping_iterations: 300,
            supervision: SupervisionParams::default(),
            detector: DetectorParams::default(),
            init: InitParams::default(),
            learning_rates: LearningRates::default(),
            adam: AdamParams::default(),
            divergence_factor: 10.0,
            lr_decay: 1.0,
        }
    }
}

impl SlamParams {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_duration == 0 {
            return Err(invalid("chunk duration must be positive"));
        }
        if self.window == 0 {
            return Err(invalid("window must hold at least one chunk"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(invalid("lr_decay must lie in (0, 1]"));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(invalid("divergence factor must exceed 1"));
        }
        self.supervision.validate()?;
        self.detector.validate()?;
        self.init.validate()?;
        self.learning_rates.validate()?;
        self.adam.validate()
    }
}

/// Scene, all chunk trajectories so far, and the scene optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowState {
    pub scene: Vec<Gaussian3D>,
    pub trajectories: Vec<ChunkTrajectory>,
    scene_adam: Adam,
}

impl WindowState {
    pub fn new(scene: Vec<Gaussian3D>) -> Self {
        let n = scene.len() * super::optim::PARAMS_PER_GAUSSIAN;
        Self { scene, trajectories: Vec::new(), scene_adam: Adam::new(n) }
    }

    /// Indices of the chunks inside the sliding window.
    pub fn window_range(&self, window: usize) -> core::ops::Range<usize> {
        self.trajectories.len().saturating_sub(window)..self.trajectories.len()
    }
}

fn divergence_check(chunk: usize, initial: f64, current: f64, factor: f64) -> Result<()> {
    if !current.is_finite() || (initial > 0.0 && current > factor * initial) {
        return Err(Error::TrackingFailure { chunk, initial, last: current });
    }
    Ok(())
}

/// Constant-velocity guess for the next chunk's end pose.
pub fn extrapolate(prev: &ChunkTrajectory) -> PoseSE3 {
    let delta = prev.t_start.inverse().compose(&prev.t_end);
    prev.t_end.compose(&delta)
}

/// Optimizes the new chunk's end pose with the scene frozen. The start pose
/// continues the previous chunk (identity for the first one).
#[allow(clippy::too_many_arguments)]
pub fn track_chunk<R: Rng + ?Sized>(
    state: &WindowState,
    chunk: &Chunk<'_>,
    edge_map: &EdgeMap,
    k: &CameraIntrinsics,
    params: &SlamParams,
    rng: &mut R,
    log: &mut Vec<LossRecord>,
) -> Result<ChunkTrajectory> {
    let (start, mut end) = match state.trajectories.last() {
        Some(prev) => (prev.t_end, extrapolate(prev)),
        None => (PoseSE3::identity(), PoseSE3::identity()),
    };
    let mut adam = Adam::new(6);
    let mut initial = None;
    for iter in 0..params.tracking_iterations {
        let traj = ChunkTrajectory::new(chunk.index, start, end, chunk.t_start, chunk.t_end);
        let sup = supervise_chunk(chunk, &traj, &state.scene, k, &edge_map.values, &params.supervision, rng)?;
        log.push(LossRecord { iter, chunk: chunk.index, phase: Phase::Tracking, loss: sup.loss });
        let first = *initial.get_or_insert(sup.loss.total);
        divergence_check(chunk.index, first, sup.loss.total, params.divergence_factor)?;
        let lr = params.learning_rates.at(iter, params.tracking_iterations, params.lr_decay);
        let dir = adam.direction(sup.grad_end.as_slice(), &params.adam);
        end = apply_pose_step(&end, &dir, &lr);
    }
    Ok(ChunkTrajectory::new(chunk.index, start, end, chunk.t_start, chunk.t_end))
}

/// Jointly refines in-window boundary poses and the scene. The window's first
/// start pose stays fixed.
#[allow(clippy::too_many_arguments)]
pub fn bundle_adjust<R: Rng + ?Sized>(
    state: &mut WindowState,
    chunks: &[Chunk<'_>],
    edge_maps: &[EdgeMap],
    k: &CameraIntrinsics,
    params: &SlamParams,
    rng: &mut R,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    let range = state.window_range(params.window);
    if range.is_empty() {
        return Err(invalid("bundle adjustment needs at least one tracked chunk"));
    }
    let w0 = range.start;
    let n = range.len();
    let mut bounds: Vec<PoseSE3> = core::iter::once(state.trajectories[w0].t_start)
        .chain(state.trajectories[range.clone()].iter().map(|t| t.t_end))
        .collect();
    let mut pose_adam = Adam::new(6 * n);
    let mut initial = None;
    let last_chunk = range.end - 1;
    for iter in 0..params.mapping_iterations {
        let mut pose_grad = alloc::vec![Vector6::zeros(); n + 1];
        let mut scene_grad = alloc::vec![crate::splat::GaussianGrad::default(); state.scene.len()];
        let mut loss = LossBreakdown::default();
        for (i, ci) in range.clone().enumerate() {
            let chunk = &chunks[ci];
            let traj = ChunkTrajectory::new(ci, bounds[i], bounds[i + 1], chunk.t_start, chunk.t_end);
            let sup = supervise_chunk(chunk, &traj, &state.scene, k, &edge_maps[ci].values, &params.supervision, rng)?;
            loss.add_scaled(&sup.loss, 1.0);
            pose_grad[i] += sup.grad_start;
            pose_grad[i + 1] += sup.grad_end;
            for (a, b) in scene_grad.iter_mut().zip(&sup.scene) {
                a.add_scaled(b, 1.0);
            }
        }
        log.push(LossRecord { iter, chunk: last_chunk, phase: Phase::Mapping, loss });
        let first = *initial.get_or_insert(loss.total);
        divergence_check(last_chunk, first, loss.total, params.divergence_factor)?;

        let lr = params.learning_rates.at(iter, params.mapping_iterations, params.lr_decay);
        let flat: Vec<f64> = pose_grad[1..].iter().flat_map(|g| g.iter().copied()).collect();
        let dir = pose_adam.direction(&flat, &params.adam);
        for (b, d) in bounds[1..].iter_mut().zip(dir.chunks_exact(6)) {
            *b = apply_pose_step(b, d, &lr);
        }
        let g = scene_gradient_vector(&state.scene, &scene_grad);
        let dir = state.scene_adam.direction(&g, &params.adam);
        apply_scene_step(&mut state.scene, &dir, &lr);
    }
    for (i, ci) in range.enumerate() {
        let t = &mut state.trajectories[ci];
        t.t_start = bounds[i];
        t.t_end = bounds[i + 1];
    }
    Ok(())
}

/// Chunks of the stream; a trailing remainder shorter than half a chunk is
/// merged into the previous chunk.
pub fn pipeline_chunks(stream: &EventStream, chunk_duration: u64) -> Result<Vec<Chunk<'_>>> {
    let mut chunks = chunk_stream(stream, chunk_duration)?;
    if chunks.len() >= 2 {
        let last = chunks[chunks.len() - 1];
        if last.duration() * 2 < chunk_duration {
            chunks.pop();
            let prev = chunks.last_mut().expect("at least one chunk");
            let evs = stream.events();
            let a = evs.partition_point(|e| e.t < prev.t_start);
            let b = evs.partition_point(|e| e.t < last.t_end);
            prev.events = &evs[a..b];
            prev.t_end = last.t_end;
        }
    }
    Ok(chunks)
}

/// Edge map of one chunk from its consecutive sub-maps.
pub fn chunk_edge_map(chunk: &Chunk<'_>, detector: &DetectorParams, contrast_threshold: f64) -> Result<EdgeMap> {
    let maps = chunk.sub_maps(detector.window, contrast_threshold)?;
    detect_edges(&maps, detector)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub scene: Vec<Gaussian3D>,
    pub initial_scene: Vec<Gaussian3D>,
    /// Boundary poses at chunk boundary times.
    pub trajectory: Vec<(u64, PoseSE3)>,
    pub chunks: Vec<ChunkTrajectory>,
    pub edge_maps: Vec<EdgeMap>,
    pub log: Vec<LossRecord>,
}

/// Chunk, detect edges, initialize from the first chunk, then alternate
/// tracking and bundle adjustment.
pub fn run_pipeline<R: RngCore>(
    stream: &EventStream,
    k: &CameraIntrinsics,
    params: &SlamParams,
    rng: &mut R,
) -> Result<PipelineOutput> {
    params.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    if (stream.width(), stream.height()) != (k.width, k.height) {
        return Err(Error::ShapeMismatch { expected: (k.width, k.height), actual: (stream.width(), stream.height()) });
    }
    let chunks = pipeline_chunks(stream, params.chunk_duration)?;
    let c = params.supervision.contrast_threshold;
    let edge_maps: Vec<EdgeMap> =
        chunks.iter().map(|ch| chunk_edge_map(ch, &params.detector, c)).collect::<Result<_>>()?;
    let (_, scene) = initialize_from_edge_map(&edge_maps[0], k, &PoseSE3::identity(), &params.init, rng)?;
    let initial_scene = scene.clone();
    let mut state = WindowState::new(scene);
    let mut log = Vec::new();
    for chunk in &chunks {
        let traj = track_chunk(&state, chunk, &edge_maps[chunk.index], k, params, rng, &mut log)?;
        state.trajectories.push(traj);
        bundle_adjust(&mut state, &chunks, &edge_maps, k, params, rng, &mut log)?;
    }
    let mut trajectory: Vec<(u64, PoseSE3)> = state.trajectories.iter().map(|t| (t.time_start, t.t_start)).collect();
    let last = state.trajectories.last().expect("non-empty");
    trajectory.push((last.time_end, last.t_end));
    Ok(PipelineOutput { scene: state.scene, initial_scene, trajectory, chunks: state.trajectories, edge_maps, log })
}
