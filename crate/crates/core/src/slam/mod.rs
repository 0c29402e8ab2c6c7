//! Pose-free tracking and mapping against event supervision.

mod loss;
mod optim;
mod pipeline;
mod supervise;
mod trajectory;

pub use loss::{
    combine, dssim_loss, edge_weighted_loss, edge_weighted_loss_grad, total_loss, total_loss_with_grad, LossBreakdown,
    LossWeights,
};
pub use optim::{
    apply_pose_step, apply_scene_step, scene_gradient_vector, Adam, AdamParams, LearningRates, MAX_OPACITY,
    MIN_OPACITY, MIN_SCALE, PARAMS_PER_GAUSSIAN,
};
pub use pipeline::{
    bundle_adjust, chunk_edge_map, extrapolate, pipeline_chunks, run_pipeline, track_chunk, LossRecord, Phase,
    PipelineOutput, SlamParams, WindowState,
};
pub use supervise::{draw_intervals, evaluate_intervals, supervise_chunk, Supervision, SupervisionParams};
pub use trajectory::{interpolate_pose, interpolation_jacobians, pull_back_pose_gradient, ChunkTrajectory};

#[cfg(test)]
mod tests;
