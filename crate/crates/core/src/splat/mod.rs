//! Differentiable Gaussian splatting for grayscale brightness images.

mod gaussian;
mod raster;

pub use gaussian::{quat_matrix_grad, quat_to_matrix, Gaussian3D, Origin};
pub use raster::{
    backward, project, rasterize, rasterize_near, rasterize_with_grad, synthesize_event_map, GaussianGrad, RenderGrad,
    RenderOutput, Splat2D, ALPHA_MAX, BRIGHTNESS_FLOOR, DEFAULT_NEAR, LOW_PASS_VARIANCE,
};
