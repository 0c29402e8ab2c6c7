//! Patch-based temporal-coherence edge detection over consecutive event maps.

mod detect;
mod filter;
pub mod morphology;
mod patch;

pub use detect::{
    aggregate_raw, aggregate_raw_per_pixel, detect_edges, detect_edges_detailed, detect_edges_grids, postprocess,
    temporal_difference, temporal_difference_grids, Detection, DetectorParams, EdgeMap, StrengthMode,
};
pub(crate) use filter::reflect_index;
pub use filter::{gaussian_filter, gaussian_kernel};
pub use patch::{
    adaptive_threshold, patch_contrast, percentile, region_variance, PatchContrast, PatchGrid, PatchRegion,
};
