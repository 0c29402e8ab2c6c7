use alloc::vec::Vec;

use super::filter::gaussian_filter;
use super::morphology;
use super::patch::{adaptive_threshold, patch_contrast, percentile, PatchContrast, PatchGrid, PatchRegion};
use crate::error::{invalid, Result};
use crate::event::EventMap;
use crate::grid::{Grid, Mask};

/// What a classified patch writes into the raw edge map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthMode {
    /// The patch contrast `C`, uniformly over the patch.
    PatchContrast,
    /// The per-pixel temporal difference of the pair that attains `C`.
    TemporalDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Number of consecutive event maps per detection (`T`).
    pub window: usize,
    pub patch_size: usize,
    pub overlap: f64,
    /// Temporal-difference smoothing.
    pub sigma: f64,
    /// Percentile of the patch-contrast distribution used as `τ`.
    pub tau_percentile: f64,
    pub smooth_sigma: f64,
    pub keep_percentile: f64,
    pub closing_radius: usize,
    pub strength: StrengthMode,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            window: 5,
            patch_size: 16,
            overlap: 0.5,
            sigma: 1.0,
            tau_percentile: 85.0,
            smooth_sigma: 1.0,
            keep_percentile: 70.0,
            closing_radius: 2,
            strength: StrengthMode::TemporalDifference,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(invalid("detector window must be at least 2"));
        }
        if self.patch_size == 0 {
            return Err(invalid("patch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(invalid("overlap must lie in [0, 1)"));
        }
        if !(self.sigma > 0.0 && self.smooth_sigma > 0.0) {
            return Err(invalid("smoothing sigmas must be positive"));
        }
        if !(self.tau_percentile > 0.0 && self.tau_percentile < 100.0) {
            return Err(invalid("tau percentile must lie in (0, 100)"));
        }
        if !(0.0..=100.0).contains(&self.keep_percentile) {
            return Err(invalid("keep percentile must lie in [0, 100]"));
        }
        Ok(())
    }
}

/// Normalized edge confidence in `[0, 1]` with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub values: Grid<f64>,
    pub params: DetectorParams,
}

impl EdgeMap {
    pub fn zeros(width: usize, height: usize, params: DetectorParams) -> Self {
        Self { values: Grid::zeros(width, height), params }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    /// Pixels with nonzero confidence.
    pub fn support(&self) -> Mask {
        self.values.map(|&v| v > 0.0)
    }
}

/// `|G_σ ∗ E_curr − G_σ ∗ E_prev|`.
pub fn temporal_difference(prev: &EventMap, curr: &EventMap, sigma: f64) -> Result<Grid<f64>> {
    temporal_difference_grids(&prev.values(), &curr.values(), sigma)
}

pub fn temporal_difference_grids(prev: &Grid<f64>, curr: &Grid<f64>, sigma: f64) -> Result<Grid<f64>> {
    prev.ensure_same_shape(curr)?;
    let a = gaussian_filter(prev, sigma)?;
    let b = gaussian_filter(curr, sigma)?;
    b.zip_map(&a, |x, y| (x - y).abs())
}

/// Per pixel, the largest strength among classified patches covering it.
pub fn aggregate_raw(patches: &[(PatchRegion, f64)], width: usize, height: usize) -> Result<Grid<f64>> {
    let mut out = Grid::zeros(width, height);
    for (region, strength) in patches {
        if !(*strength >= 0.0) {
            return Err(invalid("patch strengths must be non-negative"));
        }
        if region.x + region.size > width || region.y + region.size > height {
            return Err(invalid("patch extends beyond the image"));
        }
        for p in region.pixels() {
            if *strength > out[p] {
                out[p] = *strength;
            }
        }
    }
    Ok(out)
}

/// Like [`aggregate_raw`] with a per-pixel strength grid for each patch.
pub fn aggregate_raw_per_pixel(
    patches: &[(PatchRegion, &Grid<f64>)],
    width: usize,
    height: usize,
) -> Result<Grid<f64>> {
    let mut out = Grid::zeros(width, height);
    for (region, strength) in patches {
        if strength.dims() != (width, height) {
            return Err(invalid("strength grid does not match the image"));
        }
        for p in region.pixels() {
            let s = strength[p];
            if s > out[p] {
                out[p] = s;
            }
        }
    }
    Ok(out)
}

/// Smoothing, percentile thresholding of the nonzero values, morphological
/// closing of the surviving support, and max-normalization.
///
/// Pixels added by the closing carry at least the threshold strength so the
/// bridged support stays visible in the output.
pub fn postprocess(
    raw: &Grid<f64>,
    smooth_sigma: f64,
    keep_percentile: f64,
    closing_radius: usize,
) -> Result<Grid<f64>> {
    let (w, h) = raw.dims();
    let smoothed = gaussian_filter(raw, smooth_sigma)?;
    let nonzero: Vec<f64> = smoothed.iter().copied().filter(|&v| v > 0.0).collect();
    if nonzero.is_empty() {
        return Ok(Grid::zeros(w, h));
    }
    let threshold = percentile(&nonzero, keep_percentile)?;
    let kept = smoothed.map(|&v| v > 0.0 && v >= threshold);
    let support = morphology::close(&kept, closing_radius);
    let restricted = smoothed.zip_map(&support, |&v, &s| if s { v.max(threshold) } else { 0.0 })?;
    let max = restricted.max_value();
    if !(max > 0.0) {
        return Ok(Grid::zeros(w, h));
    }
    Ok(restricted.map(|&v| v / max))
}

/// Intermediate products of one detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub edge_map: EdgeMap,
    pub differences: Vec<Grid<f64>>,
    pub contrasts: Vec<PatchContrast>,
    pub tau: f64,
    pub raw: Grid<f64>,
}

impl Detection {
    pub fn classified(&self) -> impl Iterator<Item = &PatchContrast> {
        let tau = self.tau;
        self.contrasts.iter().filter(move |c| c.contrast > tau)
    }
}

/// Full temporal-coherence edge detection over `maps` (at least two).
pub fn detect_edges(maps: &[EventMap], params: &DetectorParams) -> Result<EdgeMap> {
    detect_edges_detailed(maps, params).map(|d| d.edge_map)
}

pub fn detect_edges_detailed(maps: &[EventMap], params: &DetectorParams) -> Result<Detection> {
    if maps.len() < 2 {
        return Err(invalid("edge detection needs at least two event maps"));
    }
    params.validate()?;
    let grids: Vec<Grid<f64>> = maps.iter().map(EventMap::values).collect();
    detect_edges_grids(&grids, params)
}

/// Detection over plain grids of accumulated log-brightness change.
pub fn detect_edges_grids(grids: &[Grid<f64>], params: &DetectorParams) -> Result<Detection> {
    if grids.len() < 2 {
        return Err(invalid("edge detection needs at least two event maps"));
    }
    let (w, h) = grids[0].dims();
    let differences = grids
        .windows(2)
        .map(|pair| temporal_difference_grids(&pair[0], &pair[1], params.sigma))
        .collect::<Result<Vec<_>>>()?;
    let patch_grid = PatchGrid::new(w, h, params.patch_size.min(w).min(h), params.overlap)?;
    let contrasts = patch_contrast(&differences, &patch_grid)?;
    let values: Vec<f64> = contrasts.iter().map(|c| c.contrast).collect();
    let tau = adaptive_threshold(&values, params.tau_percentile)?;
    let classified: Vec<&PatchContrast> = contrasts.iter().filter(|c| c.contrast > tau).collect();
    let raw = match params.strength {
        StrengthMode::PatchContrast => {
            let pairs: Vec<(PatchRegion, f64)> = classified.iter().map(|c| (c.region, c.contrast)).collect();
            aggregate_raw(&pairs, w, h)?
        }
        StrengthMode::TemporalDifference => {
            let pairs: Vec<(PatchRegion, &Grid<f64>)> =
                classified.iter().map(|c| (c.region, &differences[c.best_pair])).collect();
            aggregate_raw_per_pixel(&pairs, w, h)?
        }
    };
    let values = postprocess(&raw, params.smooth_sigma, params.keep_percentile, params.closing_radius)?;
    Ok(Detection { edge_map: EdgeMap { values, params: *params }, differences, contrasts, tau, raw })
}
