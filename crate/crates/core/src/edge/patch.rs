use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::grid::Grid;

/// Square pixel region `[x, x + size) × [y, y + size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchRegion {
    pub x: usize,
    pub y: usize,
    pub size: usize,
}

impl PatchRegion {
    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.x + self.size && py >= self.y && py < self.y + self.size
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.y + self.size).flat_map(move |y| (self.x..self.x + self.size).map(move |x| (x, y)))
    }
}

/// Overlapping patch layout over a `width × height` image.
///
/// Anchors are stride-regular, with a final anchor clamped to the image
/// border when the regular ones leave pixels uncovered.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub overlap: f64,
    pub stride: usize,
    anchors_x: Vec<usize>,
    anchors_y: Vec<usize>,
}

fn anchors(extent: usize, size: usize, stride: usize) -> Vec<usize> {
    let last = extent - size;
    let mut out: Vec<usize> = (0..).map(|i| i * stride).take_while(|&a| a <= last).collect();
    if *out.last().expect("at least anchor 0") != last {
        out.push(last);
    }
    out
}

impl PatchGrid {
    pub fn new(width: usize, height: usize, patch_size: usize, overlap: f64) -> Result<Self> {
        if patch_size == 0 || patch_size > width || patch_size > height {
            return Err(invalid("patch size must be in [1, min(width, height)]"));
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(invalid("overlap ratio must lie in [0, 1)"));
        }
        let stride = ((patch_size as f64 * (1.0 - overlap)).round() as usize).max(1);
        Ok(Self {
            patch_size,
            overlap,
            stride,
            anchors_x: anchors(width, patch_size, stride),
            anchors_y: anchors(height, patch_size, stride),
        })
    }

    /// Patches in raster order of their anchors.
    pub fn regions(&self) -> impl Iterator<Item = PatchRegion> + '_ {
        self.anchors_y
            .iter()
            .flat_map(move |&y| self.anchors_x.iter().map(move |&x| PatchRegion { x, y, size: self.patch_size }))
    }

    pub fn len(&self) -> usize {
        self.anchors_x.len() * self.anchors_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Population variance of `grid` over `region`.
pub fn region_variance(grid: &Grid<f64>, region: &PatchRegion) -> f64 {
    let n = (region.size * region.size) as f64;
    let mean = region.pixels().map(|p| grid[p]).sum::<f64>() / n;
    region.pixels().map(|p| (grid[p] - mean).powi(2)).sum::<f64>() / n
}

/// Temporal contrast of one patch: the largest spatial variance over the
/// difference grids, and the index of the difference grid attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchContrast {
    pub region: PatchRegion,
    pub contrast: f64,
    pub best_pair: usize,
}

pub fn patch_contrast(differences: &[Grid<f64>], grid: &PatchGrid) -> Result<Vec<PatchContrast>> {
    let first = differences.first().ok_or_else(|| invalid("need at least one temporal difference"))?;
    for d in differences {
        d.ensure_same_shape(first)?;
    }
    Ok(grid
        .regions()
        .map(|region| {
            let (best_pair, contrast) = differences
                .iter()
                .map(|d| region_variance(d, &region))
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
            PatchContrast { region, contrast, best_pair }
        })
        .collect())
}

/// Linearly interpolated percentile (`q` in `[0, 100]`) of `values`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("percentile of an empty set"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(invalid("percentile must lie in [0, 100]"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Contrast threshold `τ`: the given percentile (exclusive of 0 and 100) of
/// the patch contrasts. Patches with `C > τ` count as edges.
pub fn adaptive_threshold(contrasts: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 100.0) {
        return Err(invalid("threshold percentile must lie in (0, 100)"));
    }
    percentile(contrasts, q)
}
