//! Edge-guided Gaussian initialization.

mod normals;
mod tiles;

use alloc::vec::Vec;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};

pub use normals::{canonicalize_normal, edge_normals, extract_edge_points, principal_direction, NormalEstimate};
pub use tiles::{axial_statistics, fit_edge_gaussians, EdgeGaussian2D, TileParams, MIN_EXTENT};

use crate::edge::EdgeMap;
use crate::error::{invalid, Result};
use crate::geometry::{CameraIntrinsics, PoseSE3};
use crate::splat::{Gaussian3D, Origin};
use crate::SeededRng;

/// Inverse-depth sample: `u = 0` gives `d_max`, `u = 1` gives `d_min`.
pub fn sample_inverse_depth(u: f64, d_min: f64, d_max: f64) -> Result<f64> {
    if !(d_min > 0.0 && d_min < d_max) {
        return Err(invalid("depth range must satisfy 0 < d_min < d_max"));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(invalid("inverse-depth sample u must lie in [0, 1]"));
    }
    if u == 0.0 {
        return Ok(d_max);
    }
    if u == 1.0 {
        return Ok(d_min);
    }
    let d = 1.0 / (1.0 / d_max + u * (1.0 / d_min - 1.0 / d_max));
    Ok(d.clamp(d_min, d_max))
}

/// World point at camera depth `d` along the ray through `pixel`.
pub fn backproject(pixel: &Vector2<f64>, d: f64, k: &CameraIntrinsics, pose: &PoseSE3) -> Vector3<f64> {
    pose.transform_point(&(k.unproject(pixel) * d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitBudget {
    pub n_total: usize,
    pub r_edge: f64,
}

impl InitBudget {
    pub fn new(n_total: usize, r_edge: f64) -> Result<Self> {
        let b = Self { n_total, r_edge };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_total == 0 {
            return Err(invalid("Gaussian budget must be positive"));
        }
        if !(0.0..=1.0).contains(&self.r_edge) {
            return Err(invalid("edge ratio must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn n_edge(&self) -> usize {
        // The small offset absorbs products like 0.29·100 = 28.999….
        let n = (self.r_edge * self.n_total as f64 + 1e-9).floor() as usize;
        n.min(self.n_total)
    }

    pub fn n_random(&self) -> usize {
        self.n_total - self.n_edge()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParams {
    pub confidence_min: f64,
    pub knn: usize,
    pub tiles: TileParams,
    pub n_total: usize,
    pub r_edge: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub opacity: f64,
    pub color: f64,
    /// Projected size of new Gaussians, pixels.
    pub base_scale_px: f64,
}

impl Default for InitParams {
    fn default() -> Self {
        Self {
            confidence_min: 0.5,
            knn: 8,
            tiles: TileParams::default(),
            n_total: 300,
            r_edge: 0.3,
            d_min: 0.5,
            d_max: 5.0,
            opacity: 0.5,
            color: 0.5,
            base_scale_px: 1.5,
        }
    }
}

impl InitParams {
    pub fn budget(&self) -> InitBudget {
        InitBudget { n_total: self.n_total, r_edge: self.r_edge }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confidence_min > 0.0 && self.confidence_min <= 1.0) {
            return Err(invalid("confidence_min must lie in (0, 1]"));
        }
        if self.knn < 2 {
            return Err(invalid("knn must be at least 2"));
        }
        self.tiles.validate()?;
        self.budget().validate()?;
        if !(self.d_min > 0.0 && self.d_min < self.d_max) {
            return Err(invalid("depth range must satisfy 0 < d_min < d_max"));
        }
        if !(self.opacity > 0.0 && self.opacity < 1.0) {
            return Err(invalid("initial opacity must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.color) {
            return Err(invalid("initial color must lie in [0, 1]"));
        }
        if !(self.base_scale_px > 0.0) {
            return Err(invalid("base scale must be positive"));
        }
        Ok(())
    }
}

/// Number of depth samples for edge Gaussian `i` out of `n_g`.
pub fn samples_for(i: usize, n_g: usize, n_edge: usize) -> usize {
    let n_d = n_edge / n_g;
    let leftover = n_edge - n_d * n_g;
    n_d + usize::from(i < leftover)
}

// Generator for item `index` of a family; independent of evaluation order.
fn item_rng(seed: u64, family: u64, index: usize) -> SeededRng {
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream((family << 48) | index as u64);
    rng
}

fn edge_gaussian_3d(
    g: &EdgeGaussian2D,
    d: f64,
    k: &CameraIntrinsics,
    pose: &PoseSE3,
    params: &InitParams,
) -> Gaussian3D {
    let ray = k.unproject(&g.center).normalize();
    let n_img = Vector3::new(g.normal.x / k.fx, g.normal.y / k.fy, 0.0);
    let n3 = (n_img - ray * ray.dot(&n_img)).normalize();
    let t3 = n3.cross(&ray);
    let axes_cam = Matrix3::from_columns(&[t3, n3, ray]);
    let axes = pose.rotation_matrix() * axes_cam;
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(axes));
    let px = d / k.fx;
    let base = params.base_scale_px;
    let scale = Vector3::new(g.tangent_extent.max(base) * px, 0.5 * g.normal_extent.min(base) * px, base * px);
    Gaussian3D {
        mean: backproject(&g.center, d, k, pose),
        scale,
        rotation: *rotation.quaternion(),
        opacity: params.opacity,
        color: params.color,
        origin: Origin::Edge,
    }
}

fn random_gaussian(rng: &mut SeededRng, k: &CameraIntrinsics, pose: &PoseSE3, params: &InitParams) -> Gaussian3D {
    let pixel =
        Vector2::new(rng.random_range(-0.5..k.width as f64 - 0.5), rng.random_range(-0.5..k.height as f64 - 0.5));
    // Uniform in frustum volume: depth density ∝ d².
    let (a, b) = (params.d_min.powi(3), params.d_max.powi(3));
    let u: f64 = rng.random();
    let d = (a + u * (b - a)).cbrt().clamp(params.d_min, params.d_max);
    let mut g = Gaussian3D::isotropic(
        backproject(&pixel, d, k, pose),
        params.base_scale_px * d / k.fx,
        params.opacity,
        params.color,
    );
    g.origin = Origin::Random;
    g
}

/// Lifts 2D edge Gaussians to 3D by inverse-depth sampling and fills the rest
/// of the budget with random frustum points.
pub fn initialize_gaussians<R: RngCore>(
    edge_gaussians: &[EdgeGaussian2D],
    k: &CameraIntrinsics,
    pose: &PoseSE3,
    params: &InitParams,
    rng: &mut R,
) -> Result<Vec<Gaussian3D>> {
    params.validate()?;
    let budget = params.budget();
    let n_g = edge_gaussians.len();
    let (n_edge, n_random) = if n_g == 0 { (0, budget.n_total) } else { (budget.n_edge(), budget.n_random()) };
    let seed = rng.next_u64();
    let per_edge = crate::par::map_indexed(n_g, |i| {
        let mut r = item_rng(seed, 1, i);
        (0..samples_for(i, n_g, n_edge))
            .map(|_| {
                let u: f64 = r.random();
                let d = sample_inverse_depth(u, params.d_min, params.d_max).expect("validated range");
                edge_gaussian_3d(&edge_gaussians[i], d, k, pose, params)
            })
            .collect::<Vec<_>>()
    });
    let mut out: Vec<Gaussian3D> = per_edge.into_iter().flatten().collect();
    out.extend(crate::par::map_indexed(n_random, |j| random_gaussian(&mut item_rng(seed, 2, j), k, pose, params)));
    debug_assert_eq!(out.len(), budget.n_total);
    Ok(out)
}

/// Full chain from an edge map: points, normals, tiles, lifting.
pub fn initialize_from_edge_map<R: RngCore>(
    map: &EdgeMap,
    k: &CameraIntrinsics,
    pose: &PoseSE3,
    params: &InitParams,
    rng: &mut R,
) -> Result<(Vec<EdgeGaussian2D>, Vec<Gaussian3D>)> {
    params.validate()?;
    let points = extract_edge_points(map, params.confidence_min)?;
    let edges = if points.len() > params.knn {
        let normals: Vec<_> = edge_normals(&points, params.knn)?.into_iter().map(|n| n.normal).collect();
        fit_edge_gaussians(&points, &normals, &params.tiles)?
    } else {
        Vec::new()
    };
    let gaussians = initialize_gaussians(&edges, k, pose, params, rng)?;
    Ok((edges, gaussians))
}

#[cfg(test)]
mod tests;
