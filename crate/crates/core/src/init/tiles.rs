use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::Vector2;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::normals::canonicalize_normal;
use crate::error::{invalid, Result};

pub const MIN_EXTENT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGaussian2D {
    pub center: Vector2<f64>,
    pub normal: Vector2<f64>,
    pub tangent_extent: f64,
    pub normal_extent: f64,
    pub support_count: usize,
}

impl EdgeGaussian2D {
    pub fn tangent(&self) -> Vector2<f64> {
        Vector2::new(-self.normal.y, self.normal.x)
    }
}

/// Circular mean angle and circular standard deviation of axial normals
/// (angles modulo π).
pub fn axial_statistics(normals: &[Vector2<f64>]) -> (f64, f64) {
    let n = normals.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for v in normals {
        let a = 2.0 * v.y.atan2(v.x);
        c += a.cos();
        s += a.sin();
    }
    let (c, s) = (c / n, s / n);
    let r = (c * c + s * s).sqrt().min(1.0);
    let std = if r > 0.0 { 0.5 * (-2.0 * r.ln()).sqrt() } else { f64::INFINITY };
    (0.5 * s.atan2(c), std)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileParams {
    pub tile_size: usize,
    pub angle_threshold: f64,
    pub max_depth: usize,
}

impl Default for TileParams {
    fn default() -> Self {
        Self { tile_size: 32, angle_threshold: 0.2, max_depth: 3 }
    }
}

impl TileParams {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size < 2 {
            return Err(invalid("tile size must be at least 2"));
        }
        if !(self.angle_threshold > 0.0) {
            return Err(invalid("angle threshold must be positive"));
        }
        Ok(())
    }
}

fn emit(points: &[Vector2<f64>], normals: &[Vector2<f64>], members: &[usize]) -> EdgeGaussian2D {
    let n = members.len() as f64;
    let center = members.iter().fold(Vector2::zeros(), |acc, &i| acc + points[i]) / n;
    let dirs: Vec<_> = members.iter().map(|&i| normals[i]).collect();
    let (angle, _) = axial_statistics(&dirs);
    let normal = canonicalize_normal(Vector2::new(angle.cos(), angle.sin()));
    let tangent = Vector2::new(-normal.y, normal.x);
    let (mut vt, mut vn) = (0.0, 0.0);
    for &i in members {
        let d = points[i] - center;
        vt += d.dot(&tangent).powi(2);
        vn += d.dot(&normal).powi(2);
    }
    let normal_extent = (vn / n).sqrt().max(MIN_EXTENT);
    let tangent_extent = (vt / n).sqrt().max(normal_extent);
    EdgeGaussian2D { center, normal, tangent_extent, normal_extent, support_count: members.len() }
}

#[allow(clippy::too_many_arguments)]
fn fit_tile(
    points: &[Vector2<f64>],
    normals: &[Vector2<f64>],
    members: Vec<usize>,
    origin: Vector2<f64>,
    size: f64,
    depth: usize,
    params: &TileParams,
    out: &mut Vec<EdgeGaussian2D>,
) {
    if members.is_empty() {
        return;
    }
    let dirs: Vec<_> = members.iter().map(|&i| normals[i]).collect();
    let (_, std) = axial_statistics(&dirs);
    if std < params.angle_threshold || depth >= params.max_depth {
        out.push(emit(points, normals, &members));
        return;
    }
    let half = 0.5 * size;
    let mut quads: [Vec<usize>; 4] = Default::default();
    for i in members {
        let qx = usize::from(points[i].x >= origin.x + half);
        let qy = usize::from(points[i].y >= origin.y + half);
        quads[qy * 2 + qx].push(i);
    }
    for (q, m) in quads.into_iter().enumerate() {
        let o = origin + Vector2::new((q % 2) as f64 * half, (q / 2) as f64 * half);
        fit_tile(points, normals, m, o, half, depth + 1, params, out);
    }
}

/// Fits 2D edge Gaussians by recursively splitting `s×s` tiles until the
/// normals inside a tile agree within the angle threshold.
pub fn fit_edge_gaussians(
    points: &[Vector2<f64>],
    normals: &[Vector2<f64>],
    params: &TileParams,
) -> Result<Vec<EdgeGaussian2D>> {
    params.validate()?;
    if points.len() != normals.len() {
        return Err(crate::Error::ShapeMismatch { expected: (points.len(), 1), actual: (normals.len(), 1) });
    }
    let s = params.tile_size as f64;
    // Tiles are anchored at the pixel-center origin.
    let mut tiles: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = ((p.y / s).floor() as i64, (p.x / s).floor() as i64);
        tiles.entry(key).or_default().push(i);
    }
    let mut out = Vec::new();
    for ((ty, tx), members) in tiles {
        let origin = Vector2::new(tx as f64 * s, ty as f64 * s);
        fit_tile(points, normals, members, origin, s, 0, params, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::edge_normals;

    fn fit(pts: &[Vector2<f64>], params: &TileParams) -> Vec<EdgeGaussian2D> {
        let normals: Vec<_> = edge_normals(pts, 4).unwrap().iter().map(|n| n.normal).collect();
        fit_edge_gaussians(pts, &normals, params).unwrap()
    }

    #[test]
    fn straight_edge_single_gaussian() {
        let dir = Vector2::new(0.8, 0.6);
        let pts: Vec<_> = (0..20).map(|i| Vector2::new(4.0, 5.0) + dir * i as f64).collect();
        let g = fit(&pts, &TileParams::default());
        assert_eq!(g.len(), 1);
        let expected = canonicalize_normal(Vector2::new(-0.6, 0.8));
        assert!((g[0].normal - expected).norm() < 1e-6);
        assert_eq!(g[0].support_count, 20);
        assert!(g[0].tangent_extent >= g[0].normal_extent && g[0].normal_extent >= MIN_EXTENT);
        assert!((g[0].normal.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn corner_subdivides() {
        // Horizontal arm along y = 4, vertical arm along x = 20.
        let mut pts: Vec<_> = (2..=20).map(|x| Vector2::new(x as f64, 4.0)).collect();
        pts.extend((5..=28).map(|y| Vector2::new(20.0, y as f64)));
        let normals: Vec<_> = pts
            .iter()
            .map(|p| if p.y == 4.0 && p.x < 20.0 { Vector2::new(0.0, 1.0) } else { Vector2::new(1.0, 0.0) })
            .collect();
        let params = TileParams { tile_size: 32, angle_threshold: 0.05, max_depth: 3 };
        let (_, whole) = axial_statistics(&normals);
        assert!(whole > params.angle_threshold);
        let out = fit_edge_gaussians(&pts, &normals, &params).unwrap();
        assert!(out.len() > 1);
        assert_eq!(out.iter().map(|g| g.support_count).sum::<usize>(), pts.len());
        for g in &out {
            assert!(g.normal == Vector2::new(1.0, 0.0) || (g.normal - Vector2::new(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn depth_cap() {
        let pts: Vec<_> = (0..40).map(|i| Vector2::new((i * 7 % 64) as f64, (i * 13 % 64) as f64)).collect();
        let normals: Vec<_> = (0..40).map(|i| Vector2::new((i as f64).cos(), (i as f64).sin())).collect();
        let params = TileParams { tile_size: 32, angle_threshold: 1e-6, max_depth: 0 };
        let out = fit_edge_gaussians(&pts, &normals, &params).unwrap();
        let mut tiles: Vec<_> = pts.iter().map(|p| ((p.x / 32.0) as i32, (p.y / 32.0) as i32)).collect();
        tiles.sort();
        tiles.dedup();
        assert_eq!(out.len(), tiles.len());
    }

    #[test]
    fn axial_wraparound() {
        let a = 0.02f64;
        let ns = [Vector2::new(a.cos(), a.sin()), Vector2::new(-a.cos(), a.sin())];
        let (_, std) = axial_statistics(&ns);
        assert!(std < 0.05);
    }
}
