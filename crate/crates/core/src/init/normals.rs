use alloc::vec::Vec;

use nalgebra::Vector2;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::edge::EdgeMap;
use crate::error::{invalid, Error, Result};

/// Pixel centers with `M(x) ≥ confidence_min`, in raster order.
pub fn extract_edge_points(map: &EdgeMap, confidence_min: f64) -> Result<Vec<Vector2<f64>>> {
    if !(confidence_min > 0.0 && confidence_min <= 1.0) {
        return Err(invalid("confidence_min must lie in (0, 1]"));
    }
    let w = map.width();
    Ok(map
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= confidence_min)
        .map(|(i, _)| Vector2::new((i % w) as f64, (i / w) as f64))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalEstimate {
    pub normal: Vector2<f64>,
    /// Neighborhood scatter had no dominant direction.
    pub degenerate: bool,
}

/// Flips `n` so that `x ≥ 0`, or `y ≥ 0` when `x` vanishes.
pub fn canonicalize_normal(n: Vector2<f64>) -> Vector2<f64> {
    const EPS: f64 = 1e-12;
    if n.x < -EPS || (n.x.abs() <= EPS && n.y < 0.0) {
        -n
    } else {
        n
    }
}

/// Tangent direction of the dominant eigenvector of a 2×2 scatter, or `None`
/// if the scatter is isotropic.
pub fn principal_direction(sxx: f64, sxy: f64, syy: f64) -> Option<Vector2<f64>> {
    let aniso = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).sqrt();
    let trace = sxx + syy;
    if !(aniso > 1e-9 * trace) || trace <= 0.0 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(Vector2::new(theta.cos(), theta.sin()))
}

fn neighbor_order(points: &[Vector2<f64>], i: usize, a: usize, b: usize) -> core::cmp::Ordering {
    let p = points[i];
    let da = (points[a] - p).norm_squared();
    let db = (points[b] - p).norm_squared();
    // Coordinates break distance ties so the result ignores input order.
    da.total_cmp(&db).then(points[a].y.total_cmp(&points[b].y)).then(points[a].x.total_cmp(&points[b].x))
}

/// Normal of the tangent fitted by PCA to each point and its `k` nearest
/// neighbors.
pub fn edge_normals(points: &[Vector2<f64>], k: usize) -> Result<Vec<NormalEstimate>> {
    if k < 2 {
        return Err(invalid("edge normal neighborhood k must be at least 2"));
    }
    if points.len() < k + 1 {
        return Err(Error::NotEnoughPoints { needed: k + 1, got: points.len() });
    }
    let estimate = |i: usize| {
        let mut idx: Vec<usize> = (0..points.len()).filter(|&j| j != i).collect();
        idx.select_nth_unstable_by(k - 1, |&a, &b| neighbor_order(points, i, a, b));
        idx.truncate(k);
        idx.sort_by(|&a, &b| neighbor_order(points, i, a, b));
        idx.insert(0, i);
        let n = idx.len() as f64;
        let mean = idx.iter().fold(Vector2::zeros(), |acc, &j| acc + points[j]) / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &j in &idx {
            let d = points[j] - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        match principal_direction(sxx, sxy, syy) {
            Some(t) => NormalEstimate { normal: canonicalize_normal(Vector2::new(-t.y, t.x)), degenerate: false },
            None => NormalEstimate { normal: Vector2::new(1.0, 0.0), degenerate: true },
        }
    };
    Ok(crate::par::map_indexed(points.len(), estimate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge::{DetectorParams, EdgeMap};
    use crate::grid::Grid;
    use alloc::vec;

    #[test]
    fn extraction() {
        let mut m = EdgeMap::zeros(5, 4, DetectorParams::default());
        assert!(extract_edge_points(&m, 0.5).unwrap().is_empty());
        m.values.as_mut_slice()[2 * 5 + 3] = 1.0;
        assert_eq!(extract_edge_points(&m, 0.5).unwrap(), vec![Vector2::new(3.0, 2.0)]);
        let vals = Grid::from_fn(9, 7, |x, y| ((x * 31 + y * 17) % 11) as f64 / 10.0);
        m.values = vals.clone();
        let brute = vals.iter().filter(|&&v| v >= 0.35).count();
        assert_eq!(extract_edge_points(&m, 0.35).unwrap().len(), brute);
        assert!(extract_edge_points(&m, 0.0).is_err());
    }

    #[test]
    fn horizontal_line() {
        let pts: Vec<_> = (0..20).map(|i| Vector2::new(i as f64, 5.0)).collect();
        for n in edge_normals(&pts, 8).unwrap() {
            assert!(!n.degenerate);
            assert!(n.normal.x.abs() < 1e-12 && (n.normal.y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_line() {
        let pts: Vec<_> = (0..20).map(|i| Vector2::new(i as f64, i as f64)).collect();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        for n in edge_normals(&pts, 8).unwrap() {
            assert!((n.normal - Vector2::new(s, -s)).norm() < 1e-9);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let base: Vec<_> = (0..15).map(|i| Vector2::new(i as f64 * 0.7, 0.1 * (i as f64 * 0.9).sin())).collect();
        let phi: f64 = 0.6;
        let (c, s) = (phi.cos(), phi.sin());
        let rotated: Vec<_> = base.iter().map(|p| Vector2::new(c * p.x - s * p.y, s * p.x + c * p.y)).collect();
        let a = edge_normals(&base, 6).unwrap();
        let b = edge_normals(&rotated, 6).unwrap();
        for (na, nb) in a.iter().zip(&b) {
            let r = Vector2::new(c * na.normal.x - s * na.normal.y, s * na.normal.x + c * na.normal.y);
            // Axial comparison: equal up to sign.
            assert!((r.dot(&nb.normal).abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn permutation_invariance() {
        let pts: Vec<_> = (0..6)
            .flat_map(|y| (0..6).map(move |x| Vector2::new(x as f64, (y * y) as f64 * 0.3 + x as f64 * 0.2)))
            .collect();
        let a = edge_normals(&pts, 5).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.reverse();
        perm.swap(3, 17);
        let shuffled: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
        let b = edge_normals(&shuffled, 5).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            assert_eq!(a[i], b[j]);
        }
    }

    #[test]
    fn degenerate_and_too_few() {
        let pts = vec![Vector2::new(2.0, 2.0); 5];
        let n = edge_normals(&pts, 3).unwrap();
        assert!(n.iter().all(|e| e.degenerate && e.normal == Vector2::new(1.0, 0.0)));
        assert!(matches!(edge_normals(&pts, 5), Err(Error::NotEnoughPoints { .. })));
    }
}
