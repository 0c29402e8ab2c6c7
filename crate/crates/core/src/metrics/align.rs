use alloc::vec::Vec;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::geometry::PoseSE3;

/// Default nearest-timestamp association tolerance (1 ms).
pub const DEFAULT_ASSOCIATION_TOLERANCE_US: u64 = 1000;

/// Time-stamped camera-to-world poses with strictly increasing timestamps (µs).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<(u64, PoseSE3)>,
}

impl Trajectory {
    pub fn new(samples: Vec<(u64, PoseSE3)>) -> Result<Self> {
        if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(invalid("trajectory timestamps must be strictly increasing"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(u64, PoseSE3)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Applies `transform · pose` to every sample.
    pub fn transformed(&self, transform: &PoseSE3) -> Self {
        Self { samples: self.samples.iter().map(|(t, p)| (*t, transform.compose(p))).collect() }
    }

    fn nearest(&self, t: u64) -> Option<&(u64, PoseSE3)> {
        let i = self.samples.partition_point(|s| s.0 < t);
        let after = self.samples.get(i);
        let before = i.checked_sub(1).and_then(|j| self.samples.get(j));
        match (before, after) {
            (Some(b), Some(a)) => Some(if t - b.0 <= a.0 - t { b } else { a }),
            (b, a) => b.or(a),
        }
    }
}

/// Rigid (optionally similarity) transform mapping estimated onto reference positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub transform: PoseSE3,
    pub scale: f64,
    pub n_pairs: usize,
    /// Estimated samples without a reference sample within tolerance.
    pub dropped: usize,
    /// Point sets are (nearly) collinear, leaving rotation about the line undetermined.
    pub degenerate: bool,
}

/// Matched `(estimated, reference)` positions.
type Pairs = Vec<(Vector3<f64>, Vector3<f64>)>;

fn associate(est: &Trajectory, gt: &Trajectory, tolerance_us: u64) -> (Pairs, usize) {
    let mut pairs = Vec::new();
    let mut dropped = 0;
    for (t, pose) in est.samples() {
        match gt.nearest(*t) {
            Some((tg, pg)) if t.abs_diff(*tg) <= tolerance_us => pairs.push((pose.translation, pg.translation)),
            _ => dropped += 1,
        }
    }
    (pairs, dropped)
}

/// Closed-form least-squares alignment of paired points `R · src + t ≈ dst`
/// (with a scale factor when `with_scale`).
fn umeyama(
    pairs: &[(Vector3<f64>, Vector3<f64>)],
    with_scale: bool,
) -> Result<(Matrix3<f64>, Vector3<f64>, f64, bool)> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::NotEnoughPoints { needed: 3, got: n });
    }
    let inv_n = 1.0 / n as f64;
    let mu_src = pairs.iter().fold(Vector3::zeros(), |acc, (s, _)| acc + s) * inv_n;
    let mu_dst = pairs.iter().fold(Vector3::zeros(), |acc, (_, d)| acc + d) * inv_n;
    let mut cov = Matrix3::zeros();
    let mut var_src = 0.0;
    for (s, d) in pairs {
        let (ds, dd) = (s - mu_src, d - mu_dst);
        cov += dd * ds.transpose();
        var_src += ds.norm_squared();
    }
    cov *= inv_n;
    var_src *= inv_n;

    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Degenerate("SVD did not converge".into())),
    };
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let degenerate = sv[order[1]] <= 1e-12 * sv[order[0]].max(f64::MIN_POSITIVE);
    let mut s = Matrix3::identity();
    if (u.determinant() * v_t.determinant()) < 0.0 {
        // Flip the direction of the smallest singular value.
        s[(order[2], order[2])] = -1.0;
    }
    let rotation = u * s * v_t;
    let scale = if with_scale && var_src > 0.0 { (Matrix3::from_diagonal(&sv) * s).trace() / var_src } else { 1.0 };
    let translation = mu_dst - scale * rotation * mu_src;
    Ok((rotation, translation, scale, degenerate))
}

/// Rigid transform mapping `est` positions onto timestamp-associated `gt`
/// positions.
pub fn umeyama_align(est: &Trajectory, gt: &Trajectory) -> Result<Alignment> {
    align(est, gt, DEFAULT_ASSOCIATION_TOLERANCE_US, false)
}

pub fn align(est: &Trajectory, gt: &Trajectory, tolerance_us: u64, with_scale: bool) -> Result<Alignment> {
    let (pairs, dropped) = associate(est, gt, tolerance_us);
    let (r, t, scale, degenerate) = umeyama(&pairs, with_scale)?;
    let rotation = UnitQuaternion::from_matrix(&r);
    Ok(Alignment { transform: PoseSE3::new(rotation, t), scale, n_pairs: pairs.len(), dropped, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AteReport {
    pub rmse: f64,
    pub alignment: Alignment,
}

/// Absolute trajectory error after alignment.
pub fn ate(est: &Trajectory, gt: &Trajectory, tolerance_us: u64, with_scale: bool) -> Result<AteReport> {
    let alignment = align(est, gt, tolerance_us, with_scale)?;
    let (pairs, _) = associate(est, gt, tolerance_us);
    let r = alignment.transform.rotation;
    let t = alignment.transform.translation;
    let sum: f64 = pairs.iter().map(|(e, g)| (alignment.scale * (r * e) + t - g).norm_squared()).sum();
    Ok(AteReport { rmse: (sum / pairs.len() as f64).sqrt(), alignment })
}

/// Position RMSE (meters) after rigid alignment.
pub fn ate_rmse(est: &Trajectory, gt: &Trajectory) -> Result<f64> {
    ate(est, gt, DEFAULT_ASSOCIATION_TOLERANCE_US, false).map(|r| r.rmse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn curve(n: usize) -> Trajectory {
        Trajectory::new(
            (0..n)
                .map(|i| {
                    let s = i as f64 * 0.1;
                    (
                        i as u64 * 10_000,
                        PoseSE3::new(
                            UnitQuaternion::from_euler_angles(0.1 * s, -0.2 * s, 0.05),
                            Vector3::new(s.cos(), (2.0 * s).sin(), 0.3 * s),
                        ),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_trajectories() {
        let gt = curve(30);
        let a = umeyama_align(&gt, &gt).unwrap();
        assert!(a.transform.rotation.angle() < 1e-12);
        assert!(a.transform.translation.norm() < 1e-12);
        assert!(ate_rmse(&gt, &gt).unwrap() < 1e-12);
    }

    #[test]
    fn recovers_inverse_of_known_transform() {
        let gt = curve(40);
        let t = PoseSE3::new(UnitQuaternion::from_euler_angles(0.7, -1.1, 2.3), Vector3::new(3.0, -2.0, 0.5));
        let est = gt.transformed(&t);
        let a = umeyama_align(&est, &gt).unwrap();
        let inv = t.inverse();
        let (dr, dt) = a.transform.distance(&inv);
        assert!(dr < 1e-9 && dt < 1e-9, "{dr} {dt}");
        assert!(ate_rmse(&est, &gt).unwrap() < 1e-9);
    }

    #[test]
    fn too_few_pairs() {
        let gt = curve(2);
        assert_eq!(umeyama_align(&gt, &gt).unwrap_err(), Error::NotEnoughPoints { needed: 3, got: 2 });
    }

    #[test]
    fn collinear_is_flagged() {
        let line = Trajectory::new(
            (0..10).map(|i| (i * 1000, PoseSE3::from_translation(Vector3::new(i as f64, 0.0, 0.0)))).collect(),
        )
        .unwrap();
        let a = umeyama_align(&line, &line).unwrap();
        assert!(a.degenerate);
        assert!(ate_rmse(&line, &line).unwrap() < 1e-12);
    }

    #[test]
    fn association_drops_far_samples() {
        let gt = curve(10);
        let mut shifted: Vec<_> = gt.samples().to_vec();
        shifted.push((10_000_000, PoseSE3::identity()));
        let est = Trajectory::new(shifted).unwrap();
        let a = umeyama_align(&est, &gt).unwrap();
        assert_eq!(a.dropped, 1);
        assert_eq!(a.n_pairs, 10);
        assert!(Trajectory::new(vec![(5, PoseSE3::identity()), (5, PoseSE3::identity())]).is_err());
    }
}
