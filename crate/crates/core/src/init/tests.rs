use alloc::vec::Vec;

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use rand::{Rng, SeedableRng};

use super::*;

fn cam() -> CameraIntrinsics {
    CameraIntrinsics::new(50.0, 50.0, 31.5, 31.5, 64, 64).unwrap()
}

fn edge(center: (f64, f64), normal: (f64, f64)) -> EdgeGaussian2D {
    EdgeGaussian2D {
        center: Vector2::new(center.0, center.1),
        normal: Vector2::new(normal.0, normal.1).normalize(),
        tangent_extent: 4.0,
        normal_extent: 0.6,
        support_count: 10,
    }
}

#[test]
fn inverse_depth_endpoints_and_midpoint() {
    assert_eq!(sample_inverse_depth(0.0, 1.0, 3.0).unwrap(), 3.0);
    assert_eq!(sample_inverse_depth(1.0, 1.0, 3.0).unwrap(), 1.0);
    assert!((sample_inverse_depth(0.5, 1.0, 4.0).unwrap() - 1.6).abs() < 1e-12);
    assert!(sample_inverse_depth(0.5, 2.0, 2.0).is_err());
    assert!(sample_inverse_depth(0.5, 3.0, 2.0).is_err());
}

#[test]
fn backprojection() {
    let k = cam();
    let id = PoseSE3::identity();
    let p = backproject(&Vector2::new(k.cx, k.cy), 2.0, &k, &id);
    assert!((p - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-15);
    let p = backproject(&Vector2::new(k.cx + k.fx, k.cy), 1.0, &k, &id);
    assert!((p - Vector3::new(1.0, 0.0, 1.0)).norm() < 1e-15);
    let mut rng = SeededRng::seed_from_u64(5);
    let pose = PoseSE3::new(UnitQuaternion::from_euler_angles(0.1, -0.2, 0.3), Vector3::new(0.3, -0.1, 0.2));
    for _ in 0..50 {
        let x = Vector2::new(rng.random_range(0.0..64.0), rng.random_range(0.0..64.0));
        let d = rng.random_range(0.5..5.0);
        let w = backproject(&x, d, &k, &pose);
        let back = k.project(&pose.inverse_transform_point(&w));
        assert!((back - x).norm() < 1e-9);
    }
}

#[test]
fn budget_split() {
    let b = InitBudget::new(100, 0.3).unwrap();
    assert_eq!((b.n_edge(), b.n_random()), (30, 70));
    assert_eq!(InitBudget::new(100, 0.29).unwrap().n_edge(), 29);
    assert!(InitBudget::new(0, 0.3).is_err());
    assert_eq!((0..7).map(|i| samples_for(i, 7, 100)).collect::<Vec<_>>(), [15, 15, 14, 14, 14, 14, 14]);
}

#[test]
fn all_random_without_edge_ratio() {
    let params = InitParams { r_edge: 0.0, n_total: 50, ..InitParams::default() };
    let edges = [edge((10.0, 10.0), (1.0, 0.0))];
    let mut rng = SeededRng::seed_from_u64(1);
    let gs = initialize_gaussians(&edges, &cam(), &PoseSE3::identity(), &params, &mut rng).unwrap();
    assert_eq!(gs.len(), 50);
    assert!(gs.iter().all(|g| g.origin == Origin::Random));
}

#[test]
fn all_edge_budget_conservation() {
    let params = InitParams { r_edge: 1.0, n_total: 100, ..InitParams::default() };
    let edges: Vec<_> = (0..7).map(|i| edge((5.0 + 7.0 * i as f64, 20.0), (0.3, 1.0))).collect();
    let mut rng = SeededRng::seed_from_u64(2);
    let gs = initialize_gaussians(&edges, &cam(), &PoseSE3::identity(), &params, &mut rng).unwrap();
    assert_eq!(gs.len(), 100);
    assert_eq!(gs.iter().filter(|g| g.origin == Origin::Edge).count(), 100);
    for g in &gs {
        g.validate().unwrap();
        let z = g.mean.z;
        assert!(z >= params.d_min - 1e-12 && z <= params.d_max + 1e-12);
    }
}

#[test]
fn no_edges_means_all_random() {
    let params = InitParams { r_edge: 1.0, n_total: 10, ..InitParams::default() };
    let gs =
        initialize_gaussians(&[], &cam(), &PoseSE3::identity(), &params, &mut SeededRng::seed_from_u64(3)).unwrap();
    assert_eq!(gs.len(), 10);
    assert!(gs.iter().all(|g| g.origin == Origin::Random));
    let zero = InitParams { n_total: 0, ..params };
    assert!(initialize_gaussians(&[], &cam(), &PoseSE3::identity(), &zero, &mut SeededRng::seed_from_u64(3)).is_err());
}

#[test]
fn thinnest_axis_follows_edge_normal() {
    let k = cam();
    let pose = PoseSE3::new(UnitQuaternion::from_euler_angles(0.0, 0.3, 0.1), Vector3::new(0.1, 0.0, 0.0));
    let e = edge((40.0, 25.0), (0.6, 0.8));
    let params = InitParams { r_edge: 1.0, n_total: 4, ..InitParams::default() };
    let gs = initialize_gaussians(&[e], &k, &pose, &params, &mut SeededRng::seed_from_u64(4)).unwrap();
    for g in &gs {
        let r = g.rotation_matrix();
        let imin = (0..3).min_by(|&a, &b| g.scale[a].total_cmp(&g.scale[b])).unwrap();
        let axis = r.column(imin).into_owned();
        // Moving along the thin axis should shift the projection along the 2D normal.
        let c = pose.inverse_transform_point(&g.mean);
        let c2 = pose.inverse_transform_point(&(g.mean + axis * 1e-4));
        let shift = (k.project(&c2) - k.project(&c)).normalize();
        assert!(shift.dot(&e.normal).abs() > 1.0 - 1e-6);
        let cov = g.covariance();
        assert!(cov.symmetric_eigen().eigenvalues.iter().all(|&v| v > 0.0));
    }
}

#[test]
fn deterministic_for_seed() {
    let edges: Vec<_> = (0..5).map(|i| edge((5.0 + 9.0 * i as f64, 30.0), (1.0, 0.2))).collect();
    let p = InitParams::default();
    let a = initialize_gaussians(&edges, &cam(), &PoseSE3::identity(), &p, &mut SeededRng::seed_from_u64(9)).unwrap();
    let b = initialize_gaussians(&edges, &cam(), &PoseSE3::identity(), &p, &mut SeededRng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
}

// Chi-square goodness of fit against p(d) ∝ 1/d² on [d_min, d_max].
#[test]
fn depth_histogram_matches_density() {
    let (d_min, d_max) = (0.5, 4.0);
    let params = InitParams { r_edge: 1.0, n_total: 100_000, d_min, d_max, ..InitParams::default() };
    let gs = initialize_gaussians(
        &[edge((31.5, 31.5), (1.0, 0.0))],
        &cam(),
        &PoseSE3::identity(),
        &params,
        &mut SeededRng::seed_from_u64(1),
    )
    .unwrap();
    let bins = 20;
    let edges: Vec<f64> = (0..=bins).map(|i| d_min + (d_max - d_min) * i as f64 / bins as f64).collect();
    let cdf = |d: f64| (1.0 / d_min - 1.0 / d) / (1.0 / d_min - 1.0 / d_max);
    let mut counts = alloc::vec![0usize; bins];
    for g in &gs {
        let b = (((g.mean.z - d_min) / (d_max - d_min)) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let n = gs.len() as f64;
    let chi2: f64 = (0..bins)
        .map(|i| {
            let e = n * (cdf(edges[i + 1]) - cdf(edges[i]));
            (counts[i] as f64 - e).powi(2) / e
        })
        .sum();
    // 99th percentile of chi-square with 19 degrees of freedom.
    assert!(chi2 < 36.19, "chi2 = {chi2}");
}
