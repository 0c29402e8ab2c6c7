use alloc::vec::Vec;

use nalgebra::{Quaternion, UnitQuaternion, Vector3, Vector6};
use rand::{Rng, SeedableRng};

use super::*;
use crate::edge::{DetectorParams, EdgeMap};
use crate::event::{Chunk, Event, EventStream, Polarity};
use crate::geometry::{CameraIntrinsics, PoseSE3};
use crate::grid::Grid;
use crate::splat::{Gaussian3D, Origin};
use crate::{Error, SeededRng};

fn camera() -> CameraIntrinsics {
    CameraIntrinsics::new(20.0, 20.0, 11.5, 11.5, 24, 24).unwrap()
}

fn scene(seed: u64, n: usize) -> Vec<Gaussian3D> {
    let mut rng = SeededRng::seed_from_u64(seed);
    (0..n)
        .map(|_| Gaussian3D {
            mean: Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(1.0..2.0)),
            scale: Vector3::new(
                rng.random_range(0.05..0.12),
                rng.random_range(0.05..0.12),
                rng.random_range(0.05..0.12),
            ),
            rotation: Quaternion::new(1.0, rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 0.1),
            opacity: rng.random_range(0.3..0.8),
            color: rng.random_range(0.4..0.9),
            origin: Origin::Random,
        })
        .collect()
}

fn random_events(seed: u64, n: usize, t_end: u64) -> Vec<Event> {
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut ev: Vec<Event> = (0..n)
        .map(|_| {
            let p = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            Event::new(rng.random_range(0..t_end), rng.random_range(0..24), rng.random_range(0..24), p)
        })
        .collect();
    ev.sort_by_key(|e| e.sort_key());
    ev
}

fn chunk(events: &[Event], t_start: u64, t_end: u64) -> Chunk<'_> {
    Chunk { index: 0, t_start, t_end, events, width: 24, height: 24 }
}

fn params() -> SupervisionParams {
    SupervisionParams { n_samples: 3, dt_min: 2_000, dt_max: 6_000, ..SupervisionParams::default() }
}

fn edge_grid() -> Grid<f64> {
    Grid::from_fn(24, 24, |x, y| if (x + y) % 5 == 0 { 0.8 } else { 0.0 })
}

#[test]
fn static_camera_static_scene_has_zero_loss() {
    let s = scene(1, 6);
    let pose = PoseSE3::from_translation(Vector3::new(0.02, 0.0, 0.0));
    let traj = ChunkTrajectory::new(0, pose, pose, 0, 10_000);
    let c = chunk(&[], 0, 10_000);
    let sup =
        supervise_chunk(&c, &traj, &s, &camera(), &edge_grid(), &params(), &mut SeededRng::seed_from_u64(2)).unwrap();
    assert_eq!(sup.loss.total, 0.0);
    assert_eq!(sup.grad_end, Vector6::zeros());
}

#[test]
fn empty_chunk_is_rejected() {
    let c = chunk(&[], 5, 5);
    let traj = ChunkTrajectory::new(0, PoseSE3::identity(), PoseSE3::identity(), 5, 5);
    assert!(supervise_chunk(
        &c,
        &traj,
        &scene(1, 2),
        &camera(),
        &edge_grid(),
        &params(),
        &mut SeededRng::seed_from_u64(2)
    )
    .is_err());
}

#[test]
fn intervals_are_clamped_to_chunk() {
    let c = chunk(&[], 0, 3_000);
    let p = SupervisionParams { n_samples: 50, dt_min: 2_000, dt_max: 9_000, ..params() };
    let ivs = draw_intervals(&c, &p, &mut SeededRng::seed_from_u64(4)).unwrap();
    assert_eq!(ivs.len(), 50);
    assert!(ivs.iter().all(|&(a, b)| a < 3_000 && b <= 3_000 && a < b));
}

fn fixture() -> (Vec<Event>, Vec<Gaussian3D>, PoseSE3, PoseSE3) {
    let start = PoseSE3::new(UnitQuaternion::from_euler_angles(0.01, -0.02, 0.0), Vector3::new(0.01, 0.0, 0.0));
    let end = PoseSE3::new(UnitQuaternion::from_euler_angles(0.03, 0.01, 0.02), Vector3::new(0.05, -0.02, 0.01));
    (random_events(9, 600, 20_000), scene(3, 6), start, end)
}

#[test]
fn pose_gradients_match_finite_differences() {
    let (events, s, start, end) = fixture();
    let c = chunk(&events, 0, 20_000);
    let k = camera();
    let m = edge_grid();
    let p = params();
    let ivs = draw_intervals(&c, &p, &mut SeededRng::seed_from_u64(5)).unwrap();
    let eval = |a: &PoseSE3, b: &PoseSE3| {
        let traj = ChunkTrajectory::new(0, *a, *b, 0, 20_000);
        evaluate_intervals(&c, &traj, &s, &k, &m, &p, &ivs).unwrap()
    };
    let base = eval(&start, &end);
    let h = 1e-6;
    for i in 0..12 {
        let mut xi = Vector6::zeros();
        xi[i % 6] = h;
        let (fp, fm, analytic) = if i < 6 {
            (eval(&start.retract_left(&xi), &end), eval(&start.retract_left(&(-xi)), &end), base.grad_start[i])
        } else {
            (eval(&start, &end.retract_left(&xi)), eval(&start, &end.retract_left(&(-xi))), base.grad_end[i - 6])
        };
        let fd = (fp.loss.total - fm.loss.total) / (2.0 * h);
        let scale = base.grad_start.norm().max(base.grad_end.norm());
        assert!(
            (fd - analytic).abs() <= 1e-3 * fd.abs().max(analytic.abs()) + 1e-6 * scale,
            "coordinate {i}: {analytic} vs {fd}"
        );
    }
}

#[test]
fn scene_gradients_match_finite_differences() {
    let (events, s, start, end) = fixture();
    let c = chunk(&events, 0, 20_000);
    let k = camera();
    let m = edge_grid();
    let p = params();
    let ivs = draw_intervals(&c, &p, &mut SeededRng::seed_from_u64(6)).unwrap();
    let traj = ChunkTrajectory::new(0, start, end, 0, 20_000);
    let eval = |sc: &[Gaussian3D]| evaluate_intervals(&c, &traj, sc, &k, &m, &p, &ivs).unwrap();
    let base = eval(&s);
    let h = 1e-6;
    for gi in 0..s.len() {
        for axis in 0..3 {
            let mut a = s.clone();
            a[gi].mean[axis] += h;
            let mut b = s.clone();
            b[gi].mean[axis] -= h;
            let fd = (eval(&a).loss.total - eval(&b).loss.total) / (2.0 * h);
            let an = base.scene[gi].mean[axis];
            assert!((fd - an).abs() <= 1e-3 * fd.abs().max(an.abs()) + 1e-8, "{gi}/{axis}: {an} vs {fd}");
        }
        let mut a = s.clone();
        a[gi].color += h;
        let mut b = s.clone();
        b[gi].color -= h;
        let fd = (eval(&a).loss.total - eval(&b).loss.total) / (2.0 * h);
        let an = base.scene[gi].color;
        assert!((fd - an).abs() <= 1e-3 * fd.abs().max(an.abs()) + 1e-8);
    }
}

fn slam_params() -> SlamParams {
    SlamParams {
        chunk_duration: 10_000,
        window: 2,
        tracking_iterations: 5,
        mapping_iterations: 5,
        supervision: params(),
        ..SlamParams::default()
    }
}

fn empty_edge_map() -> EdgeMap {
    EdgeMap::zeros(24, 24, DetectorParams::default())
}

#[test]
fn zero_motion_tracking_stays_at_identity() {
    let state = WindowState::new(scene(7, 5));
    let before = state.scene.clone();
    let c = chunk(&[], 0, 10_000);
    let mut log = Vec::new();
    let tr = track_chunk(
        &state,
        &c,
        &empty_edge_map(),
        &camera(),
        &slam_params(),
        &mut SeededRng::seed_from_u64(1),
        &mut log,
    )
    .unwrap();
    let (r, t) = tr.t_end.distance(&PoseSE3::identity());
    assert!(r < 1e-3 && t < 1e-3);
    assert_eq!(state.scene, before);
    assert_eq!(log.len(), 5);
    assert!(log.iter().all(|r| r.phase == Phase::Tracking));
}

#[test]
fn constant_velocity_extrapolation() {
    let a = PoseSE3::new(UnitQuaternion::from_euler_angles(0.0, 0.1, 0.0), Vector3::new(0.1, 0.0, 0.0));
    let step = PoseSE3::new(UnitQuaternion::from_euler_angles(0.0, 0.05, 0.01), Vector3::new(0.02, 0.0, -0.01));
    let b = a.compose(&step);
    let prev = ChunkTrajectory::new(0, a, b, 0, 10);
    let (r, t) = extrapolate(&prev).distance(&b.compose(&step));
    assert!(r < 1e-12 && t < 1e-12);
}

#[test]
fn bundle_adjust_fixes_gauge_and_is_stationary_when_converged() {
    let mut state = WindowState::new(scene(8, 4));
    let p0 = PoseSE3::from_translation(Vector3::new(0.05, -0.01, 0.0));
    for i in 0..3 {
        state.trajectories.push(ChunkTrajectory::new(i, p0, p0, i as u64 * 10_000, (i as u64 + 1) * 10_000));
    }
    let events: Vec<Event> = Vec::new();
    let chunks: Vec<Chunk<'_>> =
        (0..3).map(|i| Chunk { index: i, ..chunk(&events, i as u64 * 10_000, (i as u64 + 1) * 10_000) }).collect();
    let maps = alloc::vec![empty_edge_map(); 3];
    let before = state.clone();
    let mut log = Vec::new();
    bundle_adjust(&mut state, &chunks, &maps, &camera(), &slam_params(), &mut SeededRng::seed_from_u64(3), &mut log)
        .unwrap();
    // Window of two: chunk 1's start is the gauge anchor.
    assert_eq!(state.trajectories[1].t_start, before.trajectories[1].t_start);
    assert_eq!(state.trajectories[0], before.trajectories[0]);
    for (a, b) in state.trajectories.iter().zip(&before.trajectories) {
        let (r, t) = a.t_end.distance(&b.t_end);
        assert!(r < 1e-6 && t < 1e-6);
    }
    for (a, b) in state.scene.iter().zip(&before.scene) {
        assert!((a.mean - b.mean).norm() < 1e-6 && (a.color - b.color).abs() < 1e-6);
    }
    assert!(log.iter().all(|r| r.phase == Phase::Mapping && r.loss.total == 0.0));
}

#[test]
fn divergence_is_reported() {
    let (events, s, _, _) = fixture();
    let mut state = WindowState::new(s);
    let start = PoseSE3::identity();
    // An absurd step size sends the pose far off after the first update.
    let mut p = slam_params();
    p.learning_rates.pose_translation = 50.0;
    p.learning_rates.pose_rotation = 3.0;
    p.tracking_iterations = 6;
    state.trajectories.push(ChunkTrajectory::new(0, start, start, 0, 10_000));
    let c = Chunk { index: 1, ..chunk(&events, 0, 20_000) };
    let r =
        track_chunk(&state, &c, &empty_edge_map(), &camera(), &p, &mut SeededRng::seed_from_u64(1), &mut Vec::new());
    match r {
        Err(Error::TrackingFailure { chunk, .. }) => assert_eq!(chunk, 1),
        Ok(_) => {}
        Err(e) => panic!("unexpected error {e:?}"),
    }
}

#[test]
fn pipeline_rejects_empty_stream() {
    let s = EventStream::new(24, 24, Vec::new()).unwrap();
    let r = run_pipeline(&s, &camera(), &slam_params(), &mut SeededRng::seed_from_u64(1));
    assert!(matches!(r, Err(Error::EmptyStream)));
}

#[test]
fn short_tail_chunk_is_merged() {
    let events = random_events(4, 200, 20_001);
    let s = EventStream::with_span(24, 24, events, 0, 20_001).unwrap();
    let chunks = pipeline_chunks(&s, 10_000).unwrap();
    assert_eq!(chunks.len(), 2);
    assert_eq!(chunks[1].t_end, 20_001);
    assert_eq!(chunks.iter().map(|c| c.events.len()).sum::<usize>(), 200);
}

#[test]
fn pipeline_is_deterministic() {
    let events = random_events(11, 3_000, 20_000);
    let s = EventStream::with_span(24, 24, events, 0, 20_000).unwrap();
    let mut p = slam_params();
    p.init.n_total = 20;
    p.init.d_min = 0.8;
    p.init.d_max = 2.0;
    p.detector.patch_size = 8;
    let a = run_pipeline(&s, &camera(), &p, &mut SeededRng::seed_from_u64(5)).unwrap();
    let b = run_pipeline(&s, &camera(), &p, &mut SeededRng::seed_from_u64(5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trajectory.len(), 3);
    assert_eq!(a.trajectory[0].1, PoseSE3::identity());
    assert_eq!(a.scene.len(), 20);
}
