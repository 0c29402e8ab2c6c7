//! Built-in reference sequences used by the tests, the acceptance suite and
//! `edgesplat simulate --reference <name>`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;

use super::scene::{Albedo, LineSegment, Primitive, SyntheticScene, TexturedPlane};
use crate::error::Result;
use crate::event::EventStream;
use crate::geometry::{CameraIntrinsics, PoseSE3};
use crate::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceScene {
    /// One vertical bar, camera sliding sideways.
    SingleLine,
    /// Three vertical and three horizontal bars, diagonal camera motion.
    LineGrid,
    /// A striped rectangle smaller than the view, diagonal camera motion.
    TexturedPlane,
    /// Bars at several depths seen from a camera on a constant-speed arc.
    LineOrbit,
}

impl ReferenceScene {
    pub const ALL: [ReferenceScene; 4] = [
        ReferenceScene::SingleLine,
        ReferenceScene::LineGrid,
        ReferenceScene::TexturedPlane,
        ReferenceScene::LineOrbit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ReferenceScene::SingleLine => "single-line",
            ReferenceScene::LineGrid => "line-grid",
            ReferenceScene::TexturedPlane => "textured-plane",
            ReferenceScene::LineOrbit => "line-orbit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|s| s.name() == name)
    }

    pub fn sequence(&self) -> SimulatedSequence {
        match self {
            ReferenceScene::SingleLine => single_line(),
            ReferenceScene::LineGrid => line_grid(),
            ReferenceScene::TexturedPlane => textured_plane(),
            ReferenceScene::LineOrbit => line_orbit(),
        }
    }
}

/// A scene, camera and ground-truth trajectory with simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSequence {
    pub name: &'static str,
    pub scene: SyntheticScene,
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-world poses, strictly increasing timestamps (µs).
    pub trajectory: Vec<(u64, PoseSE3)>,
    pub contrast_threshold: f64,
    pub frame_dt: u64,
    /// Depth bounds of the scene content as seen from the first pose.
    pub depth_range: (f64, f64),
    /// Chunk length the sequence is designed around.
    pub chunk_duration: u64,
}

impl SimulatedSequence {
    pub fn ideal_events(&self) -> Result<EventStream> {
        super::generate_ideal_events(
            &self.scene,
            &self.trajectory,
            &self.intrinsics,
            self.contrast_threshold,
            self.frame_dt,
        )
    }

    /// Ideal events plus uniform noise at `ratio` noise events per signal event.
    pub fn noisy_events(&self, ratio: f64, seed: u64) -> Result<EventStream> {
        let clean = self.ideal_events()?;
        let rate = super::noise_rate_for_ratio(&clean, ratio);
        super::inject_noise(&clean, rate, &mut SeededRng::seed_from_u64(seed))
    }

    pub fn start_time(&self) -> u64 {
        self.trajectory[0].0
    }

    pub fn end_time(&self) -> u64 {
        self.trajectory[self.trajectory.len() - 1].0
    }

    pub fn pose_at(&self, t: u64) -> PoseSE3 {
        crate::geometry::interpolate_samples(&self.trajectory, t).expect("non-empty trajectory")
    }

    /// Total translation distance along the trajectory.
    pub fn path_length(&self) -> f64 {
        self.trajectory.windows(2).map(|w| (w[1].1.translation - w[0].1.translation).norm()).sum()
    }
}

fn k64() -> CameraIntrinsics {
    CameraIntrinsics::new(50.0, 50.0, 31.5, 31.5, 64, 64).expect("valid intrinsics")
}

fn bar(a: [f64; 3], b: [f64; 3], radius: f64, albedo: f64) -> Primitive {
    Primitive::Segment(LineSegment { a: Vector3::from(a), b: Vector3::from(b), radius, albedo })
}

/// Samples every millisecond of a straight constant-velocity translation.
fn linear_trajectory(from: Vector3<f64>, to: Vector3<f64>, duration_us: u64) -> Vec<(u64, PoseSE3)> {
    let step = 1000;
    (0..=duration_us / step)
        .map(|i| {
            let t = i * step;
            let a = t as f64 / duration_us as f64;
            (t, PoseSE3::from_translation(from * (1.0 - a) + to * a))
        })
        .collect()
}

fn single_line() -> SimulatedSequence {
    let scene = SyntheticScene {
        background: 0.25,
        primitives: vec![bar([0.0, -1.0, 1.0], [0.0, 1.0, 1.0], 0.02, 0.9)],
        supersampling: 3,
    };
    SimulatedSequence {
        name: "single-line",
        scene,
        intrinsics: k64(),
        trajectory: linear_trajectory(Vector3::new(-0.05, 0.0, 0.0), Vector3::new(0.05, 0.0, 0.0), 100_000),
        contrast_threshold: 0.2,
        frame_dt: 1000,
        depth_range: (0.8, 1.2),
        chunk_duration: 50_000,
    }
}

fn line_grid() -> SimulatedSequence {
    let mut primitives = Vec::new();
    for &x in &[-0.3, 0.0, 0.3] {
        primitives.push(bar([x, -1.0, 1.0], [x, 1.0, 1.0], 0.015, 0.9));
    }
    for &y in &[-0.3, 0.0, 0.3] {
        primitives.push(bar([-1.0, y, 1.0], [1.0, y, 1.0], 0.015, 0.9));
    }
    SimulatedSequence {
        name: "line-grid",
        scene: SyntheticScene { background: 0.25, primitives, supersampling: 3 },
        intrinsics: k64(),
        trajectory: linear_trajectory(Vector3::new(-0.04, -0.03, 0.0), Vector3::new(0.04, 0.03, 0.0), 100_000),
        contrast_threshold: 0.2,
        frame_dt: 1000,
        depth_range: (0.8, 1.2),
        chunk_duration: 50_000,
    }
}

fn textured_plane() -> SimulatedSequence {
    let plane = Primitive::Plane(TexturedPlane {
        center: Vector3::new(0.0, 0.0, 1.0),
        u_axis: Vector3::x(),
        v_axis: Vector3::y(),
        half_u: 0.32,
        half_v: 0.32,
        albedo: Albedo::Stripes { a: 0.85, b: 0.45, period: 0.16 },
    });
    SimulatedSequence {
        name: "textured-plane",
        scene: SyntheticScene { background: 0.15, primitives: vec![plane], supersampling: 3 },
        intrinsics: k64(),
        trajectory: linear_trajectory(Vector3::new(-0.04, -0.03, 0.0), Vector3::new(0.04, 0.03, 0.0), 100_000),
        contrast_threshold: 0.2,
        frame_dt: 1000,
        depth_range: (0.8, 1.2),
        chunk_duration: 50_000,
    }
}

/// Camera on a horizontal arc of radius `ORBIT_RADIUS` around a point on the
/// optical axis, always looking at it; bars sit between camera and pivot.
fn line_orbit() -> SimulatedSequence {
    const ORBIT_RADIUS: f64 = 2.0;
    const ARC: f64 = 0.35; // radians over the whole sequence
    const DURATION: u64 = 400_000;
    let pivot = Vector3::new(0.0, 0.0, ORBIT_RADIUS);
    let trajectory = (0..=DURATION / 1000)
        .map(|i| {
            let t = i * 1000;
            let angle = ARC * (t as f64 / DURATION as f64 - 0.5);
            // Rotation about +y keeps the camera's optical axis on the pivot.
            let rotation = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), angle);
            let translation = pivot - rotation * Vector3::new(0.0, 0.0, ORBIT_RADIUS);
            (t, PoseSE3::new(rotation, translation))
        })
        .collect();
    let primitives = vec![
        bar([-0.35, -0.45, 1.0], [-0.35, 0.45, 1.0], 0.018, 0.9),
        bar([0.12, -0.4, 1.3], [0.12, 0.4, 1.3], 0.02, 0.8),
        bar([0.45, -0.5, 1.5], [0.45, 0.5, 1.5], 0.022, 0.9),
        bar([-0.5, -0.25, 1.2], [0.5, -0.3, 1.2], 0.018, 0.85),
        bar([-0.4, 0.35, 0.9], [0.3, 0.3, 1.1], 0.016, 0.9),
    ];
    SimulatedSequence {
        name: "line-orbit",
        scene: SyntheticScene { background: 0.25, primitives, supersampling: 3 },
        intrinsics: k64(),
        trajectory,
        contrast_threshold: 0.2,
        frame_dt: 1000,
        depth_range: (0.8, 1.6),
        chunk_duration: 50_000,
    }
}
