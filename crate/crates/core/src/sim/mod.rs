//! Synthetic event camera: a ray-cast grayscale renderer, an ideal
//! threshold-crossing event generator, uniform background noise and
//! ground-truth edge masks. Serves as the oracle for every experiment.

mod reference;
mod scene;

use alloc::vec::Vec;

use nalgebra::{Vector2, Vector3};
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub use reference::{ReferenceScene, SimulatedSequence};
pub use scene::{Albedo, Hit, LineSegment, Primitive, SurfaceLabel, SyntheticScene, TexturedPlane};

use crate::edge::morphology;
use crate::error::{invalid, Error, Result};
use crate::event::{Event, EventStream, Polarity};
use crate::geometry::{interpolate_samples, CameraIntrinsics, PoseSE3};
use crate::grid::{Grid, Mask};

fn world_ray(pose: &PoseSE3, k: &CameraIntrinsics, u: f64, v: f64) -> Vector3<f64> {
    pose.rotation * k.unproject(&Vector2::new(u, v))
}

fn check_camera(scene: &SyntheticScene, pose: &PoseSE3) -> Result<()> {
    match scene.containing_primitive(&pose.translation) {
        Some(id) => Err(Error::CameraInsidePrimitive(id)),
        None => Ok(()),
    }
}

/// Grayscale image in `(0, 1]` seen from `pose` (camera-to-world).
pub fn render_brightness(scene: &SyntheticScene, pose: &PoseSE3, k: &CameraIntrinsics) -> Result<Grid<f64>> {
    scene.validate()?;
    k.validate()?;
    check_camera(scene, pose)?;
    let ss = scene.supersampling;
    let inv = 1.0 / (ss * ss) as f64;
    let origin = pose.translation;
    Ok(Grid::from_fn(k.width, k.height, |x, y| {
        let mut acc = 0.0;
        for sy in 0..ss {
            for sx in 0..ss {
                let u = x as f64 + (sx as f64 + 0.5) / ss as f64 - 0.5;
                let v = y as f64 + (sy as f64 + 0.5) / ss as f64 - 0.5;
                acc += scene.cast(&origin, &world_ray(pose, k, u, v)).albedo;
            }
        }
        acc * inv
    }))
}

/// Surface label at every pixel center.
pub fn render_labels(scene: &SyntheticScene, pose: &PoseSE3, k: &CameraIntrinsics) -> Grid<SurfaceLabel> {
    Grid::from_fn(k.width, k.height, |x, y| {
        scene.cast(&pose.translation, &world_ray(pose, k, x as f64, y as f64)).label
    })
}

/// Ideal event generation from log-brightness frames.
///
/// Each pixel keeps a reference level; whenever the linearly interpolated
/// log-brightness moves a full `contrast_threshold` away from it, one event is
/// emitted at the interpolated crossing time and the reference moves by one
/// step. Output is sorted by `(t, y, x, polarity)`.
pub fn events_from_log_frames(times: &[u64], frames: &[Grid<f64>], contrast_threshold: f64) -> Result<Vec<Event>> {
    if times.len() != frames.len() || frames.is_empty() {
        return Err(invalid("need one timestamp per frame"));
    }
    if !(contrast_threshold > 0.0) {
        return Err(invalid("contrast threshold must be positive"));
    }
    let (w, h) = frames[0].dims();
    for f in frames {
        f.ensure_same_shape(&frames[0])?;
    }
    if times.windows(2).any(|p| p[0] > p[1]) {
        return Err(invalid("frame timestamps must be non-decreasing"));
    }
    let c = contrast_threshold;
    let tol = c * 1e-9;
    let mut events = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut reference = frames[0][(x, y)];
            for k in 0..frames.len() - 1 {
                let (a, b) = (frames[k][(x, y)], frames[k + 1][(x, y)]);
                let (ta, tb) = (times[k] as f64, times[k + 1] as f64);
                loop {
                    let (level, polarity) = if b - reference >= c - tol {
                        (reference + c, Polarity::Positive)
                    } else if reference - b >= c - tol {
                        (reference - c, Polarity::Negative)
                    } else {
                        break;
                    };
                    let frac = if (b - a).abs() > 0.0 { ((level - a) / (b - a)).clamp(0.0, 1.0) } else { 1.0 };
                    let t = (ta + (tb - ta) * frac).round() as u64;
                    events.push(Event::new(t, x as u16, y as u16, polarity));
                    reference = level;
                }
            }
        }
    }
    events.sort_by_key(Event::sort_key);
    Ok(events)
}

/// Renders the scene along `trajectory` every `frame_dt` µs and converts the
/// log-brightness frames into an ideal event stream spanning the trajectory.
pub fn generate_ideal_events(
    scene: &SyntheticScene,
    trajectory: &[(u64, PoseSE3)],
    k: &CameraIntrinsics,
    contrast_threshold: f64,
    frame_dt: u64,
) -> Result<EventStream> {
    if trajectory.len() < 2 {
        return Err(invalid("trajectory needs at least two samples"));
    }
    if frame_dt == 0 {
        return Err(invalid("frame_dt must be positive"));
    }
    if !(contrast_threshold > 0.0) {
        return Err(invalid("contrast threshold must be positive"));
    }
    if trajectory.windows(2).any(|p| p[0].0 >= p[1].0) {
        return Err(invalid("trajectory timestamps must be strictly increasing"));
    }
    let t0 = trajectory[0].0;
    let t_end = trajectory[trajectory.len() - 1].0;
    let mut times: Vec<u64> = (0..).map(|i| t0 + i * frame_dt).take_while(|&t| t < t_end).collect();
    times.push(t_end);
    let poses: Vec<PoseSE3> =
        times.iter().map(|&t| interpolate_samples(trajectory, t).expect("non-empty trajectory")).collect();
    for p in &poses {
        check_camera(scene, p)?;
    }
    let frames: Vec<Result<Grid<f64>>> =
        crate::par::map_indexed(poses.len(), |i| render_brightness(scene, &poses[i], k).map(|img| img.map(|v| v.ln())));
    let frames = frames.into_iter().collect::<Result<Vec<_>>>()?;
    let events = events_from_log_frames(&times, &frames, contrast_threshold)?;
    EventStream::with_span(k.width, k.height, events, t0, t_end + 1)
}

/// Adds uniformly distributed events of random polarity at `noise_rate`
/// events per pixel per second over the stream's span. The result is sorted
/// by time; input events keep their relative order.
pub fn inject_noise<R: Rng + ?Sized>(stream: &EventStream, noise_rate: f64, rng: &mut R) -> Result<EventStream> {
    if !(noise_rate >= 0.0 && noise_rate.is_finite()) {
        return Err(invalid("noise rate must be non-negative"));
    }
    let Some((start, end)) = stream.span() else {
        return Ok(stream.clone());
    };
    if noise_rate == 0.0 || end == start {
        return Ok(stream.clone());
    }
    let (w, h) = (stream.width(), stream.height());
    let expected = noise_rate * (end - start) as f64 * 1e-6 * (w * h) as f64;
    let count = Poisson::new(expected).map_err(|_| invalid("invalid noise intensity"))?.sample(rng) as usize;
    let mut noise: Vec<Event> = (0..count)
        .map(|_| {
            let t = rng.random_range(start..end);
            let x = rng.random_range(0..w) as u16;
            let y = rng.random_range(0..h) as u16;
            let polarity = if rng.random::<bool>() { Polarity::Positive } else { Polarity::Negative };
            Event::new(t, x, y, polarity)
        })
        .collect();
    noise.sort_by_key(Event::sort_key);
    let mut merged = Vec::with_capacity(stream.len() + noise.len());
    merged.extend_from_slice(stream.events());
    merged.extend(noise);
    merged.sort_by_key(|e| e.t);
    EventStream::with_span(w, h, merged, start, end)
}

/// Noise rate (events / pixel / s) giving `ratio` noise events per signal event.
pub fn noise_rate_for_ratio(stream: &EventStream, ratio: f64) -> f64 {
    match stream.span() {
        Some((start, end)) if end > start => {
            let area_time = (stream.width() * stream.height()) as f64 * (end - start) as f64 * 1e-6;
            ratio * stream.len() as f64 / area_time
        }
        _ => 0.0,
    }
}

/// Pixels within `dilation_px` of a projected line segment, a primitive
/// silhouette, or an albedo discontinuity.
pub fn ground_truth_edge_mask(
    scene: &SyntheticScene,
    pose: &PoseSE3,
    k: &CameraIntrinsics,
    dilation_px: usize,
) -> Mask {
    let labels = render_labels(scene, pose, k);
    let (w, h) = labels.dims();
    let is_segment = |l: &SurfaceLabel| matches!(l, SurfaceLabel::Segment { .. });
    let base = Grid::from_fn(w, h, |x, y| {
        let l = labels[(x, y)];
        if is_segment(&l) {
            return true;
        }
        let neighbors = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
        neighbors.iter().filter_map(|&(nx, ny)| labels.get(nx, ny)).any(|n| !is_segment(n) && *n != l)
    });
    if dilation_px == 0 {
        base
    } else {
        morphology::dilate(&base, dilation_px)
    }
}
