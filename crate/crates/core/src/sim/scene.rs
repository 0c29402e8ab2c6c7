use alloc::vec::Vec;

use nalgebra::Vector3;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};

/// Grayscale albedo over a plane's local `(u, v)` coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Albedo {
    Constant(f64),
    /// Alternating squares of side `period`.
    Checker {
        a: f64,
        b: f64,
        period: f64,
    },
    /// Bands of width `period` along the plane's u-axis.
    Stripes {
        a: f64,
        b: f64,
        period: f64,
    },
}

impl Albedo {
    /// Albedo value and the index of the constant-albedo region it belongs to.
    pub fn sample(&self, u: f64, v: f64) -> (f64, u8) {
        match *self {
            Albedo::Constant(a) => (a, 0),
            Albedo::Checker { a, b, period } => {
                let parity = ((u / period).floor() as i64 + (v / period).floor() as i64).rem_euclid(2);
                if parity == 0 {
                    (a, 0)
                } else {
                    (b, 1)
                }
            }
            Albedo::Stripes { a, b, period } => {
                if ((u / period).floor() as i64).rem_euclid(2) == 0 {
                    (a, 0)
                } else {
                    (b, 1)
                }
            }
        }
    }

    fn values(&self) -> [f64; 2] {
        match *self {
            Albedo::Constant(a) => [a, a],
            Albedo::Checker { a, b, .. } | Albedo::Stripes { a, b, .. } => [a, b],
        }
    }

    fn period(&self) -> Option<f64> {
        match *self {
            Albedo::Constant(_) => None,
            Albedo::Checker { period, .. } | Albedo::Stripes { period, .. } => Some(period),
        }
    }
}

/// Bounded rectangle `center + a·u_axis + b·v_axis`, `|a| ≤ half_u`, `|b| ≤ half_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TexturedPlane {
    pub center: Vector3<f64>,
    pub u_axis: Vector3<f64>,
    pub v_axis: Vector3<f64>,
    pub half_u: f64,
    pub half_v: f64,
    pub albedo: Albedo,
}

impl TexturedPlane {
    pub fn normal(&self) -> Vector3<f64> {
        self.u_axis.cross(&self.v_axis)
    }

    fn corners(&self) -> [Vector3<f64>; 4] {
        let u = self.u_axis * self.half_u;
        let v = self.v_axis * self.half_v;
        [self.center + u + v, self.center + u - v, self.center - u + v, self.center - u - v]
    }
}

/// A thin cylinder of radius `radius` around the segment `a`–`b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
    pub albedo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Plane(TexturedPlane),
    Segment(LineSegment),
}

/// What a ray hits first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceLabel {
    Background,
    Plane { id: usize, region: u8 },
    Segment { id: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Camera depth of the hit when the ray direction has unit camera-z.
    pub depth: f64,
    pub albedo: f64,
    pub label: SurfaceLabel,
}

/// Grayscale scene of planes and line segments in front of a uniform background.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub background: f64,
    pub primitives: Vec<Primitive>,
    /// Samples per pixel side used by the brightness renderer.
    pub supersampling: usize,
}

impl Default for SyntheticScene {
    fn default() -> Self {
        Self { background: 0.5, primitives: Vec::new(), supersampling: 1 }
    }
}

const MIN_DEPTH: f64 = 1e-6;

fn in_unit_range(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

impl SyntheticScene {
    pub fn new(background: f64) -> Self {
        Self { background, ..Self::default() }
    }

    pub fn with(mut self, primitive: Primitive) -> Self {
        self.primitives.push(primitive);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !in_unit_range(self.background) {
            return Err(invalid("background intensity must lie in (0, 1]"));
        }
        if self.supersampling == 0 {
            return Err(invalid("supersampling must be at least 1"));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            match p {
                Primitive::Plane(pl) => {
                    if !pl.albedo.values().iter().all(|&v| in_unit_range(v)) {
                        return Err(invalid(alloc::format!("plane {i}: albedo must lie in (0, 1]")));
                    }
                    if pl.albedo.period().is_some_and(|p| !(p > 0.0)) {
                        return Err(invalid(alloc::format!("plane {i}: texture period must be positive")));
                    }
                    if !(pl.half_u > 0.0 && pl.half_v > 0.0) {
                        return Err(invalid(alloc::format!("plane {i}: extents must be positive")));
                    }
                    if (pl.u_axis.norm() - 1.0).abs() > 1e-6
                        || (pl.v_axis.norm() - 1.0).abs() > 1e-6
                        || pl.u_axis.dot(&pl.v_axis).abs() > 1e-6
                    {
                        return Err(invalid(alloc::format!("plane {i}: axes must be orthonormal")));
                    }
                }
                Primitive::Segment(s) => {
                    if !in_unit_range(s.albedo) {
                        return Err(invalid(alloc::format!("segment {i}: albedo must lie in (0, 1]")));
                    }
                    if !(s.radius > 0.0) || (s.b - s.a).norm() <= 0.0 {
                        return Err(invalid(alloc::format!("segment {i}: degenerate geometry")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned box containing every primitive, or `None` for an empty scene.
    pub fn bounding_box(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let mut pts: Vec<Vector3<f64>> = Vec::new();
        for p in &self.primitives {
            match p {
                Primitive::Plane(pl) => pts.extend_from_slice(&pl.corners()),
                Primitive::Segment(s) => {
                    let r = Vector3::repeat(s.radius);
                    pts.extend_from_slice(&[s.a - r, s.a + r, s.b - r, s.b + r]);
                }
            }
        }
        let first = *pts.first()?;
        Some(pts.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
    }

    /// Index of a primitive containing `point`, if any.
    pub fn containing_primitive(&self, point: &Vector3<f64>) -> Option<usize> {
        self.primitives.iter().position(|p| match p {
            Primitive::Segment(s) => point_segment_distance(point, &s.a, &s.b) < s.radius,
            Primitive::Plane(pl) => {
                let d = point - pl.center;
                d.dot(&pl.normal()).abs() < 1e-9
                    && d.dot(&pl.u_axis).abs() <= pl.half_u
                    && d.dot(&pl.v_axis).abs() <= pl.half_v
            }
        })
    }

    /// Front-most surface along `origin + t·dir`, `t > 0`.
    pub fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Hit {
        let mut best = Hit { depth: f64::INFINITY, albedo: self.background, label: SurfaceLabel::Background };
        for (id, p) in self.primitives.iter().enumerate() {
            let hit = match p {
                Primitive::Plane(pl) => intersect_plane(pl, origin, dir).map(|(t, albedo, region)| Hit {
                    depth: t,
                    albedo,
                    label: SurfaceLabel::Plane { id, region },
                }),
                Primitive::Segment(s) => intersect_segment(s, origin, dir).map(|t| Hit {
                    depth: t,
                    albedo: s.albedo,
                    label: SurfaceLabel::Segment { id },
                }),
            };
            if let Some(h) = hit {
                if h.depth < best.depth {
                    best = h;
                }
            }
        }
        best
    }
}

fn intersect_plane(pl: &TexturedPlane, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64, u8)> {
    let n = pl.normal();
    let denom = dir.dot(&n);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (pl.center - origin).dot(&n) / denom;
    if t <= MIN_DEPTH {
        return None;
    }
    let local = origin + dir * t - pl.center;
    let (a, b) = (local.dot(&pl.u_axis), local.dot(&pl.v_axis));
    if a.abs() > pl.half_u || b.abs() > pl.half_v {
        return None;
    }
    let (albedo, region) = pl.albedo.sample(a, b);
    Some((t, albedo, region))
}

/// Ray parameter of the closest approach to the segment axis, if within the radius.
fn intersect_segment(s: &LineSegment, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    let (t, dist) = ray_segment_closest(origin, dir, &s.a, &s.b);
    (dist <= s.radius && t > MIN_DEPTH).then_some(t)
}

/// Closest approach between the ray `o + t·d` (t ≥ 0) and the segment `a`–`b`;
/// returns the ray parameter and the distance.
pub(crate) fn ray_segment_closest(
    o: &Vector3<f64>,
    d: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
) -> (f64, f64) {
    let e = b - a;
    let w = o - a;
    let dd = d.dot(d);
    let ee = e.dot(&e);
    let de = d.dot(&e);
    let dw = d.dot(&w);
    let ew = e.dot(&w);
    let denom = dd * ee - de * de;
    // Segment parameter for the unconstrained line-line solution, then clamp.
    let mut s = if denom.abs() > 1e-15 { (dd * ew - de * dw) / denom } else { 0.0 };
    s = s.clamp(0.0, 1.0);
    let mut t = (de * s - dw) / dd;
    if t < 0.0 {
        t = 0.0;
        s = (ew / ee).clamp(0.0, 1.0);
    }
    let p = o + d * t;
    let q = a + e * s;
    (t, (p - q).norm())
}

pub(crate) fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let e = b - a;
    let s = ((p - a).dot(&e) / e.dot(&e)).clamp(0.0, 1.0);
    (p - (a + e * s)).norm()
}
