//! Scene and camera description files.
//!
//! A scene file sets `background` and optionally `supersampling` at top level,
//! then lists one primitive per `[segment]` or `[plane]` block. A camera file
//! holds `fx fy cx cy width height` as top-level keys.

use std::fmt::Write as _;
use std::path::Path;

use edgesplat_core::sim::{Albedo, LineSegment, Primitive, SyntheticScene, TexturedPlane};
use edgesplat_core::CameraIntrinsics;
use nalgebra::Vector3;

use super::kv::{self, Fields};
use super::{read_string, write_string};
use crate::error::{Error, Result};

fn vec3(v: Vec<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn fmt3(v: &Vector3<f64>) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

fn parse_albedo(source: &str, line: usize, value: &str) -> Result<Albedo> {
    let tok: Vec<&str> = value.split_whitespace().collect();
    let nums: Option<Vec<f64>> = tok.iter().skip(1).map(|t| t.parse().ok()).collect();
    let bad = || Error::parse(source, Some(line), format!("invalid albedo '{value}'"));
    let nums = nums.ok_or_else(bad)?;
    match (tok.first().copied(), nums.as_slice()) {
        (Some("constant"), [a]) => Ok(Albedo::Constant(*a)),
        (Some("checker"), [a, b, p]) => Ok(Albedo::Checker { a: *a, b: *b, period: *p }),
        (Some("stripes"), [a, b, p]) => Ok(Albedo::Stripes { a: *a, b: *b, period: *p }),
        _ => match tok.as_slice() {
            [single] => single.parse().map(Albedo::Constant).map_err(|_| bad()),
            _ => Err(bad()),
        },
    }
}

fn format_albedo(a: &Albedo) -> String {
    match *a {
        Albedo::Constant(v) => format!("constant {v}"),
        Albedo::Checker { a, b, period } => format!("checker {a} {b} {period}"),
        Albedo::Stripes { a, b, period } => format!("stripes {a} {b} {period}"),
    }
}

pub fn parse_scene(source: &str, text: &str) -> Result<SyntheticScene> {
    let blocks = kv::parse(source, text)?;
    let mut top = Fields::new(source, &blocks[0]);
    let background = top.require_real("background")?;
    let supersampling = top.integer("supersampling")?.unwrap_or(1);
    top.finish()?;
    let mut scene = SyntheticScene { background, primitives: Vec::new(), supersampling };
    for block in &blocks[1..] {
        let mut f = Fields::new(source, block);
        let prim = match block.name.as_str() {
            "segment" => Primitive::Segment(LineSegment {
                a: vec3(f.require_reals("a", 3)?),
                b: vec3(f.require_reals("b", 3)?),
                radius: f.require_real("radius")?,
                albedo: f.require_real("albedo")?,
            }),
            "plane" => {
                let center = vec3(f.require_reals("center", 3)?);
                let u_axis = vec3(f.require_reals("u_axis", 3)?);
                let v_axis = vec3(f.require_reals("v_axis", 3)?);
                let half_u = f.require_real("half_u")?;
                let half_v = f.require_real("half_v")?;
                let (line, value) = f
                    .raw("albedo")
                    .ok_or_else(|| Error::parse(source, Some(block.line), "[plane] is missing 'albedo'"))?;
                let albedo = parse_albedo(source, line, value)?;
                Primitive::Plane(TexturedPlane { center, u_axis, v_axis, half_u, half_v, albedo })
            }
            other => return Err(Error::parse(source, Some(block.line), format!("unknown block [{other}]"))),
        };
        f.finish()?;
        scene.primitives.push(prim);
    }
    scene.validate().map_err(|e| Error::parse(source, None, e.to_string()))?;
    Ok(scene)
}

pub fn format_scene(scene: &SyntheticScene) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "background = {}", scene.background);
    let _ = writeln!(s, "supersampling = {}", scene.supersampling);
    for p in &scene.primitives {
        match p {
            Primitive::Segment(seg) => {
                let _ = write!(
                    s,
                    "\n[segment]\na = {}\nb = {}\nradius = {}\nalbedo = {}\n",
                    fmt3(&seg.a),
                    fmt3(&seg.b),
                    seg.radius,
                    seg.albedo
                );
            }
            Primitive::Plane(pl) => {
                let _ = write!(
                    s,
                    "\n[plane]\ncenter = {}\nu_axis = {}\nv_axis = {}\nhalf_u = {}\nhalf_v = {}\nalbedo = {}\n",
                    fmt3(&pl.center),
                    fmt3(&pl.u_axis),
                    fmt3(&pl.v_axis),
                    pl.half_u,
                    pl.half_v,
                    format_albedo(&pl.albedo)
                );
            }
        }
    }
    s
}

pub fn parse_camera(source: &str, text: &str) -> Result<CameraIntrinsics> {
    let blocks = kv::parse(source, text)?;
    if let Some(b) = blocks.get(1) {
        return Err(Error::parse(source, Some(b.line), "camera files have no blocks"));
    }
    let mut f = Fields::new(source, &blocks[0]);
    let fx = f.require_real("fx")?;
    let fy = f.require_real("fy")?;
    let cx = f.require_real("cx")?;
    let cy = f.require_real("cy")?;
    let width = f.require_integer("width")?;
    let height = f.require_integer("height")?;
    f.finish()?;
    CameraIntrinsics::new(fx, fy, cx, cy, width, height).map_err(|e| Error::parse(source, None, e.to_string()))
}

pub fn format_camera(k: &CameraIntrinsics) -> String {
    format!("fx = {}\nfy = {}\ncx = {}\ncy = {}\nwidth = {}\nheight = {}\n", k.fx, k.fy, k.cx, k.cy, k.width, k.height)
}

pub fn read_scene(path: &Path) -> Result<SyntheticScene> {
    parse_scene(&path.display().to_string(), &read_string(path)?)
}

pub fn write_scene(path: &Path, scene: &SyntheticScene) -> Result<()> {
    write_string(path, &format_scene(scene))
}

pub fn read_camera(path: &Path) -> Result<CameraIntrinsics> {
    parse_camera(&path.display().to_string(), &read_string(path)?)
}

pub fn write_camera(path: &Path, k: &CameraIntrinsics) -> Result<()> {
    write_string(path, &format_camera(k))
}
