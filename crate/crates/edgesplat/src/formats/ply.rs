//! ASCII PLY for Gaussian sets. One vertex per Gaussian with properties
//! `x y z scale_0 scale_1 scale_2 rot_0 rot_1 rot_2 rot_3 opacity gray
//! origin_tag`; the quaternion is stored `(w, x, y, z)` and `origin_tag` is 0
//! for random and 1 for edge-guided Gaussians. Reals are written in the
//! shortest decimal form that reads back to the same double.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use edgesplat_core::splat::{Gaussian3D, Origin};
use nalgebra::{Quaternion, Vector3};

use super::{create, open};
use crate::error::{Error, Result};

const REAL_PROPERTIES: [&str; 12] =
    ["x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3", "opacity", "gray"];

pub fn write_ply_to<W: Write>(gaussians: &[Gaussian3D], mut w: W) -> std::io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", gaussians.len())?;
    for p in REAL_PROPERTIES {
        writeln!(w, "property double {p}")?;
    }
    writeln!(w, "property uchar origin_tag")?;
    writeln!(w, "end_header")?;
    for g in gaussians {
        let q = g.rotation_wxyz();
        let tag = match g.origin {
            Origin::Random => 0,
            Origin::Edge => 1,
        };
        writeln!(
            w,
            "{} {} {} {} {} {} {} {} {} {} {} {} {}",
            g.mean.x,
            g.mean.y,
            g.mean.z,
            g.scale.x,
            g.scale.y,
            g.scale.z,
            q[0],
            q[1],
            q[2],
            q[3],
            g.opacity,
            g.color,
            tag
        )?;
    }
    w.flush()
}

pub fn read_ply_from<R: Read>(name: &str, r: R) -> Result<Vec<Gaussian3D>> {
    let mut lines = BufReader::new(r).lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l.trim().to_string())),
            Some((i, Err(e))) => Err(Error::parse(name, Some(i + 1), e.to_string())),
            None => Err(Error::parse(name, None, format!("unexpected end of file, expected {expect}"))),
        }
    };
    let (l, magic) = next("'ply'")?;
    if magic != "ply" {
        return Err(Error::parse(name, Some(l), "missing 'ply' magic"));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    loop {
        let (l, line) = next("'end_header'")?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", "1.0"] => {}
            ["format", ..] => return Err(Error::parse(name, Some(l), "only 'format ascii 1.0' is supported")),
            ["comment", ..] | [] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| Error::parse(name, Some(l), "invalid vertex count"))?)
            }
            ["element", other, ..] => {
                return Err(Error::parse(name, Some(l), format!("unsupported element '{other}'")));
            }
            ["property", _ty, p] => props.push(p.to_string()),
            _ => return Err(Error::parse(name, Some(l), format!("unrecognized header line '{line}'"))),
        }
    }
    let count = count.ok_or_else(|| Error::parse(name, None, "missing 'element vertex' line"))?;
    let mut expected: Vec<&str> = REAL_PROPERTIES.to_vec();
    expected.push("origin_tag");
    if props != expected {
        return Err(Error::parse(name, None, format!("expected properties {}", expected.join(" "))));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (l, line) = next("vertex data")?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 13 {
            return Err(Error::parse(name, Some(l), format!("expected 13 values, got {}", tok.len())));
        }
        let mut v = [0.0f64; 12];
        for (slot, t) in v.iter_mut().zip(&tok) {
            *slot = t.parse().map_err(|_| Error::parse(name, Some(l), format!("invalid number '{t}'")))?;
        }
        let origin = match tok[12] {
            "0" => Origin::Random,
            "1" => Origin::Edge,
            t => return Err(Error::parse(name, Some(l), format!("invalid origin_tag '{t}'"))),
        };
        let g = Gaussian3D {
            mean: Vector3::new(v[0], v[1], v[2]),
            scale: Vector3::new(v[3], v[4], v[5]),
            rotation: Quaternion::new(v[6], v[7], v[8], v[9]),
            opacity: v[10],
            color: v[11],
            origin,
        };
        g.validate().map_err(|e| Error::parse(name, Some(l), e.to_string()))?;
        out.push(g);
    }
    Ok(out)
}

pub fn write_ply(path: &Path, gaussians: &[Gaussian3D]) -> Result<()> {
    write_ply_to(gaussians, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_ply(path: &Path) -> Result<Vec<Gaussian3D>> {
    read_ply_from(&path.display().to_string(), open(path)?)
}
