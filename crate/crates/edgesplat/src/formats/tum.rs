//! TUM trajectories: `timestamp tx ty tz qx qy qz qw` per line, `#` comments.
//! Timestamps are written in seconds with six decimals so that microsecond
//! timestamps survive a round trip.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use edgesplat_core::PoseSE3;

use super::{create, open};
use crate::error::{Error, Result};

pub fn format_pose(t_us: u64, pose: &PoseSE3) -> String {
    let (t, q) = pose.to_tum();
    format!(
        "{}.{:06} {} {} {} {} {} {} {}",
        t_us / 1_000_000,
        t_us % 1_000_000,
        t[0],
        t[1],
        t[2],
        q[0],
        q[1],
        q[2],
        q[3]
    )
}

pub fn write_tum_to<W: Write>(samples: &[(u64, PoseSE3)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# timestamp tx ty tz qx qy qz qw")?;
    for (t, p) in samples {
        writeln!(w, "{}", format_pose(*t, p))?;
    }
    w.flush()
}

/// Seconds to microseconds, exact for up to six decimals.
pub fn parse_seconds(s: &str) -> Option<u64> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty()
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let whole: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let mut micros = 0u64;
    for (i, b) in frac.bytes().enumerate() {
        let d = (b - b'0') as u64;
        if i < 6 {
            micros += d * 10u64.pow(5 - i as u32);
        } else if i == 6 && d >= 5 {
            micros += 1;
        }
    }
    whole.checked_mul(1_000_000)?.checked_add(micros)
}

/// Parses the seven pose fields following the timestamp.
pub fn parse_pose(fields: &[&str]) -> std::result::Result<PoseSE3, String> {
    if fields.len() != 7 {
        return Err(format!("expected 7 pose values, got {}", fields.len()));
    }
    let mut v = [0.0f64; 7];
    for (slot, f) in v.iter_mut().zip(fields) {
        *slot = f.parse().map_err(|_| format!("invalid number '{f}'"))?;
        if !slot.is_finite() {
            return Err(format!("non-finite value '{f}'"));
        }
    }
    PoseSE3::from_parts([v[6], v[3], v[4], v[5]], [v[0], v[1], v[2]]).map_err(|e| e.to_string())
}

pub fn read_tum_from<R: Read>(name: &str, r: R) -> Result<Vec<(u64, PoseSE3)>> {
    let mut out: Vec<(u64, PoseSE3)> = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(name, Some(lineno), e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::parse(name, Some(lineno), format!("expected 8 fields, got {}", fields.len())));
        }
        let t = parse_seconds(fields[0])
            .ok_or_else(|| Error::parse(name, Some(lineno), format!("invalid timestamp '{}'", fields[0])))?;
        let pose = parse_pose(&fields[1..]).map_err(|m| Error::parse(name, Some(lineno), m))?;
        if out.last().is_some_and(|(prev, _)| *prev >= t) {
            return Err(Error::parse(name, Some(lineno), "timestamps must be strictly increasing"));
        }
        out.push((t, pose));
    }
    Ok(out)
}

pub fn write_tum(path: &Path, samples: &[(u64, PoseSE3)]) -> Result<()> {
    write_tum_to(samples, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_tum(path: &Path) -> Result<Vec<(u64, PoseSE3)>> {
    read_tum_from(&path.display().to_string(), open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{UnitQuaternion, Vector3};

    #[test]
    fn seconds_parse_exactly() {
        assert_eq!(parse_seconds("1.000001"), Some(1_000_001));
        assert_eq!(parse_seconds("0.05"), Some(50_000));
        assert_eq!(parse_seconds("12"), Some(12_000_000));
        assert_eq!(parse_seconds(".5"), Some(500_000));
        assert_eq!(parse_seconds("0.0000005"), Some(1));
        assert_eq!(parse_seconds("-1"), None);
        assert_eq!(parse_seconds("1e3"), None);
        assert_eq!(parse_seconds("."), None);
    }

    #[test]
    fn round_trip() {
        let samples = vec![
            (0, PoseSE3::identity()),
            (
                1_234_567,
                PoseSE3::new(UnitQuaternion::from_euler_angles(0.1, -0.4, 2.0), Vector3::new(0.5, -1.0 / 3.0, 2.0)),
            ),
        ];
        let mut buf = Vec::new();
        write_tum_to(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0.000000 0 0 0 0 0 0 1"));
        let back = read_tum_from("mem", &buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, 1_234_567);
        let (dr, dt) = back[1].1.distance(&samples[1].1);
        assert!(dr < 1e-12 && dt < 1e-15);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(read_tum_from("m", "0 0 0 0 0 0 0\n".as_bytes()).is_err());
        assert!(read_tum_from("m", "0 0 0 0 0 0 0 0 0\n".as_bytes()).is_err());
        assert!(read_tum_from("m", "1 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n".as_bytes()).is_err());
        assert!(read_tum_from("m", "1 0 0 nan 0 0 0 1\n".as_bytes()).is_err());
    }
}
