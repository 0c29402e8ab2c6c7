//! Binary PGM (P5) with maxval 65535: big-endian 16-bit samples, row-major.
//! A value `v ∈ [0, 1]` is stored as `round(65535·v)`; values outside the
//! range are clamped.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use edgesplat_core::Grid;

use super::{create, open};
use crate::error::{Error, Result};

pub const MAXVAL: u16 = 65535;

pub fn encode(v: f64) -> u16 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * MAXVAL as f64).round() as u16
}

pub fn decode(s: u16) -> f64 {
    s as f64 / MAXVAL as f64
}

pub fn write_pgm_to<W: Write>(img: &Grid<f64>, mut w: W) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n{}\n", img.width(), img.height(), MAXVAL)?;
    let mut body = Vec::with_capacity(img.len() * 2);
    for &v in img.iter() {
        body.extend_from_slice(&encode(v).to_be_bytes());
    }
    w.write_all(&body)?;
    w.flush()
}

fn header_token<R: BufRead>(r: &mut R, name: &str) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte).map_err(|e| Error::parse(name, None, e.to_string()))? == 0 {
            return Err(Error::parse(name, None, "truncated PGM header"));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip).map_err(|e| Error::parse(name, None, e.to_string()))?;
            }
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            c => token.push(c),
        }
    }
    String::from_utf8(token).map_err(|_| Error::parse(name, None, "non-ASCII PGM header"))
}

pub fn read_pgm_from<R: Read>(name: &str, r: R) -> Result<Grid<f64>> {
    let mut r = BufReader::new(r);
    if header_token(&mut r, name)? != "P5" {
        return Err(Error::parse(name, None, "not a binary PGM (P5)"));
    }
    let mut number = |what: &str| -> Result<usize> {
        header_token(&mut r, name)?.parse().map_err(|_| Error::parse(name, None, format!("invalid PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(name, None, "PGM has zero size"));
    }
    if maxval == 0 || maxval > MAXVAL as usize {
        return Err(Error::parse(name, None, format!("unsupported PGM maxval {maxval}")));
    }
    let wide = maxval > 255;
    let mut body = vec![0u8; width * height * if wide { 2 } else { 1 }];
    r.read_exact(&mut body).map_err(|_| Error::parse(name, None, "truncated PGM data"))?;
    let data: Vec<f64> = if wide {
        body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / maxval as f64).collect()
    } else {
        body.iter().map(|&b| b as f64 / maxval as f64).collect()
    };
    Grid::from_vec(width, height, data).map_err(Error::from)
}

pub fn write_pgm(path: &Path, img: &Grid<f64>) -> Result<()> {
    write_pgm_to(img, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<Grid<f64>> {
    read_pgm_from(&path.display().to_string(), open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bytes() {
        let img = Grid::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_pgm_to(&img, &mut buf).unwrap();
        let mut expected = b"P5\n2 1\n65535\n".to_vec();
        expected.extend_from_slice(&[0, 0, 0xff, 0xff]);
        assert_eq!(buf, expected);
    }

    #[test]
    fn round_trip_is_quantized() {
        let img = Grid::from_fn(5, 3, |x, y| (x as f64 * 0.13 + y as f64 * 0.2).min(1.0));
        let mut buf = Vec::new();
        write_pgm_to(&img, &mut buf).unwrap();
        let back = read_pgm_from("mem", &buf[..]).unwrap();
        for (a, b) in img.iter().zip(back.iter()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
    }

    #[test]
    fn clamps_and_reads_comments() {
        assert_eq!(encode(-1.0), 0);
        assert_eq!(encode(2.0), 65535);
        let mut data = b"P5 # comment\n1 1\n255\n".to_vec();
        data.push(51);
        let g = read_pgm_from("mem", &data[..]).unwrap();
        assert!((g.as_slice()[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_truncated() {
        let img = Grid::filled(4, 4, 0.5);
        let mut buf = Vec::new();
        write_pgm_to(&img, &mut buf).unwrap();
        assert!(read_pgm_from("mem", &buf[..buf.len() - 1]).is_err());
        assert!(read_pgm_from("mem", &b"P2\n1 1\n255\n0"[..]).is_err());
    }
}
