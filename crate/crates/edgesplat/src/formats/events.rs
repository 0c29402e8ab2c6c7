//! Event files: a line-oriented text format and a packed little-endian binary
//! format. Readers tell them apart by the binary magic.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use edgesplat_core::event::Polarity;
use edgesplat_core::{Event, EventStream};

use super::{create, open};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"E2ES";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Text,
    Binary,
}

impl EventFormat {
    /// Binary for `.bin`, `.e2es` and `.dat` extensions, text otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin" | "e2es" | "dat") => EventFormat::Binary,
            _ => EventFormat::Text,
        }
    }
}

pub fn write_text<W: Write>(stream: &EventStream, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# t_us x y p")?;
    writeln!(w, "# resolution {} {}", stream.width(), stream.height())?;
    for e in stream.events() {
        writeln!(w, "{} {} {} {}", e.t, e.x, e.y, e.polarity.sign())?;
    }
    w.flush()
}

pub fn write_binary<W: Write>(stream: &EventStream, mut w: W) -> std::io::Result<()> {
    let (width, height) = (stream.width(), stream.height());
    if width > u16::MAX as usize || height > u16::MAX as usize {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "resolution exceeds the u16 header fields"));
    }
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..10].copy_from_slice(&(width as u16).to_le_bytes());
    header[10..12].copy_from_slice(&(height as u16).to_le_bytes());
    w.write_all(&header)?;
    for e in stream.events() {
        let mut rec = [0u8; RECORD_LEN];
        rec[0..8].copy_from_slice(&e.t.to_le_bytes());
        rec[8..10].copy_from_slice(&e.x.to_le_bytes());
        rec[10..12].copy_from_slice(&e.y.to_le_bytes());
        rec[12] = e.polarity.sign() as i8 as u8;
        w.write_all(&rec)?;
    }
    w.flush()
}

fn parse_polarity(v: i64) -> Option<Polarity> {
    match v {
        1 => Some(Polarity::Positive),
        -1 | 0 => Some(Polarity::Negative),
        _ => None,
    }
}

fn finish(name: &str, events: Vec<Event>, resolution: Option<(usize, usize)>) -> Result<EventStream> {
    let (width, height) = match resolution {
        Some(r) => r,
        None => {
            let w = events.iter().map(|e| e.x as usize + 1).max().unwrap_or(0);
            let h = events.iter().map(|e| e.y as usize + 1).max().unwrap_or(0);
            if w == 0 {
                return Err(Error::parse(name, None, "no resolution directive and no events to infer it from"));
            }
            (w, h)
        }
    };
    let stream = EventStream::new(width, height, events).map_err(|e| Error::parse(name, None, e.to_string()))?;
    if !stream.is_sorted() {
        return Err(Error::parse(name, None, "events are not sorted by timestamp"));
    }
    Ok(stream)
}

/// Parses the text format. `# resolution W H` sets the sensor size, which
/// otherwise comes from `fallback` or, failing that, the largest coordinates.
pub fn read_text<R: BufRead>(name: &str, r: R, fallback: Option<(usize, usize)>) -> Result<EventStream> {
    let mut resolution = None;
    let mut events = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(name, Some(lineno), e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("resolution") {
                let dims: Vec<&str> = it.collect();
                let parsed = match dims.as_slice() {
                    [w, h] => w.parse::<usize>().ok().zip(h.parse::<usize>().ok()),
                    _ => None,
                };
                match parsed {
                    Some((w, h)) if w > 0 && h > 0 => resolution = Some((w, h)),
                    _ => {
                        return Err(Error::parse(
                            name,
                            Some(lineno),
                            "resolution directive needs two positive integers",
                        ))
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                name,
                Some(lineno),
                format!("expected 't_us x y p', got {} fields", fields.len()),
            ));
        }
        let bad = |what: &str| Error::parse(name, Some(lineno), format!("invalid {what} '{}'", line));
        let t: u64 = fields[0].parse().map_err(|_| bad("timestamp"))?;
        let x: u16 = fields[1].parse().map_err(|_| bad("x"))?;
        let y: u16 = fields[2].parse().map_err(|_| bad("y"))?;
        let p = fields[3].parse::<i64>().ok().and_then(parse_polarity).ok_or_else(|| bad("polarity"))?;
        events.push(Event::new(t, x, y, p));
    }
    finish(name, events, resolution.or(fallback))
}

pub fn read_binary<R: Read>(name: &str, mut r: R) -> Result<EventStream> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|_| Error::parse(name, None, "truncated binary header"))?;
    if header[0..4] != MAGIC {
        return Err(Error::parse(name, None, "missing E2ES magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::parse(name, None, format!("unsupported binary version {version}")));
    }
    let width = u16::from_le_bytes([header[8], header[9]]) as usize;
    let height = u16::from_le_bytes([header[10], header[11]]) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::parse(name, None, e.to_string()))?;
    if body.len() % RECORD_LEN != 0 {
        return Err(Error::parse(name, None, format!("body length {} is not a multiple of {RECORD_LEN}", body.len())));
    }
    let mut events = Vec::with_capacity(body.len() / RECORD_LEN);
    for (i, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let t = u64::from_le_bytes(rec[0..8].try_into().expect("8 bytes"));
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let p = parse_polarity(rec[12] as i8 as i64)
            .ok_or_else(|| Error::parse(name, None, format!("record {i}: invalid polarity {}", rec[12] as i8)))?;
        events.push(Event::new(t, x, y, p));
    }
    finish(name, events, Some((width, height)))
}

/// Reads either format, choosing by the leading magic bytes.
pub fn read_events(path: &Path, fallback: Option<(usize, usize)>) -> Result<EventStream> {
    let name = path.display().to_string();
    let mut reader = BufReader::new(open(path)?);
    let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
    if head.len() >= 4 && head[0..4] == MAGIC {
        read_binary(&name, reader)
    } else {
        read_text(&name, reader, fallback)
    }
}

pub fn write_events(path: &Path, stream: &EventStream, format: EventFormat) -> Result<()> {
    let w = create(path)?;
    match format {
        EventFormat::Text => write_text(stream, w),
        EventFormat::Binary => write_binary(stream, w),
    }
    .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EventStream {
        EventStream::new(
            8,
            6,
            vec![
                Event::new(0, 1, 2, Polarity::Positive),
                Event::new(5, 7, 5, Polarity::Negative),
                Event::new(5, 0, 0, Polarity::Positive),
                Event::new(u64::MAX / 2, 3, 3, Polarity::Negative),
            ],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let mut buf = Vec::new();
        write_text(&sample(), &mut buf).unwrap();
        let back = read_text("mem", &buf[..], None).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 4 * RECORD_LEN);
        assert_eq!(&buf[0..4], b"E2ES");
        assert_eq!(&buf[8..12], &[8, 0, 6, 0]);
        assert_eq!(buf[HEADER_LEN + RECORD_LEN + 12], 0xff);
        assert_eq!(read_binary("mem", &buf[..]).unwrap(), sample());
    }

    #[test]
    fn zero_polarity_means_negative() {
        let s = read_text("mem", "# resolution 4 4\n10 1 1 0\n".as_bytes(), None).unwrap();
        assert_eq!(s.events()[0].polarity, Polarity::Negative);
    }

    #[test]
    fn resolution_sources() {
        let s = read_text("mem", "1 3 1 1\n".as_bytes(), None).unwrap();
        assert_eq!((s.width(), s.height()), (4, 2));
        let s = read_text("mem", "1 3 1 1\n".as_bytes(), Some((10, 10))).unwrap();
        assert_eq!((s.width(), s.height()), (10, 10));
    }

    #[test]
    fn malformed_lines_are_located() {
        let err = read_text("ev.txt", "# resolution 4 4\n1 1 1 1\n2 1 x 1\n".as_bytes(), None).unwrap_err();
        assert_eq!(err.to_string(), "ev.txt:3: invalid y '2 1 x 1'");
        assert!(read_text("m", "# resolution 4 4\n1 1 1 2\n".as_bytes(), None).is_err());
        assert!(read_text("m", "# resolution 4 4\n5 1 1 1\n4 1 1 1\n".as_bytes(), None).is_err());
        assert!(read_text("m", "# resolution 4 4\n1 9 1 1\n".as_bytes(), None).is_err());
    }

    #[test]
    fn binary_rejects_bad_input() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        assert!(read_binary("m", &buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(read_binary("m", &bad[..]).is_err());
        assert!(read_binary("m", &buf[..10]).is_err());
    }
}
