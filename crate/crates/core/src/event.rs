//! Events, interval accumulation into event maps, and temporal chunking.

use alloc::vec::Vec;
use core::ops::{Add, Neg};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    #[inline]
    pub fn sign(self) -> i32 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// A single brightness-change impulse. `t` is in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self { t, x, y, polarity }
    }

    /// Canonical ordering key: time, then row, column, polarity.
    #[inline]
    pub fn sort_key(&self) -> (u64, u16, u16, Polarity) {
        (self.t, self.y, self.x, self.polarity)
    }
}

/// Time-ordered events of one sensor with a known resolution and time span.
///
/// The span is half-open `[start, end)`. Streams built from events without an
/// explicit span cover `[first.t, last.t + 1)`; an empty stream without a span
/// accepts any interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    width: usize,
    height: usize,
    events: Vec<Event>,
    span: Option<(u64, u64)>,
    sorted: bool,
}

impl EventStream {
    pub fn new(width: usize, height: usize, events: Vec<Event>) -> Result<Self> {
        Self::build(width, height, events, None)
    }

    pub fn with_span(width: usize, height: usize, events: Vec<Event>, start: u64, end: u64) -> Result<Self> {
        if end < start {
            return Err(invalid("stream span end precedes its start"));
        }
        Self::build(width, height, events, Some((start, end)))
    }

    fn build(width: usize, height: usize, events: Vec<Event>, span: Option<(u64, u64)>) -> Result<Self> {
        if width == 0 || height == 0 || width > u16::MAX as usize + 1 || height > u16::MAX as usize + 1 {
            return Err(invalid("stream resolution out of range"));
        }
        if let Some(e) = events.iter().find(|e| e.x as usize >= width || e.y as usize >= height) {
            return Err(invalid(alloc::format!("event at ({}, {}) outside {}x{} sensor", e.x, e.y, width, height)));
        }
        let sorted = events.windows(2).all(|w| w[0].t <= w[1].t);
        if let (Some((start, end)), true) = (span, sorted) {
            if let (Some(first), Some(last)) = (events.first(), events.last()) {
                if first.t < start || last.t >= end {
                    return Err(invalid("events fall outside the declared stream span"));
                }
            }
        }
        Ok(Self { width, height, events, span, sorted })
    }

    /// Sorts events by the canonical key `(t, y, x, polarity)`.
    pub fn sort(&mut self) {
        self.events.sort_by_key(Event::sort_key);
        self.sorted = true;
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    /// Half-open time span, or `None` for an empty stream without declared span.
    pub fn span(&self) -> Option<(u64, u64)> {
        self.span.or_else(|| {
            let first = self.events.iter().map(|e| e.t).min()?;
            let last = self.events.iter().map(|e| e.t).max()?;
            Some((first, last + 1))
        })
    }

    fn check_sorted(&self) -> Result<()> {
        if self.sorted {
            return Ok(());
        }
        let idx = self.events.windows(2).position(|w| w[0].t > w[1].t).map_or(0, |i| i + 1);
        Err(Error::UnsortedStream(idx))
    }

    /// Events with timestamps in `[t0, t1)`. Requires a sorted stream.
    pub fn slice(&self, t0: u64, t1: u64) -> Result<&[Event]> {
        self.check_sorted()?;
        Ok(time_slice(&self.events, t0, t1))
    }

    /// Signed per-pixel accumulation of the events in `[t, t + dt)`.
    pub fn accumulate(&self, t: u64, dt: u64, contrast_threshold: f64) -> Result<EventMap> {
        if dt == 0 {
            return Err(invalid("accumulation interval must be positive"));
        }
        let end = t.checked_add(dt).ok_or_else(|| invalid("interval end overflows"))?;
        if let Some((start, stop)) = self.span() {
            if t < start || end > stop {
                return Err(Error::IntervalOutOfRange { start: t, end, range_start: start, range_end: stop });
            }
        }
        let events = self.slice(t, end)?;
        EventMap::from_events(events, self.width, self.height, t, end, contrast_threshold)
    }

    /// Splits the stream into contiguous chunks of `chunk_duration` µs.
    pub fn chunks(&self, chunk_duration: u64) -> Result<Vec<Chunk<'_>>> {
        chunk_stream(self, chunk_duration)
    }
}

#[inline]
fn time_slice(events: &[Event], t0: u64, t1: u64) -> &[Event] {
    let lo = events.partition_point(|e| e.t < t0);
    let hi = events.partition_point(|e| e.t < t1);
    &events[lo..hi.max(lo)]
}

/// Signed event counts over `[t_start, t_end)`, scaled by the contrast threshold.
///
/// Counts are kept as integers so that maps over adjacent intervals add
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct EventMap {
    counts: Grid<i32>,
    contrast_threshold: f64,
    pub t_start: u64,
    pub t_end: u64,
}

impl EventMap {
    pub fn zeros(width: usize, height: usize, t_start: u64, t_end: u64, contrast_threshold: f64) -> Self {
        Self { counts: Grid::filled(width, height, 0), contrast_threshold, t_start, t_end }
    }

    pub fn from_events(
        events: &[Event],
        width: usize,
        height: usize,
        t_start: u64,
        t_end: u64,
        contrast_threshold: f64,
    ) -> Result<Self> {
        if !(contrast_threshold > 0.0 && contrast_threshold.is_finite()) {
            return Err(invalid("contrast threshold must be positive"));
        }
        let mut map = Self::zeros(width, height, t_start, t_end, contrast_threshold);
        for e in events.iter().filter(|e| e.t >= t_start && e.t < t_end) {
            map.counts[(e.x as usize, e.y as usize)] += e.polarity.sign();
        }
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.counts.width()
    }

    pub fn height(&self) -> usize {
        self.counts.height()
    }

    pub fn contrast_threshold(&self) -> f64 {
        self.contrast_threshold
    }

    pub fn counts(&self) -> &Grid<i32> {
        &self.counts
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.counts[(x, y)] as f64 * self.contrast_threshold
    }

    /// Accumulated log-brightness change per pixel.
    pub fn values(&self) -> Grid<f64> {
        let c = self.contrast_threshold;
        self.counts.map(|&n| n as f64 * c)
    }

    /// Net positive minus negative event count.
    pub fn net_count(&self) -> i64 {
        self.counts.iter().map(|&n| n as i64).sum()
    }
}

impl Add for &EventMap {
    type Output = EventMap;

    /// Element-wise sum; the result spans the union of both intervals.
    fn add(self, rhs: &EventMap) -> EventMap {
        assert_eq!(self.counts.dims(), rhs.counts.dims(), "event map resolution mismatch");
        assert!(self.contrast_threshold == rhs.contrast_threshold, "event maps use different contrast thresholds");
        EventMap {
            counts: self.counts.zip_map(&rhs.counts, |a, b| a + b).expect("shapes checked"),
            contrast_threshold: self.contrast_threshold,
            t_start: self.t_start.min(rhs.t_start),
            t_end: self.t_end.max(rhs.t_end),
        }
    }
}

impl Neg for &EventMap {
    type Output = EventMap;

    fn neg(self) -> EventMap {
        EventMap { counts: self.counts.map(|n| -n), ..self.clone() }
    }
}

/// Draws `(t, t + Δt)` with `Δt` uniform over the integers in `[dt_min, dt_max]`.
pub fn sample_interval<R: Rng + ?Sized>(rng: &mut R, t: u64, dt_min: u64, dt_max: u64) -> Result<(u64, u64)> {
    if dt_min == 0 {
        return Err(invalid("dt_min must be positive"));
    }
    if dt_min > dt_max {
        return Err(invalid("dt_min exceeds dt_max"));
    }
    let dt = rng.random_range(dt_min..=dt_max);
    Ok((t, t + dt))
}

/// A contiguous temporal slice of a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chunk<'a> {
    pub index: usize,
    pub t_start: u64,
    pub t_end: u64,
    pub events: &'a [Event],
    pub width: usize,
    pub height: usize,
}

impl Chunk<'_> {
    pub fn duration(&self) -> u64 {
        self.t_end - self.t_start
    }

    /// Accumulates `[t0, t1)` clamped to the chunk.
    pub fn accumulate(&self, t0: u64, t1: u64, contrast_threshold: f64) -> Result<EventMap> {
        let t0 = t0.clamp(self.t_start, self.t_end);
        let t1 = t1.clamp(t0, self.t_end);
        EventMap::from_events(time_slice(self.events, t0, t1), self.width, self.height, t0, t1, contrast_threshold)
    }

    /// `count` consecutive equal-length event maps tiling the chunk.
    pub fn sub_maps(&self, count: usize, contrast_threshold: f64) -> Result<Vec<EventMap>> {
        if count == 0 {
            return Err(invalid("sub-map count must be positive"));
        }
        let dur = self.duration();
        (0..count)
            .map(|k| {
                let a = self.t_start + dur * k as u64 / count as u64;
                let b = self.t_start + dur * (k as u64 + 1) / count as u64;
                self.accumulate(a, b, contrast_threshold)
            })
            .collect()
    }
}

/// Partitions a sorted stream into chunks with boundaries at
/// `start + k · chunk_duration`; the last chunk may be shorter.
pub fn chunk_stream(stream: &EventStream, chunk_duration: u64) -> Result<Vec<Chunk<'_>>> {
    if chunk_duration == 0 {
        return Err(invalid("chunk duration must be positive"));
    }
    stream.check_sorted()?;
    let (start, end) = stream.span().ok_or(Error::EmptyStream)?;
    let mut chunks = Vec::new();
    let mut t0 = start;
    while t0 < end {
        let t1 = t0.saturating_add(chunk_duration).min(end);
        chunks.push(Chunk {
            index: chunks.len(),
            t_start: t0,
            t_end: t1,
            events: time_slice(&stream.events, t0, t1),
            width: stream.width,
            height: stream.height,
        });
        t0 = t1;
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    use crate::SeededRng;

    fn ev(t: u64, x: u16, y: u16, p: i32) -> Event {
        Event::new(t, x, y, if p > 0 { Polarity::Positive } else { Polarity::Negative })
    }

    #[test]
    fn empty_stream_accumulates_to_zero() {
        let s = EventStream::new(8, 6, vec![]).unwrap();
        let m = s.accumulate(1000, 500, 0.2).unwrap();
        assert_eq!(m.values(), Grid::zeros(8, 6));
    }

    #[test]
    fn single_impulse() {
        let s = EventStream::with_span(8, 8, vec![ev(10, 3, 4, 1)], 0, 100).unwrap();
        let m = s.accumulate(0, 50, 0.2).unwrap();
        let v = m.values();
        for y in 0..8 {
            for x in 0..8 {
                let want = if (x, y) == (3, 4) { 0.2 } else { 0.0 };
                assert_eq!(v[(x, y)], want);
            }
        }
    }

    #[test]
    fn half_open_interval() {
        let s = EventStream::with_span(4, 4, vec![ev(10, 0, 0, 1), ev(20, 0, 0, 1)], 0, 30).unwrap();
        assert_eq!(s.accumulate(10, 10, 1.0).unwrap().value(0, 0), 1.0);
        assert_eq!(s.accumulate(0, 10, 1.0).unwrap().value(0, 0), 0.0);
    }

    #[test]
    fn interval_outside_range_is_error() {
        let s = EventStream::with_span(4, 4, vec![ev(10, 0, 0, 1)], 0, 30).unwrap();
        assert!(matches!(s.accumulate(20, 20, 1.0), Err(Error::IntervalOutOfRange { .. })));
        assert!(s.accumulate(0, 0, 1.0).is_err());
    }

    #[test]
    fn out_of_bounds_event_rejected() {
        assert!(EventStream::new(4, 4, vec![ev(0, 4, 0, 1)]).is_err());
    }

    #[test]
    fn sample_interval_contract() {
        let mut rng = SeededRng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_interval(&mut rng, 7, 300, 300).unwrap(), (7, 307));
        }
        assert!(sample_interval(&mut rng, 0, 3, 2).is_err());

        let mut a = SeededRng::seed_from_u64(9);
        let mut b = SeededRng::seed_from_u64(9);
        for _ in 0..100 {
            assert_eq!(
                sample_interval(&mut a, 0, 1000, 3000).unwrap(),
                sample_interval(&mut b, 0, 1000, 3000).unwrap()
            );
        }
    }

    #[test]
    fn sample_interval_mean() {
        let mut rng = SeededRng::seed_from_u64(42);
        let n = 100_000;
        let total: u64 = (0..n)
            .map(|_| {
                let (a, b) = sample_interval(&mut rng, 0, 1000, 3000).unwrap();
                b - a
            })
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 2000.0).abs() < 20.0, "mean {mean}");
    }

    #[test]
    fn chunk_boundaries_exact_division() {
        let s = EventStream::with_span(4, 4, vec![], 0, 100_000).unwrap();
        let chunks = s.chunks(25_000).unwrap();
        let bounds: Vec<_> = chunks.iter().map(|c| (c.t_start, c.t_end)).collect();
        assert_eq!(bounds, vec![(0, 25_000), (25_000, 50_000), (50_000, 75_000), (75_000, 100_000)]);
    }

    #[test]
    fn chunk_boundaries_remainder() {
        let s = EventStream::with_span(4, 4, vec![], 0, 90_000).unwrap();
        let chunks = s.chunks(25_000).unwrap();
        assert_eq!(chunks.len(), 4);
        assert_eq!(chunks[3].duration(), 15_000);
        for w in chunks.windows(2) {
            assert_eq!(w[0].t_end, w[1].t_start);
        }
    }

    #[test]
    fn unsorted_stream_rejected() {
        let s = EventStream::new(4, 4, vec![ev(10, 0, 0, 1), ev(5, 0, 0, 1)]).unwrap();
        assert_eq!(s.chunks(10), Err(Error::UnsortedStream(1)));
        let mut s = s;
        s.sort();
        assert_eq!(s.chunks(10).unwrap().len(), 1);
    }

    #[test]
    fn chunk_sub_maps_partition_chunk() {
        let events = vec![ev(0, 1, 1, 1), ev(3, 1, 1, 1), ev(7, 2, 2, -1), ev(9, 1, 1, -1)];
        let s = EventStream::with_span(4, 4, events, 0, 10).unwrap();
        let chunk = s.chunks(10).unwrap()[0];
        let maps = chunk.sub_maps(3, 0.5).unwrap();
        let total = maps.iter().skip(1).fold(maps[0].clone(), |acc, m| &acc + m);
        assert_eq!(total.counts(), s.accumulate(0, 10, 0.5).unwrap().counts());
    }
}
