//! Stream windowing: fixed-duration (synchronous) and fixed-event-count
//! (asynchronous) splitting, plus per-pixel normalized timestamp sequences.

use crate::error::{Error, Result};
use crate::event::{Event, EventStream};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How a stream is cut into windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    /// Fixed time bins of `dt_us` microseconds.
    Sync { dt_us: u64 },
    /// Fixed bins of `count` events.
    Async { count: usize },
}

/// A contiguous slice of a stream. Timestamps satisfy
/// `t_start <= t < t_end` for every contained event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub events: Vec<Event>,
    pub t_start: u64,
    pub t_end: u64,
    pub index: usize,
    /// True when the window is shorter than requested (trailing remainder).
    pub partial: bool,
}

impl Window {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Window duration in microseconds; always >= 1 for non-degenerate windows.
    pub fn span(&self) -> u64 {
        self.t_end - self.t_start
    }
}

/// Splits according to `spec`.
pub fn split(stream: &EventStream, spec: WindowSpec) -> Result<Vec<Window>> {
    match spec {
        WindowSpec::Sync { dt_us } => split_sync(stream, dt_us),
        WindowSpec::Async { count } => split_async(stream, count),
    }
}

/// Splits into windows of `dt_us` microseconds anchored at the stream's
/// first timestamp. Interior windows with no events are emitted; the final
/// window is clipped to the data and flagged partial when shorter than
/// `dt_us`. An empty stream yields no windows.
pub fn split_sync(stream: &EventStream, dt_us: u64) -> Result<Vec<Window>> {
    if dt_us == 0 {
        return Err(Error::InvalidConfig("sync window dt must be >= 1 us".into()));
    }
    let Some((t_first, t_last)) = stream.time_span() else {
        return Ok(Vec::new());
    };
    let total = t_last - t_first + 1;
    let count = total.div_ceil(dt_us);
    let mut windows = Vec::with_capacity(count as usize);
    let events = stream.events();
    let mut cursor = 0usize;
    for k in 0..count {
        let t_start = t_first + k * dt_us;
        let t_end = (t_first + total).min(t_start + dt_us);
        let begin = cursor;
        while cursor < events.len() && events[cursor].t < t_end {
            cursor += 1;
        }
        windows.push(Window {
            events: events[begin..cursor].to_vec(),
            t_start,
            t_end,
            index: k as usize,
            partial: t_end - t_start < dt_us,
        });
    }
    debug_assert_eq!(cursor, events.len());
    Ok(windows)
}

/// Splits into consecutive runs of exactly `count` events; the trailing
/// remainder becomes a partial window. Window bounds are
/// `[first event t, last event t + 1)`. An empty stream yields no windows.
pub fn split_async(stream: &EventStream, count: usize) -> Result<Vec<Window>> {
    if count == 0 {
        return Err(Error::InvalidConfig("async window count must be >= 1".into()));
    }
    let mut windows = Vec::new();
    for (index, chunk) in stream.events().chunks(count).enumerate() {
        windows.push(Window {
            events: chunk.to_vec(),
            t_start: chunk[0].t,
            t_end: chunk[chunk.len() - 1].t + 1,
            index,
            partial: chunk.len() < count,
        });
    }
    Ok(windows)
}

/// How timestamps are mapped into [0, 1] inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceNorm {
    /// `(t - t_start) / (t_end - t_start)`: the window's full extent.
    WindowSpan,
    /// `(t - t_first_event) / (t_last_event - t_first_event)`: the span
    /// actually covered by events; a zero span maps everything to 0.
    EventSpan,
}

/// Normalized per-pixel timestamp sequences of one window. Only pixels with
/// at least one event are present; iteration order is fixed (x, then y).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PixelSequences {
    map: BTreeMap<(u16, u16), Vec<f64>>,
}

impl PixelSequences {
    pub fn get(&self, x: u16, y: u16) -> Option<&[f64]> {
        self.map.get(&(x, y)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u16, u16), &Vec<f64>)> {
        self.map.iter()
    }

    pub fn pixel_count(&self) -> usize {
        self.map.len()
    }

    pub fn into_map(self) -> BTreeMap<(u16, u16), Vec<f64>> {
        self.map
    }

    pub fn sequences(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.map.values()
    }
}

/// Groups the window's event timestamps by pixel, preserving order, and
/// normalizes them into [0, 1].
pub fn per_pixel_sequences(window: &Window, norm: SequenceNorm) -> Result<PixelSequences> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let (offset, denom) = match norm {
        SequenceNorm::WindowSpan => (window.t_start, (window.t_end - window.t_start) as f64),
        SequenceNorm::EventSpan => {
            let first = window.events[0].t;
            let last = window.events[window.events.len() - 1].t;
            (first, (last - first) as f64)
        }
    };
    let mut map: BTreeMap<(u16, u16), Vec<f64>> = BTreeMap::new();
    for event in &window.events {
        let value = if denom == 0.0 { 0.0 } else { (event.t - offset) as f64 / denom };
        map.entry((event.x, event.y)).or_default().push(value);
    }
    Ok(PixelSequences { map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Polarity, SensorGeometry};

    fn geom() -> SensorGeometry {
        SensorGeometry::new(64, 64).unwrap()
    }

    fn stream_at(times: &[u64]) -> EventStream {
        let events = times.iter().map(|&t| Event::new(t, 3, 4, Polarity::On)).collect();
        EventStream::new(geom(), events).unwrap()
    }

    #[test]
    fn one_window_when_dt_covers_everything() {
        let stream = stream_at(&[0, 500_000, 1_199_999]);
        let windows = split_sync(&stream, 1_200_000).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].len(), 3);
        assert!(!windows[0].partial);
    }

    #[test]
    fn seventeen_second_stream_gives_fifteen_windows_at_1200ms() {
        // 3 cycles of a 0.17 Hz stimulus span roughly 17.65 s.
        let t_last = 17_647_058;
        let stream = stream_at(&[0, t_last]);
        let windows = split_sync(&stream, 1_200_000).unwrap();
        assert_eq!(windows.len(), 15);
        assert!(windows[14].partial);
        assert!(windows[1..14].iter().all(|w| w.is_empty()));
    }

    #[test]
    fn empty_interior_windows_are_emitted() {
        let stream = stream_at(&[0, 3_500]);
        let windows = split_sync(&stream, 1_000).unwrap();
        assert_eq!(windows.len(), 4);
        assert_eq!(windows.iter().map(Window::len).collect::<Vec<_>>(), vec![1, 0, 0, 1]);
        assert_eq!(windows[3].t_end, 3_501);
        assert!(windows[3].partial);
    }

    #[test]
    fn empty_stream_yields_no_windows() {
        let stream = stream_at(&[]);
        assert!(split_sync(&stream, 100).unwrap().is_empty());
        assert!(split_async(&stream, 100).unwrap().is_empty());
    }

    #[test]
    fn async_full_windows_and_remainder() {
        let times: Vec<u64> = (0..2500).map(|i| i * 10).collect();
        let stream = stream_at(&times);
        let windows = split_async(&stream, 1100).unwrap();
        assert_eq!(windows.len(), 3);
        assert_eq!(windows.iter().map(Window::len).collect::<Vec<_>>(), vec![1100, 1100, 300]);
        assert_eq!(windows.iter().filter(|w| !w.partial).count(), 2);
        assert!(windows[2].partial);
    }

    #[test]
    fn async_exact_multiple_has_no_partial() {
        let times: Vec<u64> = (0..2200).map(|i| i * 10).collect();
        let stream = stream_at(&times);
        let windows = split_async(&stream, 1100).unwrap();
        assert_eq!(windows.len(), 2);
        assert!(windows.iter().all(|w| !w.partial));
    }

    #[test]
    fn single_event_mid_window_normalizes_to_half() {
        let window = Window {
            events: vec![Event::new(500, 3, 4, Polarity::On)],
            t_start: 0,
            t_end: 1000,
            index: 0,
            partial: false,
        };
        let seqs = per_pixel_sequences(&window, SequenceNorm::WindowSpan).unwrap();
        assert_eq!(seqs.get(3, 4), Some(&[0.5][..]));
        assert_eq!(seqs.pixel_count(), 1);
    }

    #[test]
    fn event_span_degenerates_to_zero() {
        let window = Window {
            events: vec![Event::new(700, 1, 1, Polarity::On), Event::new(700, 2, 2, Polarity::On)],
            t_start: 0,
            t_end: 1000,
            index: 0,
            partial: false,
        };
        let seqs = per_pixel_sequences(&window, SequenceNorm::EventSpan).unwrap();
        assert_eq!(seqs.get(1, 1), Some(&[0.0][..]));
        assert_eq!(seqs.get(2, 2), Some(&[0.0][..]));
    }

    #[test]
    fn empty_window_is_an_error() {
        let window = Window { events: vec![], t_start: 0, t_end: 10, index: 0, partial: false };
        assert!(matches!(
            per_pixel_sequences(&window, SequenceNorm::WindowSpan),
            Err(Error::EmptyWindow)
        ));
    }

    #[test]
    fn zero_width_parameters_are_rejected() {
        let stream = stream_at(&[1, 2]);
        assert!(split_sync(&stream, 0).is_err());
        assert!(split_async(&stream, 0).is_err());
    }
}
