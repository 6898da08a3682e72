//! Core event data model: events, sensor geometry, and validated streams.
//!
//! An event is the tuple (x, y, t, p): pixel location, microsecond timestamp,
//! and polarity. Streams keep events sorted by timestamp with a fixed
//! tie-break so every downstream stage is deterministic regardless of how
//! simultaneous events were ordered in the input file.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Timestamps must fit in 63 bits.
pub const MAX_TIMESTAMP: u64 = (1 << 63) - 1;

/// ON (+1) or OFF (-1) polarity of an intensity change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }

    pub fn from_i8(value: i8) -> Option<Self> {
        match value {
            1 => Some(Polarity::On),
            -1 => Some(Polarity::Off),
            _ => None,
        }
    }
}

/// Ground-truth provenance of an event, carried inline so metrics cannot
/// misalign labels with events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Signal,
    Noise,
}

impl Label {
    /// Wire encoding: 0 = unlabeled, 1 = signal, 2 = noise.
    pub fn as_u8(opt: Option<Label>) -> u8 {
        match opt {
            None => 0,
            Some(Label::Signal) => 1,
            Some(Label::Noise) => 2,
        }
    }

    pub fn from_u8(value: u8) -> Option<Option<Label>> {
        match value {
            0 => Some(None),
            1 => Some(Some(Label::Signal)),
            2 => Some(Some(Label::Noise)),
            _ => None,
        }
    }
}

/// A single sensor measurement, optionally carrying a ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    /// Timestamp in integer microseconds.
    pub t: u64,
    /// Pixel column.
    pub x: u16,
    /// Pixel row.
    pub y: u16,
    pub polarity: Polarity,
    pub label: Option<Label>,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Event { t, x, y, polarity, label: None }
    }

    pub fn labeled(t: u64, x: u16, y: u16, polarity: Polarity, label: Label) -> Self {
        Event { t, x, y, polarity, label: Some(label) }
    }

    /// Total ordering used everywhere: t, then (y, x, p), then label code.
    pub fn sort_key(&self) -> (u64, u16, u16, i8, u8) {
        (self.t, self.y, self.x, self.polarity.as_i8(), Label::as_u8(self.label))
    }
}

/// Pixel grid size of the sensor (width = N columns, height = M rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorGeometry {
    pub width: u16,
    pub height: u16,
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry { width, height });
        }
        Ok(SensorGeometry { width, height })
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major pixel index.
    pub fn pixel_index(&self, x: u16, y: u16) -> usize {
        y as usize * self.width as usize + x as usize
    }
}

/// One invariant violation found by [`validate_events`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Index of the offending event in the checked slice.
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Coordinate outside the sensor geometry.
    OutOfBounds { x: u16, y: u16 },
    /// Sort key is smaller than the previous event's.
    OutOfOrder,
    /// Timestamp does not fit in 63 bits.
    TimestampOverflow { t: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::OutOfBounds { x, y } => {
                write!(f, "event {}: coordinate ({},{}) out of bounds", self.index, x, y)
            }
            ViolationKind::OutOfOrder => {
                write!(f, "event {}: out of order", self.index)
            }
            ViolationKind::TimestampOverflow { t } => {
                write!(f, "event {}: timestamp {} exceeds 63 bits", self.index, t)
            }
        }
    }
}

/// Checks every stream invariant over a raw event slice. Returns one
/// violation per offending index; an empty list means the slice would form
/// a valid stream for `geometry`.
pub fn validate_events(geometry: SensorGeometry, events: &[Event]) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (index, event) in events.iter().enumerate() {
        if !geometry.contains(event.x, event.y) {
            violations.push(Violation {
                index,
                kind: ViolationKind::OutOfBounds { x: event.x, y: event.y },
            });
        }
        if event.t > MAX_TIMESTAMP {
            violations.push(Violation {
                index,
                kind: ViolationKind::TimestampOverflow { t: event.t },
            });
        }
        if index > 0 && event.sort_key() < events[index - 1].sort_key() {
            violations.push(Violation { index, kind: ViolationKind::OutOfOrder });
        }
    }
    violations
}

/// Stable total sort by (t, y, x, p, label).
pub fn sort_events(events: &mut [Event]) {
    events.sort_by_key(Event::sort_key);
}

/// An immutable, sorted, bounds-checked sequence of events on a sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream from events in any order: bounds and timestamps are
    /// checked against the input order, then the events are stably sorted.
    pub fn new(geometry: SensorGeometry, mut events: Vec<Event>) -> Result<Self> {
        let violations: Vec<Violation> = validate_events(geometry, &events)
            .into_iter()
            .filter(|v| !matches!(v.kind, ViolationKind::OutOfOrder))
            .collect();
        if !violations.is_empty() {
            return Err(Error::InvalidStream(violations));
        }
        sort_events(&mut events);
        Ok(EventStream { geometry, events })
    }

    /// Builds a stream from events that must already satisfy every invariant.
    pub fn from_sorted(geometry: SensorGeometry, events: Vec<Event>) -> Result<Self> {
        let violations = validate_events(geometry, &events);
        if !violations.is_empty() {
            return Err(Error::InvalidStream(violations));
        }
        Ok(EventStream { geometry, events })
    }

    /// Internal constructor for subsets of already-validated streams.
    pub(crate) fn from_parts_unchecked(geometry: SensorGeometry, events: Vec<Event>) -> Self {
        debug_assert!(validate_events(geometry, &events).is_empty());
        EventStream { geometry, events }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// First and last timestamps, if any.
    pub fn time_span(&self) -> Option<(u64, u64)> {
        match (self.events.first(), self.events.last()) {
            (Some(first), Some(last)) => Some((first.t, last.t)),
            _ => None,
        }
    }

    /// True when every event carries a label.
    pub fn is_fully_labeled(&self) -> bool {
        self.events.iter().all(|e| e.label.is_some())
    }

    /// (signal, noise, unlabeled) counts.
    pub fn label_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for event in &self.events {
            match event.label {
                Some(Label::Signal) => counts.0 += 1,
                Some(Label::Noise) => counts.1 += 1,
                None => counts.2 += 1,
            }
        }
        counts
    }

    /// Re-checks every invariant; empty by construction.
    pub fn validate(&self) -> Vec<Violation> {
        validate_events(self.geometry, &self.events)
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SensorGeometry {
        SensorGeometry::new(64, 64).unwrap()
    }

    #[test]
    fn geometry_rejects_zero_dims() {
        assert!(SensorGeometry::new(0, 4).is_err());
        assert!(SensorGeometry::new(4, 0).is_err());
    }

    #[test]
    fn sorted_in_bounds_stream_validates_clean() {
        let events = vec![
            Event::new(10, 1, 1, Polarity::On),
            Event::new(20, 2, 2, Polarity::Off),
        ];
        let stream = EventStream::from_sorted(geom(), events).unwrap();
        assert!(stream.validate().is_empty());
    }

    #[test]
    fn decreasing_timestamp_reported_at_offending_index() {
        let mut events: Vec<Event> =
            (0..6).map(|i| Event::new(100 * i, 0, 0, Polarity::On)).collect();
        events[5].t = 10;
        let violations = validate_events(geom(), &events);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].index, 5);
        assert_eq!(violations[0].kind, ViolationKind::OutOfOrder);
    }

    #[test]
    fn x_equal_width_is_out_of_bounds() {
        let events = vec![Event::new(0, 64, 0, Polarity::On)];
        let violations = validate_events(geom(), &events);
        assert!(matches!(violations[0].kind, ViolationKind::OutOfBounds { x: 64, y: 0 }));
        assert!(EventStream::new(geom(), events).is_err());
    }

    #[test]
    fn new_sorts_with_y_x_p_tiebreak() {
        let events = vec![
            Event::new(5, 3, 1, Polarity::On),
            Event::new(5, 1, 1, Polarity::Off),
            Event::new(5, 0, 0, Polarity::On),
            Event::new(1, 9, 9, Polarity::On),
        ];
        let stream = EventStream::new(geom(), events).unwrap();
        let keys: Vec<_> = stream.events().iter().map(Event::sort_key).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(stream.events()[0].t, 1);
        // Same t, same y: x breaks the tie.
        assert_eq!(stream.events()[2].x, 1);
        assert_eq!(stream.events()[3].x, 3);
        assert!(stream.validate().is_empty());
    }

    #[test]
    fn timestamp_overflow_is_a_violation() {
        let events = vec![Event::new(MAX_TIMESTAMP + 1, 0, 0, Polarity::On)];
        let violations = validate_events(geom(), &events);
        assert!(matches!(violations[0].kind, ViolationKind::TimestampOverflow { .. }));
    }

    #[test]
    fn label_counts_track_all_three_states() {
        let events = vec![
            Event::labeled(1, 0, 0, Polarity::On, Label::Signal),
            Event::labeled(2, 0, 0, Polarity::On, Label::Noise),
            Event::new(3, 0, 0, Polarity::On),
        ];
        let stream = EventStream::from_sorted(geom(), events).unwrap();
        assert_eq!(stream.label_counts(), (1, 1, 1));
        assert!(!stream.is_fully_labeled());
    }
}
