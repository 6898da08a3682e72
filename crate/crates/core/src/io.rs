//! Event file I/O.
//!
//! Two formats are supported:
//! - CSV: one `t,x,y,p[,label]` line per event, label `s` (signal) or `n`
//!   (noise). An optional header line is skipped when its first field is
//!   not numeric. Geometry is supplied by the caller.
//! - Binary: 8-byte magic `EVLSTM01`, little-endian u16 width and height,
//!   then fixed 14-byte records (u64 t, u16 x, u16 y, i8 p, u8 label with
//!   0 = unlabeled, 1 = signal, 2 = noise).
//!
//! Both readers sort their input; files that are already sorted round-trip
//! byte-for-byte. Writers to paths are atomic (temp file + rename), so a
//! failed run never leaves a partial file behind.

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Label, Polarity, SensorGeometry, MAX_TIMESTAMP};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub const BINARY_MAGIC: &[u8; 8] = b"EVLSTM01";
const RECORD_SIZE: usize = 14;

/// Writes `bytes` to `path` atomically: the content lands in a temp file in
/// the same directory and is renamed into place only once fully written.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads a CSV event file. Rows may arrive unsorted; the returned stream is
/// sorted and validated against `geometry`.
pub fn read_csv(path: &Path, geometry: SensorGeometry) -> Result<EventStream> {
    read_csv_from(BufReader::new(File::open(path)?), geometry)
}

pub fn read_csv_from<R: BufRead>(reader: R, geometry: SensorGeometry) -> Result<EventStream> {
    let mut events = Vec::new();
    for (number, line) in reader.lines().enumerate() {
        let line_no = number + 1;
        let line = line?;
        match parse_csv_line(&line, line_no, geometry) {
            Ok(event) => events.push(event),
            // A non-numeric first field on line 1 is an optional header.
            Err(Error::MalformedLine { .. })
                if line_no == 1 && line.split(',').next().is_some_and(|f| f.parse::<u64>().is_err()) =>
            {
                continue;
            }
            Err(e) => return Err(e),
        }
    }
    EventStream::new(geometry, events)
}

fn parse_csv_line(line: &str, line_no: usize, geometry: SensorGeometry) -> Result<Event> {
    let malformed = |reason: &str| Error::MalformedLine { line: line_no, reason: reason.to_string() };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 && fields.len() != 5 {
        return Err(malformed(&format!("expected 4 or 5 fields, got {}", fields.len())));
    }
    let t: u64 = fields[0].parse().map_err(|_| malformed("invalid timestamp"))?;
    if t > MAX_TIMESTAMP {
        return Err(malformed("timestamp exceeds 63 bits"));
    }
    let x: u16 = fields[1].parse().map_err(|_| malformed("invalid x coordinate"))?;
    let y: u16 = fields[2].parse().map_err(|_| malformed("invalid y coordinate"))?;
    let p: i8 = fields[3].parse().map_err(|_| Error::InvalidPolarity {
        line: line_no,
        value: fields[3].to_string(),
    })?;
    let polarity = Polarity::from_i8(p).ok_or_else(|| Error::InvalidPolarity {
        line: line_no,
        value: fields[3].to_string(),
    })?;
    if !geometry.contains(x, y) {
        return Err(Error::OutOfBoundsCoordinate {
            line: line_no,
            x,
            y,
            width: geometry.width,
            height: geometry.height,
        });
    }
    let label = match fields.get(4) {
        None => None,
        Some(&"s") => Some(Label::Signal),
        Some(&"n") => Some(Label::Noise),
        Some(other) => return Err(malformed(&format!("invalid label {other:?}"))),
    };
    Ok(Event { t, x, y, polarity, label })
}

pub fn write_csv(stream: &EventStream, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    write_csv_to(stream, &mut bytes)?;
    atomic_write(path, &bytes)
}

pub fn write_csv_to<W: Write>(stream: &EventStream, mut writer: W) -> Result<()> {
    for event in stream.events() {
        match event.label {
            None => writeln!(
                writer,
                "{},{},{},{}",
                event.t,
                event.x,
                event.y,
                event.polarity.as_i8()
            )?,
            Some(label) => writeln!(
                writer,
                "{},{},{},{},{}",
                event.t,
                event.x,
                event.y,
                event.polarity.as_i8(),
                match label {
                    Label::Signal => 's',
                    Label::Noise => 'n',
                }
            )?,
        }
    }
    Ok(())
}

/// Reads a binary event file; geometry comes from the header.
pub fn read_binary(path: &Path) -> Result<EventStream> {
    read_binary_from(BufReader::new(File::open(path)?))
}

pub fn read_binary_from<R: Read>(mut reader: R) -> Result<EventStream> {
    let mut magic = [0u8; 8];
    read_exact_or(&mut reader, &mut magic, "header")?;
    if &magic != BINARY_MAGIC {
        return Err(Error::BadMagic { expected: "EVLSTM01" });
    }
    let mut dims = [0u8; 4];
    read_exact_or(&mut reader, &mut dims, "header")?;
    let width = u16::from_le_bytes([dims[0], dims[1]]);
    let height = u16::from_le_bytes([dims[2], dims[3]]);
    let geometry = SensorGeometry::new(width, height)?;

    let mut events = Vec::new();
    let mut record = [0u8; RECORD_SIZE];
    let mut index = 0usize;
    loop {
        match read_record(&mut reader, &mut record)? {
            false => break,
            true => {}
        }
        let t = u64::from_le_bytes(record[0..8].try_into().unwrap());
        let x = u16::from_le_bytes(record[8..10].try_into().unwrap());
        let y = u16::from_le_bytes(record[10..12].try_into().unwrap());
        let p = record[12] as i8;
        let polarity = Polarity::from_i8(p).ok_or_else(|| Error::MalformedRecord {
            index,
            reason: format!("polarity byte {p}"),
        })?;
        let label = Label::from_u8(record[13]).ok_or_else(|| Error::MalformedRecord {
            index,
            reason: format!("label byte {}", record[13]),
        })?;
        if t > MAX_TIMESTAMP {
            return Err(Error::MalformedRecord { index, reason: "timestamp exceeds 63 bits".into() });
        }
        events.push(Event { t, x, y, polarity, label });
        index += 1;
    }
    EventStream::new(geometry, events)
}

/// Reads one full record; Ok(false) on clean EOF, error on a partial record.
fn read_record<R: Read>(reader: &mut R, buf: &mut [u8; RECORD_SIZE]) -> Result<bool> {
    let mut filled = 0;
    while filled < RECORD_SIZE {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(false);
            }
            return Err(Error::Truncated { what: "event record" });
        }
        filled += n;
    }
    Ok(true)
}

fn read_exact_or<R: Read>(reader: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated { what },
        _ => Error::Io(e),
    })
}

pub fn write_binary(stream: &EventStream, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    write_binary_to(stream, &mut bytes)?;
    atomic_write(path, &bytes)
}

pub fn write_binary_to<W: Write>(stream: &EventStream, mut writer: W) -> Result<()> {
    writer.write_all(BINARY_MAGIC)?;
    writer.write_all(&stream.geometry().width.to_le_bytes())?;
    writer.write_all(&stream.geometry().height.to_le_bytes())?;
    for event in stream.events() {
        writer.write_all(&event.t.to_le_bytes())?;
        writer.write_all(&event.x.to_le_bytes())?;
        writer.write_all(&event.y.to_le_bytes())?;
        writer.write_all(&(event.polarity.as_i8() as u8).to_le_bytes())?;
        writer.write_all(&[Label::as_u8(event.label)])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn geom() -> SensorGeometry {
        SensorGeometry::new(64, 64).unwrap()
    }

    #[test]
    fn empty_file_gives_empty_stream() {
        let stream = read_csv_from(Cursor::new(""), geom()).unwrap();
        assert!(stream.is_empty());
    }

    #[test]
    fn single_line_maps_fields_directly() {
        let stream = read_csv_from(Cursor::new("1000,3,4,1\n"), geom()).unwrap();
        assert_eq!(stream.len(), 1);
        let e = stream.events()[0];
        assert_eq!((e.t, e.x, e.y, e.polarity), (1000, 3, 4, Polarity::On));
        assert_eq!(e.label, None);
    }

    #[test]
    fn header_line_is_skipped() {
        let stream = read_csv_from(Cursor::new("t,x,y,p\n5,1,2,-1\n"), geom()).unwrap();
        assert_eq!(stream.len(), 1);
        assert_eq!(stream.events()[0].polarity, Polarity::Off);
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = read_csv_from(Cursor::new("5,1,2,1\nbogus\n"), geom()).unwrap_err();
        match err {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn out_of_bounds_and_bad_polarity_are_rejected() {
        assert!(matches!(
            read_csv_from(Cursor::new("5,64,2,1\n"), geom()),
            Err(Error::OutOfBoundsCoordinate { line: 1, x: 64, .. })
        ));
        assert!(matches!(
            read_csv_from(Cursor::new("5,1,2,2\n"), geom()),
            Err(Error::InvalidPolarity { line: 1, .. })
        ));
    }

    #[test]
    fn labels_parse_and_write_back() {
        let text = "5,1,2,1,s\n7,1,2,-1,n\n";
        let stream = read_csv_from(Cursor::new(text), geom()).unwrap();
        assert_eq!(stream.events()[0].label, Some(Label::Signal));
        assert_eq!(stream.events()[1].label, Some(Label::Noise));
        let mut out = Vec::new();
        write_csv_to(&stream, &mut out).unwrap();
        assert_eq!(out, text.as_bytes());
    }

    #[test]
    fn zero_event_stream_writes_empty_file() {
        let stream = EventStream::from_sorted(geom(), vec![]).unwrap();
        let mut out = Vec::new();
        write_csv_to(&stream, &mut out).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn unsorted_rows_come_back_sorted() {
        let stream = read_csv_from(Cursor::new("10,1,1,1\n5,2,2,1\n"), geom()).unwrap();
        assert_eq!(stream.events()[0].t, 5);
        assert!(stream.validate().is_empty());
    }

    #[test]
    fn binary_header_only_round_trips_geometry() {
        let stream = EventStream::from_sorted(SensorGeometry::new(32, 48).unwrap(), vec![]).unwrap();
        let mut bytes = Vec::new();
        write_binary_to(&stream, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 12);
        let back = read_binary_from(Cursor::new(&bytes)).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.geometry(), SensorGeometry::new(32, 48).unwrap());
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let stream = EventStream::from_sorted(geom(), vec![Event::new(1, 0, 0, Polarity::On)]).unwrap();
        let mut bytes = Vec::new();
        write_binary_to(&stream, &mut bytes).unwrap();
        bytes[0] ^= 0xff;
        assert!(matches!(read_binary_from(Cursor::new(&bytes)), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_record_is_rejected() {
        let stream = EventStream::from_sorted(geom(), vec![Event::new(1, 0, 0, Polarity::On)]).unwrap();
        let mut bytes = Vec::new();
        write_binary_to(&stream, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(read_binary_from(Cursor::new(&bytes)), Err(Error::Truncated { .. })));
    }

    #[test]
    fn binary_round_trip_preserves_labels() {
        let events = vec![
            Event::labeled(1, 0, 0, Polarity::On, Label::Signal),
            Event::labeled(2, 5, 9, Polarity::Off, Label::Noise),
            Event::new(3, 63, 63, Polarity::On),
        ];
        let stream = EventStream::from_sorted(geom(), events).unwrap();
        let mut bytes = Vec::new();
        write_binary_to(&stream, &mut bytes).unwrap();
        let back = read_binary_from(Cursor::new(&bytes)).unwrap();
        assert_eq!(back, stream);
    }
}
