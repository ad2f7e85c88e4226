use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{Event, EventError, GroundTruthSegment, Polarity};

pub const CSV_HEADER: &str = "t_us,u,v,p";
pub const GT_HEADER: &str = "t_us,id,x0,y0,x1,y1";

/// `u:u16, v:u16, t:u64, p:i8`, little-endian, packed.
pub const BINARY_RECORD_LEN: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Binary,
}

impl EventFormat {
    /// `.bin`/`.raw` map to binary, everything else to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("raw") => EventFormat::Binary,
            _ => EventFormat::Csv,
        }
    }
}

impl FromStr for EventFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "bin" | "binary" => Ok(EventFormat::Binary),
            other => Err(format!("unknown event format `{other}`")),
        }
    }
}

/// Streaming reader over either event format. Yields events in file order and
/// rejects timestamps that go backwards.
pub struct EventReader<R> {
    inner: R,
    format: EventFormat,
    record: usize,
    last_t: Option<u64>,
    line: String,
    done: bool,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(inner: R, format: EventFormat) -> Self {
        Self {
            inner,
            format,
            record: 0,
            last_t: None,
            line: String::new(),
            done: false,
        }
    }

    fn next_csv(&mut self) -> Option<Result<Event, EventError>> {
        loop {
            self.line.clear();
            match self.inner.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.record += 1;
            let line = self.line.trim();
            if line.is_empty() || (self.record == 1 && line.starts_with("t_us")) {
                continue;
            }
            return Some(parse_csv_event(line, self.record));
        }
    }

    fn next_binary(&mut self) -> Option<Result<Event, EventError>> {
        let mut buf = [0u8; BINARY_RECORD_LEN];
        let mut filled = 0;
        while filled < BINARY_RECORD_LEN {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) if filled == 0 => return None,
                Ok(0) => {
                    return Some(Err(EventError::Parse {
                        record: self.record + 1,
                        message: format!("truncated record ({filled} of {BINARY_RECORD_LEN} bytes)"),
                    }))
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Some(Err(e.into())),
            }
        }
        self.record += 1;
        Some(decode_binary(&buf, self.record))
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<Event, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = match self.format {
            EventFormat::Csv => self.next_csv(),
            EventFormat::Binary => self.next_binary(),
        };
        let item = item.map(|res| {
            res.and_then(|e| {
                if let Some(prev) = self.last_t {
                    if e.t < prev {
                        return Err(EventError::Ordering {
                            record: self.record,
                            previous: prev,
                            found: e.t,
                        });
                    }
                }
                self.last_t = Some(e.t);
                Ok(e)
            })
        });
        if matches!(item, Some(Err(_)) | None) {
            self.done = true;
        }
        item
    }
}

fn parse_field<T: FromStr>(field: Option<&str>, name: &str, record: usize) -> Result<T, EventError> {
    let raw = field.ok_or_else(|| EventError::Parse {
        record,
        message: format!("missing field `{name}`"),
    })?;
    raw.trim().parse().map_err(|_| EventError::Parse {
        record,
        message: format!("bad value `{raw}` for `{name}`"),
    })
}

fn parse_csv_event(line: &str, record: usize) -> Result<Event, EventError> {
    let mut fields = line.split(',');
    let t: u64 = parse_field(fields.next(), "t_us", record)?;
    let u: u16 = parse_field(fields.next(), "u", record)?;
    let v: u16 = parse_field(fields.next(), "v", record)?;
    let p: i8 = parse_field(fields.next(), "p", record)?;
    if fields.next().is_some() {
        return Err(EventError::Parse {
            record,
            message: "too many fields".into(),
        });
    }
    let p = Polarity::from_i8(p).ok_or_else(|| EventError::Parse {
        record,
        message: format!("polarity {p} out of range"),
    })?;
    Ok(Event::new(t, u, v, p))
}

fn decode_binary(buf: &[u8; BINARY_RECORD_LEN], record: usize) -> Result<Event, EventError> {
    let u = u16::from_le_bytes([buf[0], buf[1]]);
    let v = u16::from_le_bytes([buf[2], buf[3]]);
    let t = u64::from_le_bytes(buf[4..12].try_into().expect("8 bytes"));
    let p = buf[12] as i8;
    let p = Polarity::from_i8(p).ok_or_else(|| EventError::Parse {
        record,
        message: format!("polarity {p} out of range"),
    })?;
    Ok(Event::new(t, u, v, p))
}

fn encode_binary(e: &Event) -> [u8; BINARY_RECORD_LEN] {
    let mut buf = [0u8; BINARY_RECORD_LEN];
    buf[0..2].copy_from_slice(&e.u.to_le_bytes());
    buf[2..4].copy_from_slice(&e.v.to_le_bytes());
    buf[4..12].copy_from_slice(&e.t.to_le_bytes());
    buf[12] = e.p.as_i8() as u8;
    buf
}

/// Reads a whole event file into memory.
pub fn read_events(path: impl AsRef<Path>, format: EventFormat) -> Result<Vec<Event>, EventError> {
    let file = File::open(path)?;
    EventReader::new(BufReader::with_capacity(1 << 16, file), format).collect()
}

pub fn write_events<'a>(
    events: impl IntoIterator<Item = &'a Event>,
    path: impl AsRef<Path>,
    format: EventFormat,
) -> Result<(), EventError> {
    let mut out = BufWriter::with_capacity(1 << 16, File::create(path)?);
    match format {
        EventFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for e in events {
                writeln!(out, "{},{},{},{}", e.t, e.u, e.v, e.p.as_i8())?;
            }
        }
        EventFormat::Binary => {
            for e in events {
                out.write_all(&encode_binary(e))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_ground_truth<'a>(
    segments: impl IntoIterator<Item = &'a GroundTruthSegment>,
    path: impl AsRef<Path>,
) -> Result<(), EventError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{GT_HEADER}")?;
    for s in segments {
        writeln!(out, "{},{},{},{},{},{}", s.t, s.id, s.x0, s.y0, s.x1, s.y1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthSegment>, EventError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let record = idx + 1;
        let line = line.trim();
        if line.is_empty() || (record == 1 && line.starts_with("t_us")) {
            continue;
        }
        let mut f = line.split(',');
        out.push(GroundTruthSegment {
            t: parse_field(f.next(), "t_us", record)?,
            id: parse_field(f.next(), "id", record)?,
            x0: parse_field(f.next(), "x0", record)?,
            y0: parse_field(f.next(), "y0", record)?,
            x1: parse_field(f.next(), "x1", record)?,
            y1: parse_field(f.next(), "y1", record)?,
        });
    }
    Ok(out)
}
