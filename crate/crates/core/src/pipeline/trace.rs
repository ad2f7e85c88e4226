use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::segment::{is_legal_segment_transition, LineSegment, LineStatus};

use super::PipelineError;

pub const TRACE_HEADER: &str = "t_us,l_id,status,ru,rv,x0,y0,x1,y1,f";

/// One segment state change or tracking confirmation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub t_us: u64,
    pub l_id: u64,
    pub status: LineStatus,
    pub ru: u16,
    pub rv: u16,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub f: f64,
    /// Row emitted before the metrics window opened. Not serialized.
    pub warmup: bool,
}

impl TraceRecord {
    pub fn from_segment(t_us: u64, seg: &LineSegment) -> Self {
        Self {
            t_us,
            l_id: seg.id,
            status: seg.status,
            ru: seg.admin.ru,
            rv: seg.admin.rv,
            x0: seg.q0.x,
            y0: seg.q0.y,
            x1: seg.q1.x,
            y1: seg.q1.y,
            f: seg.score,
            warmup: false,
        }
    }
}

pub fn write_trace(trace: &[TraceRecord], path: impl AsRef<Path>) -> Result<(), PipelineError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trace_to(trace, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_trace_to(trace: &[TraceRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t_us, r.l_id, r.status, r.ru, r.rv, r.x0, r.y0, r.x1, r.y1, r.f
        )?;
    }
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let record = idx + 1;
        let line = line.trim();
        if line.is_empty() || (record == 1 && line.starts_with("t_us")) {
            continue;
        }
        out.push(parse_row(line).map_err(|message| PipelineError::Trace { record, message })?);
    }
    Ok(out)
}

fn parse_row(line: &str) -> Result<TraceRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 10 {
        return Err(format!("expected 10 fields, found {}", fields.len()));
    }
    fn num<T: std::str::FromStr>(name: &str, s: &str) -> Result<T, String> {
        s.parse().map_err(|_| format!("bad {name} `{s}`"))
    }
    Ok(TraceRecord {
        t_us: num("t_us", fields[0])?,
        l_id: num("l_id", fields[1])?,
        status: fields[2].parse()?,
        ru: num("ru", fields[3])?,
        rv: num("rv", fields[4])?,
        x0: num("x0", fields[5])?,
        y0: num("y0", fields[6])?,
        x1: num("x1", fields[7])?,
        y1: num("y1", fields[8])?,
        f: num("f", fields[9])?,
        warmup: false,
    })
}

/// Counts rows whose status does not follow legally from the previous row of
/// the same segment. A segment's first row must be `Detected`.
pub fn illegal_trace_transitions(trace: &[TraceRecord]) -> usize {
    let mut last = std::collections::HashMap::new();
    let mut bad = 0;
    for r in trace {
        let prev = last.insert(r.l_id, r.status).unwrap_or(LineStatus::NoDetect);
        if !is_legal_segment_transition(prev, r.status) {
            bad += 1;
        }
    }
    bad
}
