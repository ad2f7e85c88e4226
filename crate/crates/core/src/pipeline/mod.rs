//! Orchestration of ingestion, detection and tracking.
//!
//! [`run_threaded`] runs one ingestion thread next to free-running detection
//! and tracking loops. [`run_lockstep`] interleaves the same three roles on one
//! thread in a fixed order so identical inputs give identical traces.
//!
//! Rates are measured over a window of stream time (`window_start_us` to
//! `window_end_us`) in wall-clock seconds. When the stream ends before the
//! window opens the whole run is used instead.

mod config;
mod trace;

pub use config::{resolution_defaults, PipelineConfig, Playback, RunMode};
pub use trace::{illegal_trace_transitions, read_trace, write_trace, write_trace_to, TraceRecord, TRACE_HEADER};

use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use thiserror::Error;

use crate::detector::Detector;
use crate::eval::segment_lifetimes;
use crate::events::Event;
use crate::scarf::ScarfStorage;
use crate::segment::{LineSegment, LineState, LineStatus};
use crate::tracker::Tracker;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("trace record {record}: {message}")]
    Trace { record: usize, message: String },
}

/// Events the ingestion thread stores per batch in threaded mode.
pub const INGEST_BATCH: usize = 256;

/// Environment variable selecting the number of processing loop threads.
pub const THREADS_ENV: &str = "EVLINE_THREADS";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineMetrics {
    pub events_consumed: u64,
    pub events_rejected: u64,
    pub detection_passes: u64,
    pub tracking_passes: u64,
    /// Wall-clock length of the measurement window.
    pub window_seconds: f64,
    pub window_events: u64,
    /// Events per second ingested during the window.
    pub scarf_event_rate: f64,
    pub detection_freq: f64,
    pub tracking_freq: f64,
    /// `(stream time, live segments)` after each tracking pass.
    pub live_counts: Vec<(u64, usize)>,
    /// Per-segment lifetimes in seconds.
    pub lifetimes_s: Vec<f64>,
    pub transition_violations: u64,
    pub audit_failures: u64,
}

impl PipelineMetrics {
    /// Machine-readable summary, one `key=value` per line.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "events_consumed={}", self.events_consumed);
        let _ = writeln!(s, "events_rejected={}", self.events_rejected);
        let _ = writeln!(s, "window_seconds={:.6}", self.window_seconds);
        let _ = writeln!(s, "scarf_event_rate_mevps={:.6}", self.scarf_event_rate / 1e6);
        let _ = writeln!(s, "detection_freq_hz={:.3}", self.detection_freq);
        let _ = writeln!(s, "tracking_freq_hz={:.3}", self.tracking_freq);
        let _ = writeln!(s, "detection_passes={}", self.detection_passes);
        let _ = writeln!(s, "tracking_passes={}", self.tracking_passes);
        let _ = writeln!(s, "segments={}", self.lifetimes_s.len());
        let _ = writeln!(s, "transition_violations={}", self.transition_violations);
        let _ = writeln!(s, "audit_failures={}", self.audit_failures);
        s
    }
}

/// Counter values at the window boundaries.
#[derive(Clone, Copy, Debug)]
struct Mark {
    at: Instant,
    events: u64,
    detections: u64,
    trackings: u64,
}

#[derive(Default)]
struct Window {
    open: Option<Mark>,
    close: Option<Mark>,
}

impl Window {
    fn observe(&mut self, t_us: u64, config: &PipelineConfig, mark: impl Fn() -> Mark) {
        if self.open.is_none() && t_us >= config.window_start_us {
            self.open = Some(mark());
        }
        if self.close.is_none() && t_us >= config.window_end_us {
            self.close = Some(mark());
        }
    }

    fn finish(&self, run_start: Mark, run_end: Mark, metrics: &mut PipelineMetrics) {
        let (open, close) = match (self.open, self.close) {
            (Some(o), Some(c)) => (o, c),
            (Some(o), None) => (o, run_end),
            _ => (run_start, run_end),
        };
        let secs = close.at.duration_since(open.at).as_secs_f64();
        metrics.window_seconds = secs;
        metrics.window_events = close.events - open.events;
        if secs > 0.0 {
            metrics.scarf_event_rate = metrics.window_events as f64 / secs;
            metrics.detection_freq = (close.detections - open.detections) as f64 / secs;
            metrics.tracking_freq = (close.trackings - open.trackings) as f64 / secs;
        }
    }
}

fn finalize(trace: &mut [TraceRecord], config: &PipelineConfig, end_us: u64, metrics: &mut PipelineMetrics) {
    for r in trace.iter_mut() {
        r.warmup = r.t_us < config.window_start_us;
    }
    metrics.lifetimes_s = segment_lifetimes(trace, end_us);
}

/// Trace rows for the outcome of a tracking pass. Rows are never stamped
/// before the segment's birth so merged traces stay ordered.
fn tracking_rows(changes: &[LineSegment], now_us: u64, out: &mut Vec<TraceRecord>) {
    out.extend(changes.iter().map(|s| {
        let t = if s.status == LineStatus::NoDetect {
            s.death_us.unwrap_or(now_us)
        } else {
            now_us
        };
        TraceRecord::from_segment(t.max(s.birth_us), s)
    }));
}

/// Runs with a caller-chosen number of events ingested between passes.
pub fn run_lockstep(
    events: &[Event],
    config: &PipelineConfig,
    events_per_step: usize,
) -> Result<(Vec<TraceRecord>, PipelineMetrics), PipelineError> {
    config.validate()?;
    if events_per_step == 0 {
        return Err(PipelineError::Invalid("events_per_step must be at least 1".into()));
    }
    let geometry = config.lattice()?;
    let storage = ScarfStorage::new(geometry, config.alpha);
    let lines = LineState::new(geometry);
    let mut detector = Detector::new(config.detect_params());
    let mut tracker = Tracker::new(config.track_params());

    let mut metrics = PipelineMetrics::default();
    let mut trace = Vec::new();
    let mut found = Vec::new();
    let mut changes = Vec::new();
    let mut window = Window::default();
    let mut consumed = 0u64;
    let mark_at = |consumed: u64, m: &PipelineMetrics| Mark {
        at: Instant::now(),
        events: consumed,
        detections: m.detection_passes,
        trackings: m.tracking_passes,
    };
    let run_start = mark_at(0, &metrics);
    let mut now_us = 0;

    let mut writer = storage.writer();
    for chunk in events.chunks(events_per_step) {
        window.observe(chunk[0].t, config, || mark_at(consumed, &metrics));
        writer.insert_batch(chunk);
        consumed += chunk.len() as u64;
        now_us = chunk[chunk.len() - 1].t;

        found.clear();
        detector.pass(&storage, &lines, now_us, &mut found);
        trace.extend(found.iter().map(|s| TraceRecord::from_segment(now_us, s)));
        metrics.detection_passes += 1;

        changes.clear();
        tracker.pass(&storage, &lines, now_us, &mut changes);
        tracking_rows(&changes, now_us, &mut trace);
        metrics.tracking_passes += 1;
        metrics.audit_failures += lines.audit() as u64;
        metrics.live_counts.push((now_us, lines.live_segments().len()));
    }
    window.finish(run_start, mark_at(consumed, &metrics), &mut metrics);
    metrics.events_consumed = consumed;
    metrics.events_rejected = storage.rejected();
    metrics.transition_violations = lines.violations();
    finalize(&mut trace, config, now_us, &mut metrics);
    Ok((trace, metrics))
}

/// Number of processing loop threads: `EVLINE_THREADS` when set, else 2.
pub fn loop_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n >= 1)
        .unwrap_or(2)
}

struct Shared<'a> {
    storage: &'a ScarfStorage,
    lines: &'a LineState,
    stop: AtomicBool,
    now_us: AtomicU64,
    detections: AtomicU64,
    trackings: AtomicU64,
    audit_failures: AtomicU64,
    live_counts: Mutex<Vec<(u64, usize)>>,
}

impl Shared<'_> {
    fn mark(&self, events: u64) -> Mark {
        Mark {
            at: Instant::now(),
            events,
            detections: self.detections.load(Ordering::Relaxed),
            trackings: self.trackings.load(Ordering::Relaxed),
        }
    }

    fn detect_once(&self, detector: &mut Detector, scratch: &mut Vec<LineSegment>, out: &mut Vec<TraceRecord>) {
        let now = self.now_us.load(Ordering::Acquire);
        scratch.clear();
        detector.pass(self.storage, self.lines, now, scratch);
        out.extend(scratch.iter().map(|s| TraceRecord::from_segment(now, s)));
        self.detections.fetch_add(1, Ordering::Relaxed);
    }

    fn track_once(&self, tracker: &mut Tracker, scratch: &mut Vec<LineSegment>, out: &mut Vec<TraceRecord>) {
        let now = self.now_us.load(Ordering::Acquire);
        scratch.clear();
        tracker.pass(self.storage, self.lines, now, scratch);
        tracking_rows(scratch, now, out);
        // transfers only happen on this thread, so the lattice is consistent here
        self.audit_failures
            .fetch_add(self.lines.audit() as u64, Ordering::Relaxed);
        self.live_counts.lock().push((now, self.lines.live_segments().len()));
        self.trackings.fetch_add(1, Ordering::Relaxed);
    }
}

/// Runs ingestion, detection and tracking concurrently until the stream is
/// consumed. Each loop finishes with one pass over the final state. With one loop thread (`EVLINE_THREADS=1`) detection and tracking
/// alternate on a single thread.
pub fn run_threaded(
    events: &[Event],
    config: &PipelineConfig,
) -> Result<(Vec<TraceRecord>, PipelineMetrics), PipelineError> {
    run_threaded_with(events, config, loop_threads())
}

pub fn run_threaded_with(
    events: &[Event],
    config: &PipelineConfig,
    loop_threads: usize,
) -> Result<(Vec<TraceRecord>, PipelineMetrics), PipelineError> {
    config.validate()?;
    let geometry = config.lattice()?;
    let storage = ScarfStorage::new(geometry, config.alpha);
    let lines = LineState::new(geometry);
    let shared = Shared {
        storage: &storage,
        lines: &lines,
        stop: AtomicBool::new(false),
        now_us: AtomicU64::new(0),
        detections: AtomicU64::new(0),
        trackings: AtomicU64::new(0),
        audit_failures: AtomicU64::new(0),
        live_counts: Mutex::new(Vec::new()),
    };
    let mut metrics = PipelineMetrics::default();
    if events.is_empty() {
        return Ok((Vec::new(), metrics));
    }

    let (run_start, run_end, window, mut det_rows, trk_rows) = std::thread::scope(|scope| {
        let sh = &shared;
        let mut handles = Vec::new();
        if loop_threads >= 2 {
            let params = config.detect_params();
            handles.push(scope.spawn(move || {
                let (mut d, mut scratch, mut rows) = (Detector::new(params), Vec::new(), Vec::new());
                loop {
                    let stopping = sh.stop.load(Ordering::Acquire);
                    sh.detect_once(&mut d, &mut scratch, &mut rows);
                    if stopping {
                        break;
                    }
                }
                (rows, Vec::new())
            }));
            let params = config.track_params();
            handles.push(scope.spawn(move || {
                let (mut t, mut scratch, mut rows) = (Tracker::new(params), Vec::new(), Vec::new());
                loop {
                    let stopping = sh.stop.load(Ordering::Acquire);
                    sh.track_once(&mut t, &mut scratch, &mut rows);
                    if stopping {
                        break;
                    }
                }
                (Vec::new(), rows)
            }));
        } else {
            let (dp, tp) = (config.detect_params(), config.track_params());
            handles.push(scope.spawn(move || {
                let (mut d, mut t) = (Detector::new(dp), Tracker::new(tp));
                let (mut scratch, mut drows, mut trows) = (Vec::new(), Vec::new(), Vec::new());
                loop {
                    let stopping = sh.stop.load(Ordering::Acquire);
                    sh.detect_once(&mut d, &mut scratch, &mut drows);
                    sh.track_once(&mut t, &mut scratch, &mut trows);
                    if stopping {
                        break;
                    }
                }
                (drows, trows)
            }));
        }

        let run_start = sh.mark(0);
        let mut window = Window::default();
        let mut writer = sh.storage.writer();
        let t0 = events[0].t;
        for (k, chunk) in events.chunks(INGEST_BATCH).enumerate() {
            let first = chunk[0].t;
            window.observe(first, config, || sh.mark((k * INGEST_BATCH) as u64));
            if config.playback == Playback::WallClock {
                let due = Duration::from_micros(first - t0);
                let elapsed = run_start.at.elapsed();
                if due > elapsed {
                    std::thread::sleep(due - elapsed);
                }
            }
            writer.insert_batch(chunk);
            sh.now_us.store(chunk[chunk.len() - 1].t, Ordering::Release);
        }
        let run_end = sh.mark(events.len() as u64);
        sh.stop.store(true, Ordering::Release);

        let (mut det, mut trk) = (Vec::new(), Vec::new());
        for h in handles {
            let (d, t) = h.join().expect("processing loop panicked");
            det.extend(d);
            trk.extend(t);
        }
        (run_start, run_end, window, det, trk)
    });

    window.finish(run_start, run_end, &mut metrics);
    det_rows.extend(trk_rows);
    // stable: a segment's Detected row precedes its tracking rows at equal times
    det_rows.sort_by_key(|r| r.t_us);
    let mut trace = det_rows;

    metrics.events_consumed = events.len() as u64;
    metrics.events_rejected = storage.rejected();
    metrics.detection_passes = shared.detections.load(Ordering::Relaxed);
    metrics.tracking_passes = shared.trackings.load(Ordering::Relaxed);
    metrics.audit_failures = shared.audit_failures.load(Ordering::Relaxed);
    metrics.transition_violations = lines.violations();
    metrics.live_counts = shared.live_counts.into_inner();
    let end_us = events[events.len() - 1].t;
    finalize(&mut trace, config, end_us, &mut metrics);
    Ok((trace, metrics))
}

/// Dispatches on `config.mode`.
pub fn run(events: &[Event], config: &PipelineConfig) -> Result<(Vec<TraceRecord>, PipelineMetrics), PipelineError> {
    match config.mode {
        RunMode::Threaded => run_threaded(events, config),
        RunMode::Lockstep => run_lockstep(events, config, config.events_per_step),
    }
}
