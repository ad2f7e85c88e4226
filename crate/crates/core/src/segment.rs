//! Line segments, their status machine and the per-block line state shared by
//! detection and tracking.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::Mutex;

use crate::geom::Point;
use crate::lattice::{BlockCoord, LatticeGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LineStatus {
    NoDetect,
    Detected,
    ProhibitDetection,
    BadTrack,
    GoodTrack,
}

impl LineStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LineStatus::NoDetect => "NoDetect",
            LineStatus::Detected => "Detected",
            LineStatus::ProhibitDetection => "ProhibitDetection",
            LineStatus::BadTrack => "BadTrack",
            LineStatus::GoodTrack => "GoodTrack",
        }
    }

    /// Statuses carried by a segment that is still being tracked.
    pub fn is_live(self) -> bool {
        matches!(self, LineStatus::Detected | LineStatus::GoodTrack)
    }
}

impl fmt::Display for LineStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LineStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "NoDetect" => LineStatus::NoDetect,
            "Detected" => LineStatus::Detected,
            "ProhibitDetection" => LineStatus::ProhibitDetection,
            "BadTrack" => LineStatus::BadTrack,
            "GoodTrack" => LineStatus::GoodTrack,
            other => return Err(format!("unknown line status `{other}`")),
        })
    }
}

/// Legal status changes of a segment over its life: detection, tracking
/// confirmations, failure and retirement.
pub fn is_legal_segment_transition(from: LineStatus, to: LineStatus) -> bool {
    use LineStatus::*;
    matches!(
        (from, to),
        (NoDetect, Detected)
            | (Detected, GoodTrack)
            | (Detected, BadTrack)
            | (GoodTrack, GoodTrack)
            | (GoodTrack, BadTrack)
            | (BadTrack, NoDetect)
    )
}

/// Why a block's status changes. Admin transfers move a segment, and with it
/// its status, between blocks, so they get their own rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockChange {
    Segment,
    Suppression,
    TransferIn,
    TransferOut,
}

pub fn is_legal_block_transition(from: LineStatus, to: LineStatus, cause: BlockChange) -> bool {
    use LineStatus::*;
    match cause {
        BlockChange::Segment => is_legal_segment_transition(from, to),
        BlockChange::Suppression => {
            matches!((from, to), (NoDetect, ProhibitDetection) | (ProhibitDetection, NoDetect))
        }
        BlockChange::TransferIn => matches!(from, NoDetect | ProhibitDetection) && to.is_live(),
        BlockChange::TransferOut => from.is_live() && to == ProhibitDetection,
    }
}

/// A tracked line segment, owned by its admin block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSegment {
    pub q0: Point,
    pub q1: Point,
    pub score: f64,
    pub status: LineStatus,
    pub admin: BlockCoord,
    pub id: u64,
    pub birth_us: u64,
    pub death_us: Option<u64>,
}

impl LineSegment {
    pub fn midpoint(&self) -> Point {
        self.q0.midpoint(self.q1)
    }
}

/// Status and (optional) segment of one block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockLine {
    pub status: LineStatus,
    pub segment: Option<LineSegment>,
}

impl Default for BlockLine {
    fn default() -> Self {
        Self {
            status: LineStatus::NoDetect,
            segment: None,
        }
    }
}

/// Per-block line state behind per-block locks, plus the id counter and a
/// tally of illegal transitions observed at runtime.
pub struct LineState {
    geometry: LatticeGeometry,
    cells: Box<[Mutex<BlockLine>]>,
    next_id: AtomicU64,
    violations: AtomicU64,
}

impl LineState {
    pub fn new(geometry: LatticeGeometry) -> Self {
        Self {
            geometry,
            cells: (0..geometry.block_count())
                .map(|_| Mutex::new(BlockLine::default()))
                .collect(),
            next_id: AtomicU64::new(1),
            violations: AtomicU64::new(0),
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn next_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    pub fn get(&self, block: BlockCoord) -> BlockLine {
        *self.cells[self.geometry.index(block)].lock()
    }

    pub fn status(&self, block: BlockCoord) -> LineStatus {
        self.cells[self.geometry.index(block)].lock().status
    }

    /// Runs `f` with the block's state locked.
    pub fn with<R>(&self, block: BlockCoord, f: impl FnOnce(&mut BlockLine) -> R) -> R {
        f(&mut self.cells[self.geometry.index(block)].lock())
    }

    /// Records a transition check; illegal ones are counted and, in debug
    /// builds, abort.
    pub fn check_transition(&self, from: LineStatus, to: LineStatus, cause: BlockChange) {
        if !is_legal_block_transition(from, to, cause) {
            self.violations.fetch_add(1, Ordering::Relaxed);
            debug_assert!(false, "illegal status transition {from} -> {to} ({cause:?})");
        }
    }

    pub fn violations(&self) -> u64 {
        self.violations.load(Ordering::Relaxed)
    }

    /// Copies of all live segments in row-major admin order.
    pub fn live_segments(&self) -> Vec<LineSegment> {
        self.cells
            .iter()
            .filter_map(|c| c.lock().segment)
            .filter(|s| s.status.is_live())
            .collect()
    }

    /// Checks that every stored segment sits in the cell of its admin block,
    /// that ids are unique and that the cell status mirrors the segment's.
    /// Returns the number of problems found.
    pub fn audit(&self) -> usize {
        let mut problems = 0;
        let mut ids = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            let cell = cell.lock();
            match cell.segment {
                Some(seg) => {
                    ids.push(seg.id);
                    if self.geometry.index(seg.admin) != i || cell.status != seg.status || !seg.status.is_live() {
                        problems += 1;
                    }
                }
                None => {
                    if !matches!(cell.status, LineStatus::NoDetect | LineStatus::ProhibitDetection) {
                        problems += 1;
                    }
                }
            }
        }
        ids.sort_unstable();
        let before = ids.len();
        ids.dedup();
        problems + (before - ids.len())
    }
}
