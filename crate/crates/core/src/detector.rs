//! Block-local line segment initialization.
//!
//! A block without a segment fits a total-least-squares line to its active
//! events, clips the line to the block and keeps the resulting segment when
//! its fitting score is strictly above `f_th`.

use crate::lattice::BlockCoord;
use crate::linefit::{clip_to_block, fit_events, fitting_score, ScoreParams};
use crate::scarf::{ScarfStorage, SnapshotFilter, StoredEvent};
use crate::segment::{BlockChange, LineSegment, LineState, LineStatus};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectParams {
    pub f_th: f64,
    pub d_max: f64,
    pub min_events: usize,
}

/// Active events a block needs before a fit is attempted: `max(4, ceil(0.1·N))`.
pub fn default_min_events(capacity: usize) -> usize {
    4.max((capacity as f64 * 0.1).ceil() as usize)
}

/// Detection worker. Holds a scratch buffer so passes do not allocate.
pub struct Detector {
    params: DetectParams,
    scratch: Vec<StoredEvent>,
}

impl Detector {
    pub fn new(params: DetectParams) -> Self {
        Self {
            params,
            scratch: Vec::new(),
        }
    }

    pub fn params(&self) -> &DetectParams {
        &self.params
    }

    /// Fits and scores one block. Returns the segment (with id 0) when it
    /// qualifies.
    pub fn detect_block(&mut self, block: BlockCoord, storage: &ScarfStorage, now_us: u64) -> Option<LineSegment> {
        self.scratch.clear();
        let capacity = storage.snapshot_into(&[block], SnapshotFilter::ActiveOnly, &mut self.scratch);
        if self.scratch.len() < self.params.min_events {
            return None;
        }
        let line = fit_events(&self.scratch).ok()?;
        let cand = clip_to_block(&line, &storage.geometry().block_rect(block))?;
        let score = fitting_score(
            &self.scratch,
            &cand,
            &ScoreParams {
                d_max: self.params.d_max,
                capacity,
            },
        );
        (score > self.params.f_th).then_some(LineSegment {
            q0: cand.q0,
            q1: cand.q1,
            score,
            status: LineStatus::Detected,
            admin: block,
            id: 0,
            birth_us: now_us,
            death_us: None,
        })
    }

    /// One row-major sweep over all `NoDetect` blocks. New segments are
    /// installed into `lines` and appended to `out`.
    pub fn pass(&mut self, storage: &ScarfStorage, lines: &LineState, now_us: u64, out: &mut Vec<LineSegment>) {
        let geometry = *storage.geometry();
        for block in geometry.blocks() {
            if lines.status(block) != LineStatus::NoDetect {
                continue;
            }
            let Some(mut seg) = self.detect_block(block, storage, now_us) else {
                continue;
            };
            // The tracker may have claimed the block while we were fitting.
            let installed = lines.with(block, |cell| {
                if cell.status != LineStatus::NoDetect || cell.segment.is_some() {
                    return false;
                }
                lines.check_transition(cell.status, LineStatus::Detected, BlockChange::Segment);
                seg.id = lines.next_id();
                cell.status = LineStatus::Detected;
                cell.segment = Some(seg);
                true
            });
            if installed {
                out.push(seg);
            }
        }
    }
}

/// Convenience wrapper running a single detection pass.
pub fn detection_pass(storage: &ScarfStorage, lines: &LineState, params: DetectParams, now_us: u64) -> Vec<LineSegment> {
    let mut out = Vec::new();
    Detector::new(params).pass(storage, lines, now_us, &mut out);
    out
}
