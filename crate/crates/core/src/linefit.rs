//! Segment scoring and line fitting.
//!
//! For a candidate segment `q0 → q1` with `L = q1 − q0`, each event `q` has a
//! perpendicular distance `d1 = |(q − q0) × L| / ‖L‖` and a signed position
//! along the segment `d2 = (q − q0)·L / ‖L‖`. An event with `d1 < d_max`
//! sets the occupancy token `floor(d2)` when `0 ≤ d2 < ‖L‖`; the occupancy
//! ratio is the number of set tokens divided by `‖L‖`. The effective ratio
//! counts active events with `d1 < d_max` against the buffer capacity. The
//! fitting score is their product.

use smallvec::SmallVec;
use thiserror::Error;

use crate::geom::{Point, Rect};
use crate::scarf::StoredEvent;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("degenerate candidate: endpoints coincide")]
    Degenerate,
    #[error("point cloud has no dominant direction (eigenvalue ratio {0:.3})")]
    Isotropic(f64),
    #[error("point cloud is empty or coincident")]
    Coincident,
}

/// Eigenvalue ratio above which a cloud is considered directionless.
pub const ISOTROPY_LIMIT: f64 = 0.9;

/// A candidate segment with a non-zero extent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub q0: Point,
    pub q1: Point,
}

impl Candidate {
    pub fn new(q0: Point, q1: Point) -> Result<Self, FitError> {
        if q0.distance(q1) > 0.0 {
            Ok(Self { q0, q1 })
        } else {
            Err(FitError::Degenerate)
        }
    }

    pub fn vector(&self) -> Point {
        self.q1 - self.q0
    }

    pub fn length(&self) -> f64 {
        self.vector().norm()
    }

    pub fn midpoint(&self) -> Point {
        self.q0.midpoint(self.q1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreParams {
    pub d_max: f64,
    /// Summed buffer capacity of the blocks the events came from.
    pub capacity: usize,
}

/// `(d1, d2)` of point `q` relative to the candidate.
pub fn distances(q: Point, cand: &Candidate) -> (f64, f64) {
    let l = cand.vector();
    let len = l.norm();
    let r = q - cand.q0;
    (r.cross(l).abs() / len, r.dot(l) / len)
}

/// Like [`distances`] but validates the endpoints first.
pub fn try_distances(q: Point, q0: Point, q1: Point) -> Result<(f64, f64), FitError> {
    Ok(distances(q, &Candidate::new(q0, q1)?))
}

fn event_point(e: &StoredEvent) -> Point {
    Point::new(f64::from(e.u), f64::from(e.v))
}

/// Precomputed per-candidate quantities so that scoring is one pass over the
/// events.
struct Frame {
    q0: Point,
    dir: Point,
    len: f64,
}

impl Frame {
    fn new(cand: &Candidate) -> Self {
        let l = cand.vector();
        let len = l.norm();
        Self {
            q0: cand.q0,
            dir: l * (1.0 / len),
            len,
        }
    }

    #[inline]
    fn d1_d2(&self, q: Point) -> (f64, f64) {
        let r = q - self.q0;
        (r.cross(self.dir).abs(), r.dot(self.dir))
    }
}

struct Tokens {
    bits: SmallVec<[u64; 4]>,
    set: usize,
}

impl Tokens {
    fn new(len: f64) -> Self {
        let slots = len.floor() as usize + 1;
        Self {
            bits: SmallVec::from_elem(0, slots.div_ceil(64)),
            set: 0,
        }
    }

    #[inline]
    fn mark(&mut self, d2: f64, len: f64) {
        if d2 >= 0.0 && d2 < len {
            let i = d2.floor() as usize;
            let (word, bit) = (i / 64, 1u64 << (i % 64));
            if self.bits[word] & bit == 0 {
                self.bits[word] |= bit;
                self.set += 1;
            }
        }
    }
}

/// Occupancy ratio `r_o` over all given events (active or not).
pub fn occupancy_ratio(events: &[StoredEvent], cand: &Candidate, params: &ScoreParams) -> f64 {
    let frame = Frame::new(cand);
    let mut tokens = Tokens::new(frame.len);
    for e in events {
        let (d1, d2) = frame.d1_d2(event_point(e));
        if d1 < params.d_max {
            tokens.mark(d2, frame.len);
        }
    }
    (tokens.set as f64 / frame.len).min(1.0)
}

/// Effective event ratio `r_e`: active events within `d_max`, over capacity.
pub fn effective_ratio(events: &[StoredEvent], cand: &Candidate, params: &ScoreParams) -> f64 {
    let frame = Frame::new(cand);
    let count = events
        .iter()
        .filter(|e| e.is_active() && frame.d1_d2(event_point(e)).0 < params.d_max)
        .count();
    (count as f64 / params.capacity.max(1) as f64).min(1.0)
}

/// Fitting score `f = r_o · r_e`, computed in a single pass.
pub fn fitting_score(events: &[StoredEvent], cand: &Candidate, params: &ScoreParams) -> f64 {
    let frame = Frame::new(cand);
    let mut tokens = Tokens::new(frame.len);
    let mut effective = 0usize;
    for e in events {
        let (d1, d2) = frame.d1_d2(event_point(e));
        if d1 < params.d_max {
            tokens.mark(d2, frame.len);
            effective += e.is_active() as usize;
        }
    }
    let r_o = (tokens.set as f64 / frame.len).min(1.0);
    let r_e = (effective as f64 / params.capacity.max(1) as f64).min(1.0);
    r_o * r_e
}

/// Infinite line through `point` along the unit vector `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub point: Point,
    pub direction: Point,
}

/// Total-least-squares line: through the centroid along the principal axis of
/// the scatter matrix.
pub fn fit_line<I>(points: I) -> Result<Line, FitError>
where
    I: IntoIterator<Item = Point>,
    I::IntoIter: Clone,
{
    let points = points.into_iter();
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for p in points.clone() {
        n += 1;
        sx += p.x;
        sy += p.y;
    }
    if n < 2 {
        return Err(FitError::Coincident);
    }
    let c = Point::new(sx / n as f64, sy / n as f64);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let half_trace = 0.5 * (sxx + syy);
    let spread = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let (major, minor) = (half_trace + spread, half_trace - spread);
    if major <= 1e-12 {
        return Err(FitError::Coincident);
    }
    let ratio = minor.max(0.0) / major;
    if ratio > ISOTROPY_LIMIT {
        return Err(FitError::Isotropic(ratio));
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut direction = Point::new(theta.cos(), theta.sin());
    if direction.x < 0.0 || (direction.x == 0.0 && direction.y < 0.0) {
        direction = direction * -1.0;
    }
    Ok(Line { point: c, direction })
}

/// Fits a line to the active entries of a buffer snapshot.
pub fn fit_events(events: &[StoredEvent]) -> Result<Line, FitError> {
    fit_line(events.iter().filter(|e| e.is_active()).map(event_point))
}

/// Intersections of `line` with the rectangle boundary, ordered by `(x, y)`.
/// Returns `None` when the line misses the rectangle or only grazes a corner.
pub fn clip_to_block(line: &Line, rect: &Rect) -> Option<Candidate> {
    let (t0, t1) = rect.clip_parametric(line.point, line.direction)?;
    if t1 - t0 <= 1e-9 {
        return None;
    }
    let a = snap_to_border(line.point + line.direction * t0, rect);
    let b = snap_to_border(line.point + line.direction * t1, rect);
    let (q0, q1) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
    Candidate::new(q0, q1).ok()
}

/// Removes floating-point drift so that the coordinate lying on a border is
/// exactly the border value.
fn snap_to_border(mut p: Point, rect: &Rect) -> Point {
    const TOL: f64 = 1e-7;
    for edge in [rect.x0, rect.x1] {
        if (p.x - edge).abs() < TOL {
            p.x = edge;
        }
    }
    for edge in [rect.y0, rect.y1] {
        if (p.y - edge).abs() < TOL {
            p.y = edge;
        }
    }
    p.x = p.x.clamp(rect.x0, rect.x1);
    p.y = p.y.clamp(rect.y0, rect.y1);
    p
}
