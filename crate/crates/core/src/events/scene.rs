//! Synthetic event scenes with exact line-segment ground truth.
//!
//! Each moving segment is rasterized into a pixel footprint at a time step
//! fine enough that no point of the segment moves more than half a pixel per
//! step. A pixel that enters the footprint between two steps has been crossed
//! by the edge and fires `events_per_crossing` events at that step's
//! timestamp. Background noise is a homogeneous Poisson process uniform over
//! the sensor.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Deserialize;

use super::{Event, EventError, GroundTruthSegment, Polarity, SensorGeometry};
use crate::geom::{Point, Rect};

/// Endpoint pose of a segment at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct Keyframe {
    pub t_us: u64,
    pub p0: [f64; 2],
    pub p1: [f64; 2],
}

/// A segment whose endpoints follow piecewise-linear trajectories through its
/// keyframes. The pose is held constant before the first and after the last
/// keyframe.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct MovingSegment {
    pub id: u32,
    pub keyframes: Vec<Keyframe>,
}

impl MovingSegment {
    pub fn pose_at(&self, t: f64) -> (Point, Point) {
        let kf = &self.keyframes;
        let first = &kf[0];
        if t <= first.t_us as f64 {
            return (first.p0.into_point(), first.p1.into_point());
        }
        for pair in kf.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if t <= b.t_us as f64 {
                let span = (b.t_us - a.t_us) as f64;
                let s = if span > 0.0 { (t - a.t_us as f64) / span } else { 1.0 };
                return (
                    a.p0.into_point().lerp(b.p0.into_point(), s),
                    a.p1.into_point().lerp(b.p1.into_point(), s),
                );
            }
        }
        let last = kf.last().expect("validated non-empty");
        (last.p0.into_point(), last.p1.into_point())
    }
}

trait IntoPoint {
    fn into_point(self) -> Point;
}

impl IntoPoint for [f64; 2] {
    fn into_point(self) -> Point {
        Point::new(self[0], self[1])
    }
}

fn default_events_per_crossing() -> u32 {
    1
}

fn default_gt_period() -> u64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SceneSpec {
    pub width: u16,
    pub height: u16,
    pub duration_us: u64,
    #[serde(default)]
    pub segments: Vec<MovingSegment>,
    #[serde(default = "default_events_per_crossing")]
    pub events_per_crossing: u32,
    /// Uniform background events per second.
    #[serde(default)]
    pub noise_rate: f64,
    #[serde(default = "default_gt_period")]
    pub gt_period_us: u64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(width: u16, height: u16, duration_us: u64) -> Self {
        Self {
            width,
            height,
            duration_us,
            segments: Vec::new(),
            events_per_crossing: default_events_per_crossing(),
            noise_rate: 0.0,
            gt_period_us: default_gt_period(),
            seed: 0,
        }
    }

    pub fn geometry(&self) -> Result<SensorGeometry, EventError> {
        SensorGeometry::new(self.width, self.height)
    }

    fn validate(&self) -> Result<SensorGeometry, EventError> {
        let geometry = self.geometry()?;
        if self.gt_period_us == 0 {
            return Err(EventError::Scene("gt_period_us must be positive".into()));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(EventError::Scene("noise_rate must be finite and >= 0".into()));
        }
        for seg in &self.segments {
            if seg.keyframes.is_empty() {
                return Err(EventError::Scene(format!("segment {} has no keyframes", seg.id)));
            }
            for pair in seg.keyframes.windows(2) {
                if pair[1].t_us < pair[0].t_us {
                    return Err(EventError::Scene(format!(
                        "segment {} keyframes are not time-ordered",
                        seg.id
                    )));
                }
            }
            for kf in &seg.keyframes {
                if kf.p0.into_point().distance(kf.p1.into_point()) == 0.0 {
                    return Err(EventError::Scene(format!(
                        "segment {} has zero length at t={}",
                        seg.id, kf.t_us
                    )));
                }
            }
        }
        Ok(geometry)
    }
}

/// Pixels whose centers are hit by rounding points sampled every quarter pixel
/// along the segment.
fn footprint(a: Point, b: Point, geometry: SensorGeometry) -> Vec<(u16, u16)> {
    let samples = (a.distance(b) * 4.0).ceil() as usize + 1;
    let mut seen = HashSet::with_capacity(samples);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let p = a.lerp(b, k as f64 / (samples - 1).max(1) as f64);
        let (u, v) = (p.x.round(), p.y.round());
        if u < 0.0 || v < 0.0 || u >= f64::from(geometry.width) || v >= f64::from(geometry.height) {
            continue;
        }
        let px = (u as u16, v as u16);
        if seen.insert(px) {
            out.push(px);
        }
    }
    out
}

fn segment_events(
    seg: &MovingSegment,
    spec: &SceneSpec,
    geometry: SensorGeometry,
    out: &mut Vec<Event>,
) {
    let end = spec.duration_us as f64;
    let mut times: Vec<f64> = seg
        .keyframes
        .iter()
        .map(|k| k.t_us as f64)
        .filter(|&t| t > 0.0 && t < end)
        .collect();
    times.insert(0, 0.0);
    times.push(end);

    let (a, b) = seg.pose_at(0.0);
    let mut prev: HashSet<(u16, u16)> = footprint(a, b, geometry).into_iter().collect();
    let mut prev_mid = a.midpoint(b);
    for span in times.windows(2) {
        let (ta, tb) = (span[0], span[1]);
        let (a0, a1) = seg.pose_at(ta);
        let (b0, b1) = seg.pose_at(tb);
        let shift = [b0 - a0, b1 - a1]
            .iter()
            .map(|d| d.x.abs().max(d.y.abs()))
            .fold(0.0, f64::max);
        if shift == 0.0 {
            continue;
        }
        let steps = (shift / 0.5).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let t = ta + (tb - ta) * k as f64 / steps as f64;
            let t_us = t.round() as u64;
            let (q0, q1) = seg.pose_at(t);
            let mid = q0.midpoint(q1);
            let polarity = if (mid - prev_mid).dot((q1 - q0).perp()) <= 0.0 {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let current = footprint(q0, q1, geometry);
            for &(u, v) in &current {
                if !prev.contains(&(u, v)) {
                    for _ in 0..spec.events_per_crossing {
                        out.push(Event::new(t_us, u, v, polarity));
                    }
                }
            }
            prev = current.into_iter().collect();
            prev_mid = mid;
        }
    }
}

fn noise_events(spec: &SceneSpec, geometry: SensorGeometry, rng: &mut ChaCha8Rng, out: &mut Vec<Event>) {
    let mean = spec.noise_rate * spec.duration_us as f64 * 1e-6;
    if mean <= 0.0 || spec.duration_us == 0 {
        return;
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    out.reserve(count);
    for _ in 0..count {
        let t = rng.gen_range(0..spec.duration_us);
        let u = rng.gen_range(0..geometry.width);
        let v = rng.gen_range(0..geometry.height);
        let p = if rng.gen::<bool>() { Polarity::Positive } else { Polarity::Negative };
        out.push(Event::new(t, u, v, p));
    }
}

fn ground_truth(spec: &SceneSpec, geometry: SensorGeometry) -> Vec<GroundTruthSegment> {
    let bounds = Rect::new(
        0.0,
        0.0,
        f64::from(geometry.width) - 1.0,
        f64::from(geometry.height) - 1.0,
    );
    let mut out = Vec::new();
    let mut t = 0;
    while t < spec.duration_us {
        for seg in &spec.segments {
            let (a, b) = seg.pose_at(t as f64);
            if let Some((a, b)) = bounds.clip_segment(a, b) {
                out.push(GroundTruthSegment {
                    t,
                    id: seg.id,
                    x0: a.x,
                    y0: a.y,
                    x1: b.x,
                    y1: b.y,
                });
            }
        }
        t += spec.gt_period_us;
    }
    out
}

/// Generates a time-ordered event stream and sampled ground truth for `spec`.
pub fn generate_scene(spec: &SceneSpec) -> Result<(Vec<Event>, Vec<GroundTruthSegment>), EventError> {
    let geometry = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events = Vec::new();
    for seg in &spec.segments {
        segment_events(seg, spec, geometry, &mut events);
    }
    noise_events(spec, geometry, &mut rng, &mut events);
    events.sort_by_key(|e| e.t);
    Ok((events, ground_truth(spec, geometry)))
}
