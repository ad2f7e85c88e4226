//! Independent oracles and scene builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use evline::events::{generate_scene, Event, GroundTruthSegment, Keyframe, MovingSegment, SceneSpec};
use evline::scarf::StoredEvent;

/// Fitting score evaluated literally: one loop per token slot over all events
/// and a separate loop for the effective count. Shares no code with the
/// library.
pub fn oracle_score(events: &[StoredEvent], q0: (f64, f64), q1: (f64, f64), d_max: f64, capacity: usize, block: u16) -> f64 {
    let (lx, ly) = (q1.0 - q0.0, q1.1 - q0.1);
    let norm = (lx * lx + ly * ly).sqrt();
    let d1 = |e: &StoredEvent| ((f64::from(e.u) - q0.0) * ly - (f64::from(e.v) - q0.1) * lx).abs() / norm;
    let d2 = |e: &StoredEvent| ((f64::from(e.u) - q0.0) * lx + (f64::from(e.v) - q0.1) * ly) / norm;

    let slots = ((2f64.sqrt() * f64::from(block)).floor()).max(norm.floor()) as i64;
    let mut tokens = 0usize;
    for i in 0..=slots {
        let set = events.iter().any(|e| {
            let along = d2(e);
            d1(e) < d_max && along >= 0.0 && along < norm && along.floor() as i64 == i
        });
        if set {
            tokens += 1;
        }
    }
    let r_o = (tokens as f64 / norm).min(1.0);

    let mut effective = 0usize;
    for e in events {
        if e.is_active() && d1(e) < d_max {
            effective += 1;
        }
    }
    let r_e = (effective as f64 / capacity as f64).min(1.0);
    r_o * r_e
}

/// Naive SCARF model: every block keeps a plain list truncated to the last
/// `n` entries. Membership is decided by testing the pixel against each
/// block's expanded region.
pub struct FifoModel {
    pub width: u16,
    pub height: u16,
    pub b: u16,
    pub n: usize,
    pub blocks: BTreeMap<(u16, u16), VecDeque<StoredEvent>>,
}

impl FifoModel {
    pub fn new(width: u16, height: u16, b: u16, n: usize) -> Self {
        Self { width, height, b, n, blocks: BTreeMap::new() }
    }

    pub fn insert(&mut self, u: u16, v: u16) {
        if u >= self.width || v >= self.height {
            return;
        }
        let b = i32::from(self.b);
        let half = b / 2;
        let nx = (i32::from(self.width) + b - 1) / b;
        let ny = (i32::from(self.height) + b - 1) / b;
        let (ui, vi) = (i32::from(u), i32::from(v));
        for rv in 0..ny {
            for ru in 0..nx {
                let (x0, y0) = (ru * b, rv * b);
                let own = ui >= x0 && ui < x0 + b && vi >= y0 && vi < y0 + b;
                let near = ui > x0 - half && ui < x0 + b + half && vi > y0 - half && vi < y0 + b + half;
                if !near {
                    continue;
                }
                let item = if own { StoredEvent::active(u, v) } else { StoredEvent::inactive(u, v) };
                let list = self.blocks.entry((ru as u16, rv as u16)).or_default();
                list.push_back(item);
                while list.len() > self.n {
                    list.pop_front();
                }
            }
        }
    }

    pub fn contents(&self, ru: u16, rv: u16) -> Vec<StoredEvent> {
        self.blocks.get(&(ru, rv)).map(|l| l.iter().copied().collect()).unwrap_or_default()
    }
}

/// Tilted line translating at 50 px/s on a 240×180 sensor, reversing every
/// 2 s, plus uniform noise at `noise_fraction` of the signal event rate.
pub fn tracking_scene(seed: u64, noise_fraction: f64) -> (Vec<Event>, Vec<GroundTruthSegment>, SceneSpec) {
    let mut spec = SceneSpec::new(240, 180, 10_000_000);
    let mut keyframes = Vec::new();
    for k in 0..=5u64 {
        let x = if k % 2 == 0 { 60.0 } else { 160.0 };
        keyframes.push(Keyframe { t_us: k * 2_000_000, p0: [x, 40.0], p1: [x + 30.0, 140.0] });
    }
    spec.segments.push(MovingSegment { id: 1, keyframes });
    spec.seed = seed;
    let signal = generate_scene(&spec).expect("valid scene").0.len();
    spec.noise_rate = noise_fraction * signal as f64 / (spec.duration_us as f64 * 1e-6);
    let (events, gt) = generate_scene(&spec).expect("valid scene");
    (events, gt, spec)
}

/// Ten short lines sweeping back and forth across a 240×180 sensor at
/// 180 px/s. `events_per_crossing` sets the event rate.
pub fn busy_scene(events_per_crossing: u32, noise_rate: f64, seed: u64) -> (Vec<Event>, Vec<GroundTruthSegment>) {
    let mut spec = SceneSpec::new(240, 180, 10_000_000);
    spec.events_per_crossing = events_per_crossing;
    spec.noise_rate = noise_rate;
    spec.seed = seed;
    for i in 0..10u32 {
        let y = 10.0 + 16.0 * f64::from(i);
        let keyframes = (0..=10u64)
            .map(|k| {
                let x = if (k + u64::from(i)) % 2 == 0 { 20.0 } else { 200.0 };
                Keyframe { t_us: k * 1_000_000, p0: [x, y], p1: [x + 15.0, y + 14.0] }
            })
            .collect();
        spec.segments.push(MovingSegment { id: i, keyframes });
    }
    generate_scene(&spec).expect("valid scene")
}
