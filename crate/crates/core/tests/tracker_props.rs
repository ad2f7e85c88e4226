use evline::detector::{default_min_events, DetectParams, Detector};
use evline::events::{generate_scene, Keyframe, MovingSegment, SceneSpec, SensorGeometry};
use evline::geom::Point;
use evline::lattice::LatticeGeometry;
use evline::linefit::{fitting_score, Candidate, ScoreParams};
use evline::scarf::{ScarfStorage, StoredEvent};
use evline::segment::{is_legal_segment_transition, LineSegment, LineState, LineStatus};
use evline::tracker::{argmax_first, hypotheses, TrackParams, Tracker};
use proptest::prelude::*;
use std::collections::HashMap;

const F_TH: f64 = 0.2;

fn params() -> (DetectParams, TrackParams) {
    let capacity = 64;
    (
        DetectParams { f_th: F_TH, d_max: 1.6, min_events: default_min_events(capacity) },
        TrackParams { f_th: F_TH, d_max: 1.6, delta_q: 0.8, corner_radius: 0.8, suppress_radius: 2.0 },
    )
}

/// Runs detection and tracking over a random moving-line scene and checks
/// per-pass invariants. Returns every segment row in emission order.
fn run_scene(seed: u64, p0: [f64; 2], p1: [f64; 2], shift: [f64; 2], noise: f64) -> Vec<LineSegment> {
    let mut spec = SceneSpec::new(96, 64, 1_000_000);
    spec.segments.push(MovingSegment {
        id: 1,
        keyframes: vec![
            Keyframe { t_us: 0, p0, p1 },
            Keyframe {
                t_us: 1_000_000,
                p0: [p0[0] + shift[0], p0[1] + shift[1]],
                p1: [p1[0] + shift[0], p1[1] + shift[1]],
            },
        ],
    });
    spec.noise_rate = noise;
    spec.seed = seed;
    let (events, _) = generate_scene(&spec).unwrap();

    let lattice = LatticeGeometry::new(SensorGeometry::new(96, 64).unwrap(), 8).unwrap();
    let storage = ScarfStorage::new(lattice, 1.0);
    let lines = LineState::new(lattice);
    let (dp, tp) = params();
    let mut detector = Detector::new(dp);
    let mut tracker = Tracker::new(tp);
    let mut rows = Vec::new();
    let mut writer = storage.writer();
    for chunk in events.chunks(50) {
        writer.insert_batch(chunk);
        let now = chunk.last().unwrap().t;
        detector.pass(&storage, &lines, now, &mut rows);
        tracker.pass(&storage, &lines, now, &mut rows);
        assert_eq!(lines.audit(), 0);
        assert_eq!(lines.violations(), 0);
    }
    rows
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (4.0f64..92.0, 4.0f64..60.0).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn passes_keep_state_sound(
        seed in any::<u64>(),
        p0 in point(),
        p1 in point(),
        shift in (-40.0f64..40.0, -30.0f64..30.0),
        noise in 0.0f64..3000.0,
    ) {
        prop_assume!((p0[0] - p1[0]).hypot(p0[1] - p1[1]) > 6.0);
        let rows = run_scene(seed, p0, p1, [shift.0, shift.1], noise);
        let mut last: HashMap<u64, LineStatus> = HashMap::new();
        for r in &rows {
            let prev = last.insert(r.id, r.status).unwrap_or(LineStatus::NoDetect);
            prop_assert!(is_legal_segment_transition(prev, r.status), "{prev} -> {}", r.status);
            match r.status {
                LineStatus::GoodTrack => prop_assert!(r.score >= F_TH),
                LineStatus::Detected => prop_assert!(r.score > F_TH),
                LineStatus::NoDetect => prop_assert!(r.death_us.is_some()),
                _ => {}
            }
        }
    }

    #[test]
    fn hypothesis_choice_ignores_capacity_scale(
        raw in prop::collection::vec((0u16..16, 0u16..16), 1..64),
        q0y in 0.0f64..16.0,
        q1y in 0.0f64..16.0,
        scale in 2usize..6,
    ) {
        let events: Vec<StoredEvent> = raw.iter().map(|&(u, v)| StoredEvent::active(u, v)).collect();
        let (_, tp) = params();
        let hyps = hypotheses(Point::new(0.0, q0y), Point::new(16.0, q1y), 8.0, &tp);
        // capacity above the event count keeps r_e unsaturated
        let score_all = |capacity: usize| -> Vec<f64> {
            hyps.iter()
                .map(|&(a, b)| {
                    Candidate::new(a, b)
                        .map(|c| fitting_score(&events, &c, &ScoreParams { d_max: 1.6, capacity }))
                        .unwrap_or(0.0)
                })
                .collect()
        };
        let base = score_all(64);
        let scaled = score_all(64 * scale);
        prop_assert_eq!(argmax_first(&base), argmax_first(&scaled));
    }
}

#[test]
fn five_distinct_hypotheses_with_base_first() {
    let (_, tp) = params();
    let q0 = Point::new(8.0, 11.0);
    let q1 = Point::new(19.0, 16.0);
    let h = hypotheses(q0, q1, 8.0, &tp);
    assert_eq!(h[0], (q0, q1));
    for i in 0..5 {
        for j in i + 1..5 {
            assert_ne!(h[i], h[j]);
        }
    }
    // q0 is on a vertical lattice line so it moves along y; q1 on a horizontal one moves along x
    assert_eq!(h[1].0, Point::new(8.0, 10.2));
    assert_eq!(h[2].0, Point::new(8.0, 11.8));
    assert_eq!(h[3].1, Point::new(18.2, 16.0));
    assert_eq!(h[4].1, Point::new(19.8, 16.0));
}

#[test]
fn moving_line_is_detected_and_tracked() {
    let rows = run_scene(3, [20.0, 10.0], [30.0, 50.0], [30.0, 0.0], 500.0);
    assert!(rows.iter().any(|r| r.status == LineStatus::Detected));
    assert!(rows.iter().filter(|r| r.status == LineStatus::GoodTrack).count() > 10);
}
