mod common;

use common::FifoModel;
use evline::events::{Event, Polarity, SensorGeometry};
use evline::lattice::{BlockCoord, LatticeGeometry};
use evline::scarf::{ScarfStorage, SnapshotFilter};
use proptest::prelude::*;

fn storage(width: u16, height: u16, b: u16, n: usize) -> ScarfStorage {
    let lattice = LatticeGeometry::new(SensorGeometry::new(width, height).unwrap(), b).unwrap();
    ScarfStorage::with_capacity(lattice, n)
}

fn pixels(width: u16, height: u16) -> impl Strategy<Value = Vec<(u16, u16)>> {
    // a little headroom past the sensor so rejection is exercised too
    prop::collection::vec((0..width + 2, 0..height + 2), 0..400)
}

fn events_from(pixels: &[(u16, u16)], time_scale: u64) -> Vec<Event> {
    pixels
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| Event::new(i as u64 * 100 * time_scale, u, v, Polarity::Positive))
        .collect()
}

fn all_blocks(s: &ScarfStorage) -> Vec<BlockCoord> {
    s.geometry().blocks().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn storage_matches_naive_model(
        (width, height, b, n, px) in (9u16..48, 9u16..40, 1u16..5, 1usize..24)
            .prop_flat_map(|(w, h, k, n)| (Just(w), Just(h), Just(2 * k), Just(n), pixels(w, h))),
    ) {
        let s = storage(width, height, b, n);
        let mut model = FifoModel::new(width, height, b, n);
        for e in events_from(&px, 1) {
            s.insert(&e);
            model.insert(e.u, e.v);
        }
        for block in all_blocks(&s) {
            let got = s.snapshot(&[block], SnapshotFilter::ActiveAndInactive).events;
            prop_assert_eq!(got, model.contents(block.ru, block.rv), "block {:?}", block);
        }
    }

    #[test]
    fn batched_writer_matches_single_inserts(
        px in pixels(64, 48),
        chunk in 1usize..64,
    ) {
        let single = storage(64, 48, 8, 20);
        let batched = storage(64, 48, 8, 20);
        let events = events_from(&px, 1);
        for e in &events {
            single.insert(e);
        }
        let mut writer = batched.writer();
        for part in events.chunks(chunk) {
            writer.insert_batch(part);
        }
        prop_assert_eq!(single.accepted(), batched.accepted());
        prop_assert_eq!(single.rejected(), batched.rejected());
        let blocks = all_blocks(&single);
        prop_assert_eq!(
            single.snapshot(&blocks, SnapshotFilter::ActiveAndInactive),
            batched.snapshot(&blocks, SnapshotFilter::ActiveAndInactive)
        );
    }

    #[test]
    fn snapshots_ignore_playback_speed(px in pixels(64, 48)) {
        let slow = storage(64, 48, 8, 16);
        let fast = storage(64, 48, 8, 16);
        for e in events_from(&px, 10) {
            slow.insert(&e);
        }
        for e in events_from(&px, 1) {
            fast.insert(&e);
        }
        let blocks = all_blocks(&slow);
        prop_assert_eq!(
            slow.snapshot(&blocks, SnapshotFilter::ActiveOnly),
            fast.snapshot(&blocks, SnapshotFilter::ActiveOnly)
        );
    }

    #[test]
    fn each_event_reaches_at_most_four_buffers(u in 0u16..64, v in 0u16..48) {
        let s = storage(64, 48, 8, 64);
        s.insert(&Event::new(0, u, v, Polarity::Negative));
        let snap = s.snapshot(&all_blocks(&s), SnapshotFilter::ActiveAndInactive).events;
        prop_assert!((1..=4).contains(&snap.len()));
        prop_assert_eq!(snap.iter().filter(|e| e.is_active()).count(), 1);
    }
}

#[test]
fn inactive_only_block_is_cleared_by_neighbor_traffic() {
    let s = storage(32, 32, 8, 4);
    // pixel (7, 3) sits in the right half of block (0, 0)
    for t in 0..4 {
        s.insert(&Event::new(t, 7, 3, Polarity::Positive));
    }
    assert_eq!(s.active_count(BlockCoord::new(0, 0)), 4);
    let right = s.snapshot(&[BlockCoord::new(1, 0)], SnapshotFilter::ActiveAndInactive).events;
    assert_eq!(right.len(), 4);
    assert!(right.iter().all(|e| !e.is_active()));
    // pixel (4, 3) is the block centre column: no horizontal neighbor
    for t in 4..8 {
        s.insert(&Event::new(t, 4, 3, Polarity::Positive));
    }
    let right = s.snapshot(&[BlockCoord::new(1, 0)], SnapshotFilter::ActiveAndInactive).events;
    assert_eq!(right.len(), 4);
    // (9, 3) is active in block (1, 0) and evicts its stale inactive entries
    for t in 8..12 {
        s.insert(&Event::new(t, 9, 3, Polarity::Positive));
    }
    assert_eq!(s.active_count(BlockCoord::new(1, 0)), 4);
    let right = s.snapshot(&[BlockCoord::new(1, 0)], SnapshotFilter::ActiveAndInactive).events;
    assert!(right.iter().all(|e| e.is_active()));
}
