//! Lattice event storage.
//!
//! Every block keeps a bounded FIFO of the last `N = round(α·b²)` events pushed
//! into it. An event is pushed as *active* into the block that owns its pixel
//! and as *inactive* into each neighbor whose overlapping margin covers it.
//! Inactive entries are never used downstream except to push older active
//! entries out, which is what clears a block once an edge has left it.
//! Timestamps are not stored: a block's contents depend only on the order of
//! pushes, not on how fast they arrived.

mod ring;

pub use ring::FifoRing;

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder, Luma};
use parking_lot::Mutex;

use crate::events::Event;
use crate::lattice::{BlockCoord, LatticeGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Indicator {
    Active,
    Inactive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StoredEvent {
    pub u: u16,
    pub v: u16,
    pub indicator: Indicator,
}

impl StoredEvent {
    pub fn active(u: u16, v: u16) -> Self {
        Self { u, v, indicator: Indicator::Active }
    }

    pub fn inactive(u: u16, v: u16) -> Self {
        Self { u, v, indicator: Indicator::Inactive }
    }

    pub fn is_active(&self) -> bool {
        self.indicator == Indicator::Active
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotFilter {
    ActiveOnly,
    ActiveAndInactive,
}

/// Copy of some blocks' buffers plus their summed capacity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Snapshot {
    pub events: Vec<StoredEvent>,
    pub capacity: usize,
}

/// Buffer capacity for block size `b` and buffer ratio `alpha`.
pub fn buffer_capacity(block_size: u16, alpha: f64) -> usize {
    let b = f64::from(block_size);
    ((alpha * b * b).round() as usize).max(1)
}

pub struct ScarfStorage {
    geometry: LatticeGeometry,
    capacity: usize,
    blocks: Box<[Mutex<FifoRing<StoredEvent>>]>,
    accepted: AtomicU64,
    rejected: AtomicU64,
}

impl ScarfStorage {
    pub fn new(geometry: LatticeGeometry, alpha: f64) -> Self {
        Self::with_capacity(geometry, buffer_capacity(geometry.block_size(), alpha))
    }

    pub fn with_capacity(geometry: LatticeGeometry, capacity: usize) -> Self {
        let blocks = (0..geometry.block_count())
            .map(|_| Mutex::new(FifoRing::new(capacity)))
            .collect();
        Self {
            geometry,
            capacity,
            blocks,
            accepted: AtomicU64::new(0),
            rejected: AtomicU64::new(0),
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Per-block capacity `N`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn accepted(&self) -> u64 {
        self.accepted.load(Ordering::Relaxed)
    }

    pub fn rejected(&self) -> u64 {
        self.rejected.load(Ordering::Relaxed)
    }

    /// Stores one event. Out-of-bounds events are counted and dropped.
    pub fn insert(&self, e: &Event) -> bool {
        let Ok(home) = self.geometry.active_block_of(e.u, e.v) else {
            self.rejected.fetch_add(1, Ordering::Relaxed);
            return false;
        };
        self.push(home, StoredEvent::active(e.u, e.v));
        if let Ok(neighbors) = self.geometry.inactive_blocks_of(e.u, e.v) {
            for block in neighbors {
                self.push(block, StoredEvent::inactive(e.u, e.v));
            }
        }
        self.accepted.fetch_add(1, Ordering::Relaxed);
        true
    }

    #[inline]
    fn push(&self, block: BlockCoord, item: StoredEvent) {
        self.blocks[self.geometry.index(block)].lock().push(item);
    }

    /// Batched writer for a single ingestion thread.
    pub fn writer(&self) -> ScarfWriter<'_> {
        ScarfWriter {
            storage: self,
            staged: vec![Vec::new(); self.blocks.len()],
            touched: Vec::new(),
        }
    }

    pub fn snapshot(&self, blocks: &[BlockCoord], filter: SnapshotFilter) -> Snapshot {
        let mut events = Vec::new();
        let capacity = self.snapshot_into(blocks, filter, &mut events);
        Snapshot { events, capacity }
    }

    /// Appends a consistent copy of the requested buffers to `out` and returns
    /// their summed capacity. All requested blocks are locked together, in
    /// row-major order, for the duration of the copy.
    pub fn snapshot_into(
        &self,
        blocks: &[BlockCoord],
        filter: SnapshotFilter,
        out: &mut Vec<StoredEvent>,
    ) -> usize {
        let mut indices: Vec<usize> = blocks
            .iter()
            .filter(|b| self.geometry.contains_block(**b))
            .map(|b| self.geometry.index(*b))
            .collect();
        debug_assert_eq!(indices.len(), blocks.len(), "snapshot of blocks outside the lattice");
        indices.sort_unstable();
        indices.dedup();
        let guards: Vec<_> = indices.iter().map(|&i| self.blocks[i].lock()).collect();
        for ring in &guards {
            match filter {
                SnapshotFilter::ActiveOnly => out.extend(ring.iter().filter(|e| e.is_active())),
                SnapshotFilter::ActiveAndInactive => out.extend(ring.iter()),
            }
        }
        guards.len() * self.capacity
    }

    /// Number of active entries currently held by a block.
    pub fn active_count(&self, block: BlockCoord) -> usize {
        self.blocks[self.geometry.index(block)]
            .lock()
            .iter()
            .filter(|e| e.is_active())
            .count()
    }

    /// Every active entry adds `intensity` at its pixel, saturating at 255.
    pub fn render_frame(&self, intensity: u8) -> GrayImage {
        let sensor = self.geometry.sensor();
        let mut img = GrayImage::new(sensor.width.into(), sensor.height.into());
        for block in self.blocks.iter() {
            let ring = block.lock();
            for e in ring.iter().filter(|e| e.is_active()) {
                let px = img.get_pixel_mut(e.u.into(), e.v.into());
                *px = Luma([px.0[0].saturating_add(intensity)]);
            }
        }
        img
    }
}

/// Stages a batch of events per block and then appends each block's share
/// under a single lock acquisition. Per-block push order is the stream order,
/// so the stored state equals inserting the events one by one.
pub struct ScarfWriter<'a> {
    storage: &'a ScarfStorage,
    staged: Vec<Vec<StoredEvent>>,
    touched: Vec<usize>,
}

impl ScarfWriter<'_> {
    /// Inserts `events` in order. Returns how many were inside the sensor.
    pub fn insert_batch(&mut self, events: &[Event]) -> usize {
        let geometry = self.storage.geometry;
        let mut accepted = 0;
        for e in events {
            let Ok(home) = geometry.active_block_of(e.u, e.v) else {
                continue;
            };
            accepted += 1;
            self.stage(geometry.index(home), StoredEvent::active(e.u, e.v));
            if let Ok(neighbors) = geometry.inactive_blocks_of(e.u, e.v) {
                for block in neighbors {
                    self.stage(geometry.index(block), StoredEvent::inactive(e.u, e.v));
                }
            }
        }
        for &i in &self.touched {
            let staged = &mut self.staged[i];
            let mut ring = self.storage.blocks[i].lock();
            for &item in staged.iter() {
                ring.push(item);
            }
            drop(ring);
            staged.clear();
        }
        self.touched.clear();
        self.storage.accepted.fetch_add(accepted as u64, Ordering::Relaxed);
        self.storage
            .rejected
            .fetch_add((events.len() - accepted) as u64, Ordering::Relaxed);
        accepted
    }

    #[inline]
    fn stage(&mut self, index: usize, item: StoredEvent) {
        let staged = &mut self.staged[index];
        if staged.is_empty() {
            self.touched.push(index);
        }
        staged.push(item);
    }
}

/// Binary (P5) PGM with maxval 255.
pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::L8)
        .map_err(std::io::Error::other)?;
    out.flush()
}
