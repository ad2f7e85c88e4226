//! Block-grid geometry: pixel-to-block mapping, overlapping inactive margins
//! and segment traversal.
//!
//! A block `(ru, rv)` owns the pixels `[ru·b, (ru+1)·b) × [rv·b, (rv+1)·b)`
//! (its active region). Its inactive region extends the active region by
//! `b/2` on every side; a pixel lying strictly less than `b/2` away from a
//! neighbor's border is also stored in that neighbor as inactive.

use arrayvec::ArrayVec;
use thiserror::Error;

use crate::events::SensorGeometry;
use crate::geom::{Point, Rect};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("block size {0} must be even and at least 2")]
    BlockSize(u16),
    #[error("pixel ({u}, {v}) is outside the {width}x{height} sensor")]
    OutOfBounds { u: u16, v: u16, width: u16, height: u16 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockCoord {
    pub ru: u16,
    pub rv: u16,
}

impl BlockCoord {
    pub const fn new(ru: u16, rv: u16) -> Self {
        Self { ru, rv }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeGeometry {
    sensor: SensorGeometry,
    block_size: u16,
    nx: u16,
    ny: u16,
}

impl LatticeGeometry {
    pub fn new(sensor: SensorGeometry, block_size: u16) -> Result<Self, LatticeError> {
        if block_size < 2 || block_size % 2 != 0 {
            return Err(LatticeError::BlockSize(block_size));
        }
        Ok(Self {
            sensor,
            block_size,
            nx: sensor.width.div_ceil(block_size),
            ny: sensor.height.div_ceil(block_size),
        })
    }

    pub fn sensor(&self) -> SensorGeometry {
        self.sensor
    }

    pub fn block_size(&self) -> u16 {
        self.block_size
    }

    pub fn nx(&self) -> u16 {
        self.nx
    }

    pub fn ny(&self) -> u16 {
        self.ny
    }

    pub fn block_count(&self) -> usize {
        self.nx as usize * self.ny as usize
    }

    /// Row-major index of a block.
    pub fn index(&self, block: BlockCoord) -> usize {
        block.rv as usize * self.nx as usize + block.ru as usize
    }

    pub fn coord(&self, index: usize) -> BlockCoord {
        BlockCoord::new((index % self.nx as usize) as u16, (index / self.nx as usize) as u16)
    }

    pub fn contains_block(&self, block: BlockCoord) -> bool {
        block.ru < self.nx && block.rv < self.ny
    }

    /// All blocks in row-major order.
    pub fn blocks(&self) -> impl Iterator<Item = BlockCoord> + '_ {
        (0..self.block_count()).map(|i| self.coord(i))
    }

    fn check(&self, u: u16, v: u16) -> Result<(), LatticeError> {
        if self.sensor.contains(u, v) {
            Ok(())
        } else {
            Err(LatticeError::OutOfBounds {
                u,
                v,
                width: self.sensor.width,
                height: self.sensor.height,
            })
        }
    }

    pub fn active_block_of(&self, u: u16, v: u16) -> Result<BlockCoord, LatticeError> {
        self.check(u, v)?;
        Ok(BlockCoord::new(u / self.block_size, v / self.block_size))
    }

    /// Blocks other than the active one whose inactive margin covers `(u, v)`:
    /// at most one horizontal, one vertical and one diagonal neighbor.
    pub fn inactive_blocks_of(&self, u: u16, v: u16) -> Result<ArrayVec<BlockCoord, 3>, LatticeError> {
        let home = self.active_block_of(u, v)?;
        let half = self.block_size / 2;
        let side = |offset: u16, index: u16, count: u16| -> Option<u16> {
            if offset < half {
                index.checked_sub(1)
            } else if offset > half && index + 1 < count {
                Some(index + 1)
            } else {
                None
            }
        };
        let nu = side(u % self.block_size, home.ru, self.nx);
        let nv = side(v % self.block_size, home.rv, self.ny);
        let mut out = ArrayVec::new();
        if let Some(ru) = nu {
            out.push(BlockCoord::new(ru, home.rv));
        }
        if let Some(rv) = nv {
            out.push(BlockCoord::new(home.ru, rv));
        }
        if let (Some(ru), Some(rv)) = (nu, nv) {
            out.push(BlockCoord::new(ru, rv));
        }
        Ok(out)
    }

    /// Continuous active region of a block, clipped to the sensor.
    pub fn block_rect(&self, block: BlockCoord) -> Rect {
        let b = f64::from(self.block_size);
        let x0 = f64::from(block.ru) * b;
        let y0 = f64::from(block.rv) * b;
        Rect::new(
            x0,
            y0,
            (x0 + b).min(f64::from(self.sensor.width)),
            (y0 + b).min(f64::from(self.sensor.height)),
        )
    }

    /// Block containing a sub-pixel point, or `None` outside the sensor.
    pub fn block_of_point(&self, p: Point) -> Option<BlockCoord> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let (w, h) = (f64::from(self.sensor.width), f64::from(self.sensor.height));
        if p.x >= w || p.y >= h {
            return None;
        }
        let b = f64::from(self.block_size);
        Some(BlockCoord::new((p.x / b) as u16, (p.y / b) as u16))
    }

    /// Blocks whose active region the segment passes through.
    ///
    /// The segment is split at every crossing of a lattice line and each piece
    /// is assigned to the block containing its midpoint, so a block touched
    /// only at an endpoint lying on its border is not included. When the
    /// segment passes exactly through a lattice corner both edge-adjacent
    /// blocks are added as well. Blocks outside the lattice are dropped.
    pub fn blocks_crossed(&self, q0: Point, q1: Point) -> Vec<BlockCoord> {
        const EPS: f64 = 1e-9;
        let b = f64::from(self.block_size);
        let d = q1 - q0;
        // (t, crosses x-line, crosses y-line)
        let mut cuts: Vec<(f64, bool, bool)> = Vec::new();
        for (o, dd, is_x) in [(q0.x, d.x, true), (q0.y, d.y, false)] {
            if dd.abs() < EPS {
                continue;
            }
            let (lo, hi) = if dd > 0.0 { (o, o + dd) } else { (o + dd, o) };
            let mut m = (lo / b).floor() + 1.0;
            while m * b < hi {
                let t = (m * b - o) / dd;
                if t > EPS && t < 1.0 - EPS {
                    cuts.push((t, is_x, !is_x));
                }
                m += 1.0;
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        // merge coincident x/y crossings into corner crossings
        let mut merged: Vec<(f64, bool, bool)> = Vec::with_capacity(cuts.len());
        for c in cuts {
            match merged.last_mut() {
                Some(last) if (c.0 - last.0).abs() < EPS => {
                    last.1 |= c.1;
                    last.2 |= c.2;
                }
                _ => merged.push(c),
            }
        }

        let cell = |p: Point| -> (i64, i64) { ((p.x / b).floor() as i64, (p.y / b).floor() as i64) };
        let mut cells: Vec<(i64, i64)> = Vec::with_capacity(merged.len() * 3 + 1);
        let mut prev_t = 0.0;
        let mut prev_cell: Option<(i64, i64)> = None;
        let bounds: Vec<f64> = merged.iter().map(|c| c.0).chain(std::iter::once(1.0)).collect();
        for (k, &t) in bounds.iter().enumerate() {
            let here = cell(q0.lerp(q1, 0.5 * (prev_t + t)));
            if let Some(before) = prev_cell {
                let cut = merged[k - 1];
                if cut.1 && cut.2 {
                    cells.push((here.0, before.1));
                    cells.push((before.0, here.1));
                }
            }
            cells.push(here);
            prev_cell = Some(here);
            prev_t = t;
        }

        let mut out: Vec<BlockCoord> = cells
            .into_iter()
            .filter_map(|(i, j)| {
                let (i, j) = (
                    clamp_edge(i, self.nx, q0.x, q1.x, self.sensor.width),
                    clamp_edge(j, self.ny, q0.y, q1.y, self.sensor.height),
                );
                (i >= 0 && j >= 0 && i < self.nx as i64 && j < self.ny as i64)
                    .then(|| BlockCoord::new(i as u16, j as u16))
            })
            .collect();
        out.sort_by_key(|c| (c.rv, c.ru));
        out.dedup();
        out
    }
}

/// A segment lying exactly on the far sensor edge floors to one past the last
/// block; fold it back.
fn clamp_edge(i: i64, n: u16, a: f64, c: f64, extent: u16) -> i64 {
    if i == n as i64 && (a.max(c) - f64::from(extent)).abs() < 1e-9 {
        i - 1
    } else {
        i
    }
}
