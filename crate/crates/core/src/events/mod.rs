//! Event data model, stream I/O and the synthetic scene generator.

mod io;
mod scene;

pub use io::{
    read_events, read_ground_truth, write_events, write_ground_truth, EventFormat, EventReader,
    BINARY_RECORD_LEN,
};
pub use scene::{generate_scene, Keyframe, MovingSegment, SceneSpec};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("record {record}: {message}")]
    Parse { record: usize, message: String },
    #[error("record {record}: timestamp {found} precedes previous timestamp {previous}")]
    Ordering {
        record: usize,
        previous: u64,
        found: u64,
    },
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("invalid sensor geometry {width}x{height}")]
    Geometry { width: u32, height: u32 },
}

/// Sign of the brightness change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Polarity {
    Positive = 1,
    Negative = -1,
}

impl Polarity {
    pub fn from_i8(p: i8) -> Option<Self> {
        match p {
            1 => Some(Polarity::Positive),
            -1 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        self as i8
    }
}

/// A single camera event: timestamp in microseconds, pixel, polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u64,
    pub u: u16,
    pub v: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: u64, u: u16, v: u16, p: Polarity) -> Self {
        Self { t, u, v, p }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SensorGeometry {
    pub width: u16,
    pub height: u16,
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Result<Self, EventError> {
        if width == 0 || height == 0 {
            return Err(EventError::Geometry {
                width: width.into(),
                height: height.into(),
            });
        }
        Ok(Self { width, height })
    }

    pub fn contains(&self, u: u16, v: u16) -> bool {
        u < self.width && v < self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn diagonal(&self) -> f64 {
        f64::from(self.width).hypot(f64::from(self.height))
    }
}

impl fmt::Display for SensorGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// One ground-truth sample of a line segment at time `t` (microseconds).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruthSegment {
    pub t: u64,
    pub id: u32,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarity_conversion() {
        assert_eq!(Polarity::from_i8(1), Some(Polarity::Positive));
        assert_eq!(Polarity::from_i8(-1), Some(Polarity::Negative));
        assert_eq!(Polarity::from_i8(0), None);
        assert_eq!(Polarity::from_i8(2), None);
        assert_eq!(Polarity::Negative.as_i8(), -1);
    }

    #[test]
    fn geometry_rejects_zero() {
        assert!(SensorGeometry::new(0, 10).is_err());
        let g = SensorGeometry::new(240, 180).unwrap();
        assert!(g.contains(239, 179));
        assert!(!g.contains(240, 0));
        assert_eq!(g.diagonal(), 300.0);
    }
}
