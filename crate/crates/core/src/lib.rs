//! Line segment detection and tracking on event-camera streams.
//!
//! Events are stored in a lattice of per-block FIFO buffers ([`scarf`]).
//! Blocks without a segment fit one ([`detector`]); existing segments are
//! refined by scoring endpoint perturbations ([`tracker`]). [`pipeline`] runs
//! the three roles either threaded or in a deterministic lockstep schedule and
//! [`eval`] scores the resulting trace against ground truth.

pub mod detector;
pub mod eval;
pub mod events;
pub mod geom;
pub mod lattice;
pub mod linefit;
pub mod pipeline;
pub mod scarf;
pub mod segment;
pub mod tracker;

pub use detector::{DetectParams, Detector};
pub use events::{Event, EventError, GroundTruthSegment, Polarity, SensorGeometry};
pub use geom::{Point, Rect};
pub use lattice::{BlockCoord, LatticeError, LatticeGeometry};
pub use linefit::{fitting_score, Candidate, ScoreParams};
pub use scarf::{ScarfStorage, SnapshotFilter, StoredEvent};
pub use segment::{LineSegment, LineState, LineStatus};
pub use tracker::{TrackParams, Tracker};
