use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::detector::{default_min_events, DetectParams};
use crate::events::SensorGeometry;
use crate::lattice::LatticeGeometry;
use crate::scarf::buffer_capacity;
use crate::tracker::TrackParams;

use super::PipelineError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RunMode {
    #[default]
    Threaded,
    Lockstep,
}

impl FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "threaded" => Ok(RunMode::Threaded),
            "lockstep" => Ok(RunMode::Lockstep),
            other => Err(format!("unknown run mode `{other}` (expected threaded or lockstep)")),
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Threaded => "threaded",
            RunMode::Lockstep => "lockstep",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Playback {
    #[default]
    AsFastAsPossible,
    WallClock,
}

impl FromStr for Playback {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "afap" | "as-fast-as-possible" => Ok(Playback::AsFastAsPossible),
            "paced" | "wall-clock" => Ok(Playback::WallClock),
            other => Err(format!("unknown playback mode `{other}` (expected afap or paced)")),
        }
    }
}

/// Default `(b, Δq)` for a sensor, keyed on its width.
pub fn resolution_defaults(sensor: SensorGeometry) -> (u16, f64) {
    match sensor.width {
        0..=240 => (8, 0.8),
        241..=346 => (10, 1.1),
        _ => (14, 2.5),
    }
}

/// Run configuration. Unset tuning fields resolve to defaults derived from the
/// sensor size and block size.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub width: u16,
    pub height: u16,
    pub block_size: Option<u16>,
    pub alpha: f64,
    pub f_th: f64,
    pub delta_q: Option<f64>,
    pub d_max: Option<f64>,
    pub suppress_radius: Option<f64>,
    pub corner_radius: Option<f64>,
    pub min_events: Option<usize>,
    pub mode: RunMode,
    pub playback: Playback,
    pub events_per_step: usize,
    pub window_start_us: u64,
    pub window_end_us: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            width: 240,
            height: 180,
            block_size: None,
            alpha: 1.0,
            f_th: 0.2,
            delta_q: None,
            d_max: None,
            suppress_radius: None,
            corner_radius: None,
            min_events: None,
            mode: RunMode::default(),
            playback: Playback::default(),
            events_per_step: 1000,
            window_start_us: 5_000_000,
            window_end_us: 10_000_000,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value `{value}` for `{key}`: {e}"))
}

impl PipelineConfig {
    pub fn for_sensor(width: u16, height: u16) -> Self {
        Self {
            width,
            height,
            ..Self::default()
        }
    }

    pub fn sensor(&self) -> Result<SensorGeometry, PipelineError> {
        SensorGeometry::new(self.width, self.height).map_err(|e| PipelineError::Invalid(e.to_string()))
    }

    pub fn block_size(&self) -> u16 {
        self.block_size
            .unwrap_or_else(|| resolution_defaults(self.sensor_unchecked()).0)
    }

    pub fn delta_q(&self) -> f64 {
        self.delta_q
            .unwrap_or_else(|| resolution_defaults(self.sensor_unchecked()).1)
    }

    pub fn d_max(&self) -> f64 {
        self.d_max.unwrap_or(0.2 * f64::from(self.block_size()))
    }

    pub fn suppress_radius(&self) -> f64 {
        self.suppress_radius.unwrap_or(f64::from(self.block_size()) / 4.0)
    }

    pub fn corner_radius(&self) -> f64 {
        self.corner_radius.unwrap_or(self.delta_q())
    }

    pub fn capacity(&self) -> usize {
        buffer_capacity(self.block_size(), self.alpha)
    }

    pub fn min_events(&self) -> usize {
        self.min_events.unwrap_or(default_min_events(self.capacity()))
    }

    fn sensor_unchecked(&self) -> SensorGeometry {
        SensorGeometry {
            width: self.width,
            height: self.height,
        }
    }

    pub fn lattice(&self) -> Result<LatticeGeometry, PipelineError> {
        LatticeGeometry::new(self.sensor()?, self.block_size()).map_err(|e| PipelineError::Invalid(e.to_string()))
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams {
            f_th: self.f_th,
            d_max: self.d_max(),
            min_events: self.min_events(),
        }
    }

    pub fn track_params(&self) -> TrackParams {
        TrackParams {
            f_th: self.f_th,
            d_max: self.d_max(),
            delta_q: self.delta_q(),
            corner_radius: self.corner_radius(),
            suppress_radius: self.suppress_radius(),
        }
    }

    /// Checks ranges and that the lattice can be built.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Invalid(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(0.0..=1.0).contains(&self.f_th) {
            return bad("f_th must lie in [0, 1]");
        }
        if !(self.delta_q() > 0.0) || !(self.d_max() > 0.0) {
            return bad("delta_q and d_max must be positive");
        }
        if self.suppress_radius() < 0.0 || self.corner_radius() < 0.0 {
            return bad("radii must be non-negative");
        }
        if self.events_per_step == 0 {
            return bad("events_per_step must be at least 1");
        }
        if self.window_end_us < self.window_start_us {
            return bad("window_end_us precedes window_start_us");
        }
        self.lattice().map(|_| ())
    }

    /// Sets one parameter by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "width" => self.width = parse(key, value)?,
            "height" => self.height = parse(key, value)?,
            "b" | "block_size" => self.block_size = Some(parse(key, value)?),
            "alpha" => self.alpha = parse(key, value)?,
            "f_th" => self.f_th = parse(key, value)?,
            "delta_q" => self.delta_q = Some(parse(key, value)?),
            "d_max" => self.d_max = Some(parse(key, value)?),
            "suppress_radius" => self.suppress_radius = Some(parse(key, value)?),
            "corner_radius" => self.corner_radius = Some(parse(key, value)?),
            "min_events" => self.min_events = Some(parse(key, value)?),
            "mode" => self.mode = parse(key, value)?,
            "playback" => self.playback = parse(key, value)?,
            "events_per_step" => self.events_per_step = parse(key, value)?,
            "window_start_us" => self.window_start_us = parse(key, value)?,
            "window_end_us" => self.window_end_us = parse(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn apply_str(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| PipelineError::Config {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|message| PipelineError::Config { line: i + 1, message })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let text = std::fs::read_to_string(path)?;
        self.apply_str(&text)
    }

    /// Resolved parameters as `key=value` lines.
    pub fn describe(&self) -> String {
        format!(
            "width={}\nheight={}\nb={}\nalpha={}\nf_th={}\ndelta_q={}\nd_max={}\nsuppress_radius={}\ncorner_radius={}\nmin_events={}\nmode={}\n",
            self.width,
            self.height,
            self.block_size(),
            self.alpha,
            self.f_th,
            self.delta_q(),
            self.d_max(),
            self.suppress_radius(),
            self.corner_radius(),
            self.min_events(),
            self.mode,
        )
    }
}
