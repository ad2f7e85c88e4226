//! Heat-map precision/recall against ground truth, and segment lifetimes.
//!
//! Segments are rasterized into binary masks at sensor resolution. A predicted
//! pixel counts as correct when a ground-truth pixel lies within Euclidean
//! distance `τ` (inclusive); recall swaps the roles.

use std::collections::BTreeMap;

use image::{GrayImage, Luma};
use imageproc::distance_transform::euclidean_squared_distance_transform;
use imageproc::drawing::draw_line_segment_mut;

use crate::events::{GroundTruthSegment, SensorGeometry};
use crate::geom::{Point, Rect};
use crate::pipeline::TraceRecord;
use crate::segment::LineStatus;

const ON: Luma<u8> = Luma([255]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatMapParams {
    /// Tolerance in pixels.
    pub tolerance_px: f64,
}

impl HeatMapParams {
    /// Tolerance given as a fraction of the sensor diagonal.
    pub fn from_fraction(fraction: f64, sensor: SensorGeometry) -> Self {
        Self {
            tolerance_px: fraction * sensor.diagonal(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    /// Evaluation time in seconds.
    pub t: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn empty_mask(sensor: SensorGeometry) -> GrayImage {
    GrayImage::new(sensor.width.into(), sensor.height.into())
}

/// Draws one segment: clipped to the pixel grid, endpoints rounded, then
/// integer line traversal.
pub fn rasterize_into(mask: &mut GrayImage, a: Point, b: Point) {
    let (w, h) = mask.dimensions();
    if w == 0 || h == 0 {
        return;
    }
    let bounds = Rect::new(0.0, 0.0, f64::from(w - 1), f64::from(h - 1));
    let Some((a, b)) = bounds.clip_segment(a, b) else {
        return;
    };
    let round = |p: Point| (p.x.round() as f32, p.y.round() as f32);
    draw_line_segment_mut(mask, round(a), round(b), ON);
}

pub fn rasterize(segments: &[(Point, Point)], sensor: SensorGeometry) -> GrayImage {
    let mut mask = empty_mask(sensor);
    for &(a, b) in segments {
        rasterize_into(&mut mask, a, b);
    }
    mask
}

fn round_tolerance(tau: f64) -> f64 {
    (tau * 100.0).round() / 100.0
}

/// Fraction of `from`'s on-pixels within `tau` of an on-pixel of `to`.
/// Vacuously 1 when `from` is empty.
fn matched_fraction(from: &GrayImage, to: &GrayImage, tau: f64) -> f64 {
    let total = from.pixels().filter(|p| p.0[0] != 0).count();
    if total == 0 {
        return 1.0;
    }
    if to.pixels().all(|p| p.0[0] == 0) {
        return 0.0;
    }
    let dist = euclidean_squared_distance_transform(to);
    let limit = tau * tau + 1e-9;
    let hit = from
        .pixels()
        .zip(dist.pixels())
        .filter(|(p, d)| p.0[0] != 0 && d.0[0] <= limit)
        .count();
    hit as f64 / total as f64
}

/// Precision and recall of `pred` against `gt` at tolerance `tau` pixels
/// (rounded to 0.01). `t` of the result is 0.
pub fn pr_at(pred: &GrayImage, gt: &GrayImage, tau: f64) -> PrPoint {
    assert_eq!(pred.dimensions(), gt.dimensions(), "mask shapes differ");
    let tau = round_tolerance(tau);
    let precision = matched_fraction(pred, gt, tau);
    let recall = matched_fraction(gt, pred, tau);
    PrPoint {
        t: 0.0,
        precision,
        recall,
        f_score: f_score(precision, recall),
    }
}

/// Cumulative masks at whole second `s`.
pub struct SeriesFrame<'a> {
    pub second: u64,
    pub pred: &'a GrayImage,
    pub gt: &'a GrayImage,
}

/// PR at every whole second, each over everything predicted (live rows of
/// the trace) and every ground-truth sample up to that second. A trailing
/// partial second is reported as the next whole second.
pub fn pr_series(
    trace: &[TraceRecord],
    gt: &[GroundTruthSegment],
    sensor: SensorGeometry,
    params: HeatMapParams,
) -> Vec<PrPoint> {
    pr_series_with(trace, gt, sensor, params, |_| {})
}

/// As [`pr_series`], also handing each cumulative frame to `on_frame`.
pub fn pr_series_with(
    trace: &[TraceRecord],
    gt: &[GroundTruthSegment],
    sensor: SensorGeometry,
    params: HeatMapParams,
    mut on_frame: impl FnMut(SeriesFrame<'_>),
) -> Vec<PrPoint> {
    let mut preds: Vec<&TraceRecord> = trace.iter().filter(|r| r.status.is_live()).collect();
    preds.sort_by_key(|r| r.t_us);
    let mut truth: Vec<&GroundTruthSegment> = gt.iter().collect();
    truth.sort_by_key(|g| g.t);

    let last = preds
        .iter()
        .map(|r| r.t_us)
        .chain(truth.iter().map(|g| g.t))
        .max();
    let Some(last) = last else {
        return Vec::new();
    };
    let seconds = last.div_ceil(1_000_000).max(1);

    let mut pred_mask = empty_mask(sensor);
    let mut gt_mask = empty_mask(sensor);
    let (mut ip, mut ig) = (0, 0);
    let mut out = Vec::with_capacity(seconds as usize);
    for s in 1..=seconds {
        let limit = s * 1_000_000;
        while ip < preds.len() && preds[ip].t_us <= limit {
            let r = preds[ip];
            rasterize_into(&mut pred_mask, Point::new(r.x0, r.y0), Point::new(r.x1, r.y1));
            ip += 1;
        }
        while ig < truth.len() && truth[ig].t <= limit {
            let g = truth[ig];
            rasterize_into(&mut gt_mask, Point::new(g.x0, g.y0), Point::new(g.x1, g.y1));
            ig += 1;
        }
        let mut p = pr_at(&pred_mask, &gt_mask, params.tolerance_px);
        p.t = s as f64;
        out.push(p);
        on_frame(SeriesFrame {
            second: s,
            pred: &pred_mask,
            gt: &gt_mask,
        });
    }
    out
}

/// Ground truth in mid gray, predictions on top in white.
pub fn heat_map(pred: &GrayImage, gt: &GrayImage) -> GrayImage {
    let mut img = gt.clone();
    for (o, (p, g)) in img.pixels_mut().zip(pred.pixels().zip(gt.pixels())) {
        o.0[0] = if p.0[0] != 0 {
            255
        } else if g.0[0] != 0 {
            96
        } else {
            0
        };
    }
    img
}

pub fn write_pr_csv(series: &[PrPoint], out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "t_s,precision,recall,f_score")?;
    for p in series {
        writeln!(out, "{},{:.6},{:.6},{:.6}", p.t, p.precision, p.recall, p.f_score)?;
    }
    Ok(())
}

/// Lifetime in seconds of every segment in the trace, ordered by id. A
/// segment lives from its first row to its `NoDetect` row, or to `end_us` if
/// it never retired.
pub fn segment_lifetimes(trace: &[TraceRecord], end_us: u64) -> Vec<f64> {
    let mut spans: BTreeMap<u64, (u64, Option<u64>)> = BTreeMap::new();
    for r in trace {
        let span = spans.entry(r.l_id).or_insert((r.t_us, None));
        span.0 = span.0.min(r.t_us);
        if r.status == LineStatus::NoDetect && span.1.is_none() {
            span.1 = Some(r.t_us);
        }
    }
    spans
        .values()
        .map(|&(birth, death)| death.unwrap_or(end_us).saturating_sub(birth) as f64 / 1e6)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LifetimeStats {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: f64,
}

impl LifetimeStats {
    pub fn from_durations(durations: &[f64]) -> Self {
        if durations.is_empty() {
            return Self::default();
        }
        let n = durations.len() as f64;
        let mean = durations.iter().sum::<f64>() / n;
        let var = durations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        Self {
            count: durations.len(),
            mean,
            std: var.sqrt(),
            max: durations.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Lifetime statistics; still-live segments end at the last trace row.
pub fn lifetime_stats(trace: &[TraceRecord]) -> LifetimeStats {
    let end = trace.iter().map(|r| r.t_us).max().unwrap_or(0);
    LifetimeStats::from_durations(&segment_lifetimes(trace, end))
}
