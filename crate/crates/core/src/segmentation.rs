//! Sky/cloud segmentation and forecast scoring.

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::prediction::cascade_predict;
use crate::raster::{ratio_channel, Image, ScalarField};

/// Ratio-channel cut used when a frame's histogram has no usable second
/// mode.
pub const DEFAULT_FALLBACK_THRESHOLD: f64 = 0.25;
pub const HISTOGRAM_BINS: usize = 256;
/// Largest between-class variance still treated as a single mode.
pub const UNIMODAL_VARIANCE: f64 = 1e-6;
pub const SEGMENTATION_METHOD: &str = "otsu-ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Sky,
    Cloud,
}

/// Per-pixel binary raster. For segmentation output a set pixel is cloud;
/// for a region of interest a set pixel is included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height || width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "{width}x{height} mask needs {} labels, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn label(&self, x: usize, y: usize) -> Label {
        if self.get(x, y) {
            Label::Cloud
        } else {
            Label::Sky
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Mean position of the set pixels.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    pub fallback_threshold: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            fallback_threshold: DEFAULT_FALLBACK_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub mask: BinaryMask,
    /// Ratio value separating cloud (below) from sky (at or above). For a
    /// unimodal frame this is the fallback threshold.
    pub threshold: f64,
    pub bimodal: bool,
}

fn histogram_bin(r: f64) -> usize {
    let scaled = ((r + 1.0) * 0.5 * HISTOGRAM_BINS as f64).floor();
    (scaled.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

fn bin_edge(t: usize) -> f64 {
    -1.0 + 2.0 * t as f64 / HISTOGRAM_BINS as f64
}

/// Splits the histogram at the bin index maximizing between-class variance
/// (the first maximum wins). Returns the split index and the variance.
fn otsu_split(ratio: &ScalarField) -> (usize, f64) {
    let mut hist = [0usize; HISTOGRAM_BINS];
    for &r in ratio.data() {
        hist[histogram_bin(r)] += 1;
    }
    let total = ratio.data().len() as f64;
    let centre = |i: usize| bin_edge(i) + 1.0 / HISTOGRAM_BINS as f64;
    let grand: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &n)| n as f64 * centre(i))
        .sum();

    let (mut best_t, mut best_var) = (0, 0.0);
    let (mut w0, mut sum0) = (0.0, 0.0);
    for t in 1..HISTOGRAM_BINS {
        w0 += hist[t - 1] as f64;
        sum0 += hist[t - 1] as f64 * centre(t - 1);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (grand - sum0) / w1;
        let var = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    (best_t, best_var)
}

/// Thresholds the ratio channel: pixels at or above the between-class
/// variance optimum are sky, the rest cloud. Frames without a second mode
/// are labelled as a whole by comparing their mean ratio against the
/// fallback threshold.
pub fn segment_with(img: &Image, params: &SegmentParams) -> Result<Segmentation> {
    let ratio = ratio_channel(img)?;
    let (w, h) = ratio.dims();
    let (t, var) = otsu_split(&ratio);
    if var < UNIMODAL_VARIANCE {
        let cloudy = ratio.mean() < params.fallback_threshold;
        return Ok(Segmentation {
            mask: BinaryMask::from_fn(w, h, |_, _| cloudy),
            threshold: params.fallback_threshold,
            bimodal: false,
        });
    }
    Ok(Segmentation {
        mask: BinaryMask::from_fn(w, h, |x, y| histogram_bin(ratio.get(x, y)) < t),
        threshold: bin_edge(t),
        bimodal: true,
    })
}

pub fn segment(img: &Image) -> Result<BinaryMask> {
    Ok(segment_with(img, &SegmentParams::default())?.mask)
}

/// Fraction of pixels with matching labels.
pub fn accuracy(predicted: &BinaryMask, actual: &BinaryMask) -> Result<f64> {
    accuracy_within(predicted, actual, None)
}

/// Fraction of matching labels among the pixels set in `roi`.
pub fn accuracy_within(
    predicted: &BinaryMask,
    actual: &BinaryMask,
    roi: Option<&BinaryMask>,
) -> Result<f64> {
    if predicted.dims() != actual.dims() {
        return Err(Error::invalid(format!(
            "mask size mismatch: {}x{} vs {}x{}",
            predicted.width, predicted.height, actual.width, actual.height
        )));
    }
    let mut agree = 0usize;
    let mut total = 0usize;
    match roi {
        None => {
            agree = predicted
                .bits
                .iter()
                .zip(&actual.bits)
                .filter(|(a, b)| a == b)
                .count();
            total = predicted.bits.len();
        }
        Some(r) => {
            if r.dims() != actual.dims() {
                return Err(Error::invalid(
                    "region of interest does not match the mask size",
                ));
            }
            for ((a, b), &keep) in predicted.bits.iter().zip(&actual.bits).zip(&r.bits) {
                if keep {
                    total += 1;
                    agree += usize::from(a == b);
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::invalid("region of interest is empty"));
    }
    Ok(agree as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRow {
    pub lead_minutes: f64,
    pub accuracy: f64,
    pub n_frames: usize,
}

/// Mean forecast accuracy per lead time.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    pub method: String,
}

impl AccuracyReport {
    pub const CSV_HEADER: &'static str = "lead_minutes,accuracy,n_frames";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{}",
                row.lead_minutes, row.accuracy, row.n_frames
            );
        }
        out
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.accuracy).collect()
    }
}

pub type TimedFrame = (DateTime<Utc>, Image);

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Expected frame spacing in minutes; the median spacing of the first
    /// run when `None`.
    pub nominal_interval_minutes: Option<f64>,
    /// Pixels scored; all when `None`.
    pub roi: Option<BinaryMask>,
    pub segment: SegmentParams,
}

fn spacing_minutes(a: &DateTime<Utc>, b: &DateTime<Utc>) -> f64 {
    (*b - *a).num_milliseconds() as f64 / 60_000.0
}

fn median_spacing(frames: &[TimedFrame]) -> f64 {
    let mut gaps: Vec<f64> = frames
        .windows(2)
        .map(|p| spacing_minutes(&p[0].0, &p[1].0))
        .collect();
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

fn check_spacing(frames: &[TimedFrame], nominal: f64) -> Result<()> {
    for (i, pair) in frames.windows(2).enumerate() {
        let gap = spacing_minutes(&pair[0].0, &pair[1].0);
        if (gap - nominal).abs() > 0.1 * nominal {
            return Err(Error::invalid(format!(
                "frames {i} ({}) and {} ({}) are {gap} min apart, expected {nominal} min +/-10%",
                pair[0].0.format("%Y-%m-%d %H:%M:%S"),
                i + 1,
                pair[1].0.format("%Y-%m-%d %H:%M:%S"),
            )));
        }
    }
    Ok(())
}

/// Scores cascaded forecasts from every anchor of an evenly spaced sequence.
pub fn evaluate_sequence(
    frames: &[TimedFrame],
    max_lead_steps: usize,
    params: &FlowParams,
) -> Result<AccuracyReport> {
    evaluate_sequence_with(frames, max_lead_steps, params, &EvalOptions::default())
}

pub fn evaluate_sequence_with(
    frames: &[TimedFrame],
    max_lead_steps: usize,
    params: &FlowParams,
    options: &EvalOptions,
) -> Result<AccuracyReport> {
    evaluate_runs(&[frames], max_lead_steps, params, options)
}

/// Evaluates several independent runs and averages every lead time over
/// the anchors of all runs. Runs too short for `max_lead_steps` are
/// skipped; it is an error when none qualifies.
///
/// Anchor `i` forecasts from frames `i-1` and `i`, and its step `k` is
/// compared against frame `i+k` after segmenting both.
pub fn evaluate_runs(
    runs: &[&[TimedFrame]],
    max_lead_steps: usize,
    params: &FlowParams,
    options: &EvalOptions,
) -> Result<AccuracyReport> {
    if max_lead_steps == 0 {
        return Err(Error::invalid("max_lead_steps must be at least 1"));
    }
    params.validate()?;
    let needed = max_lead_steps + 2;
    let usable: Vec<&[TimedFrame]> = runs.iter().copied().filter(|r| r.len() >= needed).collect();
    let Some(first) = usable.first() else {
        let longest = runs.iter().map(|r| r.len()).max().unwrap_or(0);
        return Err(Error::invalid(format!(
            "evaluating {max_lead_steps} lead steps needs at least {needed} consecutive frames, got {longest}"
        )));
    };
    let nominal = match options.nominal_interval_minutes {
        Some(n) if n > 0.0 => n,
        Some(n) => {
            return Err(Error::invalid(format!(
                "frame interval must be positive, got {n}"
            )))
        }
        None => median_spacing(first),
    };
    for run in &usable {
        check_spacing(run, nominal)?;
    }

    let anchors: Vec<(&[TimedFrame], usize)> = usable
        .iter()
        .flat_map(|run| (1..run.len() - max_lead_steps).map(move |i| (*run, i)))
        .collect();
    let scores: Vec<Vec<f64>> = anchors
        .par_iter()
        .map(|&(run, i)| score_anchor(run, i, max_lead_steps, params, options))
        .collect::<Result<_>>()?;

    let n = scores.len();
    let rows = (0..max_lead_steps)
        .map(|k| {
            let total: f64 = scores.iter().map(|s| s[k]).sum();
            AccuracyRow {
                lead_minutes: (k + 1) as f64 * nominal,
                accuracy: total / n as f64,
                n_frames: n,
            }
        })
        .collect();
    Ok(AccuracyReport {
        rows,
        method: SEGMENTATION_METHOD.to_string(),
    })
}

fn score_anchor(
    run: &[TimedFrame],
    i: usize,
    steps: usize,
    params: &FlowParams,
    options: &EvalOptions,
) -> Result<Vec<f64>> {
    let forecast = cascade_predict(&run[i - 1].1, &run[i].1, steps, params)?;
    forecast
        .frames
        .iter()
        .enumerate()
        .map(|(k, predicted)| {
            let p = segment_with(predicted, &options.segment)?.mask;
            let a = segment_with(&run[i + k + 1].1, &options.segment)?.mask;
            accuracy_within(&p, &a, options.roi.as_ref())
        })
        .collect()
}
