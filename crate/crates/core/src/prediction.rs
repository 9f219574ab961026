//! Frame extrapolation by backward warping, cascaded over several steps.

use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::flow::{pyramid_flow, FlowField, FlowParams};
use crate::raster::{bilinear_sample, ratio_channel, Image, ScalarField};

/// Capture cadence of the sky imagers, in minutes.
pub const DEFAULT_FRAME_INTERVAL: f64 = 2.0;

/// Predicted frames at `base_time + k * frame_interval`, `k = 1..=n`, and the
/// flow used for each step.
#[derive(Debug, Clone)]
pub struct Forecast {
    pub base_time: Option<DateTime<Utc>>,
    pub frame_interval_minutes: f64,
    pub frames: Vec<Image>,
    pub flows: Vec<FlowField>,
}

impl Forecast {
    pub fn with_timing(mut self, base_time: DateTime<Utc>, frame_interval_minutes: f64) -> Self {
        self.base_time = Some(base_time);
        self.frame_interval_minutes = frame_interval_minutes;
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Lead time of the 1-based step `k`.
    pub fn lead_minutes(&self, k: usize) -> f64 {
        k as f64 * self.frame_interval_minutes
    }

    pub fn valid_time(&self, k: usize) -> Option<DateTime<Utc>> {
        let secs = (self.lead_minutes(k) * 60.0).round() as i64;
        self.base_time.map(|t| t + Duration::seconds(secs))
    }
}

/// Backward warp: `out(p) = img(p - flow(p))` per channel, sampled
/// bilinearly with clamped coordinates.
pub fn warp_image(img: &Image, flow: &FlowField) -> Result<Image> {
    if img.dims() != flow.dims() {
        return Err(Error::invalid(format!(
            "image is {}x{} but flow is {}x{}",
            img.width(),
            img.height(),
            flow.width(),
            flow.height()
        )));
    }
    let planes: Vec<ScalarField> = (0..img.channels())
        .map(|c| {
            let src = img.channel(c);
            ScalarField::from_fn(img.width(), img.height(), |x, y| {
                let (u, v) = flow.at(x, y);
                bilinear_sample(&src, x as f64 - u, y as f64 - v)
            })
        })
        .collect();
    Image::from_planes(&planes)
}

fn ensure_rgb_pair(prev: &Image, cur: &Image) -> Result<()> {
    if prev.channels() != 3 || cur.channels() != 3 {
        return Err(Error::invalid("prediction needs RGB frames"));
    }
    if prev.dims() != cur.dims() {
        return Err(Error::invalid(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            prev.width(),
            prev.height(),
            cur.width(),
            cur.height()
        )));
    }
    Ok(())
}

/// One-interval extrapolation: estimates the `prev -> cur` flow on the
/// ratio channel and advances `cur` by that displacement.
pub fn predict_next(prev: &Image, cur: &Image, params: &FlowParams) -> Result<(Image, FlowField)> {
    ensure_rgb_pair(prev, cur)?;
    let flow = pyramid_flow(&ratio_channel(prev)?, &ratio_channel(cur)?, params)?;
    let next = warp_image(cur, &flow)?;
    Ok((next, flow))
}

/// Repeated one-step extrapolation, each step driven by the latest two
/// frames, observed or predicted.
pub fn cascade_predict(
    prev: &Image,
    cur: &Image,
    steps: usize,
    params: &FlowParams,
) -> Result<Forecast> {
    if steps == 0 {
        return Err(Error::invalid("cascade needs at least one step"));
    }
    ensure_rgb_pair(prev, cur)?;
    let mut frames = Vec::with_capacity(steps);
    let mut flows = Vec::with_capacity(steps);
    let (mut older, mut newer) = (prev.clone(), cur.clone());
    for _ in 0..steps {
        let (next, flow) = predict_next(&older, &newer, params)?;
        frames.push(next.clone());
        flows.push(flow);
        older = std::mem::replace(&mut newer, next);
    }
    Ok(Forecast {
        base_time: None,
        frame_interval_minutes: DEFAULT_FRAME_INTERVAL,
        frames,
        flows,
    })
}
