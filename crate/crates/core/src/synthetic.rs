//! Synthetic cloud sequences with exactly known motion and masks.
//!
//! Clouds are soft discs with a generalized-Gaussian opacity profile
//! `g(r) = 2^-((r / R)^6)`, so a blob's opacity crosses one half exactly at
//! its radius `R`. Overlapping blobs combine as `1 - prod(1 - g_i)`, and a
//! pixel is cloud in the ground-truth mask when the combined opacity is at
//! least one half. Everything is evaluated in closed form at each frame, so
//! the truth carries no resampling error.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::raster::{Image, ScalarField};
use crate::segmentation::BinaryMask;

/// Clear-sky colour, ratio channel 0.5.
pub const SKY_RGB: [f64; 3] = [0.3, 0.55, 0.9];
/// Cloud colour, ratio channel 1/30. `R + B` matches the sky colour so the
/// ratio channel is linear in cloud opacity.
pub const CLOUD_RGB: [f64; 3] = [0.58, 0.6, 0.62];

const PROFILE_EXPONENT: f64 = 6.0;

/// Portable xorshift64* generator.
///
/// State update `x ^= x >> 12; x ^= x << 25; x ^= x >> 27`, output
/// `x * 0x2545F4914F6CDD1D`. Seeds are expanded with one SplitMix64 step
/// (increment `0x9E3779B97F4A7C15`, multipliers `0xBF58476D1CE4E5B9` and
/// `0x94D049BB133111EB`) so that any `u64`, including zero, gives a non-zero
/// state.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self {
            state: if z == 0 { 0x9E37_79B9_7F4A_7C15 } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box–Muller (cosine branch only).
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// Per-frame relative growth of every blob radius; 0 is rigid.
    pub deformation_rate: f64,
    pub n_blobs: usize,
    /// Mean blob radius in pixels.
    pub blob_scale: f64,
    /// Standard deviation of the additive per-channel noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            n_frames: 3,
            velocity: (1.0, 0.0),
            deformation_rate: 0.0,
            n_blobs: 10,
            blob_scale: 10.0,
            noise_sigma: 0.0,
            seed: 1,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 32 || self.height < 32 {
            return Err(Error::invalid(format!(
                "scene must be at least 32x32, got {}x{}",
                self.width, self.height
            )));
        }
        if self.n_frames < 3 {
            return Err(Error::invalid(format!(
                "scene needs at least 3 frames, got {}",
                self.n_frames
            )));
        }
        if !(self.deformation_rate.is_finite() && self.deformation_rate >= 0.0) {
            return Err(Error::invalid(
                "deformation_rate must be finite and non-negative",
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma < 0.1) {
            return Err(Error::invalid(format!(
                "noise_sigma must lie in [0, 0.1), got {}",
                self.noise_sigma
            )));
        }
        if !(self.blob_scale.is_finite() && self.blob_scale > 0.0) {
            return Err(Error::invalid("blob_scale must be positive"));
        }
        if !self.velocity.0.is_finite() || !self.velocity.1.is_finite() {
            return Err(Error::invalid("velocity must be finite"));
        }
        Ok(())
    }
}

/// One cloud blob at frame 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<Image>,
    /// Flow from frame `k` to frame `k + 1`.
    pub true_flow: Vec<FlowField>,
    pub true_masks: Vec<BinaryMask>,
    pub blobs: Vec<Blob>,
}

struct Scene<'a> {
    spec: &'a SceneSpec,
    blobs: Vec<Blob>,
}

impl Scene<'_> {
    fn blob_at(&self, b: &Blob, k: usize) -> Blob {
        let k = k as f64;
        Blob {
            x: b.x + k * self.spec.velocity.0,
            y: b.y + k * self.spec.velocity.1,
            radius: b.radius * (1.0 + self.spec.deformation_rate).powf(k),
        }
    }

    fn frame_blobs(&self, k: usize) -> Vec<Blob> {
        self.blobs.iter().map(|b| self.blob_at(b, k)).collect()
    }

    fn rgb(&self, opacity: &ScalarField, k: usize) -> Image {
        let mut rng = XorShift64Star::new(
            self.spec.seed ^ (k as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03),
        );
        let sigma = self.spec.noise_sigma;
        Image::rgb_from_fn(self.spec.width, self.spec.height, |x, y| {
            let c = opacity.get(x, y);
            std::array::from_fn(|ch| {
                let clean = SKY_RGB[ch] + (CLOUD_RGB[ch] - SKY_RGB[ch]) * c;
                let noisy = if sigma > 0.0 {
                    clean + sigma * rng.gaussian()
                } else {
                    clean
                };
                noisy.clamp(0.0, 1.0)
            })
        })
    }
}

fn blob_opacity(b: &Blob, x: f64, y: f64) -> f64 {
    let r = (x - b.x).hypot(y - b.y) / b.radius;
    (-r.powf(PROFILE_EXPONENT)).exp2()
}

/// Combined cloud opacity of a set of blobs.
fn opacity_field(blobs: &[Blob], width: usize, height: usize) -> ScalarField {
    ScalarField::from_fn(width, height, |x, y| {
        let clear: f64 = blobs
            .iter()
            .map(|b| 1.0 - blob_opacity(b, x as f64, y as f64))
            .product();
        1.0 - clear
    })
}

pub fn generate(spec: &SceneSpec) -> Result<SyntheticSequence> {
    spec.validate()?;
    let mut rng = XorShift64Star::new(spec.seed);
    let margin = spec.blob_scale;
    let blobs: Vec<Blob> = (0..spec.n_blobs)
        .map(|_| Blob {
            x: rng.uniform(margin, spec.width as f64 - margin),
            y: rng.uniform(margin, spec.height as f64 - margin),
            radius: spec.blob_scale * rng.uniform(0.75, 1.25),
        })
        .collect();
    let scene = Scene { spec, blobs };

    let rendered: Vec<(Image, BinaryMask, FlowField)> = (0..spec.n_frames)
        .into_par_iter()
        .map(|k| {
            let at_k = scene.frame_blobs(k);
            let opacity = opacity_field(&at_k, spec.width, spec.height);
            let mask =
                BinaryMask::from_fn(spec.width, spec.height, |x, y| opacity.get(x, y) >= 0.5);
            let flow = true_flow(&scene, &at_k, &mask);
            (scene.rgb(&opacity, k), mask, flow)
        })
        .collect();

    let mut frames = Vec::with_capacity(spec.n_frames);
    let mut true_masks = Vec::with_capacity(spec.n_frames);
    let mut true_flow = Vec::with_capacity(spec.n_frames - 1);
    for (k, (img, mask, flow)) in rendered.into_iter().enumerate() {
        frames.push(img);
        true_masks.push(mask);
        if k + 1 < spec.n_frames {
            true_flow.push(flow);
        }
    }
    Ok(SyntheticSequence {
        frames,
        true_flow,
        true_masks,
        blobs: scene.blobs,
    })
}

/// Commanded velocity everywhere. When blobs grow, pixels inside the cloud
/// mask also carry the radial expansion of the blob with the largest
/// opacity there.
fn true_flow(scene: &Scene<'_>, blobs: &[Blob], mask: &BinaryMask) -> FlowField {
    let (w, h) = (scene.spec.width, scene.spec.height);
    let (vx, vy) = scene.spec.velocity;
    let rate = scene.spec.deformation_rate;
    let mut u = vec![vx; w * h];
    let mut v = vec![vy; w * h];
    if rate > 0.0 && !blobs.is_empty() {
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    continue;
                }
                let (px, py) = (x as f64, y as f64);
                let dominant = blobs
                    .iter()
                    .max_by(|a, b| blob_opacity(a, px, py).total_cmp(&blob_opacity(b, px, py)))
                    .unwrap();
                u[y * w + x] += rate * (px - dominant.x);
                v[y * w + x] += rate * (py - dominant.y);
            }
        }
    }
    FlowField::new(
        ScalarField::from_raw(w, h, u),
        ScalarField::from_raw(w, h, v),
    )
    .expect("flow components share dimensions")
}

/// Mean Euclidean distance between two flows, over `roi` (all pixels when
/// `None`).
pub fn endpoint_error(
    estimated: &FlowField,
    truth: &FlowField,
    roi: Option<&BinaryMask>,
) -> Result<f64> {
    if estimated.dims() != truth.dims() {
        return Err(Error::invalid(format!(
            "flow size mismatch: {}x{} vs {}x{}",
            estimated.width(),
            estimated.height(),
            truth.width(),
            truth.height()
        )));
    }
    if let Some(r) = roi {
        if r.dims() != truth.dims() {
            return Err(Error::invalid(
                "region of interest does not match the flow size",
            ));
        }
    }
    let (w, h) = truth.dims();
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            if roi.is_some_and(|r| !r.get(x, y)) {
                continue;
            }
            let (eu, ev) = estimated.at(x, y);
            let (tu, tv) = truth.at(x, y);
            total += (eu - tu).hypot(ev - tv);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("region of interest is empty"));
    }
    Ok(total / count as f64)
}
