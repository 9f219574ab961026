//! Dense two-frame optical flow.
//!
//! All solvers linearize brightness constancy, `Ix*u + Iy*v + It = 0`, with
//! spatial derivatives taken on the frame average and the temporal
//! derivative as the forward difference `f2 - f1`. A flow vector `(u, v)` at
//! `p` states that the content at `p` in the first frame sits at `p + (u, v)`
//! in the second.

mod clg;
mod hs;
mod lk;
mod multiscale;

pub use clg::{clg_flow, clg_from, MotionTensor, NO_SMOOTHING};
pub use hs::{horn_schunck, horn_schunck_from, horn_schunck_traced, hs_energy, hs_energy_gradient};
pub use lk::{lucas_kanade, lucas_kanade_from};
pub use multiscale::{pyramid_flow, single_level_flow, warp_field};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, spatial_gradients, temporal_gradient, ScalarField};

/// Per-pixel displacement in pixels per frame interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    u: ScalarField,
    v: ScalarField,
}

impl FlowField {
    pub fn new(u: ScalarField, v: ScalarField) -> Result<Self> {
        ensure_same_dims(&u, &v)?;
        Ok(Self { u, v })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        let z = ScalarField::filled(width, height, 0.0)?;
        Ok(Self { u: z.clone(), v: z })
    }

    pub fn constant(width: usize, height: usize, u: f64, v: f64) -> Result<Self> {
        Ok(Self {
            u: ScalarField::filled(width, height, u)?,
            v: ScalarField::filled(width, height, v)?,
        })
    }

    pub fn width(&self) -> usize {
        self.u.width()
    }

    pub fn height(&self) -> usize {
        self.u.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.u.dims()
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.u, self.v)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        (self.u.get(x, y), self.v.get(x, y))
    }

    /// Pointwise sum of two flows.
    pub fn add(&self, other: &FlowField) -> Result<FlowField> {
        Ok(Self {
            u: self.u.zip_with(&other.u, |a, b| a + b)?,
            v: self.v.zip_with(&other.v, |a, b| a + b)?,
        })
    }

    pub fn scaled(&self, factor: f64) -> FlowField {
        Self {
            u: self.u.map(|a| a * factor),
            v: self.v.map(|a| a * factor),
        }
    }

    /// Transposes the raster and swaps the components, which is the flow of
    /// the transposed frame pair.
    pub fn transposed(&self) -> FlowField {
        Self {
            u: self.v.transpose(),
            v: self.u.transpose(),
        }
    }

    /// Largest absolute component.
    pub fn max_norm(&self) -> f64 {
        self.u
            .data()
            .iter()
            .chain(self.v.data())
            .fold(0.0, |m, &a| m.max(a.abs()))
    }

    pub fn mean(&self) -> (f64, f64) {
        (self.u.mean(), self.v.mean())
    }
}

/// Flow divided by the frame interval: pixels per minute.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField(FlowField);

impl VelocityField {
    pub fn x(&self) -> &ScalarField {
        self.0.u()
    }

    pub fn y(&self) -> &ScalarField {
        self.0.v()
    }

    pub fn as_flow(&self) -> &FlowField {
        &self.0
    }
}

pub fn to_velocity(flow: &FlowField, frame_interval_minutes: f64) -> Result<VelocityField> {
    if !(frame_interval_minutes.is_finite() && frame_interval_minutes > 0.0) {
        return Err(Error::invalid(format!(
            "frame interval must be positive, got {frame_interval_minutes}"
        )));
    }
    Ok(VelocityField(flow.scaled(1.0 / frame_interval_minutes)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    HornSchunck,
    LucasKanade,
    Clg,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::HornSchunck => "hs",
            Method::LucasKanade => "lk",
            Method::Clg => "clg",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" | "horn_schunck" => Ok(Method::HornSchunck),
            "lk" | "lucas_kanade" => Ok(Method::LucasKanade),
            "clg" => Ok(Method::Clg),
            other => Err(Error::invalid(format!(
                "unknown flow method {other:?}; expected hs, lk or clg"
            ))),
        }
    }
}

/// Solver configuration. Defaults are tuned for the raw `[-1, 1]` ratio
/// channel of sky images.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub method: Method,
    /// Smoothness weight (HS and CLG).
    pub alpha: f64,
    /// Integration scale of the structure tensor (LK and CLG). CLG accepts
    /// [`NO_SMOOTHING`] to fall back to pointwise products.
    pub window_sigma: f64,
    /// Jacobi sweeps per solve.
    pub iterations: usize,
    pub pyramid_scale: f64,
    pub pyramid_min_dim: usize,
    /// Upper bound on pyramid levels; 0 lets `pyramid_min_dim` decide.
    pub pyramid_levels: usize,
    pub warps_per_level: usize,
    /// Smallest structure-tensor eigenvalue LK accepts before reporting zero
    /// flow.
    pub eigen_threshold: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            method: Method::Clg,
            alpha: 1.5,
            window_sigma: 2.0,
            iterations: 300,
            pyramid_scale: crate::pyramid::DEFAULT_SCALE,
            pyramid_min_dim: crate::pyramid::DEFAULT_MIN_DIM,
            pyramid_levels: 0,
            warps_per_level: 3,
            eigen_threshold: 1e-6,
        }
    }
}

impl FlowParams {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        match self.method {
            Method::Clg if self.window_sigma == NO_SMOOTHING => {}
            _ => positive("window_sigma", self.window_sigma)?,
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return Err(Error::invalid(format!(
                "pyramid_scale must lie in (0, 1), got {}",
                self.pyramid_scale
            )));
        }
        if self.pyramid_min_dim < crate::pyramid::DEFAULT_MIN_DIM {
            return Err(Error::invalid(format!(
                "pyramid_min_dim must be at least {}, got {}",
                crate::pyramid::DEFAULT_MIN_DIM,
                self.pyramid_min_dim
            )));
        }
        if self.warps_per_level == 0 {
            return Err(Error::invalid("warps_per_level must be at least 1"));
        }
        if !(self.eigen_threshold.is_finite() && self.eigen_threshold >= 0.0) {
            return Err(Error::invalid("eigen_threshold must be non-negative"));
        }
        Ok(())
    }
}

/// Image derivatives of a frame pair.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub ix: ScalarField,
    pub iy: ScalarField,
    pub it: ScalarField,
}

impl Derivatives {
    pub fn from_pair(f1: &ScalarField, f2: &ScalarField) -> Result<Self> {
        let it = temporal_gradient(f1, f2)?;
        let avg = f1.zip_with(f2, |a, b| 0.5 * (a + b))?;
        let (ix, iy) = spatial_gradients(&avg);
        Ok(Self { ix, iy, it })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.it.dims()
    }
}

/// Left-hand side of the linearized flow equation, `Ix*u + Iy*v + It`.
pub fn flow_residual(f1: &ScalarField, f2: &ScalarField, flow: &FlowField) -> Result<ScalarField> {
    let d = Derivatives::from_pair(f1, f2)?;
    ensure_same_dims(&d.it, flow.u())?;
    let data = (0..d.it.data().len())
        .map(|i| {
            d.ix.data()[i] * flow.u.data()[i] + d.iy.data()[i] * flow.v.data()[i] + d.it.data()[i]
        })
        .collect();
    Ok(ScalarField::from_raw(d.it.width(), d.it.height(), data))
}

/// Mean of the four replicate-border neighbours of every pixel.
pub(crate) fn neighbour_average(f: &[f64], width: usize, height: usize, out: &mut [f64]) {
    for y in 0..height {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(height - 1);
        for x in 0..width {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(width - 1);
            out[y * width + x] = 0.25
                * (f[y * width + left]
                    + f[y * width + right]
                    + f[up * width + x]
                    + f[down * width + x]);
        }
    }
}

/// Sum of squared forward differences over all horizontal and vertical
/// pixel pairs.
pub(crate) fn dirichlet_sum(f: &[f64], width: usize, height: usize) -> f64 {
    let mut total = 0.0;
    for y in 0..height {
        for x in 0..width {
            let c = f[y * width + x];
            if x + 1 < width {
                let d = f[y * width + x + 1] - c;
                total += d * d;
            }
            if y + 1 < height {
                let d = f[(y + 1) * width + x] - c;
                total += d * d;
            }
        }
    }
    total
}
