//! Planar rasters of `f64` samples and the elementwise operations the flow
//! solvers need.

use crate::error::{Error, Result};

/// Smallest extent accepted along either axis. Gradient operators need two
/// samples per axis.
pub const MIN_EXTENT: usize = 2;

fn check_extent(width: usize, height: usize) -> Result<()> {
    if width < MIN_EXTENT || height < MIN_EXTENT {
        return Err(Error::invalid(format!(
            "raster must be at least {MIN_EXTENT}x{MIN_EXTENT}, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Single-channel real-valued raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_extent(width, height)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "{width}x{height} field needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if the extent is below [`MIN_EXTENT`] or `f` yields a
    /// non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("from_fn produced an invalid field")
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::from_raw(self.width, self.height, vec![0.0; self.data.len()])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped into the raster.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination of two fields of equal size.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_dims(self, other)?;
        Ok(Self::from_raw(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

pub(crate) fn ensure_same_dims(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::invalid(format!(
            "size mismatch: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Multi-channel planar raster. RGB images use channel order R, G, B with
/// samples nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_extent(width, height)?;
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "{width}x{height}x{channels} image needs {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite samples"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Stacks equally sized single-channel planes.
    pub fn from_planes(planes: &[ScalarField]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::invalid("no channel planes"))?;
        for p in &planes[1..] {
            ensure_same_dims(first, p)?;
        }
        let data = planes.iter().flat_map(|p| p.data.iter().copied()).collect();
        Self::new(first.width, first.height, planes.len(), data)
    }

    /// RGB image from a per-pixel closure returning `[r, g, b]`.
    pub fn rgb_from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Self {
        let n = width * height;
        let mut data = vec![0.0; 3 * n];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for (c, v) in px.into_iter().enumerate() {
                    data[c * n + y * width + x] = v;
                }
            }
        }
        Self::new(width, height, 3, data).expect("rgb_from_fn produced an invalid image")
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel(&self, c: usize) -> ScalarField {
        ScalarField::from_raw(self.width, self.height, self.plane(c).to_vec())
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Largest absolute sample difference against an image of equal shape.
    pub fn max_abs_diff(&self, other: &Image) -> Option<f64> {
        if self.dims() != other.dims() || self.channels != other.channels {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    pub fn mean_abs_diff(&self, other: &Image) -> Option<f64> {
        if self.dims() != other.dims() || self.channels != other.channels {
            return None;
        }
        let total: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Some(total / self.data.len() as f64)
    }
}

/// Red/blue ratio `(B - R) / (B + R)` of an RGB image. Pixels with
/// `B + R == 0` map to 0.
pub fn ratio_channel(img: &Image) -> Result<ScalarField> {
    if img.channels() != 3 {
        return Err(Error::invalid(format!(
            "ratio channel needs an RGB image, got {} channel(s)",
            img.channels()
        )));
    }
    let red = img.plane(0);
    let blue = img.plane(2);
    let data = red
        .iter()
        .zip(blue)
        .map(|(&r, &b)| {
            let sum = b + r;
            if sum == 0.0 {
                0.0
            } else {
                (b - r) / sum
            }
        })
        .collect();
    Ok(ScalarField::from_raw(img.width(), img.height(), data))
}

/// Central differences in the interior, one-sided at the borders.
pub fn spatial_gradients(f: &ScalarField) -> (ScalarField, ScalarField) {
    let (w, h) = f.dims();
    let gx = ScalarField::from_fn(w, h, |x, y| {
        if x == 0 {
            f.get(1, y) - f.get(0, y)
        } else if x == w - 1 {
            f.get(w - 1, y) - f.get(w - 2, y)
        } else {
            (f.get(x + 1, y) - f.get(x - 1, y)) / 2.0
        }
    });
    let gy = ScalarField::from_fn(w, h, |x, y| {
        if y == 0 {
            f.get(x, 1) - f.get(x, 0)
        } else if y == h - 1 {
            f.get(x, h - 1) - f.get(x, h - 2)
        } else {
            (f.get(x, y + 1) - f.get(x, y - 1)) / 2.0
        }
    });
    (gx, gy)
}

/// Forward temporal difference `f2 - f1`.
pub fn temporal_gradient(f1: &ScalarField, f2: &ScalarField) -> Result<ScalarField> {
    f2.zip_with(f1, |b, a| b - a)
}

/// Normalized discrete Gaussian truncated at `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    Ok(k)
}

/// Separable Gaussian smoothing with replicated borders.
pub fn gaussian_blur(f: &ScalarField, sigma: f64) -> Result<ScalarField> {
    let kernel = gaussian_kernel(sigma)?;
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = f.dims();
    let horiz = ScalarField::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, k)| k * f.get_clamped(x as isize + i as isize - radius, y as isize))
            .sum()
    });
    Ok(ScalarField::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, k)| k * horiz.get_clamped(x as isize, y as isize + i as isize - radius))
            .sum()
    }))
}

/// Bilinear interpolation at `(x, y)`. Coordinates are clamped into
/// `[0, width-1] x [0, height-1]` first.
pub fn bilinear_sample(f: &ScalarField, x: f64, y: f64) -> f64 {
    let (w, h) = f.dims();
    let x = if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, (w - 1) as f64)
    };
    let y = if y.is_nan() {
        0.0
    } else {
        y.clamp(0.0, (h - 1) as f64)
    };
    let x0 = (x.floor() as usize).min(w - 2);
    let y0 = (y.floor() as usize).min(h - 2);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = (1.0 - fx) * f.get(x0, y0) + fx * f.get(x0 + 1, y0);
    let bottom = (1.0 - fx) * f.get(x0, y0 + 1) + fx * f.get(x0 + 1, y0 + 1);
    (1.0 - fy) * top + fy * bottom
}

/// Bilinear resampling onto a `width x height` grid with pixel centres
/// aligned.
pub fn resample(f: &ScalarField, width: usize, height: usize) -> Result<ScalarField> {
    check_extent(width, height)?;
    if (width, height) == f.dims() {
        return Ok(f.clone());
    }
    let sx = f.width() as f64 / width as f64;
    let sy = f.height() as f64 / height as f64;
    Ok(ScalarField::from_fn(width, height, |x, y| {
        bilinear_sample(f, (x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5)
    }))
}
