use crate::error::{Error, Result};
use crate::raster::{gaussian_blur, resample, ScalarField};

pub const DEFAULT_SCALE: f64 = 0.5;
pub const DEFAULT_MIN_DIM: usize = 8;

/// Anti-aliasing blur applied before each downsampling step.
const PRESMOOTH_SIGMA: f64 = 1.0;

/// Coarse-to-fine stack of fields; level 0 is full resolution.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<ScalarField>,
    scale_factor: f64,
}

impl Pyramid {
    pub fn levels(&self) -> &[ScalarField] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &ScalarField {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }
}

/// Size of the next coarser level along one axis.
pub fn scaled_extent(n: usize, scale_factor: f64) -> usize {
    // Guard against 10 * 0.8 = 8.000000000000002 rounding up to 9.
    (n as f64 * scale_factor - 1e-9).ceil() as usize
}

/// Level sizes `build_pyramid` will produce, finest first.
pub fn level_dims(
    width: usize,
    height: usize,
    scale_factor: f64,
    min_dim: usize,
    max_levels: Option<usize>,
) -> Vec<(usize, usize)> {
    let mut dims = vec![(width, height)];
    loop {
        if max_levels.is_some_and(|m| dims.len() >= m) {
            break;
        }
        let (w, h) = *dims.last().unwrap();
        let next = (
            scaled_extent(w, scale_factor),
            scaled_extent(h, scale_factor),
        );
        if next.0 < min_dim || next.1 < min_dim {
            break;
        }
        dims.push(next);
    }
    dims
}

pub fn build_pyramid(f: &ScalarField, scale_factor: f64, min_dim: usize) -> Result<Pyramid> {
    build_pyramid_capped(f, scale_factor, min_dim, None)
}

/// Like [`build_pyramid`], additionally stopping once `max_levels` levels
/// exist.
pub fn build_pyramid_capped(
    f: &ScalarField,
    scale_factor: f64,
    min_dim: usize,
    max_levels: Option<usize>,
) -> Result<Pyramid> {
    if !(scale_factor > 0.0 && scale_factor < 1.0) {
        return Err(Error::invalid(format!(
            "pyramid scale factor must lie in (0, 1), got {scale_factor}"
        )));
    }
    if min_dim < DEFAULT_MIN_DIM {
        return Err(Error::invalid(format!(
            "pyramid minimum dimension must be at least {DEFAULT_MIN_DIM}, got {min_dim}"
        )));
    }
    if max_levels == Some(0) {
        return Err(Error::invalid("pyramid needs at least one level"));
    }
    let dims = level_dims(f.width(), f.height(), scale_factor, min_dim, max_levels);
    let mut levels = Vec::with_capacity(dims.len());
    levels.push(f.clone());
    for &(w, h) in &dims[1..] {
        let prev = levels.last().unwrap();
        let smoothed = gaussian_blur(prev, PRESMOOTH_SIGMA)?;
        levels.push(resample(&smoothed, w, h)?);
    }
    Ok(Pyramid {
        levels,
        scale_factor,
    })
}
