use super::{Derivatives, FlowField, FlowParams, MotionTensor};
use crate::error::Result;
use crate::raster::ScalarField;

/// Dense Lucas–Kanade: per pixel, solves the Gaussian-weighted normal
/// equations `J w = -(J13, J23)`. Pixels whose structure tensor has its
/// smaller eigenvalue below `params.eigen_threshold` get zero flow.
pub fn lucas_kanade(f1: &ScalarField, f2: &ScalarField, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    let d = Derivatives::from_pair(f1, f2)?;
    lucas_kanade_from(&d, params.window_sigma, params.eigen_threshold)
}

pub fn lucas_kanade_from(
    d: &Derivatives,
    window_sigma: f64,
    eigen_threshold: f64,
) -> Result<FlowField> {
    let t = MotionTensor::new(d, window_sigma)?;
    let (w, h) = t.dims();
    let mut u = vec![0.0; w * h];
    let mut v = vec![0.0; w * h];
    for i in 0..w * h {
        let (a, b, c) = (t.j11.data()[i], t.j12.data()[i], t.j22.data()[i]);
        let half_trace = 0.5 * (a + c);
        let spread = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        if half_trace - spread < eigen_threshold {
            continue;
        }
        let (ru, rv) = (-t.j13.data()[i], -t.j23.data()[i]);
        let det = a * c - b * b;
        u[i] = (c * ru - b * rv) / det;
        v[i] = (a * rv - b * ru) / det;
    }
    FlowField::new(
        ScalarField::from_raw(w, h, u),
        ScalarField::from_raw(w, h, v),
    )
}
