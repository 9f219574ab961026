//! Coarse-to-fine wrapper with iterative warping.

use super::{
    clg_from, horn_schunck_from, lucas_kanade_from, Derivatives, FlowField, FlowParams, Method,
};
use crate::error::Result;
use crate::pyramid::build_pyramid_capped;
use crate::raster::{bilinear_sample, ensure_same_dims, resample, ScalarField};

/// Runs the configured solver once on a frame pair, without pyramid or
/// warping.
pub fn single_level_flow(
    f1: &ScalarField,
    f2: &ScalarField,
    params: &FlowParams,
) -> Result<FlowField> {
    params.validate()?;
    let d = Derivatives::from_pair(f1, f2)?;
    solve(&d, params)
}

fn solve(d: &Derivatives, params: &FlowParams) -> Result<FlowField> {
    match params.method {
        Method::HornSchunck => horn_schunck_from(d, params.alpha, params.iterations, None),
        Method::LucasKanade => lucas_kanade_from(d, params.window_sigma, params.eigen_threshold),
        Method::Clg => clg_from(d, params.alpha, params.window_sigma, params.iterations),
    }
}

/// Samples `f` at `p + flow(p)`: pulls the second frame back onto the
/// first frame's grid.
pub fn warp_field(f: &ScalarField, flow: &FlowField) -> Result<ScalarField> {
    ensure_same_dims(f, flow.u())?;
    Ok(ScalarField::from_fn(f.width(), f.height(), |x, y| {
        let (u, v) = flow.at(x, y);
        bilinear_sample(f, x as f64 + u, y as f64 + v)
    }))
}

/// Brings a flow estimated on a coarser level onto a `width x height` grid.
/// Components are rescaled by the per-axis size ratio.
fn upscale(flow: &FlowField, width: usize, height: usize) -> Result<FlowField> {
    let sx = width as f64 / flow.width() as f64;
    let sy = height as f64 / flow.height() as f64;
    let u = resample(flow.u(), width, height)?.map(|a| a * sx);
    let v = resample(flow.v(), width, height)?.map(|a| a * sy);
    FlowField::new(u, v)
}

/// Coarse-to-fine flow. Starting from zero on the coarsest level, each level
/// runs `warps_per_level` rounds of: warp the second frame by the current
/// estimate, solve for an increment on the warped pair, accumulate.
pub fn pyramid_flow(f1: &ScalarField, f2: &ScalarField, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    ensure_same_dims(f1, f2)?;
    let cap = (params.pyramid_levels > 0).then_some(params.pyramid_levels);
    let p1 = build_pyramid_capped(f1, params.pyramid_scale, params.pyramid_min_dim, cap)?;
    let p2 = build_pyramid_capped(f2, params.pyramid_scale, params.pyramid_min_dim, cap)?;

    let coarsest = p1.level(p1.len() - 1);
    let mut flow = FlowField::zeros(coarsest.width(), coarsest.height())?;
    for k in (0..p1.len()).rev() {
        let (a, b) = (p1.level(k), p2.level(k));
        if flow.dims() != a.dims() {
            flow = upscale(&flow, a.width(), a.height())?;
        }
        for _ in 0..params.warps_per_level {
            let warped = warp_field(b, &flow)?;
            let d = Derivatives::from_pair(a, &warped)?;
            let increment = solve(&d, params)?;
            flow = flow.add(&increment)?;
        }
    }
    Ok(flow)
}
