//! Horn–Schunck: quadratic data term plus quadratic smoothness, minimized by
//! Jacobi sweeps.
//!
//! Discrete energy:
//!
//! ```text
//! E(u, v) = sum_p (Ix u + Iy v + It)^2
//!         + alpha^2 / 4 * sum_{p~q} ((u_p - u_q)^2 + (v_p - v_q)^2)
//! ```
//!
//! where `p~q` ranges over horizontally and vertically adjacent pixel pairs.
//! With the replicate-border 4-neighbour mean `ū`, the gradient is
//! `dE/du_p = 2 (Ix (Ix u + Iy v + It) + alpha^2 (u_p - ū_p))`, and the
//! classic update
//!
//! ```text
//! u <- ū - Ix (Ix ū + Iy v̄ + It) / (alpha^2 + Ix^2 + Iy^2)
//! ```
//!
//! is the exact per-pixel minimizer with the neighbours held fixed. That
//! makes each sweep a block-Jacobi step, which never increases `E`.

use super::{dirichlet_sum, neighbour_average, Derivatives, FlowField, FlowParams};
use crate::error::Result;
use crate::raster::{ensure_same_dims, ScalarField};

pub fn horn_schunck(f1: &ScalarField, f2: &ScalarField, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    let d = Derivatives::from_pair(f1, f2)?;
    horn_schunck_from(&d, params.alpha, params.iterations, None)
}

/// Runs exactly `iterations` sweeps from `init` (zero when `None`).
pub fn horn_schunck_from(
    d: &Derivatives,
    alpha: f64,
    iterations: usize,
    init: Option<&FlowField>,
) -> Result<FlowField> {
    solve(d, alpha, iterations, init, None)
}

/// As [`horn_schunck_from`], also returning the energy before the first
/// sweep and after every sweep.
pub fn horn_schunck_traced(
    d: &Derivatives,
    alpha: f64,
    iterations: usize,
    init: Option<&FlowField>,
) -> Result<(FlowField, Vec<f64>)> {
    let mut trace = Vec::with_capacity(iterations + 1);
    let flow = solve(d, alpha, iterations, init, Some(&mut trace))?;
    Ok((flow, trace))
}

fn solve(
    d: &Derivatives,
    alpha: f64,
    iterations: usize,
    init: Option<&FlowField>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<FlowField> {
    let (w, h) = d.dims();
    let (mut u, mut v) = match init {
        Some(f) => {
            ensure_same_dims(f.u(), &d.it)?;
            (f.u().data().to_vec(), f.v().data().to_vec())
        }
        None => (vec![0.0; w * h], vec![0.0; w * h]),
    };
    let a2 = alpha * alpha;
    let (ix, iy, it) = (d.ix.data(), d.iy.data(), d.it.data());
    let mut u_bar = vec![0.0; w * h];
    let mut v_bar = vec![0.0; w * h];

    if let Some(t) = trace.as_deref_mut() {
        t.push(energy_raw(d, a2, &u, &v));
    }
    for _ in 0..iterations {
        neighbour_average(&u, w, h, &mut u_bar);
        neighbour_average(&v, w, h, &mut v_bar);
        for i in 0..w * h {
            let k = (ix[i] * u_bar[i] + iy[i] * v_bar[i] + it[i])
                / (a2 + ix[i] * ix[i] + iy[i] * iy[i]);
            u[i] = u_bar[i] - ix[i] * k;
            v[i] = v_bar[i] - iy[i] * k;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(energy_raw(d, a2, &u, &v));
        }
    }
    FlowField::new(
        ScalarField::from_raw(w, h, u),
        ScalarField::from_raw(w, h, v),
    )
}

fn energy_raw(d: &Derivatives, a2: f64, u: &[f64], v: &[f64]) -> f64 {
    let (w, h) = d.dims();
    let (ix, iy, it) = (d.ix.data(), d.iy.data(), d.it.data());
    let data: f64 = (0..w * h)
        .map(|i| {
            let r = ix[i] * u[i] + iy[i] * v[i] + it[i];
            r * r
        })
        .sum();
    data + 0.25 * a2 * (dirichlet_sum(u, w, h) + dirichlet_sum(v, w, h))
}

/// Discrete Horn–Schunck energy of `flow`.
pub fn hs_energy(d: &Derivatives, alpha: f64, flow: &FlowField) -> Result<f64> {
    ensure_same_dims(flow.u(), &d.it)?;
    Ok(energy_raw(
        d,
        alpha * alpha,
        flow.u().data(),
        flow.v().data(),
    ))
}

/// Analytic gradient of [`hs_energy`] (the Euler–Lagrange residual),
/// `(dE/du, dE/dv)` per pixel.
pub fn hs_energy_gradient(d: &Derivatives, alpha: f64, flow: &FlowField) -> Result<FlowField> {
    ensure_same_dims(flow.u(), &d.it)?;
    let (w, h) = d.dims();
    let a2 = alpha * alpha;
    let (u, v) = (flow.u().data(), flow.v().data());
    let mut u_bar = vec![0.0; w * h];
    let mut v_bar = vec![0.0; w * h];
    neighbour_average(u, w, h, &mut u_bar);
    neighbour_average(v, w, h, &mut v_bar);
    let (ix, iy, it) = (d.ix.data(), d.iy.data(), d.it.data());
    let mut gu = vec![0.0; w * h];
    let mut gv = vec![0.0; w * h];
    for i in 0..w * h {
        let r = ix[i] * u[i] + iy[i] * v[i] + it[i];
        gu[i] = 2.0 * (ix[i] * r + a2 * (u[i] - u_bar[i]));
        gv[i] = 2.0 * (iy[i] * r + a2 * (v[i] - v_bar[i]));
    }
    FlowField::new(
        ScalarField::from_raw(w, h, gu),
        ScalarField::from_raw(w, h, gv),
    )
}
