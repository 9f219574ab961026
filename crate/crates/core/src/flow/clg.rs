//! Combined local–global flow: the Horn–Schunck smoothness term with the
//! data term replaced by a Gaussian-integrated motion tensor.

use super::{dirichlet_sum, neighbour_average, Derivatives, FlowField, FlowParams};
use crate::error::Result;
use crate::raster::{gaussian_blur, ScalarField};

/// `window_sigma` value that disables tensor integration, reducing CLG to
/// Horn–Schunck.
pub const NO_SMOOTHING: f64 = 0.0;

/// Entries of the symmetric 3x3 motion tensor `K * (∇₃I ∇₃Iᵀ)` with
/// `∇₃I = (Ix, Iy, It)`.
#[derive(Debug, Clone)]
pub struct MotionTensor {
    pub j11: ScalarField,
    pub j12: ScalarField,
    pub j22: ScalarField,
    pub j13: ScalarField,
    pub j23: ScalarField,
    pub j33: ScalarField,
}

impl MotionTensor {
    /// Builds the tensor, integrating each entry with a Gaussian of
    /// `sigma`, or leaving pointwise products when `sigma` is
    /// [`NO_SMOOTHING`].
    pub fn new(d: &Derivatives, sigma: f64) -> Result<Self> {
        let product = |a: &ScalarField, b: &ScalarField| -> Result<ScalarField> {
            let p = a.zip_with(b, |x, y| x * y)?;
            if sigma == NO_SMOOTHING {
                Ok(p)
            } else {
                gaussian_blur(&p, sigma)
            }
        };
        Ok(Self {
            j11: product(&d.ix, &d.ix)?,
            j12: product(&d.ix, &d.iy)?,
            j22: product(&d.iy, &d.iy)?,
            j13: product(&d.ix, &d.it)?,
            j23: product(&d.iy, &d.it)?,
            j33: product(&d.it, &d.it)?,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.j11.dims()
    }

    /// `wᵀ J w` summed over the raster, `w = (u, v, 1)`.
    pub fn data_energy(&self, flow: &FlowField) -> f64 {
        let (u, v) = (flow.u().data(), flow.v().data());
        (0..u.len())
            .map(|i| {
                let (j11, j12, j22) = (self.j11.data()[i], self.j12.data()[i], self.j22.data()[i]);
                let (j13, j23, j33) = (self.j13.data()[i], self.j23.data()[i], self.j33.data()[i]);
                u[i] * u[i] * j11
                    + v[i] * v[i] * j22
                    + j33
                    + 2.0 * (u[i] * v[i] * j12 + u[i] * j13 + v[i] * j23)
            })
            .sum()
    }

    /// Data term plus `alpha^2 / 4` times the summed squared neighbour
    /// differences, matching the Horn–Schunck discretization.
    pub fn energy(&self, alpha: f64, flow: &FlowField) -> f64 {
        let (w, h) = self.dims();
        self.data_energy(flow)
            + 0.25
                * alpha
                * alpha
                * (dirichlet_sum(flow.u().data(), w, h) + dirichlet_sum(flow.v().data(), w, h))
    }
}

pub fn clg_flow(f1: &ScalarField, f2: &ScalarField, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    let d = Derivatives::from_pair(f1, f2)?;
    clg_from(&d, params.alpha, params.window_sigma, params.iterations)
}

/// Jacobi sweeps on the CLG Euler–Lagrange equations. Each pixel solves
///
/// ```text
/// [J11 + a², J12     ] [u]   [a² ū - J13]
/// [J12,      J22 + a²] [v] = [a² v̄ - J23]
/// ```
///
/// with the neighbour means taken from the previous sweep.
pub fn clg_from(
    d: &Derivatives,
    alpha: f64,
    window_sigma: f64,
    iterations: usize,
) -> Result<FlowField> {
    let tensor = MotionTensor::new(d, window_sigma)?;
    let (w, h) = tensor.dims();
    let a2 = alpha * alpha;
    let (j11, j12, j22) = (tensor.j11.data(), tensor.j12.data(), tensor.j22.data());
    let (j13, j23) = (tensor.j13.data(), tensor.j23.data());
    let mut u = vec![0.0; w * h];
    let mut v = vec![0.0; w * h];
    let mut u_bar = vec![0.0; w * h];
    let mut v_bar = vec![0.0; w * h];
    for _ in 0..iterations {
        neighbour_average(&u, w, h, &mut u_bar);
        neighbour_average(&v, w, h, &mut v_bar);
        for i in 0..w * h {
            let (a, b, c) = (j11[i] + a2, j12[i], j22[i] + a2);
            let ru = a2 * u_bar[i] - j13[i];
            let rv = a2 * v_bar[i] - j23[i];
            let det = a * c - b * b;
            u[i] = (c * ru - b * rv) / det;
            v[i] = (a * rv - b * ru) / det;
        }
    }
    FlowField::new(
        ScalarField::from_raw(w, h, u),
        ScalarField::from_raw(w, h, v),
    )
}
