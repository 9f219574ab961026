#![allow(dead_code)]

use skyflow::synthetic::XorShift64Star;
use skyflow::ScalarField;

/// Smooth random texture: a sum of plane waves with wavelengths between
/// `min_wavelength` and four times that, evaluated in closed form so that
/// shifted copies are exact.
pub struct Texture {
    waves: Vec<(f64, f64, f64, f64)>,
}

impl Texture {
    pub fn new(seed: u64, n_waves: usize, min_wavelength: f64, amplitude: f64) -> Self {
        let mut rng = XorShift64Star::new(seed);
        let waves = (0..n_waves)
            .map(|_| {
                let lambda = rng.uniform(min_wavelength, 4.0 * min_wavelength);
                let theta = rng.uniform(0.0, std::f64::consts::PI);
                let k = std::f64::consts::TAU / lambda;
                let a = amplitude / n_waves as f64 * rng.uniform(0.5, 1.5);
                (
                    k * theta.cos(),
                    k * theta.sin(),
                    rng.uniform(0.0, std::f64::consts::TAU),
                    a,
                )
            })
            .collect();
        Self { waves }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.waves
            .iter()
            .map(|&(kx, ky, phase, a)| a * (kx * x + ky * y + phase).sin())
            .sum()
    }

    /// The texture displaced by `(dx, dy)`: content at `p` moves to `p + d`.
    pub fn render(&self, w: usize, h: usize, dx: f64, dy: f64) -> ScalarField {
        ScalarField::from_fn(w, h, |x, y| self.eval(x as f64 - dx, y as f64 - dy))
    }
}

/// Isotropic Gaussian bump of the given amplitude, centred at `(cx, cy)`.
pub fn blob(w: usize, h: usize, cx: f64, cy: f64, sigma: f64, amplitude: f64) -> ScalarField {
    ScalarField::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        amplitude * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
    })
}

/// Mean of `f` over pixels where `support` holds.
pub fn masked_mean(f: &ScalarField, support: impl Fn(usize, usize) -> bool) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for y in 0..f.height() {
        for x in 0..f.width() {
            if support(x, y) {
                s += f.get(x, y);
                n += 1;
            }
        }
    }
    s / n as f64
}

pub fn interior(w: usize, h: usize, margin: usize) -> impl Fn(usize, usize) -> bool {
    move |x, y| x >= margin && y >= margin && x + margin < w && y + margin < h
}
