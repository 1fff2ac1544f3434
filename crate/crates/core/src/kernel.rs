//! Tabulated deconvolution kernel
//! `H_m(t) = (sqrt(m)/2pi) int_{-pi}^{pi} e^{ivt} / q*(-vm) dv`,
//! so that `v_{phi_{m,j}}(x) = H_m(m x - j)`.
//!
//! The table holds `H_m` on the lattice `t = s + r/K`; each of the `K` shifts is
//! one Fourier-coefficient transform. Off-lattice values use 12-point Lagrange
//! interpolation, which is far below the quadrature error for a function whose
//! spectrum lives in `[-pi, pi]`.

use crate::error::{invalid, Error, Result};
use crate::fourier::{FourierPlan, QuadratureGrid};
use crate::noise::NoiseModel;
use num_complex::Complex64;

/// Lattice subdivisions per unit of `t`.
pub const SUBDIVISIONS: usize = 16;
const STENCIL: usize = 12;
const LEFT: i64 = 5;

#[derive(Debug, Clone)]
pub struct DeconvKernel {
    m: u32,
    half_span: i64,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Smallest `|q*|` tolerated on the integration range.
const CF_FLOOR_LN: f64 = -690.775_527_898_213_7; // ln(1e-300)

impl DeconvKernel {
    /// Table covering `|t| <= t_max`.
    pub fn build(noise: &NoiseModel, m: u32, t_max: f64, min_grid_points: usize) -> Result<Self> {
        if m == 0 || !(t_max >= 0.0) || !t_max.is_finite() {
            return invalid("kernel needs m >= 1 and a finite t_max");
        }
        let half_span = t_max.ceil() as i64 + 2;
        let grid = QuadratureGrid::for_resolution(m, t_max / m as f64, min_grid_points)?;
        let mf = m as f64;
        let nodes = grid.nodes();
        let mut inv = Vec::with_capacity(nodes.len());
        for &v in nodes {
            let u = -v * mf;
            if noise.ln_abs_cf(u) < CF_FLOOR_LN {
                return Err(Error::NoiseCfUnderflow(u));
            }
            inv.push(noise.inverse_cf(u) * mf.sqrt());
        }
        let plan = FourierPlan::new(&grid, -half_span, half_span)?;
        let k = SUBDIVISIONS;
        let len = (2 * half_span as usize + 1) * k;
        let mut re = vec![0.0; len];
        let mut im = vec![0.0; len];
        let mut samples = vec![Complex64::new(0.0, 0.0); nodes.len()];
        for r in 0..k {
            let shift = r as f64 / k as f64;
            for (i, &v) in nodes.iter().enumerate() {
                samples[i] = inv[i] * Complex64::from_polar(1.0, v * shift);
            }
            let c = plan.apply(&samples)?;
            let rows = c.len();
            for (row, val) in c.into_iter().enumerate() {
                // row <-> j = row - S, table integer part s = -j.
                let s_idx = rows - 1 - row;
                re[s_idx * k + r] = val.re;
                im[s_idx * k + r] = val.im;
            }
        }
        Ok(Self { m, half_span, re, im })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Largest `|t|` that can be interpolated.
    pub fn t_max(&self) -> f64 {
        (self.half_span - 1) as f64
    }

    /// `max |Im H| / (1 + max |Re H|)` over the table.
    pub fn imag_residue(&self) -> f64 {
        let mi = self.im.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mr = self.re.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        mi / (1.0 + mr)
    }

    fn stencil(&self, t: f64) -> (usize, [f64; STENCIL]) {
        let pos = (t + self.half_span as f64) * SUBDIVISIONS as f64;
        let i0 = pos.floor();
        let frac = pos - i0;
        ((i0 as i64 - LEFT) as usize, lagrange_weights(frac))
    }

    /// `H_m(t)`; `|t|` must not exceed [`Self::t_max`].
    pub fn eval(&self, t: f64) -> Complex64 {
        assert!(t.abs() <= self.t_max(), "kernel argument {t} outside table");
        let (base, w) = self.stencil(t);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, wa) in w.iter().enumerate() {
            acc += Complex64::new(self.re[base + a], self.im[base + a]) * wa;
        }
        acc
    }

    /// `v_{phi_{m,j}}(x)`.
    pub fn v_phi(&self, j: i64, x: f64) -> Complex64 {
        self.eval(self.m as f64 * x - j as f64)
    }

    /// Adds `v_{phi_{m,j}}(y)` for `j = j_lo..j_lo + re.len()` into `re` and `im`.
    pub fn add_row(&self, y: f64, j_lo: i64, re: &mut [f64], mut im: Option<&mut [f64]>) {
        let t0 = self.m as f64 * y - j_lo as f64;
        let t1 = t0 - (re.len() as f64 - 1.0);
        assert!(t0.abs() <= self.t_max() && t1.abs() <= self.t_max(), "kernel argument outside table");
        let (base, w) = self.stencil(t0);
        let k = SUBDIVISIONS;
        for (d, slot) in re.iter_mut().enumerate() {
            let b = base - d * k;
            let mut acc = 0.0;
            for a in 0..STENCIL {
                acc += w[a] * self.re[b + a];
            }
            *slot += acc;
            if let Some(im) = im.as_deref_mut() {
                let mut acc = 0.0;
                for a in 0..STENCIL {
                    acc += w[a] * self.im[b + a];
                }
                im[d] += acc;
            }
        }
    }
}

/// Lagrange weights on nodes `-5..=6` evaluated at `x` in `[0, 1)`.
fn lagrange_weights(x: f64) -> [f64; STENCIL] {
    let mut w = [0.0; STENCIL];
    for (a, wa) in w.iter_mut().enumerate() {
        let oa = a as f64 - LEFT as f64;
        let mut num = 1.0;
        let mut den = 1.0;
        for b in 0..STENCIL {
            if b != a {
                let ob = b as f64 - LEFT as f64;
                num *= x - ob;
                den *= oa - ob;
            }
        }
        *wa = num / den;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::sinc;

    #[test]
    fn identity_noise_kernel_is_the_sinc_basis() {
        let k = DeconvKernel::build(&NoiseModel::identity(), 3, 20.0, 4096).unwrap();
        for t in [-17.3, -2.5, 0.0, 0.123, 1.0, 9.99] {
            let v = k.eval(t);
            assert!((v.re - 3f64.sqrt() * sinc(t)).abs() < 1e-10, "t = {t}");
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn lagrange_weights_partition_unity() {
        let w = lagrange_weights(0.37);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(lagrange_weights(0.0)[LEFT as usize], 1.0);
    }
}
