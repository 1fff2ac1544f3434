//! Penalized projection estimator of the joint density `F` of consecutive
//! states `(X_i, X_{i+1})`.
//!
//! Because `V_{t (x) s}(x, y) = v_t(x) v_s(y)`, the coefficient matrix is
//! `A = U_x^T U_y / n` where row `i` of `U_x` holds `v_{phi_{m,j}}(x_i)` for all
//! `j` in the window.

use crate::error::{invalid, Error, Result};
use crate::estimator1d::{
    argmin_criterion, data_range, kernel_for, scan_delta_squared, FitOptions, ModelEntry, PenaltyConfig, Window,
    REALNESS_TOL,
};
use crate::fourier::basis_row;
use crate::noise::{penalty_exponents, NoiseModel};
use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEstimate2D {
    pub m: u32,
    /// Same window on both axes.
    pub window: Window,
    pub coeffs: Array2<f64>,
    pub contrast_value: f64,
    pub penalty_value: f64,
    pub n: usize,
}

impl ProjectionEstimate2D {
    pub fn norm_sq(&self) -> f64 {
        -self.contrast_value
    }

    pub fn criterion(&self) -> f64 {
        self.contrast_value + self.penalty_value
    }

    pub fn to_csv(&self, noise: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# m={}", self.m);
        let _ = writeln!(out, "# n={}", self.n);
        let _ = writeln!(out, "# noise={noise}");
        out.push_str("j,k,A_jk\n");
        for (a, j) in self.window.indices().enumerate() {
            for (b, k) in self.window.indices().enumerate() {
                let _ = writeln!(out, "{j},{k},{:.16e}", self.coeffs[[a, b]]);
            }
        }
        out
    }
}

/// `Gamma_n(F_m) = -sum_{j,k} A_jk^2`.
pub fn contrast_2d(coeffs: ArrayView2<f64>) -> f64 {
    -coeffs.iter().map(|a| a * a).sum::<f64>()
}

/// Rows `v_{phi_{m,j}}(y)` for each observation, after the kernel realness check.
fn kernel_rows(
    points: &[f64],
    m: u32,
    noise: &NoiseModel,
    window: Window,
    opts: &FitOptions,
) -> Result<Array2<f64>> {
    let range = data_range(points)?;
    let kernel = kernel_for(noise, m, range, window, opts)?;
    let r = kernel.imag_residue();
    if r > REALNESS_TOL {
        return Err(Error::Invariant(format!("imaginary residue {r:e} in deconvolution kernel (m = {m})")));
    }
    let mut u = Array2::zeros((points.len(), window.len()));
    for (mut row, &y) in u.rows_mut().into_iter().zip(points) {
        kernel.add_row(y, window.lo, row.as_slice_mut().expect("standard layout"), None);
    }
    Ok(u)
}

fn check_coeffs(a: &Array2<f64>, m: u32) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant(format!("non-finite joint coefficient (m = {m})")));
    }
    Ok(())
}

/// `A_jk = (1/n) sum_i v_{phi_{m,j}}(x_i) v_{phi_{m,k}}(y_i)` for explicit pairs.
pub fn coefficients_2d(
    xs: &[f64],
    ys: &[f64],
    m: u32,
    noise: &NoiseModel,
    window: Window,
    opts: &FitOptions,
) -> Result<Array2<f64>> {
    if xs.len() != ys.len() {
        return invalid("pair coordinates must have equal length");
    }
    let ux = kernel_rows(xs, m, noise, window, opts)?;
    let uy = kernel_rows(ys, m, noise, window, opts)?;
    let a = ux.t().dot(&uy) / xs.len() as f64;
    check_coeffs(&a, m)?;
    Ok(a)
}

/// Coefficients from the consecutive pairs `(Y_i, Y_{i+1})`, `i = 1..n`, of a series of length `n + 1`.
pub fn coefficients_2d_series(
    series: &[f64],
    m: u32,
    noise: &NoiseModel,
    window: Window,
    opts: &FitOptions,
) -> Result<Array2<f64>> {
    if series.len() < 2 {
        return invalid("need at least two observations to form a pair");
    }
    let n = series.len() - 1;
    let u = kernel_rows(series, m, noise, window, opts)?;
    let a = u.slice(s![0..n, ..]).t().dot(&u.slice(s![1..n + 1, ..])) / n as f64;
    check_coeffs(&a, m)?;
    Ok(a)
}

/// `{m >= 1 : Delta(m)^2 <= n}` (capped at `max_m`).
pub fn model_collection_2d(n: usize, noise: &NoiseModel, max_m: u32) -> Result<Vec<ModelEntry>> {
    if n < 2 {
        return invalid("model collection needs n >= 2");
    }
    let models = scan_delta_squared(noise, n, max_m)?;
    if models.is_empty() {
        return Err(Error::NoAdmissibleModel(n));
    }
    Ok(models)
}

/// `Pen(m) = kappa2 (pi m)^{rho2} Delta(m)^2 / n`.
pub fn penalty_2d(m: u32, noise: &NoiseModel, cfg: &PenaltyConfig, n: usize) -> Result<f64> {
    let (_, rho2) = penalty_exponents(noise.smoothness().s);
    Ok(cfg.kappa2 * (PI * m as f64).powf(rho2) * noise.delta(m)?.powi(2) / n as f64)
}

fn finish(
    m: u32,
    window: Window,
    coeffs: Array2<f64>,
    n: usize,
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
) -> Result<ProjectionEstimate2D> {
    let contrast_value = contrast_2d(coeffs.view());
    // ||F_m||^2 <= Delta(m)^2 for every coefficient matrix of this form.
    let bound = noise.delta(m)?.powi(2);
    if -contrast_value > bound * (1.0 + 1e-8) {
        return Err(Error::Invariant(format!(
            "joint coefficient norm {} exceeds Delta(m)^2 = {bound} (m = {m})",
            -contrast_value
        )));
    }
    Ok(ProjectionEstimate2D { m, window, coeffs, contrast_value, penalty_value: penalty_2d(m, noise, cfg, n)?, n })
}

/// Fit one model on consecutive pairs of `series`, square window over its range.
pub fn fit_2d(
    series: &[f64],
    m: u32,
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    opts: &FitOptions,
) -> Result<ProjectionEstimate2D> {
    let (lo, hi) = data_range(series)?;
    let window = Window::for_range(m, lo, hi)?;
    let a = coefficients_2d_series(series, m, noise, window, opts)?;
    finish(m, window, a, series.len() - 1, noise, cfg)
}

/// Fit one model on explicit pairs, square window over the pooled range.
pub fn fit_2d_pairs(
    xs: &[f64],
    ys: &[f64],
    m: u32,
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    opts: &FitOptions,
) -> Result<ProjectionEstimate2D> {
    let (lx, hx) = data_range(xs)?;
    let (ly, hy) = data_range(ys)?;
    let window = Window::for_range(m, lx.min(ly), hx.max(hy))?;
    let a = coefficients_2d(xs, ys, m, noise, window, opts)?;
    finish(m, window, a, xs.len(), noise, cfg)
}

#[derive(Debug, Clone)]
pub struct Selection2D {
    pub fits: Vec<ProjectionEstimate2D>,
    pub selected: usize,
}

impl Selection2D {
    pub fn estimate(&self) -> &ProjectionEstimate2D {
        &self.fits[self.selected]
    }

    pub fn into_estimate(mut self) -> ProjectionEstimate2D {
        self.fits.swap_remove(self.selected)
    }
}

/// `M_hat = argmin { Gamma_n(F_m) + Pen(m) }` over `{m : Delta(m)^2 <= n}`.
pub fn select_and_fit_2d(
    series: &[f64],
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    opts: &FitOptions,
) -> Result<Selection2D> {
    if series.len() < 3 {
        return invalid("need at least three observations");
    }
    let ms: Vec<u32> = model_collection_2d(series.len() - 1, noise, opts.max_m)?.iter().map(|e| e.m).collect();
    select_among_2d(series, &ms, noise, cfg, opts)
}

pub fn select_among_2d(
    series: &[f64],
    ms: &[u32],
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    opts: &FitOptions,
) -> Result<Selection2D> {
    if ms.is_empty() {
        return Err(Error::NoAdmissibleModel(series.len().saturating_sub(1)));
    }
    let fits: Vec<ProjectionEstimate2D> =
        ms.par_iter().map(|&m| fit_2d(series, m, noise, cfg, opts)).collect::<Result<_>>()?;
    let crit: Vec<(u32, f64)> = fits.iter().map(|f| (f.m, f.criterion())).collect();
    let selected = argmin_criterion(&crit).expect("non-empty");
    Ok(Selection2D { fits, selected })
}

/// Basis matrix with rows `phi_{m,j}(x)` over the window.
pub fn basis_matrix(m: u32, window: Window, xs: &[f64]) -> Array2<f64> {
    let mut b = Array2::zeros((xs.len(), window.len()));
    for (mut row, &x) in b.rows_mut().into_iter().zip(xs) {
        for (slot, v) in row.iter_mut().zip(basis_row(m, x, window.lo, window.hi)) {
            *slot = v;
        }
    }
    b
}

/// `F_hat(x, y)` on the tensor grid; entry `[a, b]` is at `(xs[a], ys[b])`.
pub fn evaluate_2d(est: &ProjectionEstimate2D, xs: &[f64], ys: &[f64]) -> Array2<f64> {
    let bx = basis_matrix(est.m, est.window, xs);
    let by = basis_matrix(est.m, est.window, ys);
    bx.dot(&est.coeffs).dot(&by.t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn contrast_examples() {
        assert_eq!(contrast_2d(array![[1.0, 2.0], [0.0, 1.0]].view()), -6.0);
        assert_eq!(contrast_2d(Array2::<f64>::zeros((3, 3)).view()), 0.0);
    }

    #[test]
    fn identity_collections() {
        let id = NoiseModel::identity();
        let ms = |n| model_collection_2d(n, &id, 32).unwrap().iter().map(|e| e.m).collect::<Vec<_>>();
        assert_eq!(ms(10), vec![1, 2, 3]);
        assert_eq!(ms(9), vec![1, 2, 3]);
    }
}
