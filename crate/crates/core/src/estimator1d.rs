//! Penalized projection estimator of the stationary density `f`.

use crate::error::{invalid, Error, Result};
use crate::fourier::{basis_row, DEFAULT_GRID_POINTS};
use crate::kernel::DeconvKernel;
use crate::noise::{penalty_exponents, NoiseModel};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Penalty constants: `kappa1` for the density contrast, `kappa2` for the
/// joint-density contrast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl PenaltyConfig {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        if !(kappa1 > 0.0 && kappa2 > 0.0 && kappa1.is_finite() && kappa2.is_finite()) {
            return invalid("penalty constants must be positive and finite");
        }
        Ok(Self { kappa1, kappa2 })
    }
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { kappa1: 4.0, kappa2: 4.0 }
    }
}

/// Numerical knobs shared by all fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Minimum number of quadrature sub-intervals on `[-pi, pi]`.
    pub grid_points: usize,
    /// Largest resolution ever considered, whatever the model collection allows.
    pub max_m: u32,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { grid_points: DEFAULT_GRID_POINTS, max_m: 32 }
    }
}

/// Inclusive integer range of basis translates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return invalid(format!("empty window [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi })
    }

    /// `[ceil(m (min - 1)), floor(m (max + 1))]`.
    pub fn for_range(m: u32, min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max < min {
            return invalid("window needs a finite, ordered data range");
        }
        let mf = m as f64;
        Self::new((mf * (min - 1.0)).ceil() as i64, (mf * (max + 1.0)).floor() as i64)
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

pub(crate) fn data_range(data: &[f64]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &y in data {
        if !y.is_finite() {
            return invalid("observations must be finite");
        }
        lo = lo.min(y);
        hi = hi.max(y);
    }
    Ok((lo, hi))
}

/// Kernel table wide enough for `m y - j` with `y` in `[min, max]`, `j` in `window`.
pub(crate) fn kernel_for(
    noise: &NoiseModel,
    m: u32,
    (min, max): (f64, f64),
    window: Window,
    opts: &FitOptions,
) -> Result<DeconvKernel> {
    let mf = m as f64;
    let t_max = (mf * min - window.hi as f64).abs().max((mf * max - window.lo as f64).abs());
    DeconvKernel::build(noise, m, t_max, opts.grid_points)
}

/// Neumaier-compensated running sums, one per slot.
pub(crate) struct CompensatedSums {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl CompensatedSums {
    pub(crate) fn new(len: usize) -> Self {
        Self { sum: vec![0.0; len], comp: vec![0.0; len] }
    }

    pub(crate) fn add(&mut self, values: &[f64]) {
        for ((s, c), &v) in self.sum.iter_mut().zip(&mut self.comp).zip(values) {
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
    }

    pub(crate) fn means(&self, n: usize) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| (s + c) / n as f64).collect()
    }
}

/// Real and imaginary parts of `a_j = (1/n) sum_i v_{phi_{m,j}}(Y_i)` over `window`.
pub fn coefficients_1d_complex(
    data: &[f64],
    m: u32,
    noise: &NoiseModel,
    window: Window,
    opts: &FitOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let range = data_range(data)?;
    let kernel = kernel_for(noise, m, range, window, opts)?;
    let len = window.len();
    let mut re_sum = CompensatedSums::new(len);
    let mut im_sum = CompensatedSums::new(len);
    let mut re = vec![0.0; len];
    let mut im = vec![0.0; len];
    for &y in data {
        re.iter_mut().for_each(|v| *v = 0.0);
        im.iter_mut().for_each(|v| *v = 0.0);
        kernel.add_row(y, window.lo, &mut re, Some(&mut im));
        re_sum.add(&re);
        im_sum.add(&im);
    }
    Ok((re_sum.means(data.len()), im_sum.means(data.len())))
}

/// Relative size of an imaginary residue, `max|im| / (1 + max|re|)`.
pub fn imag_residue(re: &[f64], im: &[f64]) -> f64 {
    let mr = re.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mi = im.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    mi / (1.0 + mr)
}

pub const REALNESS_TOL: f64 = 1e-8;

/// Deconvolved coefficients `a_j`, after checking that the imaginary residue is
/// at rounding level.
pub fn coefficients_1d(
    data: &[f64],
    m: u32,
    noise: &NoiseModel,
    window: Window,
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let (re, im) = coefficients_1d_complex(data, m, noise, window, opts)?;
    let r = imag_residue(&re, &im);
    if r > REALNESS_TOL {
        return Err(Error::Invariant(format!("imaginary residue {r:e} in density coefficients (m = {m})")));
    }
    if re.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant(format!("non-finite density coefficient (m = {m})")));
    }
    Ok(re)
}

/// `gamma_n(f_m) = -sum_j a_j^2`.
pub fn contrast_1d(coeffs: &[f64]) -> f64 {
    -coeffs.iter().map(|a| a * a).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEstimate1D {
    pub m: u32,
    pub window: Window,
    pub coeffs: Vec<f64>,
    pub contrast_value: f64,
    pub penalty_value: f64,
    pub n: usize,
}

impl ProjectionEstimate1D {
    /// `||f_m||^2 = sum_j a_j^2` (orthonormal basis).
    pub fn norm_sq(&self) -> f64 {
        -self.contrast_value
    }

    pub fn criterion(&self) -> f64 {
        self.contrast_value + self.penalty_value
    }

    /// `a_j` for `j` outside the window is zero.
    pub fn coeff(&self, j: i64) -> f64 {
        if j < self.window.lo || j > self.window.hi {
            0.0
        } else {
            self.coeffs[(j - self.window.lo) as usize]
        }
    }

    /// CSV with `#` header lines carrying `m`, `n` and the noise kind.
    pub fn to_csv(&self, noise: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# m={}", self.m);
        let _ = writeln!(out, "# n={}", self.n);
        let _ = writeln!(out, "# noise={noise}");
        out.push_str("j,a_j\n");
        for (j, a) in self.window.indices().zip(&self.coeffs) {
            let _ = writeln!(out, "{j},{a:.16e}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelEntry {
    pub m: u32,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCollection1D {
    pub n: usize,
    pub models: Vec<ModelEntry>,
}

impl ModelCollection1D {
    pub fn ms(&self) -> Vec<u32> {
        self.models.iter().map(|e| e.m).collect()
    }
}

/// `Delta(m)` for increasing `m` while it stays `<= bound` (and `m <= max_m`).
fn scan_delta(noise: &NoiseModel, bound: f64, max_m: u32, square: bool) -> Result<Vec<ModelEntry>> {
    let mut out = Vec::new();
    for m in 1..=max_m {
        let delta = match noise.delta(m) {
            Ok(v) => v,
            Err(Error::DeltaOverflow { .. }) => break,
            Err(e) => return Err(e),
        };
        let lhs = if square { delta * delta } else { delta };
        if lhs > bound {
            break;
        }
        out.push(ModelEntry { m, delta });
    }
    Ok(out)
}

/// `{m >= 1 : Delta(m) <= n}`, optionally with the quotient-estimator
/// restriction `m >= ln ln n` and `m Delta(m) <= n / (ln n)^2`.
pub fn model_collection_1d(n: usize, noise: &NoiseModel, restricted: bool, max_m: u32) -> Result<ModelCollection1D> {
    if n < 2 {
        return invalid("model collection needs n >= 2");
    }
    let nf = n as f64;
    if restricted && n < 16 {
        return invalid(format!("restricted model set needs n >= 16, got {n}"));
    }
    let mut models = scan_delta(noise, nf, max_m, false)?;
    if models.is_empty() {
        return Err(Error::NoAdmissibleModel(n));
    }
    if restricted {
        let lo = nf.ln().ln();
        let cap = nf / nf.ln().powi(2);
        let all = models.clone();
        models.retain(|e| e.m as f64 >= lo && e.m as f64 * e.delta <= cap);
        if models.is_empty() {
            let best = all.iter().filter(|e| e.m as f64 >= lo).map(|e| e.m as f64 * e.delta).fold(f64::INFINITY, f64::min);
            let reason = if all.iter().all(|e| (e.m as f64) < lo) {
                format!("no m in M_n reaches ln ln n = {lo:.4}")
            } else {
                format!("smallest m*Delta(m) with m >= {lo:.4} is {best:.4e} > n/(ln n)^2 = {cap:.4}")
            };
            return Err(Error::NoAdmissibleRestrictedModel { n, reason });
        }
    }
    Ok(ModelCollection1D { n, models })
}

/// All `m <= max_m` with `Delta(m)^2 <= n`.
pub(crate) fn scan_delta_squared(noise: &NoiseModel, n: usize, max_m: u32) -> Result<Vec<ModelEntry>> {
    scan_delta(noise, n as f64, max_m, true)
}

/// `pen(m) = kappa1 (pi m)^{rho1} Delta(m) / n`.
pub fn penalty_1d(m: u32, noise: &NoiseModel, cfg: &PenaltyConfig, n: usize) -> Result<f64> {
    let (rho1, _) = penalty_exponents(noise.smoothness().s);
    Ok(cfg.kappa1 * (PI * m as f64).powf(rho1) * noise.delta(m)? / n as f64)
}

/// Fit one model on the data-driven window.
pub fn fit_1d(
    data: &[f64],
    m: u32,
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    opts: &FitOptions,
) -> Result<ProjectionEstimate1D> {
    let (lo, hi) = data_range(data)?;
    let window = Window::for_range(m, lo, hi)?;
    let coeffs = coefficients_1d(data, m, noise, window, opts)?;
    Ok(ProjectionEstimate1D {
        m,
        window,
        contrast_value: contrast_1d(&coeffs),
        penalty_value: penalty_1d(m, noise, cfg, data.len())?,
        coeffs,
        n: data.len(),
    })
}

/// Fit every model of `ms` (in parallel, results in the order of `ms`).
pub fn fit_models_1d(
    data: &[f64],
    ms: &[u32],
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    opts: &FitOptions,
) -> Result<Vec<ProjectionEstimate1D>> {
    ms.par_iter().map(|&m| fit_1d(data, m, noise, cfg, opts)).collect()
}

/// Index of the smallest criterion; ties go to the smaller `m`.
pub fn argmin_criterion(candidates: &[(u32, f64)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(m, c)) in candidates.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let (bm, bc) = candidates[b];
                if c < bc || (c == bc && m < bm) { Some(i) } else { Some(b) }
            }
        };
    }
    best
}

/// Fits over the collection and the penalized choice among them.
#[derive(Debug, Clone)]
pub struct Selection1D {
    pub fits: Vec<ProjectionEstimate1D>,
    pub selected: usize,
}

impl Selection1D {
    pub fn estimate(&self) -> &ProjectionEstimate1D {
        &self.fits[self.selected]
    }

    pub fn into_estimate(mut self) -> ProjectionEstimate1D {
        self.fits.swap_remove(self.selected)
    }
}

/// `m_hat = argmin { gamma_n(f_m) + pen(m) }` over the (optionally restricted) collection.
pub fn select_and_fit_1d(
    data: &[f64],
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    restricted: bool,
    opts: &FitOptions,
) -> Result<Selection1D> {
    let coll = model_collection_1d(data.len(), noise, restricted, opts.max_m)?;
    select_among_1d(data, &coll.ms(), noise, cfg, opts)
}

/// Penalized choice among an explicit list of resolutions.
pub fn select_among_1d(
    data: &[f64],
    ms: &[u32],
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    opts: &FitOptions,
) -> Result<Selection1D> {
    if ms.is_empty() {
        return Err(Error::NoAdmissibleModel(data.len()));
    }
    let fits = fit_models_1d(data, ms, noise, cfg, opts)?;
    let crit: Vec<(u32, f64)> = fits.iter().map(|f| (f.m, f.criterion())).collect();
    let selected = argmin_criterion(&crit).expect("non-empty");
    Ok(Selection1D { fits, selected })
}

/// `sum_j a_j phi_{m,j}(x)` at each point.
pub fn evaluate_1d(est: &ProjectionEstimate1D, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            basis_row(est.m, x, est.window.lo, est.window.hi)
                .iter()
                .zip(&est.coeffs)
                .map(|(p, a)| p * a)
                .sum()
        })
        .collect()
}

/// `max(f_hat, 0)`, for display only.
pub fn evaluate_1d_clipped(est: &ProjectionEstimate1D, xs: &[f64]) -> Vec<f64> {
    evaluate_1d(est, xs).into_iter().map(|v| v.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contrast_examples() {
        assert_eq!(contrast_1d(&[1.0, 2.0]), -5.0);
        assert_eq!(contrast_1d(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn argmin_prefers_smaller_criterion_then_smaller_m() {
        assert_eq!(argmin_criterion(&[(1, -1.0 + 0.1), (2, -0.5 + 0.01)]), Some(0));
        assert_eq!(argmin_criterion(&[(3, -1.0), (2, -1.0)]), Some(1));
        assert_eq!(argmin_criterion(&[(4, 0.5)]), Some(0));
        assert_eq!(argmin_criterion(&[]), None);
    }

    #[test]
    fn window_rule() {
        let w = Window::for_range(2, -1.3, 0.4).unwrap();
        assert_eq!((w.lo, w.hi), (-4, 2));
    }

    #[test]
    fn penalty_config_validates() {
        assert!(PenaltyConfig::new(0.0, 1.0).is_err());
        assert!(PenaltyConfig::new(1.0, 1.0).is_ok());
    }
}
