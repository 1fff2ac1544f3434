//! Sinc basis, empirical characteristic functions and Fourier coefficients of
//! functions supported on `[-pi, pi]`.
//!
//! The coefficient transform `c_j = (1/2pi) int_{-pi}^{pi} g(v) e^{-ijv} dv` is
//! computed on a uniform grid with composite panels: on each panel `g` is
//! replaced by its Lagrange interpolant and the product with `e^{-ijv}` is
//! integrated exactly. The panel sums for all `j` come from FFTs of the
//! decimated samples.

use crate::error::{invalid, Error, Result};
use crate::special::gauss_legendre;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

/// `sin(pi z)`, with the argument reduced exactly before multiplying by pi.
pub fn sin_pi(z: f64) -> f64 {
    let r = z - 2.0 * (z / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    // Fold into [-1/2, 1/2]; 1 - |r| is exact there.
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// Normalized sinc `sin(pi z) / (pi z)`.
pub fn sinc(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        sin_pi(z) / (PI * z)
    }
}

/// Index `(m, j)` of the basis function `phi_{m,j}(x) = sqrt(m) sinc(m x - j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SincBasisIndex {
    pub m: u32,
    pub j: i64,
}

impl SincBasisIndex {
    pub fn new(m: u32, j: i64) -> Result<Self> {
        if m == 0 {
            return invalid("basis resolution m must be positive");
        }
        Ok(Self { m, j })
    }
}

pub fn eval_sinc_basis(idx: SincBasisIndex, x: f64) -> f64 {
    let m = idx.m as f64;
    m.sqrt() * sinc(m * x - idx.j as f64)
}

/// `phi_{m,j}(x)` for every `j` in `j_lo..=j_hi`.
pub fn basis_row(m: u32, x: f64, j_lo: i64, j_hi: i64) -> Vec<f64> {
    let mf = m as f64;
    let z = mf * x;
    let sz = sin_pi(z);
    let rm = mf.sqrt();
    (j_lo..=j_hi)
        .map(|j| {
            let d = z - j as f64;
            if d == 0.0 {
                rm
            } else {
                // sin(pi (z - j)) = (-1)^j sin(pi z)
                let s = if j.rem_euclid(2) == 0 { sz } else { -sz };
                rm * s / (PI * d)
            }
        })
        .collect()
}

/// Decomposition of `sum_j phi_{m,j}(x)^2` into a truncated part and its tail.
#[derive(Debug, Clone, Copy)]
pub struct BasisSquareSum {
    /// Sum over `|m x - j| <= half_width`.
    pub partial: f64,
    /// Exact value of the omitted terms (trigamma closed form).
    pub tail: f64,
    /// Elementary upper bound on the omitted terms.
    pub tail_bound: f64,
}

impl BasisSquareSum {
    pub fn total(&self) -> f64 {
        self.partial + self.tail
    }
}

pub fn basis_square_sum(m: u32, x: f64, half_width: f64) -> Result<BasisSquareSum> {
    if m == 0 || !(half_width >= 2.0) {
        return invalid("need m >= 1 and half_width >= 2");
    }
    let mf = m as f64;
    let z = mf * x;
    let j_lo = (z - half_width).ceil() as i64;
    let j_hi = (z + half_width).floor() as i64;
    let partial: f64 = basis_row(m, x, j_lo, j_hi).iter().map(|v| v * v).sum();
    let s2 = sin_pi(z).powi(2) / (PI * PI);
    let dr = j_hi as f64 - z;
    let dl = z - j_lo as f64;
    let tail = mf * s2 * (crate::special::trigamma(1.0 + dr) + crate::special::trigamma(1.0 + dl));
    let tail_bound = mf / (PI * PI) * (1.0 / dr + 1.0 / dl);
    Ok(BasisSquareSum { partial, tail, tail_bound })
}

/// Empirical characteristic function `u -> (1/n) sum_i e^{i u y_i}`.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalCf<'a> {
    sample: &'a [f64],
}

impl<'a> EmpiricalCf<'a> {
    pub fn new(sample: &'a [f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self { sample })
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        let (mut re, mut im) = (0.0, 0.0);
        for &y in self.sample {
            let (s, c) = (u * y).sin_cos();
            re += c;
            im += s;
        }
        let n = self.sample.len() as f64;
        Complex64::new(re / n, im / n)
    }
}

pub fn empirical_cf_1d(sample: &[f64], u: f64) -> Result<Complex64> {
    Ok(EmpiricalCf::new(sample)?.eval(u))
}

/// `(u, v) -> (1/n) sum_i e^{i (u x_i + v y_i)}` for paired samples.
pub fn empirical_cf_2d(xs: &[f64], ys: &[f64], u: f64, v: f64) -> Result<Complex64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if xs.len() != ys.len() {
        return invalid("paired samples must have equal length");
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (s, c) = (u * x + v * y).sin_cos();
        re += c;
        im += s;
    }
    let n = xs.len() as f64;
    Ok(Complex64::new(re / n, im / n))
}

/// Uniform grid on `[-pi, pi]` with `n_points` sub-intervals grouped into
/// panels of `degree` intervals.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    n_points: usize,
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub const DEFAULT_GRID_POINTS: usize = 1 << 12;

impl QuadratureGrid {
    /// `n_points` is the number of sub-intervals; there are `n_points + 1` nodes.
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return invalid("quadrature grid needs n_points >= 2");
        }
        let degree = [8, 6, 4, 3, 2, 1].into_iter().find(|d| n_points % d == 0).unwrap();
        let h = 2.0 * PI / n_points as f64;
        let nodes: Vec<f64> = (0..=n_points).map(|k| -PI + k as f64 * h).collect();
        let m0 = panel_moments(degree, 0.0);
        let mut weights = vec![0.0; n_points + 1];
        for panel in 0..n_points / degree {
            for (q, mq) in m0.iter().enumerate() {
                weights[panel * degree + q] += h * mq.re;
            }
        }
        Ok(Self { n_points, degree, nodes, weights })
    }

    /// Smallest power of two, at least `min_points`, resolving the data scale
    /// `m (max|y| + 1)`.
    pub fn for_resolution(m: u32, max_abs_y: f64, min_points: usize) -> Result<Self> {
        let need = 8.0 * m as f64 * (max_abs_y + 1.0) / PI;
        let mut n = min_points.max(2).next_power_of_two();
        while (n as f64) < need {
            n *= 2;
        }
        Self::new(n)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Plain quadrature `int_{-pi}^{pi} g`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// `int_0^p l_q(s) e^{-i theta s} ds` for the Lagrange basis on nodes `0..=p`.
fn panel_moments(p: usize, theta: f64) -> Vec<Complex64> {
    let n_gl = 16 + p + (theta.abs() * p as f64).ceil() as usize;
    panel_moments_with(p, theta, &gauss_legendre(n_gl))
}

fn panel_moments_with(p: usize, theta: f64, rule: &(Vec<f64>, Vec<f64>)) -> Vec<Complex64> {
    let (x, w) = rule;
    let half = p as f64 / 2.0;
    let mut out = vec![Complex64::new(0.0, 0.0); p + 1];
    let denom: Vec<f64> = (0..=p)
        .map(|q| (0..=p).filter(|&r| r != q).map(|r| q as f64 - r as f64).product())
        .collect();
    for (xi, wi) in x.iter().zip(w) {
        let s = half * (xi + 1.0);
        let e = Complex64::from_polar(wi * half, -theta * s);
        for q in 0..=p {
            let num: f64 = (0..=p).filter(|&r| r != q).map(|r| s - r as f64).product();
            out[q] += e * (num / denom[q]);
        }
    }
    out
}

/// Precomputed transform for a fixed grid and output range `j_lo..=j_hi`.
pub struct FourierPlan {
    grid: QuadratureGrid,
    j_lo: i64,
    j_hi: i64,
    /// `(h / 2pi) M_q(j h)` laid out as `[j][q]`.
    factors: Vec<Complex64>,
    fft: Arc<dyn rustfft::Fft<f64>>,
}

impl FourierPlan {
    pub fn new(grid: &QuadratureGrid, j_lo: i64, j_hi: i64) -> Result<Self> {
        if j_hi < j_lo {
            return invalid("empty coefficient range");
        }
        let p = grid.degree;
        let h = grid.spacing();
        let mut factors = Vec::with_capacity((j_hi - j_lo + 1) as usize * (p + 1));
        let mut rules = std::collections::HashMap::new();
        for j in j_lo..=j_hi {
            let theta = j as f64 * h;
            let n_gl = 16 + p + (theta.abs() * p as f64).ceil() as usize;
            let rule = rules.entry(n_gl).or_insert_with(|| gauss_legendre(n_gl));
            for mq in panel_moments_with(p, theta, rule) {
                factors.push(mq * (h / (2.0 * PI)));
            }
        }
        let fft = FftPlanner::new().plan_fft_forward(grid.n_points / p);
        Ok(Self { grid: grid.clone(), j_lo, j_hi, factors, fft })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn range(&self) -> (i64, i64) {
        (self.j_lo, self.j_hi)
    }

    /// Coefficients from samples `g(v_k)`, `k = 0..=n_points`, via FFT.
    pub fn apply(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        let g = &self.grid;
        check_samples(g, samples)?;
        let p = g.degree;
        let l = g.n_points / p;
        let mut spectra = Vec::with_capacity(p + 1);
        for q in 0..=p {
            let mut buf: Vec<Complex64> = (0..l).map(|panel| samples[panel * p + q]).collect();
            self.fft.process(&mut buf);
            spectra.push(buf);
        }
        let mut out = Vec::with_capacity((self.j_hi - self.j_lo + 1) as usize);
        for (row, j) in (self.j_lo..=self.j_hi).enumerate() {
            let idx = j.rem_euclid(l as i64) as usize;
            let f = &self.factors[row * (p + 1)..(row + 1) * (p + 1)];
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..=p {
                acc += f[q] * spectra[q][idx];
            }
            out.push(if j.rem_euclid(2) == 0 { acc } else { -acc });
        }
        Ok(out)
    }

    /// Same rule evaluated by direct summation for each `j`.
    pub fn apply_naive(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        let g = &self.grid;
        check_samples(g, samples)?;
        let p = g.degree;
        let h = g.spacing();
        let mut out = Vec::new();
        for (row, j) in (self.j_lo..=self.j_hi).enumerate() {
            let jf = j as f64;
            let f = &self.factors[row * (p + 1)..(row + 1) * (p + 1)];
            let mut acc = Complex64::new(0.0, 0.0);
            for panel in 0..g.n_points / p {
                for q in 0..=p {
                    let k = panel * p + q;
                    let phase = Complex64::from_polar(1.0, -jf * g.nodes[k] + jf * h * q as f64);
                    acc += f[q] * phase * samples[k];
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

fn check_samples(g: &QuadratureGrid, samples: &[Complex64]) -> Result<()> {
    if samples.len() != g.n_points + 1 {
        return invalid(format!("expected {} samples, got {}", g.n_points + 1, samples.len()));
    }
    if let Some(k) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(Error::NonFiniteIntegrand(g.nodes[k]));
    }
    Ok(())
}

/// `c_j = (1/2pi) int_{-pi}^{pi} g(v) e^{-ijv} dv` for `j` in `j_lo..=j_hi`.
pub fn fourier_coeff_grid<G: Fn(f64) -> Complex64>(
    g: G,
    grid: &QuadratureGrid,
    j_lo: i64,
    j_hi: i64,
) -> Result<Vec<Complex64>> {
    let samples: Vec<Complex64> = grid.nodes.iter().map(|&v| g(v)).collect();
    FourierPlan::new(grid, j_lo, j_hi)?.apply(&samples)
}
