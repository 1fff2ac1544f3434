//! Observation noise distributions: characteristic functions, smoothness
//! constants, the variance functionals `Delta(m)` and `Delta_2(m)`, and samplers.

use crate::error::{invalid, Error, Result};
use crate::special::{integrate, ln_gamma_complex};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

/// Largest finite value of `ln Delta` we accept.
const LOG_MAX: f64 = 709.0;

/// Constants of the two-sided bound
/// `k0 (u^2+1)^{-gamma/2} e^{-b|u|^s} <= |q*(u)| <= k1 (u^2+1)^{-gamma/2} e^{-b|u|^s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSmoothness {
    pub gamma: f64,
    pub s: f64,
    pub b: f64,
    pub k0: f64,
    pub k1: f64,
}

impl NoiseSmoothness {
    pub fn new(gamma: f64, s: f64, b: f64, k0: f64, k1: f64) -> Result<Self> {
        let ok = gamma >= 0.0 && s >= 0.0 && b >= 0.0 && k0 > 0.0 && k1 >= k0;
        if !ok || ![gamma, s, b, k0, k1].iter().all(|v| v.is_finite()) {
            return invalid("noise smoothness needs gamma, s, b >= 0 and 0 < k0 <= k1");
        }
        if s == 0.0 && b != 0.0 {
            return invalid("b must be 0 when s = 0");
        }
        Ok(Self { gamma, s, b, k0, k1 })
    }

    /// `ln` of the envelope shape `(u^2+1)^{-gamma/2} e^{-b|u|^s}`.
    pub fn log_shape(&self, u: f64) -> f64 {
        let exp_part = if self.b == 0.0 { 0.0 } else { self.b * u.abs().powf(self.s) };
        -0.5 * self.gamma * (u * u + 1.0).ln() - exp_part
    }
}

/// Penalty exponents `(rho1, rho2)` for the density and transition contrasts.
pub fn penalty_exponents(s: f64) -> (f64, f64) {
    let slack = (1.0 - s).max(0.0);
    ((s - slack / 2.0).max(0.0), (s - slack).max(0.0))
}

/// Tabulated characteristic function on `u >= 0`, extended by Hermitian symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct CfTable {
    u: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl CfTable {
    pub fn new(u: Vec<f64>, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if u.len() < 2 || u.len() != re.len() || u.len() != im.len() {
            return invalid("cf table needs at least two rows of (u, re, im)");
        }
        if u[0] != 0.0 || u.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("cf table must start at u = 0 with strictly increasing u");
        }
        if (re[0] - 1.0).abs() > 1e-9 || im[0].abs() > 1e-9 {
            return invalid("cf table must equal 1 at u = 0");
        }
        if re.iter().chain(&im).any(|v| !v.is_finite()) {
            return invalid("cf table values must be finite");
        }
        Ok(Self { u, re, im })
    }

    /// Parse `u,re,im` rows; a non-numeric first row is treated as a header.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (mut u, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 3 => {
                    u.push(v[0]);
                    re.push(v[1]);
                    im.push(v[2]);
                }
                None if u.is_empty() && lineno == 0 => continue,
                _ => return invalid(format!("cf table line {}: expected u,re,im", lineno + 1)),
            }
        }
        Self::new(u, re, im)
    }

    pub fn u_max(&self) -> f64 {
        *self.u.last().unwrap()
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        let a = u.abs();
        if a > self.u_max() {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.u.partition_point(|&x| x <= a).clamp(1, self.u.len() - 1);
        let t = (a - self.u[k - 1]) / (self.u[k] - self.u[k - 1]);
        let re = self.re[k - 1] + t * (self.re[k] - self.re[k - 1]);
        let im = self.im[k - 1] + t * (self.im[k] - self.im[k - 1]);
        Complex64::new(re, if u < 0.0 { -im } else { im })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    Identity,
    /// Standard Laplace, `q*(u) = 1 / (1 + u^2)`.
    Laplace,
    /// Centered normal with standard deviation `tau`.
    Gaussian { tau: f64 },
    /// `ln(eta^2)` with `eta` standard normal.
    LogChiSquare,
    UserTable(Arc<CfTable>),
}

#[derive(Debug, Default)]
struct DeltaCache {
    delta: BTreeMap<u32, f64>,
    delta2: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone)]
pub struct NoiseModel {
    kind: NoiseKind,
    smoothness: NoiseSmoothness,
    cache: Arc<RwLock<DeltaCache>>,
}

impl PartialEq for NoiseModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.smoothness == other.smoothness
    }
}

impl NoiseModel {
    fn from_parts(kind: NoiseKind, smoothness: NoiseSmoothness) -> Self {
        Self { kind, smoothness, cache: Arc::default() }
    }

    /// No noise: `q* = 1`.
    pub fn identity() -> Self {
        Self::from_parts(NoiseKind::Identity, NoiseSmoothness::new(0.0, 0.0, 0.0, 1.0, 1.0).unwrap())
    }

    pub fn laplace() -> Self {
        Self::from_parts(NoiseKind::Laplace, NoiseSmoothness::new(2.0, 0.0, 0.0, 1.0, 1.0).unwrap())
    }

    pub fn gaussian(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid("gaussian noise needs tau > 0");
        }
        Ok(Self::from_parts(
            NoiseKind::Gaussian { tau },
            NoiseSmoothness::new(0.0, 2.0, tau * tau / 2.0, 1.0, 1.0)?,
        ))
    }

    pub fn log_chi_square() -> Self {
        Self::from_parts(
            NoiseKind::LogChiSquare,
            NoiseSmoothness::new(0.0, 1.0, PI / 2.0, 1.0, 2f64.sqrt()).unwrap(),
        )
    }

    /// Tabulated noise; the smoothness constants are supplied by the caller.
    pub fn user_table(table: CfTable, smoothness: NoiseSmoothness) -> Self {
        Self::from_parts(NoiseKind::UserTable(Arc::new(table)), smoothness)
    }

    /// Same law with different declared smoothness constants (for envelope diagnostics).
    pub fn with_smoothness(&self, smoothness: NoiseSmoothness) -> Self {
        Self::from_parts(self.kind.clone(), smoothness)
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn smoothness(&self) -> NoiseSmoothness {
        self.smoothness
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            NoiseKind::Identity => "identity",
            NoiseKind::Laplace => "laplace",
            NoiseKind::Gaussian { .. } => "gaussian",
            NoiseKind::LogChiSquare => "log_chisq",
            NoiseKind::UserTable(_) => "user_table",
        }
    }

    /// Short description including parameters, for report headers.
    pub fn describe(&self) -> String {
        match self.kind {
            NoiseKind::Gaussian { tau } => format!("gaussian(tau={tau})"),
            _ => self.name().to_string(),
        }
    }

    /// `q*(u) = E e^{-i u eps}` (transforms use the kernel `e^{-ixu}`
    /// throughout the crate).
    pub fn cf(&self, u: f64) -> Complex64 {
        match &self.kind {
            NoiseKind::Identity => Complex64::new(1.0, 0.0),
            NoiseKind::Laplace => Complex64::new(1.0 / (1.0 + u * u), 0.0),
            NoiseKind::Gaussian { tau } => Complex64::new((-0.5 * tau * tau * u * u).exp(), 0.0),
            NoiseKind::LogChiSquare => log_chi_square_log_cf(u).exp(),
            NoiseKind::UserTable(t) => t.eval(u),
        }
    }

    /// `ln |q*(u)|`, accurate where `q*` itself underflows.
    pub fn ln_abs_cf(&self, u: f64) -> f64 {
        match &self.kind {
            NoiseKind::Identity => 0.0,
            NoiseKind::Laplace => -(u * u).ln_1p(),
            NoiseKind::Gaussian { tau } => -0.5 * tau * tau * u * u,
            NoiseKind::LogChiSquare => log_chi_square_log_cf(u).re,
            NoiseKind::UserTable(t) => t.eval(u).norm().ln(),
        }
    }

    /// `1 / q*(u)` computed in log space, so that it stays finite wherever
    /// its modulus is representable.
    pub fn inverse_cf(&self, u: f64) -> Complex64 {
        match &self.kind {
            NoiseKind::Identity => Complex64::new(1.0, 0.0),
            NoiseKind::Laplace => Complex64::new(1.0 + u * u, 0.0),
            NoiseKind::Gaussian { tau } => Complex64::new((0.5 * tau * tau * u * u).exp(), 0.0),
            NoiseKind::LogChiSquare => (-log_chi_square_log_cf(u)).exp(),
            NoiseKind::UserTable(t) => t.eval(u).inv(),
        }
    }

    pub fn has_sampler(&self) -> bool {
        !matches!(self.kind, NoiseKind::UserTable(_))
    }

    /// One draw of the noise; `None` for tabulated noise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        Some(match self.kind {
            NoiseKind::Identity => 0.0,
            NoiseKind::Laplace => {
                let a: f64 = rng.sample(Exp1);
                let b: f64 = rng.sample(Exp1);
                a - b
            }
            NoiseKind::Gaussian { tau } => tau * rng.sample::<f64, _>(StandardNormal),
            NoiseKind::LogChiSquare => loop {
                let eta: f64 = rng.sample(StandardNormal);
                if eta != 0.0 {
                    break (eta * eta).ln();
                }
            },
            NoiseKind::UserTable(_) => return None,
        })
    }

    /// Median and interquartile range of the noise, when known in closed form.
    pub fn median_and_iqr(&self) -> Option<(f64, f64)> {
        match self.kind {
            NoiseKind::Identity => Some((0.0, 0.0)),
            NoiseKind::Laplace => Some((0.0, 2.0 * std::f64::consts::LN_2)),
            NoiseKind::Gaussian { tau } => Some((0.0, 1.348_979_500_392_163_5 * tau)),
            NoiseKind::LogChiSquare => Some((-0.787_597_599_201_782_2, 2.567_522_082_925_258_3)),
            NoiseKind::UserTable(_) => None,
        }
    }

    /// Mean of the noise, when it exists in closed form.
    pub fn mean(&self) -> Option<f64> {
        match self.kind {
            NoiseKind::LogChiSquare => Some(-1.270_362_845_461_478_2),
            NoiseKind::UserTable(_) => None,
            _ => Some(0.0),
        }
    }

    /// `Delta(m) = (1/2pi) int_{-pi m}^{pi m} |q*(u)|^{-2} du`.
    pub fn delta(&self, m: u32) -> Result<f64> {
        self.cached(m, false)
    }

    /// `Delta_2(m) = (1/4pi^2) int_{-pi m}^{pi m} |q*(u)|^{-4} du`.
    pub fn delta2(&self, m: u32) -> Result<f64> {
        self.cached(m, true)
    }

    pub fn log_delta(&self, m: u32) -> Result<f64> {
        Ok(self.delta(m)?.ln())
    }

    pub fn log_delta2(&self, m: u32) -> Result<f64> {
        Ok(self.delta2(m)?.ln())
    }

    fn cached(&self, m: u32, second: bool) -> Result<f64> {
        if m == 0 {
            return invalid("m must be positive");
        }
        {
            let c = self.cache.read().unwrap();
            let map = if second { &c.delta2 } else { &c.delta };
            if let Some(v) = map.get(&m) {
                return Ok(*v);
            }
        }
        let v = self.compute_delta(m, second)?;
        if !v.is_finite() {
            let mut feasible = m - 1;
            while feasible > 0 && !self.compute_delta(feasible, second)?.is_finite() {
                feasible -= 1;
            }
            return Err(Error::DeltaOverflow { m, largest_feasible: feasible });
        }
        let mut c = self.cache.write().unwrap();
        let map = if second { &mut c.delta2 } else { &mut c.delta };
        map.insert(m, v);
        Ok(v)
    }

    /// `Delta` or `Delta_2`; `+inf` when not representable.
    fn compute_delta(&self, m: u32, second: bool) -> Result<f64> {
        let a = PI * m as f64;
        match &self.kind {
            NoiseKind::Identity => Ok(if second { m as f64 / (2.0 * PI) } else { m as f64 }),
            NoiseKind::Laplace => {
                let a2 = a * a;
                Ok(if second {
                    a * (1.0 + a2 * (4.0 / 3.0 + a2 * (6.0 / 5.0 + a2 * (4.0 / 7.0 + a2 / 9.0)))) / (2.0 * PI * PI)
                } else {
                    a * (1.0 + a2 * (2.0 / 3.0 + a2 / 5.0)) / PI
                })
            }
            NoiseKind::UserTable(t) if a > t.u_max() => {
                invalid(format!("cf table ends at u = {} < pi m = {a}", t.u_max()))
            }
            _ => {
                // Even integrands: Delta = (1/pi) int_0^a |q*|^{-2},
                // Delta_2 = (1/2pi^2) int_0^a |q*|^{-4}.
                let power = if second { 4.0 } else { 2.0 };
                let ell = |u: f64| -power * self.ln_abs_cf(u);
                let shift = (0..=64).map(|k| ell(a * k as f64 / 64.0)).fold(f64::NEG_INFINITY, f64::max);
                if !shift.is_finite() {
                    return Err(Error::NoiseCfUnderflow(a));
                }
                let scaled = integrate(|u| (ell(u) - shift).exp(), 0.0, a, 1e-12, 0.0)?;
                let norm = if second { 2.0 * PI * PI } else { PI };
                let log = shift + scaled.ln() - norm.ln();
                Ok(if log > LOG_MAX { f64::INFINITY } else { log.exp() })
            }
        }
    }
}

/// `ln q*(x)` for `ln(eta^2)`: `q*(x) = 2^{-ix} Gamma(1/2 - ix) / sqrt(pi)`.
fn log_chi_square_log_cf(x: f64) -> Complex64 {
    if x == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let lg = ln_gamma_complex(Complex64::new(0.5, -x));
    Complex64::new(lg.re - 0.5 * PI.ln(), lg.im - x * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeViolation {
    pub u: f64,
    pub modulus: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Points of `u_grid` where `|q*|` leaves the declared envelope (relative slack 1e-9).
pub fn check_envelope(noise: &NoiseModel, u_grid: &[f64]) -> Vec<EnvelopeViolation> {
    let sm = noise.smoothness();
    u_grid
        .iter()
        .filter_map(|&u| {
            let shape = sm.log_shape(u);
            let log_mod = noise.ln_abs_cf(u);
            let lower = sm.k0.ln() + shape;
            let upper = sm.k1.ln() + shape;
            let slack = 1e-9 * (1.0 + shape.abs());
            (log_mod < lower - slack || log_mod > upper + slack).then(|| EnvelopeViolation {
                u,
                modulus: log_mod.exp(),
                lower: lower.exp(),
                upper: upper.exp(),
            })
        })
        .collect()
}

/// `ln Delta(m)` next to the growth template
/// `ln[(pi m)^{2 gamma + 1 - s} e^{2 b (pi m)^s}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub m: u32,
    pub log_delta: f64,
    pub log_template: f64,
}

impl GrowthRow {
    pub fn log_ratio(&self) -> f64 {
        self.log_delta - self.log_template
    }
}

pub fn delta_growth_diagnostic(noise: &NoiseModel, ms: &[u32]) -> Result<Vec<GrowthRow>> {
    let sm = noise.smoothness();
    ms.iter()
        .map(|&m| {
            let a = PI * m as f64;
            let exp_part = if sm.b == 0.0 { 0.0 } else { 2.0 * sm.b * a.powf(sm.s) };
            Ok(GrowthRow {
                m,
                log_delta: noise.log_delta(m)?,
                log_template: (2.0 * sm.gamma + 1.0 - sm.s) * a.ln() + exp_part,
            })
        })
        .collect()
}

/// Least-squares reading of a growth table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    /// Fitted power of `pi m` (ordinary smooth) or the declared one (supersmooth).
    pub poly_exponent: f64,
    /// Fitted coefficient of `(pi m)^s` in `ln Delta`; `0` when `s = 0`.
    pub exp_coeff: f64,
    /// Smallest and largest `exp(log_ratio)`, i.e. the implied constants.
    pub c_lo: f64,
    pub c_hi: f64,
    /// The implied constants spread over more than a factor 10.
    pub flagged: bool,
}

fn slope_intercept(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Fit `ln Delta(m)` against the growth template over the rows (at least two).
pub fn fit_growth(noise: &NoiseModel, rows: &[GrowthRow]) -> Result<GrowthFit> {
    if rows.len() < 2 {
        return invalid("growth fit needs at least two rows");
    }
    let sm = noise.smoothness();
    let a: Vec<f64> = rows.iter().map(|r| PI * r.m as f64).collect();
    let ld: Vec<f64> = rows.iter().map(|r| r.log_delta).collect();
    let (poly_exponent, exp_coeff) = if sm.s == 0.0 {
        let la: Vec<f64> = a.iter().map(|v| v.ln()).collect();
        (slope_intercept(&la, &ld).0, 0.0)
    } else {
        let p = 2.0 * sm.gamma + 1.0 - sm.s;
        let x: Vec<f64> = a.iter().map(|v| v.powf(sm.s)).collect();
        let y: Vec<f64> = ld.iter().zip(&a).map(|(l, v)| l - p * v.ln()).collect();
        (p, slope_intercept(&x, &y).0)
    };
    let ratios: Vec<f64> = rows.iter().map(|r| r.log_ratio()).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthFit { poly_exponent, exp_coeff, c_lo: lo.exp(), c_hi: hi.exp(), flagged: hi - lo > 10f64.ln() })
}
