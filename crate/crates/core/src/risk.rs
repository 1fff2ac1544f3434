//! Monte Carlo risk studies: MISE on grids, replicate studies, rate fits,
//! oracle resolutions and theoretical rate predictions.

use crate::error::{invalid, Error, Result};
use crate::estimator1d::{
    argmin_criterion, evaluate_1d, model_collection_1d, select_among_1d, FitOptions, PenaltyConfig,
};
use crate::estimator2d::{evaluate_2d, model_collection_2d, select_among_2d};
use crate::noise::{penalty_exponents, NoiseModel, NoiseSmoothness};
use crate::simulate::{add_noise_with, stream_rng, ChainModel, SmoothnessClass, StreamRole};
use crate::special::{integrate, integrate_to_infinity, median};
use crate::transition::{default_b, quotient_estimate, Interval, StationaryFloor};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

/// Uniform grid `lo..=hi` with `points` nodes and trapezoid weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return invalid("grid needs lo < hi and at least two points");
        }
        Ok(Self { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| if i + 1 == self.points { self.hi } else { self.lo + i as f64 * h }).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| if i == 0 || i + 1 == self.points { h / 2.0 } else { h }).collect()
    }
}

impl From<Interval> for Grid1D {
    fn from(b: Interval) -> Self {
        Self { lo: b.lo, hi: b.hi, points: 2 }
    }
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if values.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant("non-finite evaluator output".into()));
    }
    Ok(())
}

/// Trapezoid approximation of `int (est - truth)^2` from values on `grid`.
pub fn mise_grid_1d(est: &[f64], truth: &[f64], grid: &Grid1D) -> Result<f64> {
    if est.len() != grid.points || truth.len() != grid.points {
        return invalid("values do not match the grid");
    }
    check_finite(est.iter().chain(truth))?;
    Ok(est.iter().zip(truth).zip(grid.weights()).map(|((e, t), w)| w * (e - t) * (e - t)).sum())
}

/// Tensor-trapezoid approximation of `iint (est - truth)^2`; rows follow `gx`.
pub fn mise_grid_2d(est: ArrayView2<f64>, truth: ArrayView2<f64>, gx: &Grid1D, gy: &Grid1D) -> Result<f64> {
    if est.dim() != (gx.points, gy.points) || truth.dim() != est.dim() {
        return invalid("values do not match the grid");
    }
    check_finite(est.iter().chain(truth.iter()))?;
    let (wx, wy) = (gx.weights(), gy.weights());
    let mut total = 0.0;
    for (a, (er, tr)) in est.rows().into_iter().zip(truth.rows()).enumerate() {
        let row: f64 = er.iter().zip(tr.iter()).zip(&wy).map(|((e, t), w)| w * (e - t) * (e - t)).sum();
        total += wx[a] * row;
    }
    Ok(total)
}

/// [`mise_grid_1d`] for pointwise evaluators.
pub fn mise_fn_1d(est: impl Fn(f64) -> f64, truth: impl Fn(f64) -> f64, grid: &Grid1D) -> Result<f64> {
    let nodes = grid.nodes();
    let e: Vec<f64> = nodes.iter().map(|&x| est(x)).collect();
    let t: Vec<f64> = nodes.iter().map(|&x| truth(x)).collect();
    mise_grid_1d(&e, &t, grid)
}

/// Interval carrying the bulk of the stationary law (used for MISE grids).
pub fn support_interval(model: &ChainModel) -> Interval {
    let (mu, sd) = (model.stationary_mean(), model.stationary_sd());
    let hi = match model {
        ChainModel::Cir { .. } => mu + 14.0 * sd,
        _ => mu + 6.0 * sd,
    };
    Interval { lo: mu - 6.0 * sd, hi }
}

/// Study parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    pub penalty: PenaltyConfig,
    pub fit: FitOptions,
    /// Points per axis of the MISE grids.
    pub grid_points: usize,
    /// Transition set; `None` applies the default rule to a population sample.
    pub b: Option<Interval>,
    /// Size of the population sample used to fix `B`.
    pub reference_n: usize,
}

impl StudySpec {
    pub fn new(n_list: Vec<usize>, replicates: usize, base_seed: u64) -> Self {
        Self {
            n_list,
            replicates,
            base_seed,
            penalty: PenaltyConfig::default(),
            fit: FitOptions::default(),
            grid_points: 1024,
            b: None,
            reference_n: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return invalid("n_list must be nonempty");
        }
        if self.n_list.windows(2).any(|w| w[1] < w[0]) {
            return invalid("n_list must be nondecreasing");
        }
        if self.n_list[0] < 3 {
            return invalid("every n must be at least 3");
        }
        if self.replicates < 2 {
            return invalid("a study needs at least two replicates");
        }
        if self.grid_points < 2 {
            return invalid("grid_points must be at least 2");
        }
        Ok(())
    }
}

/// One `(n, replicate)` outcome. Estimation failures leave the affected fields empty.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRecord {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub m_hat: Option<u32>,
    pub big_m_hat: Option<u32>,
    pub m_hat_pi: Option<u32>,
    pub mise_f: Option<f64>,
    pub mise_big_f: Option<f64>,
    pub mise_pi: Option<f64>,
    pub restriction_relaxed: bool,
    pub error: Option<String>,
    pub wall_time: Duration,
}

impl RiskRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Truth tabulated once per study.
#[derive(Debug, Clone)]
pub struct StudyTruth {
    pub domain: Grid1D,
    pub b_grid: Grid1D,
    pub b: Interval,
    pub floor: StationaryFloor,
    f: Vec<f64>,
    big_f: Array2<f64>,
    pi: Array2<f64>,
}

impl StudyTruth {
    pub fn new(model: &ChainModel, noise: &NoiseModel, spec: &StudySpec) -> Result<Self> {
        let s = support_interval(model);
        let domain = Grid1D::new(s.lo, s.hi, spec.grid_points)?;
        let b = match spec.b {
            Some(b) => b,
            None => {
                let n = spec.reference_n.max(16);
                let x = model.simulate_latent(n, &mut stream_rng(spec.base_seed, StreamRole::Latent, u64::MAX, n as u64));
                let y = add_noise_with(&x, noise, &mut stream_rng(spec.base_seed, StreamRole::Noise, u64::MAX, n as u64))?;
                default_b(&y, noise)?
            }
        };
        let b_grid = Grid1D::new(b.lo, b.hi, spec.grid_points)?;
        let xs = domain.nodes();
        let f: Vec<f64> = xs.iter().map(|&x| model.true_f(x)).collect();
        let big_f = tensor(&xs, &xs, |x, y| model.true_joint(x, y));
        let bs = b_grid.nodes();
        let pi = tensor(&bs, &bs, |x, y| model.true_pi(x, y));
        let f0 = bs.iter().map(|&x| model.true_f(x)).fold(f64::INFINITY, f64::min);
        let pi_sup = pi.iter().fold(0.0f64, |a, &v| a.max(v));
        let floor = StationaryFloor::new(f0, pi_sup)?;
        Ok(Self { domain, b_grid, b, floor, f, big_f, pi })
    }
}

fn tensor(xs: &[f64], ys: &[f64], g: impl Fn(f64, f64) -> f64 + Sync) -> Array2<f64> {
    let rows: Vec<Vec<f64>> = xs.par_iter().map(|&x| ys.iter().map(|&y| g(x, y)).collect()).collect();
    let mut out = Array2::zeros((xs.len(), ys.len()));
    for (mut r, v) in out.rows_mut().into_iter().zip(rows) {
        for (slot, x) in r.iter_mut().zip(v) {
            *slot = x;
        }
    }
    out
}

/// Result of a study: per-replicate records plus the fixed `B` and its floor.
#[derive(Debug, Clone)]
pub struct Study {
    pub records: Vec<RiskRecord>,
    pub b: Interval,
    pub floor: StationaryFloor,
}

/// Observations `Y_1..Y_{n+1}` for one replicate.
pub fn replicate_observations(
    model: &ChainModel,
    noise: &NoiseModel,
    base_seed: u64,
    replicate: usize,
    n: usize,
) -> Result<Vec<f64>> {
    let x = model.simulate_latent(n + 1, &mut stream_rng(base_seed, StreamRole::Latent, replicate as u64, n as u64));
    add_noise_with(&x, noise, &mut stream_rng(base_seed, StreamRole::Noise, replicate as u64, n as u64))
}

fn run_replicate(
    model: &ChainModel,
    noise: &NoiseModel,
    spec: &StudySpec,
    truth: &StudyTruth,
    n: usize,
    replicate: usize,
) -> RiskRecord {
    let start = Instant::now();
    let mut rec = RiskRecord {
        n,
        replicate,
        seed: spec.base_seed,
        m_hat: None,
        big_m_hat: None,
        m_hat_pi: None,
        mise_f: None,
        mise_big_f: None,
        mise_pi: None,
        restriction_relaxed: false,
        error: None,
        wall_time: Duration::ZERO,
    };
    let mut errors = Vec::new();
    match replicate_observations(model, noise, spec.base_seed, replicate, n) {
        Err(e) => errors.push(format!("simulation: {e}")),
        Ok(y) => {
            let head = &y[..n];
            let xs = truth.domain.nodes();
            let bs = truth.b_grid.nodes();
            let (fp, opts) = (&spec.penalty, &spec.fit);
            let f_part = model_collection_1d(n, noise, false, opts.max_m)
                .and_then(|c| select_among_1d(head, &c.ms(), noise, fp, opts));
            let mut f_pi = None;
            match f_part {
                Err(e) => errors.push(format!("f: {e}")),
                Ok(sel) => {
                    let est = sel.estimate();
                    rec.m_hat = Some(est.m);
                    match mise_grid_1d(&evaluate_1d(est, &xs), &truth.f, &truth.domain) {
                        Ok(v) => rec.mise_f = Some(v),
                        Err(e) => errors.push(format!("f: {e}")),
                    }
                    // Restricted choice for the quotient, reusing the fits.
                    let restricted = if n >= 16 { model_collection_1d(n, noise, true, opts.max_m).ok() } else { None };
                    let subset: Vec<(u32, f64)> = match &restricted {
                        Some(c) => {
                            let ms = c.ms();
                            sel.fits.iter().filter(|f| ms.contains(&f.m)).map(|f| (f.m, f.criterion())).collect()
                        }
                        None => Vec::new(),
                    };
                    let pick = if subset.is_empty() {
                        rec.restriction_relaxed = true;
                        sel.selected
                    } else {
                        let m = subset[argmin_criterion(&subset).unwrap()].0;
                        sel.fits.iter().position(|f| f.m == m).unwrap()
                    };
                    rec.m_hat_pi = Some(sel.fits[pick].m);
                    f_pi = Some(sel.fits[pick].clone());
                }
            }
            let big_part = model_collection_2d(n, noise, opts.max_m).and_then(|c| {
                let ms: Vec<u32> = c.iter().map(|e| e.m).collect();
                select_among_2d(&y, &ms, noise, fp, opts)
            });
            match big_part {
                Err(e) => errors.push(format!("F: {e}")),
                Ok(sel) => {
                    let est = sel.estimate();
                    rec.big_m_hat = Some(est.m);
                    match mise_grid_2d(evaluate_2d(est, &xs, &xs).view(), truth.big_f.view(), &truth.domain, &truth.domain) {
                        Ok(v) => rec.mise_big_f = Some(v),
                        Err(e) => errors.push(format!("F: {e}")),
                    }
                    if let Some(f_est) = f_pi {
                        let fb = evaluate_1d(&f_est, &bs);
                        let mut pi_hat = evaluate_2d(est, &bs, &bs);
                        for (mut row, fx) in pi_hat.rows_mut().into_iter().zip(&fb) {
                            row.mapv_inplace(|v| quotient_estimate(*fx, v, n));
                        }
                        match mise_grid_2d(pi_hat.view(), truth.pi.view(), &truth.b_grid, &truth.b_grid) {
                            Ok(v) => rec.mise_pi = Some(v),
                            Err(e) => errors.push(format!("Pi: {e}")),
                        }
                    }
                }
            }
        }
    }
    if !errors.is_empty() {
        rec.error = Some(errors.join("; "));
    }
    rec.wall_time = start.elapsed();
    rec
}

/// Simulate, estimate `f`, `F` and `Pi`, and record their MISE for every
/// `(n, replicate)`; records are ordered by `(n, replicate)`.
pub fn mc_risk_study(model: &ChainModel, noise: &NoiseModel, spec: &StudySpec) -> Result<Study> {
    spec.validate()?;
    if !noise.has_sampler() {
        return Err(Error::Unsupported(format!("{} noise cannot be simulated", noise.name())));
    }
    let truth = StudyTruth::new(model, noise, spec)?;
    Ok(Study { records: run_study_with_truth(model, noise, spec, &truth), b: truth.b, floor: truth.floor })
}

pub fn run_study_with_truth(model: &ChainModel, noise: &NoiseModel, spec: &StudySpec, truth: &StudyTruth) -> Vec<RiskRecord> {
    let jobs: Vec<(usize, usize)> =
        spec.n_list.iter().flat_map(|&n| (0..spec.replicates).map(move |r| (n, r))).collect();
    let mut records: Vec<RiskRecord> =
        jobs.par_iter().map(|&(n, r)| run_replicate(model, noise, spec, truth, n, r)).collect();
    records.sort_by_key(|r| (r.n, r.replicate));
    records
}

/// Median of `field` per distinct `n` (records without a value are skipped).
pub fn median_by_n(records: &[RiskRecord], field: impl Fn(&RiskRecord) -> Option<f64>) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let vals: Vec<f64> = records.iter().filter(|r| r.n == n).filter_map(&field).collect();
            median(&vals).map(|m| (n, m))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitRegime {
    PowerLaw,
    Logarithmic,
}

/// `ln MISE = intercept - power * ln ln n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub power: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Slope of `ln MISE` against `ln n`.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub log_fit: LogFit,
    pub regime: FitRegime,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Power-law fit of median MISE against `n`, with a logarithmic alternative.
///
/// The logarithmic regime is reported when the power law explains less than
/// 90% of the variance, or when the `(ln n)^{-p}` template fits better and the
/// power-law slope is shallow (`|slope| < 0.25`).
pub fn rate_fit(points: &[(usize, f64)]) -> Result<RateFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 || ns.len() != points.len() {
        return Err(Error::DegenerateFit("need at least three distinct n, one value each".into()));
    }
    if points.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::DegenerateFit("MISE values must be positive".into()));
    }
    if ns[0] < 2 {
        return Err(Error::DegenerateFit("n must exceed 1".into()));
    }
    let ln_n: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let lnln: Vec<f64> = ln_n.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = least_squares(&ln_n, &ly);
    let (ls, li, lr2) = least_squares(&lnln, &ly);
    let regime = if r2 < 0.9 || (lr2 > r2 && slope.abs() < 0.25) { FitRegime::Logarithmic } else { FitRegime::PowerLaw };
    Ok(RateFit { slope, intercept, r2, log_fit: LogFit { power: -ls, intercept: li, r2: lr2 }, regime })
}

/// Shape of a predicted risk bound.
#[derive(Debug, Clone, PartialEq)]
pub enum RateShape {
    /// `n^{exponent} (ln n)^{log_power}`.
    Power { exponent: f64, log_power: f64 },
    /// `(ln n)^{log_power}`.
    Logarithmic { log_power: f64 },
    /// Mixed regimes whose constants are not specified; described in words.
    Qualitative(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePrediction {
    /// Case label keyed by the smoothness exponent and `s`, e.g. `"r>0, s=0"`.
    pub regime: String,
    pub shape: RateShape,
}

impl RatePrediction {
    /// Exponent of `n` when the bound is a power law.
    pub fn exponent(&self) -> Option<f64> {
        match self.shape {
            RateShape::Power { exponent, .. } => Some(exponent),
            RateShape::Logarithmic { .. } => Some(0.0),
            RateShape::Qualitative(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.shape {
            RateShape::Power { exponent, log_power } if *log_power == 0.0 => format!("n^({exponent:.6})"),
            RateShape::Power { exponent, log_power } => format!("n^({exponent:.6}) (ln n)^({log_power:.6})"),
            RateShape::Logarithmic { log_power } => format!("(ln n)^({log_power:.6})"),
            RateShape::Qualitative(s) => s.clone(),
        }
    }
}

/// Predicted rate for the density (`joint = false`) or the joint density.
pub fn predict_rate(class: &SmoothnessClass, noise: &NoiseSmoothness, joint: bool) -> Result<RatePrediction> {
    class.validate()?;
    let (d, r, a) = (class.delta, class.r, class.a);
    let NoiseSmoothness { gamma: g, s, b, .. } = *noise;
    let (rho1, rho2) = penalty_exponents(s);
    let letter = if joint { "R" } else { "r" };
    let tag = |rc: &str, sc: &str| format!("{letter}{rc}, s{sc}");
    // Bivariate rates replace (2 delta, 2 gamma + 1, b) by (2 Delta, 4 gamma + 2, 2b).
    let (two_d, var_exp, bb) = if joint { (2.0 * d, 4.0 * g + 2.0, 2.0 * b) } else { (2.0 * d, 2.0 * g + 1.0, b) };
    let p = if r == 0.0 && s == 0.0 {
        RatePrediction { regime: tag("=0", "=0"), shape: RateShape::Power { exponent: -two_d / (two_d + var_exp), log_power: 0.0 } }
    } else if r == 0.0 {
        RatePrediction { regime: tag("=0", ">0"), shape: RateShape::Logarithmic { log_power: -two_d / s } }
    } else if s == 0.0 {
        RatePrediction { regime: tag(">0", "=0"), shape: RateShape::Power { exponent: -1.0, log_power: var_exp / r } }
    } else if r == s {
        let xi = if joint {
            (4.0 * d * b + (2.0 * s - 4.0 * g - 2.0 - rho2) * a) / ((a + 2.0 * b) * s)
        } else {
            (2.0 * d * b + (s - 2.0 * g - 1.0 - rho1) * a) / ((a + b) * s)
        };
        RatePrediction {
            regime: format!("{letter}=s>0"),
            shape: RateShape::Power { exponent: -a / (a + bb), log_power: -xi },
        }
    } else if r < s {
        RatePrediction {
            regime: format!("0<{letter}<s"),
            shape: RateShape::Qualitative(format!(
                "(ln n)^({:.6}) times exp of a polynomial in (ln n)^({letter}/s): faster than any power of ln n, slower than any power of n",
                -two_d / s
            )),
        }
    } else {
        RatePrediction {
            regime: format!("{letter}>s>0"),
            shape: RateShape::Qualitative("polylog(n)/n times a decaying exp of a polynomial in (ln n)^(s/r): near parametric".into()),
        }
    };
    Ok(p)
}

/// The transition prediction is the slower of the two.
pub fn predict_rate_transition(f: &RatePrediction, big_f: &RatePrediction) -> RatePrediction {
    match (f.exponent(), big_f.exponent()) {
        (Some(a), Some(b)) if a < b => big_f.clone(),
        (Some(a), Some(b)) if b < a => f.clone(),
        (Some(_), Some(_)) => {
            let lp = |p: &RatePrediction| match p.shape {
                RateShape::Power { log_power, .. } | RateShape::Logarithmic { log_power } => log_power,
                RateShape::Qualitative(_) => 0.0,
            };
            if lp(f) >= lp(big_f) { f.clone() } else { big_f.clone() }
        }
        (None, _) => f.clone(),
        (_, None) => big_f.clone(),
    }
}

/// `||f - f_m||^2 = (1/pi) int_{pi m}^inf |f*(u)|^2 du`.
pub fn bias_f(model: &ChainModel, m: u32) -> Result<f64> {
    let a = PI * m as f64;
    match model {
        ChainModel::Cir { .. } => Ok(integrate_to_infinity(|u| model.f_cf_abs2(u), a, 1e-12, 0.0)? / PI),
        _ => {
            let s = model.stationary_sd();
            Ok(libm::erfc(s * a) / (2.0 * s * PI.sqrt()))
        }
    }
}

/// `||F - F_m||^2`: `(1/4pi^2)` times the integral of `|F*|^2` outside `[-pi m, pi m]^2`.
/// Available for the Gaussian chains.
pub fn bias_big_f(model: &ChainModel, m: u32) -> Result<f64> {
    let (alpha, _, _) = model
        .as_ar1()
        .ok_or_else(|| Error::Unsupported("joint bias is available for Gaussian chains only".into()))?;
    let a = PI * m as f64;
    let s = model.stationary_sd();
    let c = s * s * (1.0 - alpha * alpha);
    let rc = c.sqrt();
    // |u| > a, any v.
    let outer = PI / (s * rc) * libm::erfc(rc * a);
    // |u| <= a, |v| > a.
    let inner = 2.0
        * integrate(
            |u| {
                (-c * u * u).exp() * (PI.sqrt() / (2.0 * s))
                    * (libm::erfc(s * (a + alpha * u)) + libm::erfc(s * (a - alpha * u)))
            },
            0.0,
            a,
            1e-13,
            0.0,
        )?;
    Ok((outer + inner) / (4.0 * PI * PI))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub m: u32,
    pub bias: f64,
    pub variance: f64,
}

impl OracleRow {
    pub fn risk(&self) -> f64 {
        self.bias + self.variance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleChoice {
    pub m: u32,
    pub risk: f64,
    pub rows: Vec<OracleRow>,
}

fn pick(rows: Vec<OracleRow>, n: usize) -> Result<OracleChoice> {
    let crit: Vec<(u32, f64)> = rows.iter().map(|r| (r.m, r.risk())).collect();
    let i = argmin_criterion(&crit).ok_or(Error::NoAdmissibleModel(n))?;
    Ok(OracleChoice { m: rows[i].m, risk: rows[i].risk(), rows })
}

/// `argmin_{m in M_n} ||f - f_m||^2 + Delta(m)/n`.
pub fn oracle_m_search(model: &ChainModel, noise: &NoiseModel, n: usize, max_m: u32) -> Result<OracleChoice> {
    let coll = model_collection_1d(n, noise, false, max_m)?;
    let rows = coll
        .models
        .iter()
        .map(|e| Ok(OracleRow { m: e.m, bias: bias_f(model, e.m)?, variance: e.delta / n as f64 }))
        .collect::<Result<Vec<_>>>()?;
    pick(rows, n)
}

/// `argmin_{m : Delta(m)^2 <= n} ||F - F_m||^2 + Delta(m)^2/n`.
pub fn oracle_m_search_2d(model: &ChainModel, noise: &NoiseModel, n: usize, max_m: u32) -> Result<OracleChoice> {
    let coll = model_collection_2d(n, noise, max_m)?;
    let rows = coll
        .iter()
        .map(|e| Ok(OracleRow { m: e.m, bias: bias_big_f(model, e.m)?, variance: e.delta * e.delta / n as f64 }))
        .collect::<Result<Vec<_>>>()?;
    pick(rows, n)
}

/// Desk-scale form of the quotient risk bound:
/// `median MISE(Pi) <= factor * (8/f0^2) (median MISE(F) + pi_sup median MISE(f))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn transition_surrogate(
    median_pi: f64,
    median_big_f: f64,
    median_f: f64,
    floor: &StationaryFloor,
    factor: f64,
) -> SurrogateCheck {
    let rhs = factor * 8.0 / (floor.f0 * floor.f0) * (median_big_f + floor.pi_sup * median_f);
    SurrogateCheck { lhs: median_pi, rhs, holds: median_pi <= rhs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(usize, f64)> = [100, 1000, 10_000, 100_000].iter().map(|&n| (n, 3.0 * (n as f64).powf(-0.8))).collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope + 0.8).abs() < 1e-12);
        assert_eq!(fit.regime, FitRegime::PowerLaw);
    }

    #[test]
    fn inverse_log_is_flagged() {
        let pts: Vec<(usize, f64)> = [100, 1000, 10_000, 100_000].iter().map(|&n| (n, 2.0 / (n as f64).ln())).collect();
        let fit = rate_fit(&pts).unwrap();
        assert!(fit.slope.abs() < 0.25);
        assert_eq!(fit.regime, FitRegime::Logarithmic);
        assert!((fit.log_fit.power - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_rejects_degenerate_input() {
        assert!(rate_fit(&[(10, 1.0), (20, 0.5)]).is_err());
        assert!(rate_fit(&[(10, 1.0), (20, 0.0), (40, 0.1)]).is_err());
    }

    #[test]
    fn zero_estimate_against_standard_normal() {
        let g = Grid1D::new(-10.0, 10.0, 4001).unwrap();
        let v = mise_fn_1d(|_| 0.0, |x| (-x * x / 2.0).exp() / (2.0 * PI).sqrt(), &g).unwrap();
        assert!((v - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-4);
    }
}
