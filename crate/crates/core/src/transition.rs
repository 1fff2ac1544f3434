//! Quotient estimator of the transition density on a compact set `B x B`.

use crate::error::{invalid, Error, Result};
use crate::estimator1d::{
    model_collection_1d, select_among_1d, evaluate_1d, FitOptions, PenaltyConfig, ProjectionEstimate1D,
};
use crate::estimator2d::{evaluate_2d, select_and_fit_2d, ProjectionEstimate2D};
use crate::noise::NoiseModel;
use crate::special::quantile_sorted;
use ndarray::Array2;

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("interval [{lo}, {hi}] must be finite and nonempty"));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `k` equispaced points including both ends.
    pub fn grid(&self, k: usize) -> Vec<f64> {
        if k == 1 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        (0..k).map(|i| self.lo + self.width() * i as f64 / (k - 1) as f64).collect()
    }
}

/// Lower bound `f0` of `f` on `B` and `sup Pi` on `B x B` (known only in simulations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryFloor {
    pub f0: f64,
    pub pi_sup: f64,
}

impl StationaryFloor {
    pub fn new(f0: f64, pi_sup: f64) -> Result<Self> {
        if !(f0 > 0.0 && pi_sup > 0.0 && f0.is_finite() && pi_sup.is_finite()) {
            return invalid("f0 and pi_sup must be positive");
        }
        Ok(Self { f0, pi_sup })
    }
}

/// `{m in M_n : m >= ln ln n, m Delta(m) <= n / (ln n)^2}`; needs `n >= 16`.
pub fn restricted_models_f(n: usize, noise: &NoiseModel, max_m: u32) -> Result<Vec<u32>> {
    Ok(model_collection_1d(n, noise, true, max_m)?.ms())
}

/// `F/f` when `|F| <= n |f|`, else 0 (also when `f = 0`).
pub fn quotient_estimate(f_val: f64, big_f_val: f64, n: usize) -> f64 {
    if f_val == 0.0 || !(big_f_val.abs() <= n as f64 * f_val.abs()) {
        return 0.0;
    }
    let q = big_f_val / f_val;
    if q.is_finite() { q } else { 0.0 }
}

/// Default `B`: the 10%-90% empirical quantile range of `Y`, recentred by the
/// noise median and shrunk by half the noise IQR at each end. Falls back to the
/// unshrunk (recentred) range when shrinking would empty it.
pub fn default_b(data: &[f64], noise: &NoiseModel) -> Result<Interval> {
    if data.len() < 2 {
        return Err(Error::EmptySample);
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (med, iqr) = noise.median_and_iqr().unwrap_or((0.0, 0.0));
    let q10 = quantile_sorted(&sorted, 0.10) - med;
    let q90 = quantile_sorted(&sorted, 0.90) - med;
    Interval::new(q10 + iqr / 2.0, q90 - iqr / 2.0).or_else(|_| Interval::new(q10, q90))
}

#[derive(Debug, Clone)]
pub struct TransitionEstimate {
    pub f_est: ProjectionEstimate1D,
    pub big_f_est: ProjectionEstimate2D,
    pub b: Interval,
    /// Number of transitions used.
    pub n: usize,
    /// The restricted set for `f` was empty and the full collection was used.
    pub restriction_relaxed: bool,
}

impl TransitionEstimate {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let f = evaluate_1d(&self.f_est, &[x])[0];
        let big_f = evaluate_2d(&self.big_f_est, &[x], &[y])[[0, 0]];
        quotient_estimate(f, big_f, self.n)
    }

    /// `Pi_tilde` on the tensor grid `xs x ys` (entry `[a, b]` at `(xs[a], ys[b])`).
    pub fn eval_grid(&self, xs: &[f64], ys: &[f64]) -> Array2<f64> {
        let f = evaluate_1d(&self.f_est, xs);
        let mut big_f = evaluate_2d(&self.big_f_est, xs, ys);
        for (mut row, fx) in big_f.rows_mut().into_iter().zip(&f) {
            row.mapv_inplace(|v| quotient_estimate(*fx, v, self.n));
        }
        big_f
    }
}

/// Fit `f_tilde` on the restricted collection and `F_tilde` on
/// `{m : Delta(m)^2 <= n}` from `Y_1..Y_{n+1}`.
pub fn estimate_transition(
    data: &[f64],
    noise: &NoiseModel,
    cfg: &PenaltyConfig,
    b: Interval,
    opts: &FitOptions,
) -> Result<TransitionEstimate> {
    if data.len() < 3 {
        return invalid("transition estimation needs at least three observations");
    }
    let n = data.len() - 1;
    let head = &data[..n];
    let (ms, restriction_relaxed) = match restricted_models_f(n, noise, opts.max_m) {
        Ok(ms) => (ms, false),
        Err(Error::NoAdmissibleRestrictedModel { .. }) | Err(Error::InvalidParameter(_)) => {
            (model_collection_1d(n, noise, false, opts.max_m)?.ms(), true)
        }
        Err(e) => return Err(e),
    };
    let f_est = select_among_1d(head, &ms, noise, cfg, opts)?.into_estimate();
    let big_f_est = select_and_fit_2d(data, noise, cfg, opts)?.into_estimate();
    Ok(TransitionEstimate { f_est, big_f_est, b, n, restriction_relaxed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_guard() {
        assert!((quotient_estimate(0.5, 0.2, 100) - 0.4).abs() < 1e-15);
        assert_eq!(quotient_estimate(1e-9, 0.2, 100), 0.0);
        assert_eq!(quotient_estimate(0.0, 0.0, 10), 0.0);
        assert_eq!(quotient_estimate(-0.5, 0.2, 100), -0.4);
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert_eq!(Interval::new(-2.0, 2.0).unwrap().grid(5), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
