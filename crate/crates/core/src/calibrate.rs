//! Pilot-run calibration of the penalty constants.
//!
//! Each replicate is fitted once on the whole collection; the penalized choice
//! is then replayed for every constant on a grid. The recommendation is the
//! smallest constant from which the modal choice no longer changes and is
//! shared by at least [`STABLE_AGREEMENT`] of the replicates.

use crate::error::{invalid, Error, Result};
use crate::estimator1d::{argmin_criterion, model_collection_1d, select_among_1d, FitOptions, PenaltyConfig};
use crate::estimator2d::{model_collection_2d, select_among_2d};
use crate::noise::NoiseModel;
use crate::risk::replicate_observations;
use crate::simulate::ChainModel;
use rayon::prelude::*;

pub const STABLE_AGREEMENT: f64 = 0.9;

/// `count` log-spaced constants from `lo` to `hi`.
pub fn kappa_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
        return invalid("kappa grid needs 0 < lo < hi and at least two points");
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPoint {
    pub kappa: f64,
    pub modal_m: u32,
    /// Fraction of replicates selecting `modal_m`.
    pub agreement: f64,
    pub choices: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Recommendation {
    Identified(f64),
    Unidentified(String),
}

impl Recommendation {
    pub fn value(&self) -> Option<f64> {
        match self {
            Recommendation::Identified(k) => Some(*k),
            Recommendation::Unidentified(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub n: usize,
    pub models_f: Vec<u32>,
    pub models_big_f: Vec<u32>,
    pub curve_f: Vec<StabilityPoint>,
    pub curve_big_f: Vec<StabilityPoint>,
    pub kappa1: Recommendation,
    pub kappa2: Recommendation,
}

/// Contrast and unit-constant penalty of every model, for one replicate.
type Profile = Vec<(u32, f64, f64)>;

fn curve(profiles: &[Profile], grid: &[f64]) -> Vec<StabilityPoint> {
    grid.iter()
        .map(|&kappa| {
            let choices: Vec<u32> = profiles
                .iter()
                .map(|p| {
                    let crit: Vec<(u32, f64)> = p.iter().map(|&(m, c, pen)| (m, c + kappa * pen)).collect();
                    p[argmin_criterion(&crit).expect("non-empty")].0
                })
                .collect();
            let mut counts = std::collections::BTreeMap::new();
            for &m in &choices {
                *counts.entry(m).or_insert(0usize) += 1;
            }
            // Ties in the mode go to the smaller m.
            let (modal_m, hits) = counts.iter().fold((0u32, 0usize), |acc, (&m, &c)| if c > acc.1 { (m, c) } else { acc });
            StabilityPoint { kappa, modal_m, agreement: hits as f64 / choices.len() as f64, choices }
        })
        .collect()
}

fn recommend(models: &[u32], curve: &[StabilityPoint]) -> Recommendation {
    if models.len() < 2 {
        return Recommendation::Unidentified(format!(
            "single-model collection {models:?}: every constant selects the same model"
        ));
    }
    let last = match curve.last() {
        Some(p) => p.modal_m,
        None => return Recommendation::Unidentified("empty kappa grid".into()),
    };
    let mut start = None;
    for (i, p) in curve.iter().enumerate().rev() {
        if p.modal_m == last && p.agreement >= STABLE_AGREEMENT {
            start = Some(i);
        } else {
            break;
        }
    }
    match start {
        Some(i) => Recommendation::Identified(curve[i].kappa),
        None => Recommendation::Unidentified("selection never stabilizes on the grid".into()),
    }
}

/// Scan the constants of both penalties on `replicates` simulated paths of length `n + 1`.
pub fn calibrate_penalty(
    model: &ChainModel,
    noise: &NoiseModel,
    n: usize,
    replicates: usize,
    base_seed: u64,
    grid: &[f64],
    opts: &FitOptions,
) -> Result<CalibrationReport> {
    if replicates < 2 {
        return invalid("calibration needs at least two replicates");
    }
    if grid.is_empty() || grid.iter().any(|k| !(*k > 0.0)) {
        return invalid("kappa grid must be nonempty and positive");
    }
    if !noise.has_sampler() {
        return Err(Error::Unsupported(format!("{} noise cannot be simulated", noise.name())));
    }
    let unit = PenaltyConfig::new(1.0, 1.0)?;
    let models_f = model_collection_1d(n, noise, false, opts.max_m)?.ms();
    let models_big_f: Vec<u32> = match model_collection_2d(n, noise, opts.max_m) {
        Ok(c) => c.iter().map(|e| e.m).collect(),
        Err(Error::NoAdmissibleModel(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let profiles: Vec<(Profile, Profile)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let y = replicate_observations(model, noise, base_seed, r, n)?;
            let f = select_among_1d(&y[..n], &models_f, noise, &unit, opts)?;
            let pf = f.fits.iter().map(|e| (e.m, e.contrast_value, e.penalty_value)).collect();
            let pb = if models_big_f.is_empty() {
                Vec::new()
            } else {
                let b = select_among_2d(&y, &models_big_f, noise, &unit, opts)?;
                b.fits.iter().map(|e| (e.m, e.contrast_value, e.penalty_value)).collect()
            };
            Ok((pf, pb))
        })
        .collect::<Result<_>>()?;
    let (pf, pb): (Vec<Profile>, Vec<Profile>) = profiles.into_iter().unzip();
    let curve_f = curve(&pf, grid);
    let curve_big_f = if models_big_f.is_empty() { Vec::new() } else { curve(&pb, grid) };
    let kappa1 = recommend(&models_f, &curve_f);
    let kappa2 = if models_big_f.is_empty() {
        Recommendation::Unidentified(format!("no resolution satisfies Delta(m)^2 <= {n}"))
    } else {
        recommend(&models_big_f, &curve_big_f)
    };
    Ok(CalibrationReport { n, models_f, models_big_f, curve_f, curve_big_f, kappa1, kappa2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(kappa: f64, modal_m: u32, agreement: f64) -> StabilityPoint {
        StabilityPoint { kappa, modal_m, agreement, choices: Vec::new() }
    }

    #[test]
    fn recommends_start_of_stable_tail() {
        let c = vec![pt(0.5, 8, 0.4), pt(1.0, 3, 0.7), pt(2.0, 2, 0.95), pt(4.0, 2, 1.0)];
        assert_eq!(recommend(&[1, 2, 3, 8], &c), Recommendation::Identified(2.0));
    }

    #[test]
    fn single_model_is_unidentified() {
        let c = vec![pt(1.0, 1, 1.0)];
        assert!(matches!(recommend(&[1], &c), Recommendation::Unidentified(_)));
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = kappa_grid(0.25, 64.0, 9).unwrap();
        assert!((g[0] - 0.25).abs() < 1e-15 && (g[8] - 64.0).abs() < 1e-12);
        assert!((g[4] - 4.0).abs() < 1e-12);
    }
}
