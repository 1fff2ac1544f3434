use chaindecon::estimator1d::*;
use chaindecon::estimator2d::*;
use chaindecon::fourier::{eval_sinc_basis, SincBasisIndex};
use chaindecon::kernel::DeconvKernel;
use chaindecon::noise::{NoiseModel, NoiseSmoothness, CfTable};
use chaindecon::risk::{bias_big_f, bias_f};
use chaindecon::simulate::{add_noise, simulate_ar1, stream_rng, ChainModel, StreamRole};
use chaindecon::Error;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

fn phi(m: u32, j: i64, x: f64) -> f64 {
    eval_sinc_basis(SincBasisIndex::new(m, j).unwrap(), x)
}

fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, StreamRole::Latent, 0, n as u64);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn window_for(data: &[f64], m: u32) -> Window {
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Window::for_range(m, lo, hi).unwrap()
}

#[test]
fn identity_noise_single_point_gives_basis_values() {
    let y = 0.37;
    for m in [1u32, 3, 8] {
        let w = window_for(&[y], m);
        let a = coefficients_1d(&[y], m, &NoiseModel::identity(), w, &FitOptions::default()).unwrap();
        for (j, v) in w.indices().zip(&a) {
            assert!((v - phi(m, j, y)).abs() < 1e-8);
        }
    }
}

#[test]
fn identity_noise_matches_direct_projection() {
    let data = normal_sample(500, 11);
    for m in [2u32, 8] {
        let w = window_for(&data, m);
        let a = coefficients_1d(&data, m, &NoiseModel::identity(), w, &FitOptions::default()).unwrap();
        for (j, v) in w.indices().zip(&a) {
            let direct = data.iter().map(|&y| phi(m, j, y)).sum::<f64>() / data.len() as f64;
            assert!((v - direct).abs() < 1e-8, "m = {m}, j = {j}");
        }
    }
}

#[test]
fn laplace_coefficient_is_unbiased_for_population_projection() {
    // <N(0,1), phi_{4,0}> = erf(4 pi / sqrt 2) / sqrt(2 pi * 4) by Parseval.
    let m = 4;
    let target = libm::erf(PI * m as f64 / 2f64.sqrt()) / (2.0 * PI * m as f64).sqrt();
    let n = 100_000;
    let x = normal_sample(n, 5);
    let y = add_noise(&x, &NoiseModel::laplace(), 5).unwrap();
    let t_max = y.iter().fold(0.0f64, |a, v| a.max(v.abs())) * m as f64 + 1.0;
    let k = DeconvKernel::build(&NoiseModel::laplace(), m, t_max, 4096).unwrap();
    let v: Vec<f64> = y.iter().map(|&yi| k.v_phi(0, yi).re).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let se = sd / (n as f64).sqrt();
    assert!((mean - target).abs() <= 3.0 * se, "mean {mean}, target {target}, se {se}");
    // Same value through the estimator.
    let w = Window::new(-2, 2).unwrap();
    let a = coefficients_1d(&y, m, &NoiseModel::laplace(), w, &FitOptions::default()).unwrap();
    assert!((a[2] - mean).abs() < 1e-9 * (1.0 + mean.abs()));
}

#[test]
fn coefficients_are_real_for_every_builtin() {
    let x = normal_sample(2000, 3);
    for noise in [NoiseModel::laplace(), NoiseModel::gaussian(0.5).unwrap(), NoiseModel::log_chi_square()] {
        let y = add_noise(&x, &noise, 4).unwrap();
        let w = window_for(&y, 1);
        let (re, im) = coefficients_1d_complex(&y, 1, &noise, w, &FitOptions::default()).unwrap();
        assert!(imag_residue(&re, &im) <= REALNESS_TOL, "{}", noise.name());
    }
}

#[test]
fn duplicating_the_sample_keeps_coefficients() {
    let x = normal_sample(3000, 9);
    let y = add_noise(&x, &NoiseModel::laplace(), 9).unwrap();
    let mut yy = y.clone();
    yy.extend_from_slice(&y);
    let w = window_for(&y, 2);
    let opts = FitOptions::default();
    let a = coefficients_1d(&y, 2, &NoiseModel::laplace(), w, &opts).unwrap();
    let b = coefficients_1d(&yy, 2, &NoiseModel::laplace(), w, &opts).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() <= 1e-13 * (1.0 + p.abs()));
    }
}

#[test]
fn underflowing_noise_cf_is_an_error() {
    let g = NoiseModel::gaussian(3.0).unwrap();
    let r = coefficients_1d(&[0.0, 0.5], 4, &g, Window::new(-8, 8).unwrap(), &FitOptions::default());
    assert!(matches!(r, Err(Error::NoiseCfUnderflow(_))), "{r:?}");
}

#[test]
fn contrast_examples() {
    assert_eq!(contrast_1d(&[1.0, 2.0]), -5.0);
    assert_eq!(contrast_1d(&[0.0; 7]), 0.0);
    assert_eq!(contrast_2d(array![[1.0, 2.0], [0.0, 1.0]].view()), -6.0);
    assert_eq!(contrast_2d(Array2::<f64>::zeros((3, 3)).view()), 0.0);
}

proptest! {
    #[test]
    fn contrast_identities_are_exact(v in prop::collection::vec(-10.0f64..10.0, 1..60)) {
        let norm: f64 = v.iter().map(|a| a * a).sum();
        prop_assert_eq!(contrast_1d(&v), norm - 2.0 * norm);
        let k = (v.len() as f64).sqrt() as usize;
        let a = Array2::from_shape_vec((k, k), v[..k * k].to_vec()).unwrap();
        let n2: f64 = a.iter().map(|x| x * x).sum();
        prop_assert_eq!(contrast_2d(a.view()), n2 - 2.0 * n2);
    }
}

#[test]
fn one_dimensional_collections() {
    let id = NoiseModel::identity();
    assert_eq!(model_collection_1d(10, &id, false, 64).unwrap().ms(), (1..=10).collect::<Vec<_>>());
    assert_eq!(model_collection_1d(28, &NoiseModel::laplace(), false, 64).unwrap().ms(), vec![1]);
    assert!(matches!(model_collection_1d(20, &NoiseModel::laplace(), false, 64), Err(Error::NoAdmissibleModel(20))));
    // n = 10: ln ln 10 = 0.834 and 10 / (ln 10)^2 = 1.886, so only m = 1 (m Delta(m) = m^2).
    assert!(model_collection_1d(10, &id, true, 64).is_err());
    // n = 100: m >= 1.527, m^2 <= 4.715.
    assert_eq!(model_collection_1d(100, &id, true, 64).unwrap().ms(), vec![2]);
    for n in [100usize, 1000, 10_000] {
        for noise in [id.clone(), NoiseModel::laplace(), NoiseModel::gaussian(0.5).unwrap(), NoiseModel::log_chi_square()] {
            let full = match model_collection_1d(n, &noise, false, 64) {
                Ok(c) => c.ms(),
                Err(_) => continue,
            };
            if let Ok(r) = model_collection_1d(n, &noise, true, 64) {
                assert!(r.ms().iter().all(|m| full.contains(m)));
            }
        }
    }
    let c = model_collection_1d(10_000, &NoiseModel::laplace(), false, 64).unwrap();
    assert!(c.models.iter().all(|e| e.delta <= 10_000.0));
}

#[test]
fn restricted_collection_small_n() {
    // ln ln n needs n >= 16 by policy.
    assert!(matches!(model_collection_1d(15, &NoiseModel::identity(), true, 64), Err(Error::InvalidParameter(_))));
    match model_collection_1d(10, &NoiseModel::identity(), true, 64) {
        Err(Error::InvalidParameter(_)) | Err(Error::NoAdmissibleRestrictedModel { .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn penalties() {
    let id = NoiseModel::identity();
    let unit = PenaltyConfig::new(1.0, 1.0).unwrap();
    assert!((penalty_1d(5, &id, &unit, 100).unwrap() - 0.05).abs() < 1e-15);
    assert!((penalty_2d(3, &id, &unit, 100).unwrap() - 0.09).abs() < 1e-15);
    let lap = NoiseModel::laplace();
    assert_eq!(penalty_1d(2, &lap, &unit, 1000).unwrap(), lap.delta(2).unwrap() / 1000.0);
    assert_eq!(penalty_2d(2, &lap, &unit, 1000).unwrap(), lap.delta(2).unwrap().powi(2) / 1000.0);
    // (2 pi)^2 Delta(2) / 10^4 with the reference Delta(2).
    let g = NoiseModel::gaussian(1.0).unwrap();
    let expect = (2.0 * PI).powi(2) * 3_585_797_407_145_402.431_7 / 1e4;
    assert!((penalty_1d(2, &g, &unit, 10_000).unwrap() - expect).abs() / expect < 1e-10);
    assert!(PenaltyConfig::new(0.0, 1.0).is_err());

    // s = 1/2: exponent 1/4 in one dimension and 0 in two.
    let u: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.01).collect();
    let re: Vec<f64> = u.iter().map(|x| (-0.3 * x.sqrt()).exp()).collect();
    let t = CfTable::new(u.clone(), re, vec![0.0; u.len()]).unwrap();
    let half = NoiseModel::user_table(t, NoiseSmoothness::new(0.0, 0.5, 0.3, 1.0, 1.0).unwrap());
    let d = half.delta(1).unwrap();
    assert!((penalty_1d(1, &half, &unit, 50).unwrap() - PI.powf(0.25) * d / 50.0).abs() < 1e-12 * d);
    assert!((penalty_2d(1, &half, &unit, 50).unwrap() - d * d / 50.0).abs() < 1e-12 * d * d);
}

#[test]
fn argmin_prefers_lower_criterion_then_smaller_m() {
    assert_eq!(argmin_criterion(&[(1, -1.0 + 0.1), (2, -0.5 + 0.01)]), Some(0));
    assert_eq!(argmin_criterion(&[(3, -1.0), (2, -1.0)]), Some(1));
    assert_eq!(argmin_criterion(&[]), None);
    let data = normal_sample(300, 1);
    let s = select_among_1d(&data, &[3], &NoiseModel::identity(), &PenaltyConfig::default(), &FitOptions::default()).unwrap();
    assert_eq!(s.estimate().m, 3);
    let series = normal_sample(301, 2);
    let s = select_among_2d(&series, &[2], &NoiseModel::identity(), &PenaltyConfig::default(), &FitOptions::default()).unwrap();
    assert_eq!(s.estimate().m, 2);
}

#[test]
fn evaluation_examples() {
    let w = Window::new(-2, 2).unwrap();
    let mut est = ProjectionEstimate1D { m: 3, window: w, coeffs: vec![0.0; 5], contrast_value: 0.0, penalty_value: 0.0, n: 1 };
    let xs: Vec<f64> = (0..41).map(|i| -2.0 + i as f64 * 0.1).collect();
    assert!(evaluate_1d(&est, &xs).iter().all(|v| *v == 0.0));
    est.coeffs[2] = 1.0;
    for (x, v) in xs.iter().zip(evaluate_1d(&est, &xs)) {
        assert!((v - phi(3, 0, *x)).abs() < 1e-14);
    }
    let mut e2 = ProjectionEstimate2D { m: 2, window: w, coeffs: Array2::zeros((5, 5)), contrast_value: 0.0, penalty_value: 0.0, n: 1 };
    assert!(evaluate_2d(&e2, &xs, &xs).iter().all(|v| *v == 0.0));
    e2.coeffs[[2, 2]] = 1.0;
    let g = evaluate_2d(&e2, &xs, &xs);
    for (a, x) in xs.iter().enumerate() {
        for (b, y) in xs.iter().enumerate() {
            assert!((g[[a, b]] - phi(2, 0, *x) * phi(2, 0, *y)).abs() < 1e-14);
        }
    }
}

#[test]
fn squared_norm_by_quadrature_matches_coefficients() {
    // The square of a function of S_m is band-limited to 2 pi m, so the
    // trapezoid rule with step below 1/m is exact up to range truncation.
    let data = normal_sample(200, 21);
    let m = 2;
    let est = fit_1d(&data, m, &NoiseModel::identity(), &PenaltyConfig::default(), &FitOptions::default()).unwrap();
    let h = 0.25;
    let xs: Vec<f64> = (-800_000..=800_000).map(|i| i as f64 * h).collect();
    let q: f64 = evaluate_1d(&est, &xs).iter().map(|v| v * v * h).sum();
    assert!((q - est.norm_sq()).abs() < 1e-6 * est.norm_sq(), "{q} vs {}", est.norm_sq());
}

#[test]
fn joint_coefficients_single_pair_and_norm_bound() {
    let (a, b) = (0.3, -0.8);
    let m = 2;
    let w = Window::for_range(m, -0.8, 0.3).unwrap();
    let c = coefficients_2d(&[a], &[b], m, &NoiseModel::identity(), w, &FitOptions::default()).unwrap();
    for (p, j) in w.indices().enumerate() {
        for (q, k) in w.indices().enumerate() {
            assert!((c[[p, q]] - phi(m, j, a) * phi(m, k, b)).abs() < 1e-8);
        }
    }
    let series = add_noise(&simulate_ar1(0.5, 0.0, 1.0, 3000, 8).unwrap(), &NoiseModel::laplace(), 8).unwrap();
    for m in [1u32, 2, 3] {
        let f = fit_2d(&series, m, &NoiseModel::laplace(), &PenaltyConfig::default(), &FitOptions::default()).unwrap();
        assert!(f.norm_sq() <= NoiseModel::laplace().delta(m).unwrap().powi(2));
        assert_eq!(f.contrast_value, -f.norm_sq());
    }
}

#[test]
fn identity_joint_coefficients_match_pair_histogram() {
    let series = simulate_ar1(0.5, 0.0, 1.0, 400, 3).unwrap();
    let m = 3;
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let w = Window::for_range(m, lo, hi).unwrap();
    let a = coefficients_2d_series(&series, m, &NoiseModel::identity(), w, &FitOptions::default()).unwrap();
    let n = series.len() - 1;
    for (p, j) in w.indices().enumerate().step_by(3) {
        for (q, k) in w.indices().enumerate().step_by(3) {
            let direct: f64 = (0..n).map(|i| phi(m, j, series[i]) * phi(m, k, series[i + 1])).sum::<f64>() / n as f64;
            assert!((a[[p, q]] - direct).abs() < 1e-8);
        }
    }
}

#[test]
fn independent_coordinates_give_rank_one_coefficients() {
    let m = 1;
    let mut worst = 0.0f64;
    for rep in 0..20 {
        let xs = normal_sample(20_000, 100 + rep);
        let ys = normal_sample(20_000, 200 + rep);
        let w = Window::for_range(m, -5.0, 5.0).unwrap();
        let opts = FitOptions::default();
        let a = coefficients_2d(&xs, &ys, m, &NoiseModel::identity(), w, &opts).unwrap();
        let ax = coefficients_1d(&xs, m, &NoiseModel::identity(), w, &opts).unwrap();
        let ay = coefficients_1d(&ys, m, &NoiseModel::identity(), w, &opts).unwrap();
        let mut diff = 0.0;
        for p in 0..w.len() {
            for q in 0..w.len() {
                diff += (a[[p, q]] - ax[p] * ay[q]).powi(2);
            }
        }
        let norm: f64 = a.iter().map(|v| v * v).sum();
        worst = worst.max((diff / norm).sqrt());
    }
    assert!(worst < 0.05, "worst relative deviation {worst}");
}

#[test]
fn reversible_chain_gives_nearly_symmetric_coefficients() {
    let series = simulate_ar1(0.5, 0.0, 1.0, 100_000, 12).unwrap();
    let f = fit_2d(&series, 2, &NoiseModel::identity(), &PenaltyConfig::default(), &FitOptions::default()).unwrap();
    let asym = (&f.coeffs - &f.coeffs.t()).iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(asym / f.norm_sq().sqrt() <= 0.1);
}

#[test]
fn two_dimensional_collections() {
    let id = NoiseModel::identity();
    let ms = |n| model_collection_2d(n, &id, 64).unwrap().iter().map(|e| e.m).collect::<Vec<_>>();
    assert_eq!(ms(10), vec![1, 2, 3]);
    assert_eq!(ms(9), vec![1, 2, 3]);
    // Laplace: Delta(2)^2 = 4.6e5 <= 1e6 < Delta(3)^2 = 2.4e7.
    let lap = model_collection_2d(1_000_000, &NoiseModel::laplace(), 64).unwrap();
    assert_eq!(lap.last().unwrap().m, 2);
    assert!(matches!(model_collection_2d(500, &NoiseModel::laplace(), 64), Err(Error::NoAdmissibleModel(500))));
}

#[test]
fn joint_squared_norm_and_sup_bound() {
    let series = simulate_ar1(0.5, 0.0, 1.0, 2000, 4).unwrap();
    let m = 2;
    let f = fit_2d(&series, m, &NoiseModel::identity(), &PenaltyConfig::default(), &FitOptions::default()).unwrap();
    let h = 0.05;
    let xs: Vec<f64> = (-1200..=1200).map(|i| i as f64 * h).collect();
    let g = evaluate_2d(&f, &xs, &xs);
    let q: f64 = g.iter().map(|v| v * v).sum::<f64>() * h * h;
    assert!((q - f.norm_sq()).abs() < 0.01 * f.norm_sq(), "{q} vs {}", f.norm_sq());
    let sup = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(sup <= m as f64 * f.norm_sq().sqrt() * (1.0 + 1e-9));
}

/// Models whose oracle risk is within 4x of the best, for the density and the joint density.
fn oracle_band(model: &ChainModel, noise: &NoiseModel, n: usize, joint: bool) -> Vec<u32> {
    let rows: Vec<(u32, f64)> = if joint {
        model_collection_2d(n, noise, 64)
            .unwrap()
            .iter()
            .map(|e| (e.m, bias_big_f(model, e.m).unwrap() + e.delta * e.delta / n as f64))
            .collect()
    } else {
        model_collection_1d(n, noise, false, 64)
            .unwrap()
            .models
            .iter()
            .map(|e| (e.m, bias_f(model, e.m).unwrap() + e.delta / n as f64))
            .collect()
    };
    let best = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    rows.iter().filter(|r| r.1 <= 4.0 * best).map(|r| r.0).collect()
}

#[test]
fn selected_models_fall_in_the_oracle_band() {
    let model = ChainModel::ar1(0.5, 0.0, 1.0).unwrap();
    let noise = NoiseModel::laplace();
    let n = 5000;
    let band_f = oracle_band(&model, &noise, n, false);
    let band_big = oracle_band(&model, &noise, n, true);
    let (cfg, opts) = (PenaltyConfig::default(), FitOptions::default());
    let (mut hit_f, mut hit_big) = (0, 0);
    for rep in 0..50u64 {
        let y = add_noise(&simulate_ar1(0.5, 0.0, 1.0, n, 1000 + rep).unwrap(), &noise, 1000 + rep).unwrap();
        let sf = select_and_fit_1d(&y[..n], &noise, &cfg, false, &opts).unwrap();
        hit_f += band_f.contains(&sf.estimate().m) as usize;
        let sb = select_and_fit_2d(&y, &noise, &cfg, &opts).unwrap();
        hit_big += band_big.contains(&sb.estimate().m) as usize;
    }
    assert!(hit_f >= 45, "{hit_f}/50 in {band_f:?}");
    assert!(hit_big >= 45, "{hit_big}/50 in {band_big:?}");
}
