use chaindecon::fourier::EmpiricalCf;
use chaindecon::noise::NoiseModel;
use chaindecon::simulate::*;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

fn lag1_corr(v: &[f64]) -> f64 {
    let (a, b) = (&v[..v.len() - 1], &v[1..]);
    let (ma, mb) = (mean(a), mean(b));
    let c: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    c / (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() * b.iter().map(|y| (y - mb).powi(2)).sum::<f64>()).sqrt()
}

/// Long-run standard error of the mean of an AR(1)-like series with lag-one correlation `rho`.
fn se_mean(v: &[f64], rho: f64) -> f64 {
    (var(v) / v.len() as f64 * (1.0 + rho) / (1.0 - rho)).sqrt()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let k = k + k % 2;
    let h = (b - a) / k as f64;
    let mut s = f(a) + f(b);
    for i in 1..k {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn ar1_moments_and_autocorrelation() {
    let x = simulate_ar1(0.5, 1.0, 1.0, 100_000, 1).unwrap();
    assert_eq!(x.len(), 100_001);
    assert!((mean(&x) - 2.0).abs() <= 4.0 * se_mean(&x, 0.5));
    // Var of the sample variance of a Gaussian AR(1): 2 s^4 / n (1 + a^2) / (1 - a^2).
    let s2 = 4.0 / 3.0;
    let se_var = (2.0 * s2 * s2 / x.len() as f64 * 1.25 / 0.75).sqrt();
    assert!((var(&x) - s2).abs() <= 4.0 * se_var);
    assert!((lag1_corr(&x) - 0.5).abs() <= 4.0 * (0.75 / x.len() as f64).sqrt());

    let z = simulate_ar1(0.0, 0.3, 2.0, 100_000, 2).unwrap();
    assert!(lag1_corr(&z).abs() <= 4.0 / (z.len() as f64).sqrt());
    assert!((mean(&z) - 0.3).abs() <= 4.0 * se_mean(&z, 0.0));

    // Shifting by one index leaves the marginal moments unchanged.
    let (a, b) = (&x[..100_000], &x[1..]);
    assert!((mean(a) - mean(b)).abs() <= 4.0 * se_mean(a, 0.5) / 100.0 + 1e-4);
    assert!(simulate_ar1(1.0, 0.0, 1.0, 10, 1).is_err());
    assert!(simulate_ar1(0.5, 0.0, 0.0, 10, 1).is_err());
}

#[test]
fn cir_stationary_law_and_conditional_mean() {
    let (theta, kappa, sigma0, tau) = (-1.0, 2u32, 1.0, 1.0);
    let x = simulate_cir(theta, kappa, sigma0, tau, 100_000, 3).unwrap();
    let rho = (2.0f64 * theta * tau).exp();
    assert!(x.iter().all(|v| *v >= 0.0));
    assert!((mean(&x) - 1.0).abs() <= 4.0 * se_mean(&x, rho));

    // Exp(1) marginal: Kolmogorov-Smirnov on a thinned sample of 10^4 points.
    let mut s: Vec<f64> = x.iter().step_by(10).take(10_000).cloned().collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = 1.0 - (-v).exp();
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0f64, f64::max);
    assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");

    // Regression of X_{n+1} on X_n against e^{2 theta tau} x + kappa beta^2 (robust standard errors).
    let beta2 = sigma0 * sigma0 * (rho - 1.0) / (2.0 * theta);
    let (a, b) = (&x[..x.len() - 1], &x[1..]);
    let (ma, mb) = (mean(a), mean(b));
    let sxx: f64 = a.iter().map(|v| (v - ma).powi(2)).sum();
    let slope = a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / sxx;
    let icpt = mb - slope * ma;
    let resid: Vec<f64> = a.iter().zip(b).map(|(u, v)| v - icpt - slope * u).collect();
    let se_slope = (a.iter().zip(&resid).map(|(u, r)| ((u - ma) * r).powi(2)).sum::<f64>()).sqrt() / sxx;
    assert!((slope - rho).abs() <= 4.0 * se_slope, "slope {slope} vs {rho}");
    let model = ChainModel::cir(theta, kappa, sigma0, tau).unwrap();
    for xv in [0.2, 1.0, 3.0] {
        let pred = icpt + slope * xv;
        let se = se_slope * (xv - ma).abs() + (var(&resid) / a.len() as f64).sqrt();
        assert!((pred - model.conditional_mean(xv)).abs() <= 4.0 * se, "x = {xv}");
    }
    assert!((model.conditional_mean(1.0) - (rho + kappa as f64 * beta2)).abs() < 1e-15);
    assert!(simulate_cir(1.0, 2, 1.0, 1.0, 5, 0).is_err());
    assert!(simulate_cir(-1.0, 1, 1.0, 1.0, 5, 0).is_err());
}

#[test]
fn sv_latent_law_and_log_chi_square_noise() {
    let (theta, sigma, tau) = (-0.5, 1.0, 1.0);
    let (x, y) = simulate_sv(theta, sigma, tau, 100_000, 4).unwrap();
    let rho = (theta * tau).exp();
    let s2 = sigma * sigma / (2.0 * theta.abs());
    let se_var = (2.0 * s2 * s2 / x.len() as f64 * (1.0 + rho * rho) / (1.0 - rho * rho)).sqrt();
    assert!((var(&x) - s2).abs() <= 4.0 * se_var);

    let eps: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
    let se = (var(&eps) / eps.len() as f64).sqrt();
    assert!((mean(&eps) + 1.270_362_845_461_478_2).abs() <= 4.0 * se);

    let cf = EmpiricalCf::new(&eps).unwrap();
    let q = NoiseModel::log_chi_square();
    for u in [1.0, 3.0, 5.0] {
        // q*(u) = E e^{-iu eps}.
        let got = cf.eval(-u);
        let expect = q.cf(u);
        let n = eps.len() as f64;
        let vc = eps.iter().map(|e| (u * e).cos()).map(|c| (c - got.re).powi(2)).sum::<f64>() / n;
        let vs = eps.iter().map(|e| (u * e).sin()).map(|s| (s + got.im).powi(2)).sum::<f64>() / n;
        assert!((got.re - expect.re).abs() <= 4.0 * (vc / n).sqrt(), "u = {u}");
        assert!((got.im - expect.im).abs() <= 4.0 * (vs / n).sqrt(), "u = {u}");
    }
}

#[test]
fn additive_noise_layer() {
    let x = simulate_ar1(0.5, 0.0, 1.0, 100_000, 6).unwrap();
    assert_eq!(add_noise(&x, &NoiseModel::identity(), 1).unwrap(), x);
    for (noise, target) in [(NoiseModel::laplace(), 2.0), (NoiseModel::gaussian(0.7).unwrap(), 0.49)] {
        let y = add_noise(&x, &noise, 7).unwrap();
        let (mx, my) = (mean(&x), mean(&y));
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (b - my).powi(2) - (a - mx).powi(2)).collect();
        let se = (var(&d) / d.len() as f64).sqrt();
        assert!((var(&y) - var(&x) - target).abs() <= 4.0 * se, "{}", noise.name());
        let eps: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let (me, sx, se_) = (mean(&eps), var(&x).sqrt(), var(&eps).sqrt());
        let c = x.iter().zip(&eps).map(|(a, e)| (a - mx) * (e - me)).sum::<f64>() / (x.len() as f64 * sx * se_);
        assert!(c.abs() <= 4.0 / (x.len() as f64).sqrt());
    }
    let t = chaindecon::noise::CfTable::new(vec![0.0, 1.0], vec![1.0, 0.5], vec![0.0, 0.0]).unwrap();
    let user = NoiseModel::user_table(t, chaindecon::noise::NoiseSmoothness::new(1.0, 0.0, 0.0, 1.0, 1.0).unwrap());
    assert!(matches!(add_noise(&x, &user, 1), Err(chaindecon::Error::Unsupported(_))));
}

#[test]
fn seeds_are_reproducible_and_streams_disjoint() {
    assert_eq!(simulate_ar1(0.5, 0.0, 1.0, 1000, 9).unwrap(), simulate_ar1(0.5, 0.0, 1.0, 1000, 9).unwrap());
    assert_ne!(simulate_ar1(0.5, 0.0, 1.0, 1000, 9).unwrap(), simulate_ar1(0.5, 0.0, 1.0, 1000, 10).unwrap());
    let (x1, y1) = simulate_sv(-0.5, 1.0, 1.0, 500, 3).unwrap();
    let (x2, y2) = simulate_sv(-0.5, 1.0, 1.0, 500, 3).unwrap();
    assert_eq!((x1, y1), (x2, y2));
    use rand::RngCore;
    let a = stream_rng(5, StreamRole::Latent, 0, 100).next_u64();
    let b = stream_rng(5, StreamRole::Noise, 0, 100).next_u64();
    let c = stream_rng(5, StreamRole::Latent, 1, 100).next_u64();
    assert!(a != b && a != c && b != c);
}

#[test]
fn closed_form_truth() {
    let ar = ChainModel::ar1(0.5, 1.0, 1.0).unwrap();
    let s = (4.0f64 / 3.0).sqrt();
    assert!((ar.true_f(2.0) - 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-15);
    let cir = ChainModel::cir(-1.5, 2, 1.0, 0.5).unwrap();
    for x in [0.0, 0.4, 2.0] {
        assert!((cir.true_f(x) - 1.5 * (-1.5 * x).exp()).abs() < 1e-14);
    }
    assert_eq!(cir.true_f(-0.1), 0.0);
    let pts = [(0.5, 0.7), (1.0, 2.0)];
    let v = true_density_eval(&cir, DensityKind::Joint, &pts);
    for ((x, y), f) in pts.iter().zip(v) {
        assert!((f - cir.true_f(*x) * cir.true_pi(*x, *y)).abs() < 1e-15);
    }
}

#[test]
fn joint_density_marginalizes_to_stationary_density() {
    let models = [
        ChainModel::ar1(0.5, 0.0, 1.0).unwrap(),
        ChainModel::ar1(-0.7, 0.4, 0.6).unwrap(),
        ChainModel::cir(-1.0, 2, 1.0, 1.0).unwrap(),
        ChainModel::cir(-0.5, 3, 0.8, 0.4).unwrap(),
        ChainModel::sv(-0.5, 1.0, 1.0).unwrap(),
    ];
    let mut rng = stream_rng(1, StreamRole::Latent, 0, 0);
    use rand::Rng;
    for model in models {
        let (mu, sd) = (model.stationary_mean(), model.stationary_sd());
        let (lo, hi) = match model {
            ChainModel::Cir { .. } => (0.0, mu + 40.0 * sd),
            _ => (mu - 12.0 * sd, mu + 12.0 * sd),
        };
        for _ in 0..20 {
            let x = match model {
                ChainModel::Cir { .. } => rng.random_range(0.05..mu + 2.0 * sd),
                _ => mu + sd * rng.random_range(-2.0..2.0),
            };
            let marg = match model {
                // y = t^2 removes the square-root behaviour at the origin.
                ChainModel::Cir { .. } => simpson(|t| 2.0 * t * model.true_joint(x, t * t), 0.0, hi.sqrt(), 40_000),
                _ => simpson(|y| model.true_joint(x, y), lo, hi, 40_000),
            };
            assert!((marg - model.true_f(x)).abs() < 1e-6, "{} at x = {x}: {marg} vs {}", model.name(), model.true_f(x));
        }
        let total = match model {
            ChainModel::Cir { .. } => simpson(|t| 2.0 * t * model.true_f(t * t), 0.0, hi.sqrt(), 40_000),
            _ => simpson(|x| model.true_f(x), lo, hi, 40_000),
        };
        assert!((total - 1.0).abs() < 1e-6, "{}", model.name());
    }
}

#[test]
fn smoothness_metadata() {
    let (f, big) = ChainModel::ar1(0.5, 0.0, 1.0).unwrap().smoothness();
    assert_eq!((f.delta, f.r), (0.5, 2.0));
    assert!((f.a - 1.0 / (2.0 * 0.75)).abs() < 1e-15);
    assert_eq!((big.delta, big.r), (0.5, 2.0));
    let (f, big) = ChainModel::cir(-1.0, 4, 1.0, 1.0).unwrap().smoothness();
    assert_eq!((f.delta, f.r, big.delta, big.r), (1.5, 0.0, 1.5, 0.0));
    assert!(f.validate().is_ok());
    // kappa = 2 gives delta = 1/2, outside the r = 0 classes.
    let (f, _) = ChainModel::cir(-1.0, 2, 1.0, 1.0).unwrap().smoothness();
    assert!(f.validate().is_err());
    let (f, _) = ChainModel::sv(-0.8, 1.2, 1.0).unwrap().smoothness();
    assert!((f.a - 1.44 / (4.0 * 0.8)).abs() < 1e-14);
}
