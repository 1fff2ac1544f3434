//! Stationary samplers and closed-form truth for the example chains, and the
//! additive-noise observation layer.
//!
//! Randomness comes from ChaCha8 (a counter-based generator). Every stream is
//! keyed by `(base seed, role, replicate, n)` through a SplitMix64 hash, so the
//! latent path and the noise never share a stream and replicates can run in
//! any order.

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Purpose of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Latent = 1,
    Noise = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(base_seed, role, replicate, n)` stream.
pub fn stream_rng(base_seed: u64, role: StreamRole, replicate: u64, n: u64) -> ChaCha8Rng {
    let mut state = splitmix64(base_seed);
    for word in [role as u64, replicate, n] {
        state = splitmix64(state ^ splitmix64(word));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// `(delta, r, a)` with `int |f*(u)|^2 (u^2+1)^delta e^{2a|u|^r} du < inf`
/// (the two-dimensional analogue uses `(u^2+v^2)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessClass {
    pub delta: f64,
    pub r: f64,
    /// Unused when `r = 0`.
    pub a: f64,
}

impl SmoothnessClass {
    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 0.0) || !self.delta.is_finite() {
            return invalid("smoothness class needs r >= 0");
        }
        if self.r == 0.0 && self.delta <= 0.5 {
            return invalid(format!("r = 0 requires delta > 1/2, got {}", self.delta));
        }
        if self.r > 0.0 && !(self.a > 0.0) {
            return invalid("r > 0 requires a > 0");
        }
        Ok(())
    }
}

/// Which true density to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// `f(x)`.
    Stationary,
    /// `F(x, y)`.
    Joint,
    /// `Pi(x, y)`.
    Transition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainModel {
    /// `X_{n+1} = alpha X_n + beta + eta`, `eta ~ N(0, sigma^2)`.
    Ar1 { alpha: f64, beta: f64, sigma: f64 },
    /// Squared norm of `kappa` discretely sampled OU components.
    Cir { theta: f64, kappa: u32, sigma0: f64, tau: f64 },
    /// Log-volatility: OU `dV = theta V dt + sigma dB` sampled every `tau`.
    Sv { theta: f64, sigma: f64, tau: f64 },
}

fn gauss_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Density of the noncentral chi-square with `k` degrees of freedom and
/// noncentrality `lambda` at `z`, by its Poisson mixture of central
/// chi-square densities. Each central density with `k >= 2` is bounded by 1/2,
/// so stopping once the Poisson mass left is below `2e-12` bounds the omitted
/// tail by `1e-12`.
pub fn noncentral_chi2_pdf(z: f64, k: f64, lambda: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    if z == 0.0 {
        return if k == 2.0 { 0.5 * (-lambda / 2.0).exp() } else if k < 2.0 { f64::INFINITY } else { 0.0 };
    }
    let half = lambda / 2.0;
    let mut sum = 0.0;
    let mut mass = 0.0;
    let mut i = 0u32;
    loop {
        let fi = i as f64;
        let log_pois = if half > 0.0 { -half + fi * half.ln() - libm::lgamma(fi + 1.0) } else if i == 0 { 0.0 } else { f64::NEG_INFINITY };
        let nu = k + 2.0 * fi;
        let log_chi = (nu / 2.0 - 1.0) * z.ln() - z / 2.0 - (nu / 2.0) * std::f64::consts::LN_2 - libm::lgamma(nu / 2.0);
        let w = log_pois.exp();
        mass += w;
        sum += (log_pois + log_chi).exp();
        if (fi > half && 1.0 - mass < 2e-12) || i > 100_000 || (half == 0.0) {
            break;
        }
        i += 1;
    }
    sum
}

impl ChainModel {
    pub fn ar1(alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        if !(alpha.abs() < 1.0 && sigma > 0.0 && beta.is_finite() && sigma.is_finite()) {
            return invalid("AR(1) needs |alpha| < 1 and sigma > 0");
        }
        Ok(Self::Ar1 { alpha, beta, sigma })
    }

    pub fn cir(theta: f64, kappa: u32, sigma0: f64, tau: f64) -> Result<Self> {
        if !(theta < 0.0 && kappa >= 2 && sigma0 > 0.0 && tau > 0.0) || !(theta.is_finite() && sigma0.is_finite() && tau.is_finite()) {
            return invalid("CIR needs theta < 0, integer kappa >= 2, sigma0 > 0, tau > 0");
        }
        Ok(Self::Cir { theta, kappa, sigma0, tau })
    }

    pub fn sv(theta: f64, sigma: f64, tau: f64) -> Result<Self> {
        if !(theta < 0.0 && sigma > 0.0 && tau > 0.0) || !(theta.is_finite() && sigma.is_finite() && tau.is_finite()) {
            return invalid("SV needs theta < 0, sigma > 0, tau > 0");
        }
        Ok(Self::Sv { theta, sigma, tau })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ar1 { .. } => "ar1",
            Self::Cir { .. } => "cir",
            Self::Sv { .. } => "sv",
        }
    }

    /// `(alpha, beta, innovation sd)` for chains that are Gaussian AR(1).
    pub fn as_ar1(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Self::Ar1 { alpha, beta, sigma } => Some((alpha, beta, sigma)),
            Self::Sv { theta, sigma, tau } => {
                let var = sigma * sigma * ((2.0 * theta * tau).exp() - 1.0) / (2.0 * theta);
                Some(((theta * tau).exp(), 0.0, var.sqrt()))
            }
            Self::Cir { .. } => None,
        }
    }

    /// Autoregression `e^{theta tau}` and innovation variance `beta^2` of each CIR component.
    fn cir_parts(theta: f64, sigma0: f64, tau: f64) -> (f64, f64) {
        let rho = (theta * tau).exp();
        (rho, sigma0 * sigma0 * ((2.0 * theta * tau).exp() - 1.0) / (2.0 * theta))
    }

    pub fn stationary_mean(&self) -> f64 {
        match *self {
            Self::Cir { theta, kappa, sigma0, .. } => kappa as f64 * sigma0 * sigma0 / (2.0 * theta.abs()),
            _ => {
                let (alpha, beta, _) = self.as_ar1().unwrap();
                beta / (1.0 - alpha)
            }
        }
    }

    pub fn stationary_sd(&self) -> f64 {
        match *self {
            Self::Cir { theta, kappa, sigma0, .. } => {
                // Gamma(kappa/2, rate |theta|/sigma0^2): variance shape / rate^2.
                let rate = theta.abs() / (sigma0 * sigma0);
                (kappa as f64 / 2.0).sqrt() / rate
            }
            _ => {
                let (alpha, _, sigma) = self.as_ar1().unwrap();
                sigma / (1.0 - alpha * alpha).sqrt()
            }
        }
    }

    /// Stationary path `X_1..X_{len}`.
    pub fn simulate_latent<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        match *self {
            Self::Cir { theta, kappa, sigma0, tau } => {
                let (rho, beta2) = Self::cir_parts(theta, sigma0, tau);
                let beta = beta2.sqrt();
                let sd0 = sigma0 / (2.0 * theta.abs()).sqrt();
                let mut z: Vec<f64> = (0..kappa).map(|_| sd0 * rng.sample::<f64, _>(StandardNormal)).collect();
                for step in 0..len {
                    if step > 0 {
                        for c in z.iter_mut() {
                            *c = rho * *c + beta * rng.sample::<f64, _>(StandardNormal);
                        }
                    }
                    out.push(z.iter().map(|c| c * c).sum());
                }
            }
            _ => {
                let (alpha, beta, sigma) = self.as_ar1().unwrap();
                let mut x = self.stationary_mean() + self.stationary_sd() * rng.sample::<f64, _>(StandardNormal);
                for step in 0..len {
                    if step > 0 {
                        x = alpha * x + beta + sigma * rng.sample::<f64, _>(StandardNormal);
                    }
                    out.push(x);
                }
            }
        }
        out
    }

    pub fn true_f(&self, x: f64) -> f64 {
        match *self {
            Self::Cir { theta, kappa, sigma0, .. } => {
                if x <= 0.0 {
                    return if x == 0.0 && kappa == 2 { theta.abs() / (sigma0 * sigma0) } else { 0.0 };
                }
                let k = kappa as f64 / 2.0;
                let rate = theta.abs() / (sigma0 * sigma0);
                (k * rate.ln() + (k - 1.0) * x.ln() - rate * x - libm::lgamma(k)).exp()
            }
            _ => gauss_pdf(x, self.stationary_mean(), self.stationary_sd()),
        }
    }

    pub fn true_pi(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Cir { theta, kappa, sigma0, tau } => {
                if x < 0.0 {
                    return 0.0;
                }
                let (_, beta2) = Self::cir_parts(theta, sigma0, tau);
                let lambda = (2.0 * theta * tau).exp() * x / beta2;
                noncentral_chi2_pdf(y / beta2, kappa as f64, lambda) / beta2
            }
            _ => {
                let (alpha, beta, sigma) = self.as_ar1().unwrap();
                gauss_pdf(y, alpha * x + beta, sigma)
            }
        }
    }

    pub fn true_joint(&self, x: f64, y: f64) -> f64 {
        let f = self.true_f(x);
        if f == 0.0 { 0.0 } else { f * self.true_pi(x, y) }
    }

    pub fn true_density(&self, which: DensityKind, x: f64, y: f64) -> f64 {
        match which {
            DensityKind::Stationary => self.true_f(x),
            DensityKind::Joint => self.true_joint(x, y),
            DensityKind::Transition => self.true_pi(x, y),
        }
    }

    /// `|f*(u)|^2`.
    pub fn f_cf_abs2(&self, u: f64) -> f64 {
        match *self {
            Self::Cir { theta, kappa, sigma0, .. } => {
                let c = sigma0 * sigma0 / theta.abs();
                (1.0 + c * c * u * u).powf(-(kappa as f64) / 2.0)
            }
            _ => {
                let s = self.stationary_sd();
                (-s * s * u * u).exp()
            }
        }
    }

    /// `|F*(u, v)|^2`.
    pub fn joint_cf_abs2(&self, u: f64, v: f64) -> f64 {
        match *self {
            Self::Cir { theta, kappa, sigma0, tau } => {
                let c = sigma0 * sigma0 / theta.abs();
                let re = 1.0 - (1.0 - (2.0 * theta * tau).exp()) * c * c * u * v;
                let im = c * (u + v);
                (re * re + im * im).powf(-(kappa as f64) / 2.0)
            }
            _ => {
                let (alpha, _, _) = self.as_ar1().unwrap();
                let s2 = self.stationary_sd().powi(2);
                (-s2 * (u * u + v * v + 2.0 * alpha * u * v)).exp()
            }
        }
    }

    /// Smoothness of `f` and of `F`.
    ///
    /// For the Gaussian chains the joint exponent is `A = sigma^2 / 2` (innovation
    /// variance), which reproduces the displayed transition rate
    /// `n^{-sigma^2/(sigma^2 + 2 tau^2)}` under Gaussian noise of variance `tau^2`.
    pub fn smoothness(&self) -> (SmoothnessClass, SmoothnessClass) {
        match *self {
            Self::Cir { kappa, .. } => {
                let d = (kappa as f64 - 1.0) / 2.0;
                (SmoothnessClass { delta: d, r: 0.0, a: 0.0 }, SmoothnessClass { delta: d, r: 0.0, a: 0.0 })
            }
            _ => {
                let (_, _, sigma) = self.as_ar1().unwrap();
                let s = self.stationary_sd();
                (
                    SmoothnessClass { delta: 0.5, r: 2.0, a: s * s / 2.0 },
                    SmoothnessClass { delta: 0.5, r: 2.0, a: sigma * sigma / 2.0 },
                )
            }
        }
    }

    /// `E[X_{n+1} | X_n = x]`.
    pub fn conditional_mean(&self, x: f64) -> f64 {
        match *self {
            Self::Cir { theta, kappa, sigma0, tau } => {
                let (_, beta2) = Self::cir_parts(theta, sigma0, tau);
                (2.0 * theta * tau).exp() * x + kappa as f64 * beta2
            }
            _ => {
                let (alpha, beta, _) = self.as_ar1().unwrap();
                alpha * x + beta
            }
        }
    }
}

/// AR(1) path `X_1..X_{n+1}` started from its stationary law.
pub fn simulate_ar1(alpha: f64, beta: f64, sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let model = ChainModel::ar1(alpha, beta, sigma)?;
    Ok(model.simulate_latent(n + 1, &mut stream_rng(seed, StreamRole::Latent, 0, n as u64)))
}

pub fn simulate_cir(theta: f64, kappa: u32, sigma0: f64, tau: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let model = ChainModel::cir(theta, kappa, sigma0, tau)?;
    Ok(model.simulate_latent(n + 1, &mut stream_rng(seed, StreamRole::Latent, 0, n as u64)))
}

/// Latent log-volatility path and observations `Y = X + ln(eta^2)`.
pub fn simulate_sv(theta: f64, sigma: f64, tau: f64, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let model = ChainModel::sv(theta, sigma, tau)?;
    let x = model.simulate_latent(n + 1, &mut stream_rng(seed, StreamRole::Latent, 0, n as u64));
    let y = add_noise(&x, &NoiseModel::log_chi_square(), seed)?;
    Ok((x, y))
}

/// `Y_i = X_i + eps_i` with the noise drawn from its own stream.
pub fn add_noise(path: &[f64], noise: &NoiseModel, seed: u64) -> Result<Vec<f64>> {
    add_noise_with(path, noise, &mut stream_rng(seed, StreamRole::Noise, 0, (path.len() as u64).saturating_sub(1)))
}

pub fn add_noise_with<R: Rng>(path: &[f64], noise: &NoiseModel, rng: &mut R) -> Result<Vec<f64>> {
    if !noise.has_sampler() {
        return Err(Error::Unsupported(format!("{} noise has no sampler", noise.name())));
    }
    Ok(path.iter().map(|x| x + noise.sample(rng).expect("sampler")).collect())
}

/// Pointwise truth; `Stationary` ignores the second coordinate.
pub fn true_density_eval(model: &ChainModel, which: DensityKind, points: &[(f64, f64)]) -> Vec<f64> {
    points.iter().map(|&(x, y)| model.true_density(which, x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream_rng(7, StreamRole::Latent, 0, 10).random();
        let b: u64 = stream_rng(7, StreamRole::Noise, 0, 10).random();
        let c: u64 = stream_rng(7, StreamRole::Latent, 0, 10).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn central_case_reduces_to_chi2() {
        // k = 2: density e^{-z/2} / 2.
        let v = noncentral_chi2_pdf(1.3, 2.0, 0.0);
        assert!((v - 0.5 * (-0.65f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn smoothness_class_rules() {
        assert!(SmoothnessClass { delta: 0.5, r: 0.0, a: 0.0 }.validate().is_err());
        assert!(SmoothnessClass { delta: 1.0, r: 0.0, a: 0.0 }.validate().is_ok());
        assert!(SmoothnessClass { delta: 0.5, r: 2.0, a: 0.3 }.validate().is_ok());
    }
}
