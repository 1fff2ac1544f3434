//! Flat `key = value` experiment configuration with dotted section names.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys and
//! repeated keys are rejected so that typos surface as validation errors.

use crate::CliError;
use chaindecon::calibrate::kappa_grid;
use chaindecon::estimator1d::{FitOptions, PenaltyConfig};
use chaindecon::noise::{CfTable, NoiseModel, NoiseSmoothness};
use chaindecon::risk::StudySpec;
use chaindecon::simulate::ChainModel;
use chaindecon::transition::Interval;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

const KNOWN_KEYS: &[&str] = &[
    "chain.kind",
    "chain.alpha",
    "chain.beta",
    "chain.sigma",
    "chain.theta",
    "chain.kappa",
    "chain.sigma0",
    "chain.tau",
    "noise.kind",
    "noise.tau",
    "noise.table",
    "noise.gamma",
    "noise.s",
    "noise.b",
    "noise.k0",
    "noise.k1",
    "penalty.kappa1",
    "penalty.kappa2",
    "fit.grid_points",
    "fit.max_m",
    "simulate.n",
    "seed",
    "study.n_list",
    "study.replicates",
    "study.grid_points",
    "study.reference_n",
    "transition.b",
    "transition.grid",
    "calibrate.n",
    "calibrate.replicates",
    "calibrate.kappa_min",
    "calibrate.kappa_max",
    "calibrate.kappa_points",
];

/// Parsed but untyped entries, remembering the line of each key.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(CliError::Validation(format!("config line {}: unknown key '{k}'", i + 1)));
            }
            if entries.insert(k.clone(), (i + 1, v)).is_some() {
                return Err(CliError::Validation(format!("config line {}: key '{k}' repeated", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), (0, value));
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Validation(format!("config line {line}: cannot parse '{v}' for {key}"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?.ok_or_else(|| CliError::Validation(format!("missing required key {key}")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| CliError::Validation(format!("config line {line}: cannot parse list '{v}' for {key}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BPolicy {
    /// Quantile rule applied to the data (or a population sample in studies).
    Auto,
    Fixed(Interval),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySection {
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub grid_points: usize,
    pub reference_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateSection {
    pub n: usize,
    pub replicates: usize,
    pub kappa_grid: Vec<f64>,
}

/// Typed experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub chain: ChainModel,
    pub noise: NoiseModel,
    pub penalty: PenaltyConfig,
    pub fit: FitOptions,
    pub simulate_n: Option<usize>,
    pub seed: u64,
    pub study: Option<StudySection>,
    pub b_policy: BPolicy,
    pub pi_grid: usize,
    pub calibrate: Option<CalibrateSection>,
}

fn lib(e: chaindecon::Error) -> CliError {
    CliError::Validation(e.to_string())
}

fn chain_from(raw: &RawConfig) -> Result<ChainModel, CliError> {
    let kind: String = raw.require("chain.kind")?;
    match kind.as_str() {
        "ar1" => ChainModel::ar1(
            raw.get("chain.alpha")?.unwrap_or(0.5),
            raw.get("chain.beta")?.unwrap_or(0.0),
            raw.get("chain.sigma")?.unwrap_or(1.0),
        ),
        "cir" => ChainModel::cir(
            raw.require("chain.theta")?,
            raw.require("chain.kappa")?,
            raw.get("chain.sigma0")?.unwrap_or(1.0),
            raw.get("chain.tau")?.unwrap_or(1.0),
        ),
        "sv" => ChainModel::sv(raw.require("chain.theta")?, raw.require("chain.sigma")?, raw.get("chain.tau")?.unwrap_or(1.0)),
        other => return Err(CliError::Validation(format!("unknown chain.kind '{other}' (ar1, cir, sv)"))),
    }
    .map_err(lib)
}

fn noise_from(raw: &RawConfig, base: &Path) -> Result<NoiseModel, CliError> {
    let kind: String = raw.get("noise.kind")?.ok_or_else(|| CliError::Validation("missing noise specification (noise.kind)".into()))?;
    match kind.as_str() {
        "identity" => Ok(NoiseModel::identity()),
        "laplace" => Ok(NoiseModel::laplace()),
        "gaussian" => NoiseModel::gaussian(raw.require("noise.tau")?).map_err(lib),
        "log_chisq" => Ok(NoiseModel::log_chi_square()),
        "user_table" => {
            let rel: String = raw.require("noise.table")?;
            let path = base.join(rel);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Validation(format!("cannot read noise table {}: {e}", path.display())))?;
            let table = CfTable::from_csv_str(&text).map_err(lib)?;
            let sm = NoiseSmoothness::new(
                raw.require("noise.gamma")?,
                raw.get("noise.s")?.unwrap_or(0.0),
                raw.get("noise.b")?.unwrap_or(0.0),
                raw.get("noise.k0")?.unwrap_or(1.0),
                raw.get("noise.k1")?.unwrap_or(1.0),
            )
            .map_err(lib)?;
            Ok(NoiseModel::user_table(table, sm))
        }
        other => Err(CliError::Validation(format!(
            "unknown noise.kind '{other}' (identity, laplace, gaussian, log_chisq, user_table)"
        ))),
    }
}

impl ExperimentConfig {
    /// `base` resolves relative paths inside the config (the config file's directory).
    pub fn from_raw(raw: &RawConfig, base: &Path) -> Result<Self, CliError> {
        let chain = chain_from(raw)?;
        let noise = noise_from(raw, base)?;
        let penalty = PenaltyConfig::new(raw.get("penalty.kappa1")?.unwrap_or(4.0), raw.get("penalty.kappa2")?.unwrap_or(4.0))
            .map_err(lib)?;
        let mut fit = FitOptions::default();
        if let Some(g) = raw.get::<usize>("fit.grid_points")? {
            if g < 8 {
                return Err(CliError::Validation("fit.grid_points must be at least 8".into()));
            }
            fit.grid_points = g;
        }
        if let Some(m) = raw.get::<u32>("fit.max_m")? {
            if m == 0 {
                return Err(CliError::Validation("fit.max_m must be positive".into()));
            }
            fit.max_m = m;
        }
        let study = match raw.list::<usize>("study.n_list")? {
            None => None,
            Some(n_list) => Some(StudySection {
                n_list,
                replicates: raw.require("study.replicates")?,
                grid_points: raw.get("study.grid_points")?.unwrap_or(1024),
                reference_n: raw.get("study.reference_n")?.unwrap_or(100_000),
            }),
        };
        let b_policy = match raw.raw("transition.b").map(|(_, v)| v.as_str()) {
            None | Some("auto") => BPolicy::Auto,
            Some(_) => {
                let v = raw.list::<f64>("transition.b")?.unwrap();
                if v.len() != 2 {
                    return Err(CliError::Validation("transition.b must be 'auto' or 'lo, hi'".into()));
                }
                BPolicy::Fixed(Interval::new(v[0], v[1]).map_err(lib)?)
            }
        };
        let pi_grid = raw.get("transition.grid")?.unwrap_or(101);
        if pi_grid < 2 {
            return Err(CliError::Validation("transition.grid must be at least 2".into()));
        }
        let calibrate = match raw.get::<usize>("calibrate.n")? {
            None => None,
            Some(n) => Some(CalibrateSection {
                n,
                replicates: raw.get("calibrate.replicates")?.unwrap_or(10),
                kappa_grid: kappa_grid(
                    raw.get("calibrate.kappa_min")?.unwrap_or(0.25),
                    raw.get("calibrate.kappa_max")?.unwrap_or(64.0),
                    raw.get("calibrate.kappa_points")?.unwrap_or(17),
                )
                .map_err(lib)?,
            }),
        };
        Ok(Self {
            chain,
            noise,
            penalty,
            fit,
            simulate_n: raw.get("simulate.n")?,
            seed: raw.get("seed")?.unwrap_or(0),
            study,
            b_policy,
            pi_grid,
            calibrate,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let raw = RawConfig::parse(&text)?;
        Self::from_raw(&raw, path.parent().unwrap_or(Path::new(".")))
    }

    /// Study parameters, validated.
    pub fn study_spec(&self) -> Result<StudySpec, CliError> {
        let s = self.study.as_ref().ok_or_else(|| CliError::Validation("missing study.n_list".into()))?;
        let spec = StudySpec {
            n_list: s.n_list.clone(),
            replicates: s.replicates,
            base_seed: self.seed,
            penalty: self.penalty,
            fit: self.fit,
            grid_points: s.grid_points,
            b: match &self.b_policy {
                BPolicy::Auto => None,
                BPolicy::Fixed(b) => Some(*b),
            },
            reference_n: s.reference_n,
        };
        spec.validate().map_err(lib)?;
        Ok(spec)
    }

    pub fn describe_chain(&self) -> String {
        match self.chain {
            ChainModel::Ar1 { alpha, beta, sigma } => format!("ar1(alpha={alpha}, beta={beta}, sigma={sigma})"),
            ChainModel::Cir { theta, kappa, sigma0, tau } => {
                format!("cir(theta={theta}, kappa={kappa}, sigma0={sigma0}, tau={tau})")
            }
            ChainModel::Sv { theta, sigma, tau } => format!("sv(theta={theta}, sigma={sigma}, tau={tau})"),
        }
    }
}

/// Resolve `--out`, defaulting to the current directory.
pub fn out_dir(out: Option<&PathBuf>) -> PathBuf {
    out.cloned().unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let raw = RawConfig::parse("# c\nchain.kind = ar1\n\nnoise.kind=laplace\nstudy.n_list = 500, 2000\nstudy.replicates = 3\n").unwrap();
        let c = ExperimentConfig::from_raw(&raw, Path::new(".")).unwrap();
        assert_eq!(c.study.unwrap().n_list, vec![500, 2000]);
        assert_eq!(c.penalty, PenaltyConfig::default());
        assert!(RawConfig::parse("chain.knid = ar1").is_err());
        assert!(RawConfig::parse("chain.kind = ar1\nchain.kind = cir").is_err());
        assert!(RawConfig::parse("just words").is_err());
        let raw = RawConfig::parse("chain.kind = ar1").unwrap();
        assert!(matches!(ExperimentConfig::from_raw(&raw, Path::new(".")), Err(CliError::Validation(m)) if m.contains("noise")));
        let raw = RawConfig::parse("chain.kind = ar1\nnoise.kind = laplace\nchain.alpha = x").unwrap();
        assert!(ExperimentConfig::from_raw(&raw, Path::new(".")).is_err());
    }
}
