//! Command-line driver: simulate paths, run the estimators on data, run Monte
//! Carlo risk studies and calibrate the penalty constants.
//!
//! Every command parses and validates its whole configuration (and input
//! file) before computing, and computes everything before writing, so a
//! failing run leaves no partial output behind.

pub mod config;

use chaindecon::calibrate::{calibrate_penalty, CalibrationReport, Recommendation, StabilityPoint};
use chaindecon::estimator1d::select_and_fit_1d;
use chaindecon::noise::NoiseModel;
use chaindecon::risk::{
    mc_risk_study, median_by_n, oracle_m_search, predict_rate, predict_rate_transition, rate_fit, transition_surrogate,
    FitRegime, RatePrediction, RiskRecord, Study,
};
use chaindecon::simulate::{add_noise_with, stream_rng, ChainModel, StreamRole};
use chaindecon::transition::{default_b, estimate_transition};
use clap::{Args, Parser, Subcommand};
use config::{BPolicy, ExperimentConfig};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Factor in front of the quotient risk surrogate reported by `risk-study`.
pub const SURROGATE_FACTOR: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) | CliError::Io { .. } => 2,
        }
    }
}

fn runtime(e: chaindecon::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "chaindecon", version, about = "Deconvolution estimators for noisy Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Experiment configuration (flat `key = value` file).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a latent path and its noisy observations.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of transitions (overrides `simulate.n`); the path has n+1 points.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Estimate f, F and the transition density from data.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// CSV with a `y` or `y_i` column; simulated from the config when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Monte Carlo MISE study over `study.n_list`.
    RiskStudy {
        #[command(flatten)]
        common: Common,
        /// Add per-record wall times to the records CSV (not reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Scan the penalty constants on pilot simulations.
    CalibratePenalty {
        #[command(flatten)]
        common: Common,
    },
}

/// Parse arguments (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command; returns the written files.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let common = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Estimate { common, .. }
        | Command::RiskStudy { common, .. }
        | Command::CalibratePenalty { common } => common,
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let pool = match common.threads {
        Some(0) => return Err(CliError::Validation("--threads must be at least 1".into())),
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?,
        ),
        None => None,
    };
    let out = config::out_dir(common.out.as_ref());
    let job = || -> Result<Vec<(String, String)>, CliError> {
        match &cli.command {
            Command::Simulate { n, .. } => cmd_simulate(&cfg, *n),
            Command::Estimate { input, .. } => cmd_estimate(&cfg, input.as_deref()),
            Command::RiskStudy { timings, .. } => cmd_risk_study(&cfg, *timings),
            Command::CalibratePenalty { .. } => cmd_calibrate_penalty(&cfg),
        }
    };
    let files = match pool {
        Some(p) => p.install(job)?,
        None => job()?,
    };
    write_all(&out, &files)
}

fn write_all(out: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_path_buf(), source })?;
    files
        .iter()
        .map(|(name, body)| {
            let path = out.join(name);
            std::fs::write(&path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Ok(path)
        })
        .collect()
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn require_sampler(noise: &NoiseModel) -> Result<(), CliError> {
    if noise.has_sampler() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{} noise cannot be simulated", noise.name())))
    }
}

/// Latent path `X_1..X_{n+1}` and observations, on the same streams as
/// replicate 0 of a study with this seed.
pub fn simulate_path(model: &ChainModel, noise: &NoiseModel, seed: u64, n: usize) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let x = model.simulate_latent(n + 1, &mut stream_rng(seed, StreamRole::Latent, 0, n as u64));
    let y = add_noise_with(&x, noise, &mut stream_rng(seed, StreamRole::Noise, 0, n as u64)).map_err(runtime)?;
    Ok((x, y))
}

fn simulate_n(cfg: &ExperimentConfig, n: Option<usize>) -> Result<usize, CliError> {
    match n.or(cfg.simulate_n) {
        None => Err(CliError::Validation("missing simulate.n (or --n)".into())),
        Some(0) => Err(CliError::Validation("n must be positive".into())),
        Some(n) => Ok(n),
    }
}

pub fn cmd_simulate(cfg: &ExperimentConfig, n: Option<usize>) -> Result<Vec<(String, String)>, CliError> {
    let n = simulate_n(cfg, n)?;
    require_sampler(&cfg.noise)?;
    let (x, y) = simulate_path(&cfg.chain, &cfg.noise, cfg.seed, n)?;
    let mut csv = String::from("i,x_i,y_i\n");
    for (i, (a, b)) in x.iter().zip(&y).enumerate() {
        let _ = writeln!(csv, "{},{},{}", i + 1, fmt_f64(*a), fmt_f64(*b));
    }
    let meta = format!(
        "chain = {}\nnoise = {}\nn = {n}\nrows = {}\nseed = {}\n",
        cfg.describe_chain(),
        cfg.noise.describe(),
        n + 1,
        cfg.seed
    );
    Ok(vec![("path.csv".into(), csv), ("path.meta".into(), meta)])
}

/// Observations from a CSV file with a `y` or `y_i` column.
pub fn read_observations(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "y")
        .or_else(|| headers.iter().position(|h| h == "y_i"))
        .ok_or_else(|| CliError::Validation(format!("{}: no column named y or y_i", path.display())))?;
    let name = headers[col].to_string();
    let mut ys = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // Row numbers count the header as row 1.
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::Validation(format!("{}: row {row}: {e}", path.display())))?;
        let field = rec
            .get(col)
            .ok_or_else(|| CliError::Validation(format!("{}: row {row}, column {name}: missing", path.display())))?;
        let v: f64 = field.parse().map_err(|_| {
            CliError::Validation(format!("{}: row {row}, column {name}: cannot parse '{field}'", path.display()))
        })?;
        if !v.is_finite() {
            return Err(CliError::Validation(format!("{}: row {row}, column {name}: not finite", path.display())));
        }
        ys.push(v);
    }
    if ys.len() < 3 {
        return Err(CliError::Validation(format!("{}: need at least three observations", path.display())));
    }
    Ok(ys)
}

pub fn cmd_estimate(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<Vec<(String, String)>, CliError> {
    let y = match input {
        Some(p) => read_observations(p)?,
        None => {
            let n = simulate_n(cfg, None)?;
            if n < 2 {
                return Err(CliError::Validation("estimation needs simulate.n >= 2".into()));
            }
            require_sampler(&cfg.noise)?;
            simulate_path(&cfg.chain, &cfg.noise, cfg.seed, n)?.1
        }
    };
    let n = y.len() - 1;
    let noise = &cfg.noise;
    let b = match &cfg.b_policy {
        BPolicy::Fixed(b) => *b,
        BPolicy::Auto => default_b(&y, noise).map_err(runtime)?,
    };
    let f_sel = select_and_fit_1d(&y[..n], noise, &cfg.penalty, false, &cfg.fit).map_err(runtime)?;
    let f_hat = f_sel.estimate();
    let tr = estimate_transition(&y, noise, &cfg.penalty, b, &cfg.fit).map_err(runtime)?;
    let big = &tr.big_f_est;

    let grid = b.grid(cfg.pi_grid);
    let pi = tr.eval_grid(&grid, &grid);
    let mut pi_csv = String::from("x,y,pi_hat\n");
    for (a, x) in grid.iter().enumerate() {
        for (c, yy) in grid.iter().enumerate() {
            let _ = writeln!(pi_csv, "{},{},{}", fmt_f64(*x), fmt_f64(*yy), fmt_f64(pi[[a, c]]));
        }
    }
    let pi_meta = format!(
        "m_hat = {}\nM_hat = {}\nB = {}, {}\nn = {n}\nseed = {}\nrestriction_relaxed = {}\n",
        tr.f_est.m,
        big.m,
        fmt_f64(b.lo),
        fmt_f64(b.hi),
        cfg.seed,
        tr.restriction_relaxed
    );

    let d_m = noise.delta(f_hat.m).map_err(runtime)?;
    let d_big = noise.delta(big.m).map_err(runtime)?;
    let check = |ok: bool| if ok { "passed" } else { "FAILED" };
    let mut report = String::new();
    let _ = writeln!(report, "source = {}", input.map(|p| p.display().to_string()).unwrap_or_else(|| "simulated".into()));
    let _ = writeln!(report, "chain = {}", cfg.describe_chain());
    let _ = writeln!(report, "noise = {}", noise.describe());
    let _ = writeln!(report, "n = {n}");
    let _ = writeln!(report, "seed = {}", cfg.seed);
    let _ = writeln!(report, "kappa1 = {}", cfg.penalty.kappa1);
    let _ = writeln!(report, "kappa2 = {}", cfg.penalty.kappa2);
    let _ = writeln!(report, "models_f = {}", join(f_sel.fits.iter().map(|f| f.m)));
    let _ = writeln!(report, "m_hat = {}", f_hat.m);
    let _ = writeln!(report, "pen(m_hat) = {}", fmt_f64(f_hat.penalty_value));
    let _ = writeln!(report, "contrast(m_hat) = {}", fmt_f64(f_hat.contrast_value));
    let _ = writeln!(report, "Delta(m_hat) = {}", fmt_f64(d_m));
    let _ = writeln!(report, "Delta(m_hat) <= n: {}", check(d_m <= n as f64));
    let _ = writeln!(report, "M_hat = {}", big.m);
    let _ = writeln!(report, "Pen(M_hat) = {}", fmt_f64(big.penalty_value));
    let _ = writeln!(report, "contrast(M_hat) = {}", fmt_f64(big.contrast_value));
    let _ = writeln!(report, "Delta(M_hat) = {}", fmt_f64(d_big));
    let _ = writeln!(report, "Delta(M_hat)^2 <= n: {}", check(d_big * d_big <= n as f64));
    let _ = writeln!(report, "m_hat_pi = {}", tr.f_est.m);
    let _ = writeln!(report, "restriction_relaxed = {}", tr.restriction_relaxed);
    let _ = writeln!(report, "B = {}, {}", fmt_f64(b.lo), fmt_f64(b.hi));

    Ok(vec![
        ("f_coefficients.csv".into(), f_hat.to_csv(noise.name())),
        ("F_coefficients.csv".into(), big.to_csv(noise.name())),
        ("pi_grid.csv".into(), pi_csv),
        ("pi_grid.meta".into(), pi_meta),
        ("report.txt".into(), report),
    ])
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Records CSV; `wall_time_s` is appended only when `timings` is set.
pub fn records_csv(records: &[RiskRecord], timings: bool) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "n", "replicate", "seed", "m_hat", "M_hat", "m_hat_pi", "mise_f", "mise_F", "mise_pi", "restriction_relaxed", "error",
    ];
    if timings {
        header.push("wall_time_s");
    }
    let wr = |e: csv::Error| CliError::Runtime(format!("csv: {e}"));
    w.write_record(&header).map_err(wr)?;
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            fmt_opt(r.m_hat),
            fmt_opt(r.big_m_hat),
            fmt_opt(r.m_hat_pi),
            r.mise_f.map(fmt_f64).unwrap_or_default(),
            r.mise_big_f.map(fmt_f64).unwrap_or_default(),
            r.mise_pi.map(fmt_f64).unwrap_or_default(),
            r.restriction_relaxed.to_string(),
            r.error.clone().unwrap_or_default(),
        ];
        if timings {
            row.push(fmt_f64(r.wall_time.as_secs_f64()));
        }
        w.write_record(&row).map_err(wr)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf8 csv"))
}

fn prediction_lines(out: &mut String, target: &str, p: &Result<RatePrediction, String>) {
    match p {
        Ok(p) => {
            let _ = writeln!(out, "predicted.{target}.regime = {}", p.regime);
            let _ = writeln!(out, "predicted.{target}.rate = {}", p.describe());
            let _ = writeln!(out, "predicted.{target}.exponent = {}", p.exponent().map(|e| format!("{e:.6}")).unwrap_or_else(|| "none".into()));
        }
        Err(e) => {
            let _ = writeln!(out, "predicted.{target} = unavailable ({e})");
        }
    }
}

fn fit_lines(out: &mut String, target: &str, medians: &[(usize, f64)]) {
    for (n, v) in medians {
        let _ = writeln!(out, "median.{target}.n{n} = {}", fmt_f64(*v));
    }
    match rate_fit(medians) {
        Ok(fit) => {
            let _ = writeln!(out, "fitted.{target}.slope = {:.6}", fit.slope);
            let _ = writeln!(out, "fitted.{target}.r2 = {:.6}", fit.r2);
            let _ = writeln!(out, "fitted.{target}.log_power = {:.6}", fit.log_fit.power);
            let _ = writeln!(out, "fitted.{target}.log_r2 = {:.6}", fit.log_fit.r2);
            let regime = match fit.regime {
                FitRegime::PowerLaw => "power law",
                FitRegime::Logarithmic => "logarithmic",
            };
            let _ = writeln!(out, "fitted.{target}.regime = {regime}");
        }
        Err(e) => {
            let _ = writeln!(out, "fitted.{target} = unavailable ({e})");
        }
    }
}

/// Key-value summary of a finished study.
pub fn study_summary(cfg: &ExperimentConfig, study: &Study, n_list: &[usize], replicates: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "chain = {}", cfg.describe_chain());
    let _ = writeln!(s, "noise = {}", cfg.noise.describe());
    let _ = writeln!(s, "base_seed = {}", cfg.seed);
    let _ = writeln!(s, "n_list = {}", join(n_list.iter()));
    let _ = writeln!(s, "replicates = {replicates}");
    let _ = writeln!(s, "kappa1 = {}", cfg.penalty.kappa1);
    let _ = writeln!(s, "kappa2 = {}", cfg.penalty.kappa2);
    let _ = writeln!(s, "B = {}, {}", fmt_f64(study.b.lo), fmt_f64(study.b.hi));
    let _ = writeln!(s, "f0 = {}", fmt_f64(study.floor.f0));
    let _ = writeln!(s, "pi_sup = {}", fmt_f64(study.floor.pi_sup));
    let failed = study.records.iter().filter(|r| r.failed()).count();
    let _ = writeln!(s, "records = {}", study.records.len());
    let _ = writeln!(s, "records_with_errors = {failed}");
    let relaxed = study.records.iter().filter(|r| r.restriction_relaxed).count();
    let _ = writeln!(s, "records_restriction_relaxed = {relaxed}");

    let (cf, cbig) = cfg.chain.smoothness();
    let sm = cfg.noise.smoothness();
    let pf = predict_rate(&cf, &sm, false).map_err(|e| e.to_string());
    let pbig = predict_rate(&cbig, &sm, true).map_err(|e| e.to_string());
    let ppi = match (&pf, &pbig) {
        (Ok(a), Ok(b)) => Ok(predict_rate_transition(a, b)),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    prediction_lines(&mut s, "f", &pf);
    prediction_lines(&mut s, "F", &pbig);
    prediction_lines(&mut s, "pi", &ppi);

    let med_f = median_by_n(&study.records, |r| r.mise_f);
    let med_big = median_by_n(&study.records, |r| r.mise_big_f);
    let med_pi = median_by_n(&study.records, |r| r.mise_pi);
    fit_lines(&mut s, "f", &med_f);
    fit_lines(&mut s, "F", &med_big);
    fit_lines(&mut s, "pi", &med_pi);

    for &n in n_list {
        let modal = |field: fn(&RiskRecord) -> Option<u32>| {
            let mut counts = std::collections::BTreeMap::new();
            for r in study.records.iter().filter(|r| r.n == n) {
                if let Some(m) = field(r) {
                    *counts.entry(m).or_insert(0usize) += 1;
                }
            }
            counts.iter().fold(None, |acc: Option<(u32, usize)>, (&m, &c)| match acc {
                Some((_, best)) if best >= c => acc,
                _ => Some((m, c)),
            })
        };
        if let Some((m, _)) = modal(|r| r.m_hat) {
            let _ = writeln!(s, "modal.m_hat.n{n} = {m}");
        }
        if let Some((m, _)) = modal(|r| r.big_m_hat) {
            let _ = writeln!(s, "modal.M_hat.n{n} = {m}");
        }
        match oracle_m_search(&cfg.chain, &cfg.noise, n, cfg.fit.max_m) {
            Ok(o) => {
                let _ = writeln!(s, "oracle.m.n{n} = {}", o.m);
                let _ = writeln!(s, "oracle.risk.n{n} = {}", fmt_f64(o.risk));
            }
            Err(e) => {
                let _ = writeln!(s, "oracle.n{n} = unavailable ({e})");
            }
        }
    }

    let last = n_list.last().copied();
    let at = |v: &[(usize, f64)]| v.iter().find(|p| Some(p.0) == last).map(|p| p.1);
    match (at(&med_pi), at(&med_big), at(&med_f)) {
        (Some(p), Some(bf), Some(f)) => {
            let c = transition_surrogate(p, bf, f, &study.floor, SURROGATE_FACTOR);
            let _ = writeln!(s, "surrogate.n = {}", last.unwrap());
            let _ = writeln!(s, "surrogate.lhs = {}", fmt_f64(c.lhs));
            let _ = writeln!(s, "surrogate.rhs = {}", fmt_f64(c.rhs));
            let _ = writeln!(s, "surrogate.holds = {}", c.holds);
        }
        _ => {
            let _ = writeln!(s, "surrogate = unavailable (missing medians at the largest n)");
        }
    }
    s
}

/// `n median_f median_F median_pi` rows, `NaN` where a median is missing.
pub fn medians_dat(records: &[RiskRecord], n_list: &[usize]) -> String {
    let cols = [
        median_by_n(records, |r| r.mise_f),
        median_by_n(records, |r| r.mise_big_f),
        median_by_n(records, |r| r.mise_pi),
    ];
    let mut s = String::from("# n median_mise_f median_mise_F median_mise_pi\n");
    for &n in n_list {
        let vals: Vec<String> = cols
            .iter()
            .map(|c| c.iter().find(|p| p.0 == n).map(|p| fmt_f64(p.1)).unwrap_or_else(|| "NaN".into()))
            .collect();
        let _ = writeln!(s, "{n} {}", vals.join(" "));
    }
    s
}

pub const PLOT_SCRIPT: &str = "\
set terminal pngcairo size 800,600
set output 'mise_vs_n.png'
set logscale xy
set xlabel 'n'
set ylabel 'median MISE'
set key top right
plot 'mise_medians.dat' using 1:2 with linespoints title 'f', \\
     '' using 1:3 with linespoints title 'F', \\
     '' using 1:4 with linespoints title 'Pi'
";

pub fn cmd_risk_study(cfg: &ExperimentConfig, timings: bool) -> Result<Vec<(String, String)>, CliError> {
    let spec = cfg.study_spec()?;
    require_sampler(&cfg.noise)?;
    let study = mc_risk_study(&cfg.chain, &cfg.noise, &spec).map_err(runtime)?;
    Ok(vec![
        ("risk_records.csv".into(), records_csv(&study.records, timings)?),
        ("summary.txt".into(), study_summary(cfg, &study, &spec.n_list, spec.replicates)),
        ("mise_medians.dat".into(), medians_dat(&study.records, &spec.n_list)),
        ("mise_vs_n.gp".into(), PLOT_SCRIPT.into()),
    ])
}

fn curve_rows(out: &mut String, target: &str, curve: &[StabilityPoint]) {
    for p in curve {
        let _ = writeln!(out, "{target},{},{},{},{}", fmt_f64(p.kappa), p.modal_m, fmt_f64(p.agreement), join(p.choices.iter()).replace(',', ";"));
    }
}

fn recommendation(r: &Recommendation) -> String {
    match r {
        Recommendation::Identified(k) => fmt_f64(*k),
        Recommendation::Unidentified(why) => format!("unidentified ({why})"),
    }
}

pub fn calibration_files(cfg: &ExperimentConfig, rep: &CalibrationReport) -> Vec<(String, String)> {
    let mut csv = String::from("target,kappa,modal_m,agreement,choices\n");
    curve_rows(&mut csv, "f", &rep.curve_f);
    curve_rows(&mut csv, "F", &rep.curve_big_f);
    let mut txt = String::new();
    let _ = writeln!(txt, "chain = {}", cfg.describe_chain());
    let _ = writeln!(txt, "noise = {}", cfg.noise.describe());
    let _ = writeln!(txt, "n = {}", rep.n);
    let _ = writeln!(txt, "seed = {}", cfg.seed);
    let _ = writeln!(txt, "models_f = {}", join(rep.models_f.iter()));
    let _ = writeln!(txt, "models_F = {}", join(rep.models_big_f.iter()));
    let _ = writeln!(txt, "kappa1 = {}", recommendation(&rep.kappa1));
    let _ = writeln!(txt, "kappa2 = {}", recommendation(&rep.kappa2));
    vec![("calibration.csv".into(), csv), ("calibration.txt".into(), txt)]
}

pub fn cmd_calibrate_penalty(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>, CliError> {
    let c = cfg.calibrate.as_ref().ok_or_else(|| CliError::Validation("missing calibrate.n".into()))?;
    if c.n < 2 {
        return Err(CliError::Validation("calibrate.n must be at least 2".into()));
    }
    if c.replicates < 2 {
        return Err(CliError::Validation("calibrate.replicates must be at least 2".into()));
    }
    require_sampler(&cfg.noise)?;
    let rep = calibrate_penalty(&cfg.chain, &cfg.noise, c.n, c.replicates, cfg.seed, &c.kappa_grid, &cfg.fit)
        .map_err(runtime)?;
    Ok(calibration_files(cfg, &rep))
}

