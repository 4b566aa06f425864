use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use mplab::deloc::deloc_stats;
use mplab::distance::distance_report;
use mplab::harness::{self, ExperimentConfig, SweepResult};
use mplab::mp_law::{self, MPParams, RateScale};
use mplab::spectral::{
    eigen_sym_tridiagonal, eigenvalues_sym, sample_covariance, write_spectrum_csv,
};
use mplab::Complex64;

#[derive(Parser)]
#[command(
    name = "mplab",
    version,
    about = "Marchenko-Pastur law, spectral distances and Monte Carlo sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate density, distribution function and Stieltjes transform.
    Law {
        #[arg(long, default_value_t = 0.5)]
        y: f64,
        /// Comma-separated evaluation points.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0.5,1,2"
        )]
        x: Vec<f64>,
        /// Height at which the Stieltjes transforms are evaluated.
        #[arg(long, default_value_t = 1e-4)]
        eta: f64,
    },
    /// Sample one matrix and write the eigenvalues of W.
    Sample(Common),
    /// Kolmogorov distances (and the smoothing bound with --measure smoothing).
    Distance(Common),
    /// Eigenvector delocalization statistics of one sample.
    Deloc(Common),
    /// Monte Carlo sweep over --n-list.
    Sweep(Common),
    /// Run the identity and inequality self-checks.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Options shared by the sampling commands; flags override `--config`.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_list: Option<String>,
    /// gaussian, rademacher or weibull:<kappa>.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Index of the trial used by single-sample commands.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// distance, smoothing, deloc, diagnostics (comma-separated) or all.
    #[arg(long)]
    measure: Option<String>,
    /// Smoothing window; defaults to (2H v0)^(2/3).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Quadrature tolerance of the smoothing bound.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or plot.
    #[arg(long)]
    format: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        let flags: [(&str, Option<String>); 15] = [
            ("y", self.y.map(|v| v.to_string())),
            ("n_list", self.n_list.clone()),
            ("n", self.n.map(|v| v.to_string())),
            ("dist", self.dist.clone()),
            ("kappa", self.kappa.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("d", self.d.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("measure", self.measure.clone()),
            ("epsilon", self.epsilon.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("format", self.format.clone()),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                cfg.set(key, &value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out_path {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn single_n(cfg: &ExperimentConfig) -> Result<usize> {
    match cfg.n_list.as_slice() {
        [n] => Ok(*n),
        _ => bail!("this command takes a single size; pass --n"),
    }
}

fn run_law(y: f64, xs: &[f64], eta: f64) -> Result<()> {
    let law = MPParams::new(y)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(
        out,
        "x,density,cdf,sym_density,sym_cdf,s_re,s_im,sym_s_re,sym_s_im"
    )?;
    for &x in xs {
        let z = Complex64::new(x, eta);
        let s = mp_law::stieltjes_mp(&law, z)?;
        let big = mp_law::stieltjes_sym(&law, z)?;
        writeln!(
            out,
            "{x},{},{},{},{},{},{},{},{}",
            mp_law::density(&law, x),
            mp_law::cdf(&law, x)?,
            mp_law::sym_density(&law, x),
            mp_law::sym_cdf(&law, x)?,
            s.re,
            s.im,
            big.re,
            big.im
        )?;
    }
    out.flush()?;
    Ok(())
}

fn run_sample(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let n = single_n(&cfg)?;
    let (shape, seed, x) = harness::trial_matrix(&cfg, n, common.trial)?;
    info!("n = {}, p = {}, seed = {seed}", shape.n, shape.p);
    let eig = eigenvalues_sym(&sample_covariance(&x))?;
    write_spectrum_csv(output(&cfg)?, &eig)?;
    Ok(())
}

fn run_distance(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let n = single_n(&cfg)?;
    let (shape, _, x) = harness::trial_matrix(&cfg, n, common.trial)?;
    let law = MPParams::new(shape.y)?;
    let eig = eigenvalues_sym(&sample_covariance(&x))?;
    let sc = if cfg.measure.smoothing {
        let scale = RateScale::new(cfg.alpha, cfg.kappa, n)?;
        Some(
            harness::smoothing_config(&cfg, &law, &scale)
                .context("smoothing configuration (try --epsilon)")?,
        )
    } else {
        None
    };
    let report = distance_report(&eig, &law, sc.as_ref())?;
    let mut out = output(&cfg)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run_deloc(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let n = single_n(&cfg)?;
    let (_, _, x) = harness::trial_matrix(&cfg, n, common.trial)?;
    let dec = eigen_sym_tridiagonal(&sample_covariance(&x))?;
    let report = deloc_stats(&dec.vectors, &RateScale::new(cfg.alpha, cfg.kappa, n)?)?;
    let mut out = output(&cfg)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run_sweep(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let result = if cfg.n_list.len() >= 2 {
        harness::run_sweep(&cfg)?
    } else {
        SweepResult {
            config: cfg.clone(),
            records: harness::run_trials(&cfg)?,
            fit: None,
        }
    };
    if let Some(fit) = &result.fit {
        eprintln!(
            "rate fit: slope {:.4}, intercept {:.4}, r2 {:.4}",
            fit.slope, fit.intercept, fit.r2
        );
    }
    let failed = result.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!(
            "{failed} of {} trials recorded errors",
            result.records.len()
        );
    }
    harness::write_result(output(&cfg)?, &result, cfg.format)?;
    Ok(())
}

fn run_verify(seed: u64) -> Result<()> {
    let checks = mplab::verify::run_suite(seed)?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{tag}  {:<62} worst {:.3e}  limit {:.3e}",
            c.name, c.worst, c.limit
        );
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        bail!("{failed} of {} checks failed", checks.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Law { y, x, eta } => run_law(*y, x, *eta),
        Command::Sample(c) => run_sample(c),
        Command::Distance(c) => run_distance(c),
        Command::Deloc(c) => run_deloc(c),
        Command::Sweep(c) => run_sweep(c),
        Command::Verify { seed } => run_verify(*seed),
    }
}
