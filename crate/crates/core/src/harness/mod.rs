//! Monte Carlo sweeps over matrix sizes, rate fitting and report output.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, Measures, OutputFormat};

use crate::deloc::deloc_stats;
use crate::distance::{distance_report, SmoothingConfig};
use crate::ensembles::{sample_matrix, split_seed, MatrixShape};
use crate::mp_law::{MPParams, RateScale};
use crate::spectral::{
    eigen_sym_tridiagonal, eigenvalues_sym, sample_covariance, self_consistency,
};
use crate::{Complex64, Error, Result};

/// Largest `n` for which minor-resolvent diagnostics run.
pub const DIAGNOSTICS_MAX_N: usize = 128;
/// Point at which the resolvent identities are checked.
pub const DIAGNOSTIC_Z: Complex64 = Complex64::new(1.0, 0.5);

/// One trial, flattened for CSV. Optional measurements are empty when not
/// requested or when they failed (the reason is in `error`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub p: usize,
    pub y: f64,
    pub trial: usize,
    pub seed: u64,
    pub dist: String,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub kolmogorov_plain: Option<f64>,
    pub kolmogorov_sym: Option<f64>,
    pub smoothing_bound: Option<f64>,
    pub horizontal_integral: Option<f64>,
    pub tail_allowance: Option<f64>,
    pub vertical_sup_integral: Option<f64>,
    pub c1v: Option<f64>,
    pub c2eps32: Option<f64>,
    pub quadrature_error: Option<f64>,
    pub epsilon: Option<f64>,
    pub v: Option<f64>,
    pub max_coord_sq: Option<f64>,
    pub max_partial_dev: Option<f64>,
    pub threshold_coord: Option<f64>,
    pub threshold_partial: Option<f64>,
    pub pass_coord: Option<bool>,
    pub pass_partial: Option<bool>,
    pub diagnostics_pass: Option<bool>,
    pub diagnostics_failures: Option<String>,
    pub g_n_abs: Option<f64>,
    pub error: Option<String>,
}

/// CSV header, in field order.
pub const CSV_COLUMNS: [&str; 29] = [
    "n",
    "p",
    "y",
    "trial",
    "seed",
    "dist",
    "lambda_min",
    "lambda_max",
    "kolmogorov_plain",
    "kolmogorov_sym",
    "smoothing_bound",
    "horizontal_integral",
    "tail_allowance",
    "vertical_sup_integral",
    "c1v",
    "c2eps32",
    "quadrature_error",
    "epsilon",
    "v",
    "max_coord_sq",
    "max_partial_dev",
    "threshold_coord",
    "threshold_partial",
    "pass_coord",
    "pass_partial",
    "diagnostics_pass",
    "diagnostics_failures",
    "g_n_abs",
    "error",
];

impl TrialRecord {
    fn new(n: usize, p: usize, trial: usize, seed: u64, dist: String) -> Self {
        Self {
            n,
            p,
            y: n as f64 / p as f64,
            trial,
            seed,
            dist,
            lambda_min: None,
            lambda_max: None,
            kolmogorov_plain: None,
            kolmogorov_sym: None,
            smoothing_bound: None,
            horizontal_integral: None,
            tail_allowance: None,
            vertical_sup_integral: None,
            c1v: None,
            c2eps32: None,
            quadrature_error: None,
            epsilon: None,
            v: None,
            max_coord_sq: None,
            max_partial_dev: None,
            threshold_coord: None,
            threshold_partial: None,
            pass_coord: None,
            pass_partial: None,
            diagnostics_pass: None,
            diagnostics_failures: None,
            g_n_abs: None,
            error: None,
        }
    }

    fn note_error(&mut self, what: &str, e: &Error) {
        let msg = format!("{what}: {e}");
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

/// Smoothing parameters for one size: `ε` from the config when given,
/// otherwise the asymptotic default.
pub fn smoothing_config(
    cfg: &ExperimentConfig,
    law: &MPParams,
    scale: &RateScale,
) -> Result<SmoothingConfig> {
    let mut sc = match cfg.epsilon {
        Some(eps) => SmoothingConfig::from_epsilon(law, eps, scale.n)?,
        None => SmoothingConfig::default_config(law, scale, cfg.d)?,
    };
    sc.quad_tol = cfg.tol;
    Ok(sc)
}

/// The matrix of trial `trial` at size `n`, with its shape and seed.
pub fn trial_matrix(
    cfg: &ExperimentConfig,
    n: usize,
    trial: usize,
) -> Result<(MatrixShape, u64, Array2<f64>)> {
    let shape = MatrixShape::from_ratio(n, cfg.y)?;
    let seed = split_seed(cfg.seed0, n, trial);
    let x = sample_matrix(&cfg.dist, &shape, seed)?;
    Ok((shape, seed, x))
}

/// Runs one trial. Deterministic in `(cfg, n, trial)`; failures of
/// individual measurements are recorded in the returned record.
pub fn run_trial(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<TrialRecord> {
    let (shape, seed, x) = trial_matrix(cfg, n, trial)?;
    let mut rec = TrialRecord::new(n, shape.p, trial, seed, cfg.dist.to_string());
    let law = MPParams::new(rec.y)?;
    let scale = RateScale::new(cfg.alpha, cfg.kappa, n)?;
    let w = sample_covariance(&x);

    let (eigenvalues, vectors) = if cfg.measure.deloc {
        let dec = eigen_sym_tridiagonal(&w)?;
        (dec.eigenvalues, Some(dec.vectors))
    } else {
        (eigenvalues_sym(&w)?, None)
    };
    rec.lambda_min = eigenvalues.first().copied();
    rec.lambda_max = eigenvalues.last().copied();

    let base = distance_report(&eigenvalues, &law, None)?;
    rec.kolmogorov_plain = Some(base.kolmogorov_plain);
    rec.kolmogorov_sym = Some(base.kolmogorov_sym);

    if cfg.measure.smoothing {
        match smoothing_config(cfg, &law, &scale)
            .and_then(|sc| distance_report(&eigenvalues, &law, Some(&sc)))
        {
            Ok(report) => {
                let t = report.smoothing.expect("requested");
                rec.smoothing_bound = Some(t.bound);
                rec.horizontal_integral = Some(t.horizontal_integral);
                rec.tail_allowance = Some(t.tail_allowance);
                rec.vertical_sup_integral = Some(t.vertical_sup_integral);
                rec.c1v = Some(t.c1v);
                rec.c2eps32 = Some(t.c2eps32);
                rec.quadrature_error = Some(t.quadrature_error);
                rec.epsilon = Some(t.epsilon);
                rec.v = Some(t.v);
            }
            Err(e) => rec.note_error("smoothing", &e),
        }
    }

    if let Some(vectors) = vectors {
        match deloc_stats(&vectors, &scale) {
            Ok(d) => {
                rec.max_coord_sq = Some(d.max_coord_sq);
                rec.max_partial_dev = Some(d.max_partial_dev);
                rec.threshold_coord = Some(d.threshold_coord);
                rec.threshold_partial = Some(d.threshold_partial);
                rec.pass_coord = Some(d.pass_coord);
                rec.pass_partial = Some(d.pass_partial);
            }
            Err(e) => rec.note_error("deloc", &e),
        }
    }

    if cfg.measure.diagnostics && n <= DIAGNOSTICS_MAX_N {
        match self_consistency(&x, DIAGNOSTIC_Z, &law) {
            Ok(diag) => {
                let failures = diag.failures();
                rec.diagnostics_pass = Some(failures.is_empty());
                rec.diagnostics_failures = Some(failures.join("|"));
                rec.g_n_abs = Some(diag.g_n.norm());
            }
            Err(e) => rec.note_error("diagnostics", &e),
        }
    }
    Ok(rec)
}

/// Runs every `(n, trial)` pair on `cfg.workers` threads; the result is
/// sorted by `(n, trial)` and independent of the worker count.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    if cfg.measure.diagnostics {
        if let Some(&n) = cfg.n_list.iter().find(|&&n| n > DIAGNOSTICS_MAX_N) {
            warn!("resolvent diagnostics skipped for n > {DIAGNOSTICS_MAX_N} (first: n = {n})");
        }
    }
    let jobs: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let run = |&(n, t): &(usize, usize)| {
        run_trial(&cfg, n, t).unwrap_or_else(|e| {
            let p = MatrixShape::from_ratio(n, cfg.y).map(|s| s.p).unwrap_or(n);
            let mut rec =
                TrialRecord::new(n, p, t, split_seed(cfg.seed0, n, t), cfg.dist.to_string());
            rec.note_error("trial", &e);
            rec
        })
    };
    let mut records: Vec<TrialRecord> = if cfg.workers == 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };
    records.sort_by_key(|r| (r.n, r.trial));
    Ok(records)
}

/// Least-squares line through `(ln n, ln median Δ*_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Per-`n` medians of the plain distance over successful trials.
pub fn medians_by_n(records: &[TrialRecord]) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| r.kolmogorov_plain)
                .filter(|d| *d > 0.0)
                .collect();
            (!vals.is_empty()).then(|| (n, median(&vals)))
        })
        .collect()
}

/// Ordinary least squares of `ln median Δ*` on `ln n`.
pub fn fit_rate(records: &[TrialRecord]) -> Result<RateFit> {
    let points: Vec<(f64, f64)> = medians_by_n(records)
        .into_iter()
        .map(|(n, m)| ((n as f64).ln(), m.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs two sizes with successful trials, got {}",
            points.len()
        )));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub fit: Option<RateFit>,
}

/// All trials plus the rate fit; fails when fewer than two sizes succeed.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let records = run_trials(cfg)?;
    let fit = fit_rate(&records)?;
    Ok(SweepResult {
        config: cfg.clone(),
        records,
        fit: Some(fit),
    })
}

/// Writes records as CSV with a fixed header (also for zero records).
pub fn write_csv<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Two whitespace-separated columns: `n` and the median plain distance.
pub fn write_plot_data<W: Write>(mut out: W, records: &[TrialRecord]) -> Result<()> {
    writeln!(out, "# n median_kolmogorov_plain")?;
    for (n, m) in medians_by_n(records) {
        writeln!(out, "{n} {m:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_result<W: Write>(out: W, result: &SweepResult, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(out, &result.records),
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, result)?;
            writeln!(out)?;
            out.flush()?;
            Ok(())
        }
        OutputFormat::Plot => write_plot_data(out, &result.records),
    }
}

/// Writes `result` to `path` in `format`.
pub fn emit(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<()> {
    write_result(BufWriter::new(File::create(path)?), result, format)
}
