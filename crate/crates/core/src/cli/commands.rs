use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{job_stem, Experiment, ModelSpec};
use super::stats::{median_counting_failures, summarize, Summary};
use crate::error::{Error, Result};
use crate::io::{read_json, write_atomic, write_json};
use crate::measures::GridSpec;
use crate::mixfit::{ascending_order, evaluate_mixture_fit, fit_vanilla_mixture, MixtureFit};
use crate::regfit::{evaluate_regression_fit, find_separation_point, fit_mixed_regression, RegressionFit};
use crate::synth::{
    read_responses_csv, sample_mixed_regression, sample_vanilla_mixture, write_responses_csv, Dataset,
    MixedRegressionModel, VanillaMixtureModel,
};

pub fn data_path(out: &Path, n: usize, seed: u64) -> PathBuf {
    out.join("data").join(format!("{}.csv", job_stem(n, seed)))
}

fn fit_path(out: &Path, n: usize, seed: u64) -> PathBuf {
    out.join("fits").join(format!("{}.json", job_stem(n, seed)))
}

fn plot_path(out: &Path, n: usize, seed: u64) -> PathBuf {
    out.join("plots").join(format!("{}.csv", job_stem(n, seed)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub n: usize,
    pub seed: u64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: Option<String>,
    pub model: ModelSpec,
    pub datasets: Vec<DatasetEntry>,
}

/// Outcome of one `(n, seed)` job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub n: usize,
    pub seed: u64,
    pub ok: bool,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub command: String,
    pub jobs: Vec<JobStatus>,
}

impl FitSummary {
    pub fn failures(&self) -> usize {
        self.jobs.iter().filter(|j| !j.ok).count()
    }
}

fn relative(out: &Path, path: &Path) -> String {
    path.strip_prefix(out).unwrap_or(path).to_string_lossy().into_owned()
}

/// One CSV dataset per `(n, seed)` plus a manifest echoing the model.
pub fn simulate(exp: &Experiment, out: &Path) -> Result<Manifest> {
    let jobs = exp.jobs();
    jobs.par_iter()
        .map(|&(n, seed)| {
            let path = data_path(out, n, seed);
            match &exp.model {
                ModelSpec::MixedRegression(m) => sample_mixed_regression(m, n, seed)?.write_csv(&path),
                ModelSpec::VanillaMixture(m) => write_responses_csv(&path, &sample_vanilla_mixture(m, n, seed)?),
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<()>>()?;
    let manifest = Manifest {
        name: exp.spec.name.clone(),
        model: exp.model.clone(),
        datasets: jobs
            .iter()
            .map(|&(n, seed)| DatasetEntry {
                n,
                seed,
                file: relative(out, &data_path(out, n, seed)),
            })
            .collect(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn require_datasets(exp: &Experiment, out: &Path) -> Result<()> {
    for (n, seed) in exp.jobs() {
        let path = data_path(out, n, seed);
        if !path.exists() {
            return Err(Error::io(
                &path,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("dataset for seed {seed} (n = {n}) not found; run `simulate` first"),
                ),
            ));
        }
    }
    Ok(())
}

fn run_jobs(exp: &Experiment, command: &str, job: impl Fn(usize, u64) -> Result<()> + Sync) -> FitSummary {
    let jobs: Vec<JobStatus> = exp
        .jobs()
        .par_iter()
        .map(|&(n, seed)| match job(n, seed) {
            Ok(()) => JobStatus {
                n,
                seed,
                ok: true,
                error: None,
            },
            Err(e) => JobStatus {
                n,
                seed,
                ok: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    FitSummary {
        command: command.into(),
        jobs,
    }
}

fn vanilla_model(exp: &Experiment, command: &str) -> Result<VanillaMixtureModel> {
    match &exp.model {
        ModelSpec::VanillaMixture(m) => Ok(m.clone()),
        _ => Err(Error::Parameter(format!("{command} needs a vanilla_mixture model"))),
    }
}

fn regression_model(exp: &Experiment, command: &str) -> Result<MixedRegressionModel> {
    match &exp.model {
        ModelSpec::MixedRegression(m) => Ok(m.clone()),
        _ => Err(Error::Parameter(format!("{command} needs a mixed_regression model"))),
    }
}

/// Columns `y, f_hat_1…K, f_1…K`, truth components sorted by weight.
pub fn mixture_plot_csv(fit: &MixtureFit, truth: &VanillaMixtureModel) -> Result<String> {
    let (lo, hi) = fit.component_range();
    let spec = GridSpec::new(lo, hi, 512)?;
    let fh: Vec<_> = fit.f_hats.iter().map(|f| f.resampled(&spec)).collect();
    let order = ascending_order(truth.lambdas());
    let ft = order
        .iter()
        .map(|&k| truth.component_density(k, &spec))
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::from("y");
    for k in 1..=fh.len() {
        let _ = write!(s, ",f_hat_{k}");
    }
    for k in 1..=ft.len() {
        let _ = write!(s, ",f_{k}");
    }
    s.push('\n');
    for (i, y) in spec.points().iter().enumerate() {
        let _ = write!(s, "{y}");
        for f in fh.iter().chain(&ft) {
            let _ = write!(s, ",{}", f.values()[i]);
        }
        s.push('\n');
    }
    Ok(s)
}

/// Columns `x, m_hat_1…K, m_1…K`, true curves sorted by weight.
pub fn regression_plot_csv(fit: &RegressionFit, truth: &MixedRegressionModel) -> String {
    let order = ascending_order(truth.lambdas());
    let mut s = String::from("x");
    for k in 1..=fit.k {
        let _ = write!(s, ",m_hat_{k}");
    }
    for k in 1..=order.len() {
        let _ = write!(s, ",m_{k}");
    }
    s.push('\n');
    for (i, &x) in fit.x_grid.iter().enumerate() {
        let _ = write!(s, "{x}");
        for m in &fit.m_hat {
            let _ = write!(s, ",{}", m[i]);
        }
        let vals = truth.regression_values(x);
        for &k in &order {
            let _ = write!(s, ",{}", vals[k]);
        }
        s.push('\n');
    }
    s
}

pub fn fit_mixture(exp: &Experiment, out: &Path) -> Result<FitSummary> {
    let truth = vanilla_model(exp, "fit-mixture")?;
    require_datasets(exp, out)?;
    let (k, sigma) = (exp.k(), exp.sigma());
    let summary = run_jobs(exp, "fit-mixture", |n, seed| {
        let ys = read_responses_csv(&data_path(out, n, seed))?;
        let fit = fit_vanilla_mixture(&ys, k, sigma, &exp.spec.mixture)?;
        write_json(&fit_path(out, n, seed), &fit)?;
        write_atomic(&plot_path(out, n, seed), mixture_plot_csv(&fit, &truth)?.as_bytes())
    });
    write_json(&out.join("fit_summary.json"), &summary)?;
    Ok(summary)
}

pub fn fit_regression(exp: &Experiment, out: &Path) -> Result<FitSummary> {
    let truth = regression_model(exp, "fit-regression")?;
    require_datasets(exp, out)?;
    let (k, sigma) = (exp.k(), exp.sigma());
    let summary = run_jobs(exp, "fit-regression", |n, seed| {
        let data = Dataset::read_csv(&data_path(out, n, seed), seed)?;
        let fit = fit_mixed_regression(&data, k, sigma, exp.x0(), &exp.spec.regression)?;
        let path = fit_path(out, n, seed);
        fit.write_json(&path)?;
        fit.write_csv(&path.with_extension("csv"))?;
        write_atomic(&plot_path(out, n, seed), regression_plot_csv(&fit, &truth).as_bytes())
    });
    write_json(&out.join("fit_summary.json"), &summary)?;
    Ok(summary)
}

pub fn find_sep(exp: &Experiment, out: &Path, window: Option<f64>) -> Result<FitSummary> {
    regression_model(exp, "find-sep")?;
    require_datasets(exp, out)?;
    let k = exp.k();
    let summary = run_jobs(exp, "find-sep", |n, seed| {
        let data = Dataset::read_csv(&data_path(out, n, seed), seed)?;
        let w = match window.or(exp.spec.regression.separation_window) {
            Some(w) => w,
            None => exp.spec.regression.bandwidth.bandwidth(n)?,
        };
        let prof = find_separation_point(&data, k, w)?;
        let stem = out.join("sep").join(job_stem(n, seed));
        write_json(&stem.with_extension("json"), &prof)?;
        let mut csv = String::from("x,sep,n_local\n");
        for p in &prof.profile {
            let _ = writeln!(csv, "{},{},{}", p.x, p.sep, p.n_local);
        }
        write_atomic(&stem.with_extension("csv"), csv.as_bytes())
    });
    write_json(&out.join("sep_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub n: usize,
    pub n_ok: usize,
    pub failed: Vec<JobStatus>,
    pub metrics: BTreeMap<String, Summary>,
    pub seeds: Vec<SeedMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCheck {
    pub metric: String,
    pub threshold: f64,
    /// Median at the largest `n`, failed seeds counted as `+∞` (`null`).
    pub median: Option<f64>,
    pub within_threshold: bool,
    pub decreasing: Option<bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: Option<String>,
    pub family: String,
    pub rows: Vec<SizeRow>,
    pub acceptance: Vec<AcceptanceCheck>,
    pub passed: bool,
}

fn metrics_for(exp: &Experiment, out: &Path, n: usize, seed: u64) -> Result<BTreeMap<String, f64>> {
    let path = fit_path(out, n, seed);
    let mut m = BTreeMap::new();
    match &exp.model {
        ModelSpec::VanillaMixture(truth) => {
            let fit: MixtureFit = read_json(&path)?;
            let e = evaluate_mixture_fit(&fit, truth)?;
            m.insert("lambda_error".into(), e.lambda_error);
            m.insert("f_error".into(), e.max_f_error);
            m.insert("w1".into(), e.w1);
        }
        ModelSpec::MixedRegression(truth) => {
            let fit = RegressionFit::read_json(&path)?;
            let e = evaluate_regression_fit(&fit, truth)?;
            m.insert("m_error".into(), e.max_mean_abs_error);
            m.insert("lambda_error".into(), e.lambda_error);
            m.insert("f_error".into(), e.f_error);
            m.insert("best_permutation_error".into(), e.best_permutation_error);
            m.insert("pointwise_permutation_error".into(), e.pointwise_permutation_error);
        }
    }
    Ok(m)
}

/// Median and IQR of every metric per sample size, and acceptance checks.
pub fn eval(exp: &Experiment, out: &Path) -> Result<EvalReport> {
    let statuses: Option<FitSummary> = read_json(&out.join("fit_summary.json")).ok();
    let recorded = |n: usize, seed: u64| {
        statuses
            .as_ref()
            .and_then(|s| s.jobs.iter().find(|j| j.n == n && j.seed == seed).cloned())
    };
    let mut rows = Vec::new();
    for n in exp.sample_sizes() {
        let mut seeds = Vec::new();
        let mut failed = Vec::new();
        for &seed in &exp.spec.seeds {
            if let Some(st) = recorded(n, seed).filter(|s| !s.ok) {
                failed.push(st);
                continue;
            }
            match metrics_for(exp, out, n, seed) {
                Ok(metrics) => seeds.push(SeedMetrics { seed, metrics }),
                Err(e) => failed.push(JobStatus {
                    n,
                    seed,
                    ok: false,
                    error: Some(e.to_string()),
                }),
            }
        }
        let names: Vec<String> = seeds
            .first()
            .map(|s| s.metrics.keys().cloned().collect())
            .unwrap_or_default();
        let metrics = names
            .into_iter()
            .filter_map(|name| {
                let vals: Vec<f64> = seeds.iter().map(|s| s.metrics[&name]).collect();
                summarize(&vals).map(|s| (name, s))
            })
            .collect();
        rows.push(SizeRow {
            n,
            n_ok: seeds.len(),
            failed,
            metrics,
            seeds,
        });
    }
    let acceptance = acceptance_checks(exp, &rows);
    let passed = acceptance.iter().all(|c| c.passed);
    let report = EvalReport {
        name: exp.spec.name.clone(),
        family: exp.model.family().into(),
        rows,
        acceptance,
        passed,
    };
    write_json(&out.join("report.json"), &report)?;
    write_atomic(&out.join("trend.csv"), trend_csv(&report).as_bytes())?;
    Ok(report)
}

fn acceptance_checks(exp: &Experiment, rows: &[SizeRow]) -> Vec<AcceptanceCheck> {
    let Some(acc) = &exp.spec.acceptance else {
        return Vec::new();
    };
    let wanted = [
        ("lambda_error", acc.max_lambda_error),
        ("f_error", acc.max_f_error),
        ("m_error", acc.max_m_error),
    ];
    wanted
        .iter()
        .filter_map(|&(metric, t)| t.map(|t| (metric, t)))
        .map(|(metric, threshold)| {
            let medians: Vec<f64> = rows
                .iter()
                .map(|r| {
                    let vals: Vec<f64> = r.seeds.iter().filter_map(|s| s.metrics.get(metric).copied()).collect();
                    let missing = exp.spec.seeds.len() - vals.len();
                    median_counting_failures(&vals, missing)
                })
                .collect();
            let last = medians.last().copied().unwrap_or(f64::INFINITY);
            let within_threshold = last <= threshold;
            let decreasing = (acc.decreasing && medians.len() > 1).then(|| medians.windows(2).all(|w| w[1] < w[0]));
            AcceptanceCheck {
                metric: metric.into(),
                threshold,
                median: last.is_finite().then_some(last),
                within_threshold,
                decreasing,
                passed: within_threshold && decreasing.unwrap_or(true),
            }
        })
        .collect()
}

pub fn trend_csv(report: &EvalReport) -> String {
    let mut s = String::from("n,metric,median,q1,q3,n_ok,n_failed\n");
    for row in &report.rows {
        for (name, m) in &row.metrics {
            let _ = writeln!(
                s,
                "{},{name},{},{},{},{},{}",
                row.n,
                m.median,
                m.q1,
                m.q3,
                row.n_ok,
                row.failed.len()
            );
        }
    }
    s
}

/// Plain-text trend table.
pub fn render_report(report: &EvalReport) -> String {
    let mut s = String::new();
    let names: Vec<&String> = report
        .rows
        .iter()
        .flat_map(|r| r.metrics.keys())
        .fold(Vec::new(), |mut acc, k| {
            if !acc.contains(&k) {
                acc.push(k);
            }
            acc
        });
    let _ = write!(s, "{:>8} {:>4} {:>4}", "n", "ok", "fail");
    for n in &names {
        let _ = write!(s, " {n:>28}");
    }
    s.push('\n');
    for row in &report.rows {
        let _ = write!(s, "{:>8} {:>4} {:>4}", row.n, row.n_ok, row.failed.len());
        for name in &names {
            match row.metrics.get(*name) {
                Some(m) => {
                    let cell = format!("{:.4} [{:.4}, {:.4}]", m.median, m.q1, m.q3);
                    let _ = write!(s, " {cell:>28}");
                }
                None => {
                    let _ = write!(s, " {:>28}", "-");
                }
            }
        }
        s.push('\n');
    }
    for c in &report.acceptance {
        let _ = writeln!(
            s,
            "{} {}: median {} vs threshold {}{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.metric,
            c.median.map_or("inf".to_string(), |m| format!("{m:.4}")),
            c.threshold,
            match c.decreasing {
                Some(true) => ", decreasing in n",
                Some(false) => ", NOT decreasing in n",
                None => "",
            }
        );
    }
    s
}
