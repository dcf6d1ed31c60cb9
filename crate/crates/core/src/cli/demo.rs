//! Scenarios where consistency fails or degrades: label switching at a
//! crossing under equal weights, and a mixture close to a nonregular one.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::commands::{mixture_plot_csv, regression_plot_csv};
use super::spec::job_stem;
use super::stats::median_counting_failures;
use crate::error::Result;
use crate::io::{write_atomic, write_json};
use crate::mixfit::{evaluate_mixture_fit, fit_vanilla_mixture, MixtureConfig, MixtureFit};
use crate::regfit::{evaluate_regression_fit, fit_mixed_regression, RegressionConfig, RegressionFit};
use crate::synth::{
    sample_mixed_regression, sample_vanilla_mixture, MarginalSpec, MixedRegressionModel, MixingSpec, RegressionFn,
    VanillaMixtureModel,
};

pub const DEMO_SLOPE: f64 = 2.0;
pub const DEMO_SIGMA: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub n: usize,
    pub seeds: Vec<u64>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            n: 20_000,
            seeds: (0..10).collect(),
        }
    }
}

/// `m = (±slope·x)` on `[−1, 1]`, crossing at zero.
pub fn crossing_lines(lambdas: Vec<f64>) -> Result<MixedRegressionModel> {
    MixedRegressionModel::new(
        -1.0,
        1.0,
        MarginalSpec::Uniform,
        lambdas,
        vec![
            RegressionFn::linear(0.0, DEMO_SLOPE),
            RegressionFn::linear(0.0, -DEMO_SLOPE),
        ],
        DEMO_SIGMA,
        MixingSpec::default(),
        1.0,
    )
}

/// The model whose curves trade places smoothly between the two sampled
/// covariates adjacent to the crossing. With equal weights it generates
/// the same conditional laws at every sampled covariate.
pub fn label_switched_partner(model: &MixedRegressionModel, xs: &[f64]) -> Result<MixedRegressionModel> {
    let left = xs.iter().copied().filter(|&x| x < 0.0).fold(-1.0, f64::max);
    let right = xs.iter().copied().filter(|&x| x > 0.0).fold(1.0, f64::min);
    let fns = model.regression_fns();
    let swapped = vec![
        RegressionFn::Blend {
            from: Box::new(fns[0].clone()),
            to: Box::new(fns[1].clone()),
            start: left,
            end: right,
        },
        RegressionFn::Blend {
            from: Box::new(fns[1].clone()),
            to: Box::new(fns[0].clone()),
            start: left,
            end: right,
        },
    ];
    let (a, b) = model.domain();
    MixedRegressionModel::new(
        a,
        b,
        model.marginal().clone(),
        model.lambdas().to_vec(),
        swapped,
        model.sigma(),
        model.g0_spec().clone(),
        model.x0(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSeed {
    pub seed: u64,
    /// Mean error with components matched by weight.
    pub sorted_error: Option<f64>,
    /// Mean error with the best relabelling at each covariate.
    pub permutation_error: Option<f64>,
    /// Sorted error against the label-switched partner.
    pub partner_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualWeightsReport {
    pub n: usize,
    pub slope: f64,
    pub equal: Vec<CrossingSeed>,
    /// The same scenario with `λ = (0.35, 0.65)`.
    pub contrast: Vec<CrossingSeed>,
    /// Seeds with sorted error above 0.5.
    pub switched_seeds: usize,
    pub switched_fraction: f64,
    /// Failed seeds count as `+∞`.
    pub median_permutation_error: f64,
    pub contrast_median_sorted_error: f64,
    pub passed: bool,
}

type Run<S, F> = (S, Option<F>);

fn crossing_runs(
    lambdas: Vec<f64>,
    cfg: &DemoConfig,
    plots: Option<(&Path, &str)>,
) -> Result<Vec<Run<CrossingSeed, (MixedRegressionModel, RegressionFit)>>> {
    let model = crossing_lines(lambdas)?;
    let rcfg = RegressionConfig::default();
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let failed = |e: crate::Error| CrossingSeed {
                seed,
                sorted_error: None,
                permutation_error: None,
                partner_error: None,
                error: Some(e.to_string()),
            };
            let data = sample_mixed_regression(&model, cfg.n, seed)?;
            let partner = label_switched_partner(&model, &data.covariates())?;
            let fit = match fit_mixed_regression(&data, 2, model.sigma(), Some(model.x0()), &rcfg) {
                Ok(f) => f,
                Err(e) => return Ok((failed(e), None)),
            };
            let e = evaluate_regression_fit(&fit, &model)?;
            let ep = evaluate_regression_fit(&fit, &partner)?;
            if let Some((dir, tag)) = plots {
                let stem = format!("{tag}_{}", job_stem(cfg.n, seed));
                write_atomic(
                    &dir.join(format!("{stem}.csv")),
                    regression_plot_csv(&fit, &model).as_bytes(),
                )?;
                write_atomic(
                    &dir.join(format!("{stem}_partner.csv")),
                    regression_plot_csv(&fit, &partner).as_bytes(),
                )?;
            }
            let row = CrossingSeed {
                seed,
                sorted_error: Some(e.max_mean_abs_error),
                permutation_error: Some(e.pointwise_permutation_error),
                partner_error: Some(ep.max_mean_abs_error),
                error: None,
            };
            Ok((row, Some((model.clone(), fit))))
        })
        .collect()
}

/// Crossing lines with equal weights against the `(0.35, 0.65)` contrast.
pub fn equal_weights_demo(cfg: &DemoConfig, out: Option<&Path>) -> Result<EqualWeightsReport> {
    Ok(equal_weights_demo_with_fits(cfg, out)?.0)
}

/// As [`equal_weights_demo`], also returning each successful fit with
/// its generating model.
pub fn equal_weights_demo_with_fits(
    cfg: &DemoConfig,
    out: Option<&Path>,
) -> Result<(EqualWeightsReport, Vec<(MixedRegressionModel, RegressionFit)>)> {
    let plots = out.map(|o| o.join("plots"));
    let (equal, mut fits) = split(crossing_runs(
        vec![0.5, 0.5],
        cfg,
        plots.as_deref().map(|p| (p, "equal")),
    )?);
    let (contrast, more) = split(crossing_runs(
        vec![0.35, 0.65],
        cfg,
        plots.as_deref().map(|p| (p, "contrast")),
    )?);
    fits.extend(more);
    let switched_seeds = equal.iter().filter(|s| s.sorted_error.is_some_and(|e| e > 0.5)).count();
    let switched_fraction = switched_seeds as f64 / cfg.seeds.len().max(1) as f64;
    let perm: Vec<f64> = equal.iter().filter_map(|s| s.permutation_error).collect();
    let median_permutation_error = median_counting_failures(&perm, equal.len() - perm.len());
    let ok: Vec<f64> = contrast.iter().filter_map(|s| s.sorted_error).collect();
    let contrast_median_sorted_error = median_counting_failures(&ok, contrast.len() - ok.len());
    let report = EqualWeightsReport {
        n: cfg.n,
        slope: DEMO_SLOPE,
        passed: switched_fraction >= 0.3 && median_permutation_error <= 0.2 && contrast_median_sorted_error <= 0.25,
        equal,
        contrast,
        switched_seeds,
        switched_fraction,
        median_permutation_error,
        contrast_median_sorted_error,
    };
    if let Some(o) = out {
        write_json(&o.join("report.json"), &report)?;
    }
    Ok((report, fits))
}

fn split<S, F>(runs: Vec<Run<S, F>>) -> (Vec<S>, Vec<F>) {
    let mut rows = Vec::with_capacity(runs.len());
    let mut fits = Vec::new();
    for (row, fit) in runs {
        rows.push(row);
        fits.extend(fit);
    }
    (rows, fits)
}

pub const NEAR_ALPHA: f64 = 0.2;
pub const NEAR_LOCATION: f64 = 4.0;

/// Two components `(1 − α)·δ_{±μ} + α·δ_{±ξ}` convolved with `N(0, 1)`,
/// weights `(0.4, 0.6)`. As `ξ → 0` both components share an atom at the
/// origin and the mixture approaches one without separated supports.
pub fn near_nonregular_model(xi: f64) -> Result<VanillaMixtureModel> {
    let comp = |s: f64| MixingSpec::Discrete {
        atoms: vec![(s * NEAR_LOCATION, 1.0 - NEAR_ALPHA), (s * xi, NEAR_ALPHA)],
    };
    let mean = (1.0 - NEAR_ALPHA) * NEAR_LOCATION + NEAR_ALPHA * xi;
    VanillaMixtureModel::new(vec![0.4, 0.6], vec![mean, -mean], 1.0, vec![comp(1.0), comp(-1.0)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSeed {
    pub seed: u64,
    pub f_error: Option<f64>,
    pub lambda_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearNonregularRun {
    pub xi: f64,
    pub seeds: Vec<MixtureSeed>,
    /// Failed seeds count as `+∞`.
    pub median_f_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearNonregularReport {
    pub n: usize,
    pub runs: Vec<NearNonregularRun>,
    pub passed: bool,
}

pub const NEAR_XIS: [f64; 2] = [0.01, 1.0];

/// Component recovery at `ξ = 0.01` against `ξ = 1`.
pub fn near_nonregular_demo(cfg: &DemoConfig, out: Option<&Path>) -> Result<NearNonregularReport> {
    Ok(near_nonregular_demo_with_fits(cfg, out)?.0)
}

/// As [`near_nonregular_demo`], also returning each successful fit with
/// its generating model.
pub fn near_nonregular_demo_with_fits(
    cfg: &DemoConfig,
    out: Option<&Path>,
) -> Result<(NearNonregularReport, Vec<(VanillaMixtureModel, MixtureFit)>)> {
    let mcfg = MixtureConfig::default();
    let mut runs = Vec::new();
    let mut all_fits = Vec::new();
    for xi in NEAR_XIS {
        let model = near_nonregular_model(xi)?;
        let (seeds, fits) = split(
            cfg.seeds
                .par_iter()
                .map(|&seed| {
                    let ys = sample_vanilla_mixture(&model, cfg.n, seed)?;
                    let fit = match fit_vanilla_mixture(&ys, 2, model.sigma(), &mcfg) {
                        Ok(f) => f,
                        Err(e) => {
                            let row = MixtureSeed {
                                seed,
                                f_error: None,
                                lambda_error: None,
                                error: Some(e.to_string()),
                            };
                            return Ok((row, None));
                        }
                    };
                    let e = evaluate_mixture_fit(&fit, &model)?;
                    if let Some(o) = out {
                        let path = o.join("plots").join(format!("xi{xi}_{}.csv", job_stem(cfg.n, seed)));
                        write_atomic(&path, mixture_plot_csv(&fit, &model)?.as_bytes())?;
                    }
                    let row = MixtureSeed {
                        seed,
                        f_error: Some(e.max_f_error),
                        lambda_error: Some(e.lambda_error),
                        error: None,
                    };
                    Ok((row, Some(fit)))
                })
                .collect::<Result<Vec<_>>>()?,
        );
        all_fits.extend(fits.into_iter().map(|f| (model.clone(), f)));
        let ok: Vec<f64> = seeds.iter().filter_map(|s| s.f_error).collect();
        let median_f_error = median_counting_failures(&ok, seeds.len() - ok.len());
        runs.push(NearNonregularRun {
            xi,
            seeds,
            median_f_error,
        });
    }
    let passed = runs[0].median_f_error > runs[1].median_f_error;
    let report = NearNonregularReport { n: cfg.n, runs, passed };
    if let Some(o) = out {
        write_json(&o.join("report.json"), &report)?;
    }
    Ok((report, all_fits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partner_agrees_at_sampled_covariates() {
        let model = crossing_lines(vec![0.5, 0.5]).unwrap();
        let xs = vec![-0.7, -0.01, 0.02, 0.4];
        let p = label_switched_partner(&model, &xs).unwrap();
        for &x in &xs {
            let mut a = model.regression_values(x);
            let mut b = p.regression_values(x);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
        assert_eq!(p.regression_values(0.4), vec![-0.8, 0.8]);
        assert_eq!(p.regression_values(-0.7), model.regression_values(-0.7));
    }

    #[test]
    fn near_nonregular_family_is_centered() {
        for xi in NEAR_XIS {
            let m = near_nonregular_model(xi).unwrap();
            assert!(m.mus()[0] > 0.0 && m.mus()[1] < 0.0);
        }
    }
}
