use serde::{Deserialize, Serialize};

use super::RegressionFit;
use crate::error::{Error, Result};
use crate::measures::GridSpec;
use crate::mixfit::{ascending_order, l1_between};
use crate::synth::MixedRegressionModel;

/// Errors of a regression fit against a known model. Components are
/// matched by ascending weight unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEval {
    /// Trapezoid `∫ |m̂ₖ − mₖ|` over the fit's covariate grid.
    pub l1_errors: Vec<f64>,
    /// The same integrals divided by the grid length.
    pub mean_abs_errors: Vec<f64>,
    pub max_mean_abs_error: f64,
    pub lambda_error: f64,
    /// `‖f̂ − f‖₁` for the error density used by the fit.
    pub f_error: f64,
    /// Smallest `max_k` mean error over one global relabelling.
    pub best_permutation_error: f64,
    /// `max_k` mean error when each grid point is relabelled separately.
    pub pointwise_permutation_error: f64,
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

fn trapezoid(xs: &[f64], ys: impl Fn(usize) -> f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (ys(i) + ys(i + 1)))
        .sum()
}

pub fn evaluate_regression_fit(fit: &RegressionFit, truth: &MixedRegressionModel) -> Result<RegressionEval> {
    let k = fit.k;
    if truth.k() != k {
        return Err(Error::InvalidInput(format!(
            "fit has {k} components, model has {}",
            truth.k()
        )));
    }
    let xs = &fit.x_grid;
    let span = match (xs.first(), xs.last()) {
        (Some(a), Some(b)) if b > a => b - a,
        (Some(_), Some(_)) => 1.0,
        _ => return Err(Error::InvalidInput("empty covariate grid".into())),
    };
    let truth_vals: Vec<Vec<f64>> = xs.iter().map(|&x| truth.regression_values(x)).collect();
    let order = ascending_order(truth.lambdas());

    let sorted_lambdas: Vec<f64> = order.iter().map(|&j| truth.lambdas()[j]).collect();
    let mut fit_lambdas = fit.lambdas().to_vec();
    fit_lambdas.sort_by(f64::total_cmp);
    let lambda_error = fit_lambdas
        .iter()
        .zip(&sorted_lambdas)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let err_under = |perm: &[usize]| -> Vec<f64> {
        (0..k)
            .map(|j| trapezoid(xs, |i| (fit.m_hat[j][i] - truth_vals[i][perm[j]]).abs()))
            .collect()
    };
    let l1_errors = err_under(&order);
    let mean_abs_errors: Vec<f64> = l1_errors.iter().map(|e| e / span).collect();
    let max_mean_abs_error = mean_abs_errors.iter().copied().fold(0.0, f64::max);

    let perms = permutations(k);
    let best_permutation_error = perms
        .iter()
        .map(|p| err_under(p).into_iter().fold(0.0, f64::max) / span)
        .fold(f64::INFINITY, f64::min);
    // Per grid point, the relabelling with the smallest largest deviation.
    let local_best: Vec<&Vec<usize>> = (0..xs.len())
        .map(|i| {
            perms
                .iter()
                .min_by(|p, q| {
                    let dev = |pm: &[usize]| {
                        (0..k)
                            .map(|j| (fit.m_hat[j][i] - truth_vals[i][pm[j]]).abs())
                            .fold(0.0, f64::max)
                    };
                    dev(p).total_cmp(&dev(q))
                })
                .expect("at least one permutation")
        })
        .collect();
    let pointwise_permutation_error = (0..k)
        .map(|j| trapezoid(xs, |i| (fit.m_hat[j][i] - truth_vals[i][local_best[i][j]]).abs()) / span)
        .fold(0.0, f64::max);

    let f = &fit.f_hat;
    let (glo, ghi) = truth.g0().support_bounds();
    let s = truth.sigma();
    let spec = GridSpec::new(f.lo().min(glo - 8.0 * s), f.hi().max(ghi + 8.0 * s), 4096)?;
    let f_error = l1_between(f, &truth.error_density(&spec)?, 4096)?;

    Ok(RegressionEval {
        l1_errors,
        mean_abs_errors,
        max_mean_abs_error,
        lambda_error,
        f_error,
        best_permutation_error,
        pointwise_permutation_error,
    })
}

/// Hausdorff distance between two finite point sets on the line.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one_way = |p: &[f64], q: &[f64]| {
        p.iter()
            .map(|x| q.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}
