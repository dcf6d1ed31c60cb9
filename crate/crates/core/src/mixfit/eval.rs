use serde::{Deserialize, Serialize};

use super::MixtureFit;
use crate::error::Result;
use crate::measures::{l1_distance, wasserstein1_piecewise, DiscreteMeasure, GridDensity, GridSpec, PiecewiseMeasure};
use crate::synth::VanillaMixtureModel;

/// Errors of a mixture fit against a known model, components matched by
/// sorted weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEval {
    /// `maxₖ |λ̂₍ₖ₎ − λ₍ₖ₎|` with both weight vectors sorted ascending.
    pub lambda_error: f64,
    /// `‖f̂ₖ − fₖ‖₁` per sorted position.
    pub f_errors: Vec<f64>,
    pub max_f_error: f64,
    /// `W₁(Ĝ, G)` against the true mixing measure.
    pub w1: f64,
}

/// Indices that sort `v` ascending, ties kept in order.
pub fn ascending_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

/// `‖a − b‖₁` for densities on different grids, both resampled on a
/// common fine grid spanning their union.
pub fn l1_between(a: &GridDensity, b: &GridDensity, n_points: usize) -> Result<f64> {
    let spec = GridSpec::new(a.lo().min(b.lo()), a.hi().max(b.hi()), n_points)?;
    l1_distance(&a.resampled(&spec), &b.resampled(&spec))
}

pub fn evaluate_mixture_fit(fit: &MixtureFit, truth: &VanillaMixtureModel) -> Result<MixtureEval> {
    let order = ascending_order(truth.lambdas());
    let k = fit.k.min(order.len());
    let mut lambda_error = 0.0_f64;
    let mut f_errors = Vec::with_capacity(k);
    for (pos, &tk) in order.iter().enumerate().take(k) {
        lambda_error = lambda_error.max((fit.lambdas_hat[pos] - truth.lambdas()[tk]).abs());
        let f_hat = &fit.f_hats[pos];
        let (glo, ghi) = truth.component_mixing(tk).support_bounds();
        let s = truth.sigma();
        let spec = GridSpec::new(f_hat.lo().min(glo - 8.0 * s), f_hat.hi().max(ghi + 8.0 * s), 4096)?;
        let f_true = truth.component_density(tk, &spec)?;
        f_errors.push(l1_distance(&f_hat.resampled(&spec), &f_true)?);
    }
    let w1 = wasserstein1_piecewise(&PiecewiseMeasure::from(&fit.g_hat), &truth.mixing_measure()?)?;
    Ok(MixtureEval {
        lambda_error,
        max_f_error: f_errors.iter().copied().fold(0.0, f64::max),
        f_errors,
        w1,
    })
}

/// Mass of `Ĝ` farther than `eta` from the support of `truth`.
pub fn outlier_mass(g_hat: &DiscreteMeasure, truth: &PiecewiseMeasure, eta: f64) -> f64 {
    g_hat
        .atoms()
        .iter()
        .filter(|&&(a, _)| truth.distance_to_support(a) > eta)
        .map(|a| a.1)
        .sum()
}

/// One instance of `Σ_{dist(aₗ, supp G) > η} wₗ ≤ η⁻¹ W₁(Ĝ, G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierCheck {
    pub eta: f64,
    pub mass: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn check_outlier_mass(
    g_hat: &DiscreteMeasure,
    truth: &PiecewiseMeasure,
    etas: &[f64],
    slack: f64,
) -> Result<Vec<OutlierCheck>> {
    let w1 = wasserstein1_piecewise(&PiecewiseMeasure::from(g_hat), truth)?;
    Ok(etas
        .iter()
        .map(|&eta| {
            let mass = outlier_mass(g_hat, truth, eta);
            let bound = w1 / eta;
            OutlierCheck {
                eta,
                mass,
                bound,
                holds: mass <= bound + slack,
            }
        })
        .collect())
}

/// Largest excess of `ĝ` over `½δ⁻²W₁(Ĝ, G)` among nodes whose whole
/// quadrature cell lies farther than `2δ` from `supp G`. Non-positive
/// means the bound holds.
pub fn off_support_excess(
    g_smooth: &GridDensity,
    g_hat: &DiscreteMeasure,
    truth: &PiecewiseMeasure,
    delta: f64,
) -> Result<f64> {
    let w1 = wasserstein1_piecewise(&PiecewiseMeasure::from(g_hat), truth)?;
    let bound = 0.5 * w1 / (delta * delta);
    let margin = 2.0 * delta + 0.5 * g_smooth.spacing();
    Ok(g_smooth
        .points()
        .into_iter()
        .zip(g_smooth.values())
        .filter(|(x, _)| truth.distance_to_support(*x) > margin)
        .map(|(_, v)| v - bound)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::UniformPiece;
    use crate::mixfit::smooth;

    fn uniform(lo: f64, hi: f64) -> PiecewiseMeasure {
        PiecewiseMeasure::new(vec![], vec![UniformPiece { lo, hi, weight: 1.0 }]).unwrap()
    }

    #[test]
    fn outlier_mass_against_uniform_support() {
        let truth = uniform(0.0, 1.0);
        let g = DiscreteMeasure::normalized(vec![(0.5, 0.7), (1.3, 0.2), (2.0, 0.1)]).unwrap();
        assert!((outlier_mass(&g, &truth, 0.25) - 0.3).abs() < 1e-15);
        assert!((outlier_mass(&g, &truth, 0.5) - 0.1).abs() < 1e-15);
        for c in check_outlier_mass(&g, &truth, &[0.1, 0.25, 0.5], 1e-9).unwrap() {
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn off_support_bound_on_shifted_mass() {
        let truth = uniform(-0.5, 0.5);
        let g = DiscreteMeasure::normalized(vec![(0.0, 0.9), (3.0, 0.1)]).unwrap();
        let delta = 0.2;
        let grid = GridSpec::new(-2.0, 5.0, 7001).unwrap();
        let gs = smooth(&g, delta, &grid).unwrap();
        assert!(off_support_excess(&gs, &g, &truth, delta).unwrap() <= 1e-12);
    }

    #[test]
    fn ordering_is_stable() {
        assert_eq!(ascending_order(&[0.5, 0.2, 0.5, 0.1]), vec![3, 1, 0, 2]);
    }
}
