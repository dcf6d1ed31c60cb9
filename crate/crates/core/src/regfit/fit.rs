use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mde::{mde_at_x, mde_general_at_x, MdeConfig, MdeResult};
use super::separation::find_separation_point;
use crate::error::{Error, Result};
use crate::kde::{univariate_kde, BandwidthSchedule, ConditionalKde};
use crate::measures::{GridDensity, GridSpec};
use crate::mixfit::{fit_mixture_density, response_grid, MixtureConfig, MixtureFit};
use crate::synth::Dataset;

/// Whether the components share one error density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// One `f`; the component estimates are pooled as `Σ λ̂ₖ f̂ₖ`.
    #[default]
    Common,
    /// A separate `fₖ` per component.
    PerComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionConfig {
    /// Covariate bandwidth, also used for the responses.
    pub bandwidth: BandwidthSchedule,
    pub mixture: MixtureConfig,
    pub mde: MdeConfig,
    pub error_model: ErrorModel,
    pub x_grid_points: usize,
    pub response_grid_points: usize,
    /// Covariate domain `[a, b]`; `None` takes the data range.
    pub domain: Option<(f64, f64)>,
    /// Half-width of the separation-search windows; `None` takes `h`.
    pub separation_window: Option<f64>,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            bandwidth: BandwidthSchedule::default(),
            mixture: MixtureConfig::default(),
            mde: MdeConfig::default(),
            error_model: ErrorModel::Common,
            x_grid_points: 101,
            response_grid_points: 512,
            domain: None,
            separation_window: None,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        self.bandwidth.validate()?;
        self.mixture.validate()?;
        self.mde.validate()?;
        if self.x_grid_points < 2 || self.response_grid_points < 16 {
            return Err(Error::Parameter(
                "need at least 2 covariate and 16 response grid points".into(),
            ));
        }
        if let Some((a, b)) = self.domain {
            if !(a < b) {
                return Err(Error::Parameter(format!("invalid covariate domain [{a}, {b}]")));
            }
        }
        if let Some(w) = self.separation_window {
            if !(w > 0.0) {
                return Err(Error::Parameter(format!("separation window must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

/// Estimated regression curves, labelled by ascending estimated weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub k: usize,
    pub domain: (f64, f64),
    pub x_grid: Vec<f64>,
    /// `m_hat[k][i] = m̂ₖ(x_grid[i])`.
    pub m_hat: Vec<Vec<f64>>,
    /// Mixture fit at the separation point.
    pub mixture: MixtureFit,
    /// Error density used by the minimum-distance step (pooled in the
    /// common model).
    pub f_hat: GridDensity,
    pub error_model: ErrorModel,
    /// Residual `L¹` at each grid point; `None` where the kernel window was
    /// empty and the curves were interpolated.
    pub per_x_objective: Vec<Option<f64>>,
    pub per_x_coarse_objective: Vec<Option<f64>>,
    pub x0_requested: f64,
    pub x0_used: f64,
    pub bandwidth: f64,
    pub bound: f64,
    pub resolution: f64,
}

impl RegressionFit {
    pub fn lambdas(&self) -> &[f64] {
        &self.mixture.lambdas_hat
    }

    /// Rows `x, m1, …, mK, residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x");
        for k in 1..=self.k {
            let _ = write!(s, ",m{k}");
        }
        s.push_str(",residual\n");
        for (i, x) in self.x_grid.iter().enumerate() {
            let _ = write!(s, "{x}");
            for m in &self.m_hat {
                let _ = write!(s, ",{}", m[i]);
            }
            match self.per_x_objective[i] {
                Some(r) => {
                    let _ = writeln!(s, ",{r}");
                }
                None => s.push_str(",\n"),
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }
}

/// Pooled `Σ λ̂ₖ f̂ₖ` on one grid spanning every component density.
pub fn pooled_error_density(fit: &MixtureFit, n_points: usize) -> Result<GridDensity> {
    let (lo, hi) = fit.component_range();
    fit.pooled_density(&GridSpec::new(lo, hi, n_points)?)
}

/// Three-step mixed-regression estimator: conditional density estimate,
/// mixture fit at the separation point `x₀`, then per-`x` minimum-distance
/// estimation of the curve values. With `x0 = None` the separation point
/// is searched for.
pub fn fit_mixed_regression(
    data: &Dataset,
    k: usize,
    sigma: f64,
    x0: Option<f64>,
    cfg: &RegressionConfig,
) -> Result<RegressionFit> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::Parameter("need at least one component".into()));
    }
    let n = data.len();
    if n < 50 * k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} components (need at least {})",
            50 * k
        )));
    }
    let (a, b) = match cfg.domain {
        Some(d) => d,
        None => data
            .covariates()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            }),
    };
    let h = cfg.bandwidth.bandwidth(n)?;
    let x0_requested = match x0 {
        Some(x) => x,
        None => find_separation_point(data, k, cfg.separation_window.unwrap_or(h))?.x_star,
    };
    let kde = ConditionalKde::new(data, h, a, b)?;
    let (x0_used, _) = kde.clamp(x0_requested);

    let local = kde.local_responses(x0_used);
    if local.len() < 10 * k {
        return Err(Error::InsufficientData(format!(
            "{} observations within {h} of x0 = {x0_used}",
            local.len()
        )));
    }
    let grid0 = response_grid(&local, sigma, h, cfg.mixture.projection.grid_points)?;
    let p0 = univariate_kde(&local, h, &grid0)?;
    let mut mix_cfg = cfg.mixture.clone();
    if mix_cfg.projection.support_bound.is_none() {
        let ymax = local.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
        mix_cfg.projection.support_bound = Some((1.1 * ymax).max(f64::MIN_POSITIVE));
    }
    let mut mixture = fit_mixture_density(&p0, local.len(), k, sigma, &mix_cfg)?;
    mixture.diagnostics.bandwidth = Some(h);

    let bound = match cfg.mde.bound {
        Some(v) => v,
        None => (1.1 * data.responses().iter().fold(0.0_f64, |m, y| m.max(y.abs()))).max(f64::MIN_POSITIVE),
    };
    let mde_cfg = MdeConfig {
        bound: Some(bound),
        ..cfg.mde.clone()
    };
    let f_hat = pooled_error_density(&mixture, cfg.mixture.component_grid_points)?;
    let (f_lo, f_hi) = mixture.component_range();
    let width = f_lo.abs().max(f_hi.abs());
    let y_grid = GridSpec::new(-bound - width, bound + width, cfg.response_grid_points)?;

    let (ilo, ihi) = kde.interior();
    let x_grid: Vec<f64> = if ilo < ihi {
        GridSpec::new(ilo, ihi, cfg.x_grid_points)?.points()
    } else {
        vec![ilo]
    };
    let lambdas = mixture.lambdas_hat.clone();
    let solve_at = |x: f64| -> Result<Option<MdeResult>> {
        let est = match kde.conditional_density_at(x, &y_grid) {
            Ok(e) => e,
            Err(Error::EmptyWindow { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let r = match cfg.error_model {
            ErrorModel::Common => mde_at_x(&est.density, &lambdas, &f_hat, &mde_cfg)?,
            ErrorModel::PerComponent => mde_general_at_x(&est.density, &lambdas, &mixture.f_hats, &mde_cfg)?,
        };
        Ok(Some(r))
    };
    let solved: Vec<Option<MdeResult>> = x_grid
        .par_iter()
        .map(|&x| solve_at(x))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let m_hat = interpolate_gaps(&x_grid, &solved, k)?;
    let resolution = mde_cfg.resolution(bound);
    Ok(RegressionFit {
        k,
        domain: (a, b),
        per_x_objective: solved.iter().map(|r| r.as_ref().map(|r| r.objective)).collect(),
        per_x_coarse_objective: solved.iter().map(|r| r.as_ref().map(|r| r.coarse_objective)).collect(),
        x_grid,
        m_hat,
        mixture,
        f_hat,
        error_model: cfg.error_model,
        x0_requested,
        x0_used,
        bandwidth: h,
        bound,
        resolution,
    })
}

/// Curves from the per-point solutions, filling unsolved points by linear
/// interpolation between the nearest solved neighbours.
fn interpolate_gaps(xs: &[f64], solved: &[Option<MdeResult>], k: usize) -> Result<Vec<Vec<f64>>> {
    let known: Vec<usize> = (0..xs.len()).filter(|&i| solved[i].is_some()).collect();
    if known.is_empty() {
        return Err(Error::InsufficientData(
            "every kernel window on the covariate grid is empty".into(),
        ));
    }
    let theta = |i: usize, j: usize| solved[i].as_ref().map(|r| r.theta[j]).unwrap_or(f64::NAN);
    Ok((0..k)
        .map(|j| {
            (0..xs.len())
                .map(|i| {
                    if solved[i].is_some() {
                        return theta(i, j);
                    }
                    let right = known.partition_point(|&q| q < i);
                    match (right.checked_sub(1).map(|l| known[l]), known.get(right).copied()) {
                        (Some(l), Some(r)) => {
                            let u = (xs[i] - xs[l]) / (xs[r] - xs[l]);
                            (1.0 - u) * theta(l, j) + u * theta(r, j)
                        }
                        (Some(l), None) => theta(l, j),
                        (None, Some(r)) => theta(r, j),
                        (None, None) => unreachable!("known is nonempty"),
                    }
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{sample_mixed_regression, MarginalSpec, MixedRegressionModel, MixingSpec, RegressionFn};

    fn crossing() -> MixedRegressionModel {
        MixedRegressionModel::new(
            -1.0,
            1.0,
            MarginalSpec::Uniform,
            vec![0.35, 0.65],
            vec![RegressionFn::linear(0.0, 1.0), RegressionFn::linear(0.0, -1.0)],
            0.2,
            MixingSpec::default(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn gaps_are_interpolated() {
        let r = |t: f64| {
            Some(MdeResult {
                theta: vec![t],
                objective: 0.0,
                coarse_objective: 0.0,
                bound: 1.0,
                resolution: 0.0,
            })
        };
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let m = interpolate_gaps(&xs, &[None, r(1.0), None, r(3.0), None], 1).unwrap();
        assert_eq!(m[0], vec![1.0, 1.0, 2.0, 3.0, 3.0]);
        assert!(interpolate_gaps(&xs, &[None, None, None, None, None], 1).is_err());
    }

    #[test]
    fn structure_and_determinism() {
        let model = crossing();
        let data = sample_mixed_regression(&model, 5000, 2).unwrap();
        let cfg = RegressionConfig {
            x_grid_points: 21,
            ..Default::default()
        };
        let fit = fit_mixed_regression(&data, 2, 0.2, Some(1.0), &cfg).unwrap();
        assert_eq!(fit.m_hat.len(), 2);
        assert_eq!(fit.x_grid.len(), 21);
        assert!(fit.x0_used < 1.0 && fit.x0_requested == 1.0);
        assert!(fit.m_hat.iter().flatten().all(|m| m.abs() <= fit.bound));
        assert!((fit.lambdas().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (o, c) in fit.per_x_objective.iter().zip(&fit.per_x_coarse_objective) {
            assert!(o.unwrap() <= c.unwrap());
        }
        let again = fit_mixed_regression(&data, 2, 0.2, Some(1.0), &cfg).unwrap();
        assert_eq!(fit, again);
        let csv = fit.to_csv();
        assert!(csv.starts_with("x,m1,m2,residual\n"));
        assert_eq!(csv.lines().count(), 22);
        // Away from the crossing the weight-sorted labels follow the truth.
        let i = 18;
        let x = fit.x_grid[i];
        assert!((fit.m_hat[0][i] - x).abs() < 0.3, "{x}: {}", fit.m_hat[0][i]);
        assert!((fit.m_hat[1][i] + x).abs() < 0.3);
    }

    #[test]
    fn too_little_data() {
        let data = Dataset::new(vec![(0.0, 0.0); 60], 0, None);
        assert!(matches!(
            fit_mixed_regression(&data, 2, 0.2, Some(0.0), &RegressionConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
