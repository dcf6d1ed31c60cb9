use serde::{Deserialize, Serialize};

use super::{
    estimate_components, project_to_gaussian_mixture, smooth, smoothing_grid, threshold_partition, voronoi_extend,
    MixtureFit, ProjectionConfig,
};
use crate::error::{Error, Result};
use crate::kde::{kde_grid, univariate_kde, BandwidthSchedule};
use crate::measures::GridDensity;

/// How the smoothing width `δ` and threshold `t` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenoiseSchedule {
    /// `d = [−log(objective + 1e-12)]^{−1/2}` clipped to `[1e-3, 1]`, then
    /// `δ = d^{1/4}` and `t = d^{1/2}`.
    Auto,
    Manual {
        delta: f64,
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    pub schedule: DenoiseSchedule,
    /// Halvings of `t` tried when the level set is empty or has fewer than
    /// `K` intervals.
    pub max_retries: usize,
    /// Overrides for the automatic schedule.
    pub delta: Option<f64>,
    pub threshold: Option<f64>,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            schedule: DenoiseSchedule::Auto,
            max_retries: 5,
            delta: None,
            threshold: None,
        }
    }
}

impl DenoiseConfig {
    pub fn manual(delta: f64, t: f64) -> Self {
        DenoiseConfig {
            schedule: DenoiseSchedule::Manual { delta, t },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive, got {v}")))
            }
        };
        if let DenoiseSchedule::Manual { delta, t } = self.schedule {
            check("delta", delta)?;
            check("threshold", t)?;
        }
        if let Some(d) = self.delta {
            check("delta", d)?;
        }
        if let Some(t) = self.threshold {
            check("threshold", t)?;
        }
        Ok(())
    }

    /// `(d, δ, t)` for a projection objective.
    pub fn resolve(&self, objective: f64) -> (Option<f64>, f64, f64) {
        let (d, delta, t) = match self.schedule {
            DenoiseSchedule::Manual { delta, t } => (None, delta, t),
            DenoiseSchedule::Auto => {
                let d = plug_in_d(objective);
                (Some(d), d.powf(0.25), d.sqrt())
            }
        };
        (d, self.delta.unwrap_or(delta), self.threshold.unwrap_or(t))
    }
}

/// `[−log(objective + 1e-12)]^{−1/2}` clipped to `[1e-3, 1]`.
pub fn plug_in_d(objective: f64) -> f64 {
    let neg_log = -(objective.max(0.0) + 1e-12).ln();
    if neg_log <= 1.0 {
        1.0
    } else {
        neg_log.powf(-0.5).clamp(1e-3, 1.0)
    }
}

/// Every setting of the vanilla-mixture pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureConfig {
    pub bandwidth: BandwidthSchedule,
    pub projection: ProjectionConfig,
    pub denoise: DenoiseConfig,
    /// Points of each component density grid.
    pub component_grid_points: usize,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            bandwidth: BandwidthSchedule::default(),
            projection: ProjectionConfig::default(),
            denoise: DenoiseConfig::default(),
            component_grid_points: 1024,
        }
    }
}

impl MixtureConfig {
    pub fn validate(&self) -> Result<()> {
        self.bandwidth.validate()?;
        self.projection.validate()?;
        self.denoise.validate()?;
        if self.component_grid_points < 16 {
            return Err(Error::Parameter("component grid needs at least 16 points".into()));
        }
        Ok(())
    }
}

/// Project, smooth, threshold and extract components from a density
/// estimate `p_hat` built from `n_eff` observations.
pub fn fit_mixture_density(
    p_hat: &GridDensity,
    n_eff: usize,
    k: usize,
    sigma: f64,
    cfg: &MixtureConfig,
) -> Result<MixtureFit> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::Parameter("need at least one component".into()));
    }
    let mut proj_cfg = cfg.projection.clone();
    let n_atoms = proj_cfg.atoms_for(n_eff);
    if n_atoms < k {
        return Err(Error::Parameter(format!("{n_atoms} atoms cannot carry {k} components")));
    }
    proj_cfg.n_atoms = Some(n_atoms);
    let proj = project_to_gaussian_mixture(p_hat, sigma, &proj_cfg)?;
    let (d, delta, mut t) = cfg.denoise.resolve(proj.objective);
    let m = proj.support_bound;
    let grid = smoothing_grid(-m, m, delta, 2048)?;
    let g_smooth = smooth(&proj.measure, delta, &grid)?;
    let retry = matches!(cfg.denoise.schedule, DenoiseSchedule::Auto) && cfg.denoise.threshold.is_none();
    let mut retries = 0;
    let e_hats = loop {
        match threshold_partition(&g_smooth, t, k) {
            Ok(e) => break e,
            Err(err @ (Error::ThresholdTooHigh { .. } | Error::UnderResolution { .. })) => {
                if !retry || retries >= cfg.denoise.max_retries {
                    return Err(err);
                }
                retries += 1;
                t *= 0.5;
            }
            Err(err) => return Err(err),
        }
    };
    let cells = voronoi_extend(&e_hats)?;
    let mut fit = estimate_components(&proj.measure, &cells, &e_hats, sigma, cfg.component_grid_points)?;
    let diag = &mut fit.diagnostics;
    diag.projection_objective = proj.objective;
    diag.projection_converged = proj.converged;
    diag.projection_pivots = proj.iterations;
    diag.n_atoms = proj.n_atoms;
    diag.support_bound = m;
    diag.plug_in_d = d;
    diag.delta = delta;
    diag.threshold = t;
    diag.retries = retries;
    diag.n_eff = n_eff;
    diag.g_smooth = Some(g_smooth);
    Ok(fit)
}

/// Response grid for a sample: data range padded by `max(6σ, h)`.
pub fn response_grid(samples: &[f64], sigma: f64, h: f64, n_points: usize) -> Result<crate::measures::GridSpec> {
    kde_grid(samples, h, (6.0 * sigma - h).max(0.0), n_points)
}

/// The full pipeline on raw samples: box-kernel estimate, then
/// [`fit_mixture_density`].
pub fn fit_vanilla_mixture(samples: &[f64], k: usize, sigma: f64, cfg: &MixtureConfig) -> Result<MixtureFit> {
    cfg.validate()?;
    if samples.len() < 10 * k.max(1) {
        return Err(Error::InsufficientData(format!(
            "{} samples for {k} components (need at least {})",
            samples.len(),
            10 * k.max(1)
        )));
    }
    let n = samples.len();
    let h = cfg.bandwidth.bandwidth(n)?;
    let grid = response_grid(samples, sigma, h, cfg.projection.grid_points)?;
    let p_hat = univariate_kde(samples, h, &grid)?;
    let mut proj = cfg.projection.clone();
    if proj.support_bound.is_none() {
        let ymax = samples.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
        proj.support_bound = Some((1.1 * ymax).max(f64::MIN_POSITIVE));
    }
    let cfg = MixtureConfig {
        projection: proj,
        ..cfg.clone()
    };
    let mut fit = fit_mixture_density(&p_hat, n, k, sigma, &cfg)?;
    fit.diagnostics.bandwidth = Some(h);
    Ok(fit)
}
