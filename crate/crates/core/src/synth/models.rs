use serde::{Deserialize, Serialize};

use super::{MixingSpec, RegressionFn};
use crate::error::{Error, Result};
use crate::measures::{convolve_gaussian_piecewise, gaussian_mixture_cdf, GridDensity, GridSpec, PiecewiseMeasure};

/// Marginal density of the covariate on `[a, b]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalSpec {
    #[default]
    Uniform,
    /// Piecewise constant on equal-width bins of `[a, b]` with the given
    /// relative weights.
    PiecewiseConstant { weights: Vec<f64> },
}

fn check_weights(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Model("at least one component is required".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Model(format!(
            "mixing weights must be positive, got {lambdas:?}"
        )));
    }
    let total: f64 = lambdas.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Model(format!("mixing weights sum to {total}, expected 1")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Model(format!("sigma must be positive, got {sigma}")))
    }
}

/// Ground-truth mixed regression model `Y | X = x ~ Σ λₖ f(· − mₖ(x))`
/// with `f = φ_σ ∗ G₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegressionModel", into = "RawRegressionModel")]
pub struct MixedRegressionModel {
    a: f64,
    b: f64,
    p_x: MarginalSpec,
    lambdas: Vec<f64>,
    m: Vec<RegressionFn>,
    sigma: f64,
    g0: MixingSpec,
    x0: f64,
    #[serde(skip)]
    g0_measure: PiecewiseMeasure,
}

#[derive(Serialize, Deserialize)]
struct RawRegressionModel {
    a: f64,
    b: f64,
    #[serde(default)]
    p_x: MarginalSpec,
    lambdas: Vec<f64>,
    m: Vec<RegressionFn>,
    sigma: f64,
    #[serde(default)]
    g0: MixingSpec,
    x0: f64,
}

impl TryFrom<RawRegressionModel> for MixedRegressionModel {
    type Error = Error;

    fn try_from(r: RawRegressionModel) -> Result<Self> {
        MixedRegressionModel::new(r.a, r.b, r.p_x, r.lambdas, r.m, r.sigma, r.g0, r.x0)
    }
}

impl From<MixedRegressionModel> for RawRegressionModel {
    fn from(m: MixedRegressionModel) -> Self {
        RawRegressionModel {
            a: m.a,
            b: m.b,
            p_x: m.p_x,
            lambdas: m.lambdas,
            m: m.m,
            sigma: m.sigma,
            g0: m.g0,
            x0: m.x0,
        }
    }
}

impl MixedRegressionModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: f64,
        b: f64,
        p_x: MarginalSpec,
        lambdas: Vec<f64>,
        m: Vec<RegressionFn>,
        sigma: f64,
        g0: MixingSpec,
        x0: f64,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Model(format!("invalid covariate domain [{a}, {b}]")));
        }
        if let MarginalSpec::PiecewiseConstant { weights } = &p_x {
            if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::Model("marginal bin weights must be positive".into()));
            }
        }
        check_weights(&lambdas)?;
        if m.len() != lambdas.len() {
            return Err(Error::Model(format!(
                "{} regression functions for {} weights",
                m.len(),
                lambdas.len()
            )));
        }
        for f in &m {
            f.validate()?;
        }
        check_sigma(sigma)?;
        if !(a <= x0 && x0 <= b) {
            return Err(Error::Model(format!("separation point {x0} outside [{a}, {b}]")));
        }
        let g0_measure = g0.measure()?;
        let diam = g0_measure.support_diameter();
        let at_x0: Vec<f64> = m.iter().map(|f| f.eval(x0)).collect();
        for j in 0..at_x0.len() {
            for k in j + 1..at_x0.len() {
                let gap = (at_x0[j] - at_x0[k]).abs();
                if gap <= 2.0 * diam {
                    return Err(Error::Model(format!(
                        "components {j} and {k} are {gap} apart at x0 = {x0}, need more than 2·diam(supp G0) = {}",
                        2.0 * diam
                    )));
                }
            }
        }
        Ok(MixedRegressionModel {
            a,
            b,
            p_x,
            lambdas,
            m,
            sigma,
            g0,
            x0,
            g0_measure,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn regression_fns(&self) -> &[RegressionFn] {
        &self.m
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn marginal(&self) -> &MarginalSpec {
        &self.p_x
    }

    pub fn g0_spec(&self) -> &MixingSpec {
        &self.g0
    }

    /// Centered `G₀`.
    pub fn g0(&self) -> &PiecewiseMeasure {
        &self.g0_measure
    }

    pub fn regression_values(&self, x: f64) -> Vec<f64> {
        self.m.iter().map(|f| f.eval(x)).collect()
    }

    /// Mixing measure of the conditional law at `x`: `Σ λₖ G₀(· − mₖ(x))`.
    pub fn mixing_measure_at(&self, x: f64) -> Result<PiecewiseMeasure> {
        let parts: Vec<(f64, PiecewiseMeasure)> = self
            .lambdas
            .iter()
            .zip(&self.m)
            .map(|(&l, f)| (l, self.g0_measure.shifted(f.eval(x))))
            .collect();
        PiecewiseMeasure::mixture(&parts)
    }

    /// Error density `f = φ_σ ∗ G₀` on `grid`.
    pub fn error_density(&self, grid: &GridSpec) -> Result<GridDensity> {
        convolve_gaussian_piecewise(&self.g0_measure, self.sigma, grid)
    }

    /// Exact `p(· | x)` on `grid`.
    pub fn true_conditional_density(&self, x: f64, grid: &GridSpec) -> Result<GridDensity> {
        self.check_x(x)?;
        convolve_gaussian_piecewise(&self.mixing_measure_at(x)?, self.sigma, grid)
    }

    /// Exact conditional CDF `P(Y ≤ y | X = x)`.
    pub fn conditional_cdf(&self, x: f64, y: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(gaussian_mixture_cdf(&self.mixing_measure_at(x)?, self.sigma, y))
    }

    /// Grid covering `p(·|x)` for every `x`, padded by `6σ`.
    pub fn response_grid(&self, n_points: usize) -> Result<GridSpec> {
        let xs = GridSpec::new(self.a, self.b, 201)?.points();
        let (glo, ghi) = self.g0_measure.support_bounds();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in xs {
            for v in self.regression_values(x) {
                lo = lo.min(v + glo);
                hi = hi.max(v + ghi);
            }
        }
        GridSpec::new(lo - 6.0 * self.sigma, hi + 6.0 * self.sigma, n_points)
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if self.a <= x && x <= self.b {
            Ok(())
        } else {
            Err(Error::Domain(format!("x = {x} outside [{}, {}]", self.a, self.b)))
        }
    }
}

/// Ground-truth vanilla mixture `Σ λₖ fₖ(· − μₖ)` with `fₖ = φ_σ ∗ Gₖ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVanillaModel", into = "RawVanillaModel")]
pub struct VanillaMixtureModel {
    lambdas: Vec<f64>,
    mus: Vec<f64>,
    sigma: f64,
    gks: Vec<MixingSpec>,
    #[serde(skip)]
    gk_measures: Vec<PiecewiseMeasure>,
}

#[derive(Serialize, Deserialize)]
struct RawVanillaModel {
    lambdas: Vec<f64>,
    mus: Vec<f64>,
    sigma: f64,
    gks: Vec<MixingSpec>,
}

impl TryFrom<RawVanillaModel> for VanillaMixtureModel {
    type Error = Error;

    fn try_from(r: RawVanillaModel) -> Result<Self> {
        VanillaMixtureModel::new(r.lambdas, r.mus, r.sigma, r.gks)
    }
}

impl From<VanillaMixtureModel> for RawVanillaModel {
    fn from(m: VanillaMixtureModel) -> Self {
        RawVanillaModel {
            lambdas: m.lambdas,
            mus: m.mus,
            sigma: m.sigma,
            gks: m.gks,
        }
    }
}

impl VanillaMixtureModel {
    pub fn new(lambdas: Vec<f64>, mus: Vec<f64>, sigma: f64, gks: Vec<MixingSpec>) -> Result<Self> {
        check_weights(&lambdas)?;
        check_sigma(sigma)?;
        if mus.len() != lambdas.len() || gks.len() != lambdas.len() {
            return Err(Error::Model(format!(
                "{} weights, {} locations, {} mixing measures",
                lambdas.len(),
                mus.len(),
                gks.len()
            )));
        }
        if mus.iter().any(|m| !m.is_finite()) {
            return Err(Error::Model("component locations must be finite".into()));
        }
        let gk_measures = gks.iter().map(MixingSpec::measure).collect::<Result<_>>()?;
        Ok(VanillaMixtureModel {
            lambdas,
            mus,
            sigma,
            gks,
            gk_measures,
        })
    }

    /// Mixture `λ·Unif-type` toy: components given directly as shifted
    /// mixing measures, i.e. `G = Σ λₖ Gₖ(· − μₖ)` with each `Gₖ` recentered.
    pub fn from_components(sigma: f64, components: Vec<(f64, MixingSpec, f64)>) -> Result<Self> {
        let (lambdas, rest): (Vec<f64>, Vec<(MixingSpec, f64)>) =
            components.into_iter().map(|(l, g, mu)| (l, (g, mu))).unzip();
        let (gks, mus) = rest.into_iter().unzip();
        VanillaMixtureModel::new(lambdas, mus, sigma, gks)
    }

    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mus(&self) -> &[f64] {
        &self.mus
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Centered `Gₖ`.
    pub fn component_mixing(&self, k: usize) -> &PiecewiseMeasure {
        &self.gk_measures[k]
    }

    /// Supports `Sₖ = supp Gₖ(· − μₖ)` live inside this measure.
    pub fn mixing_measure(&self) -> Result<PiecewiseMeasure> {
        let parts: Vec<(f64, PiecewiseMeasure)> = (0..self.k())
            .map(|k| (self.lambdas[k], self.gk_measures[k].shifted(self.mus[k])))
            .collect();
        PiecewiseMeasure::mixture(&parts)
    }

    /// Centered component density `fₖ = φ_σ ∗ Gₖ`.
    pub fn component_density(&self, k: usize, grid: &GridSpec) -> Result<GridDensity> {
        convolve_gaussian_piecewise(&self.gk_measures[k], self.sigma, grid)
    }

    pub fn density(&self, grid: &GridSpec) -> Result<GridDensity> {
        convolve_gaussian_piecewise(&self.mixing_measure()?, self.sigma, grid)
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        Ok(gaussian_mixture_cdf(&self.mixing_measure()?, self.sigma, y))
    }

    /// Checks that components are farther apart than the largest support
    /// diameter; returns a description of the violation otherwise.
    pub fn separation_warning(&self) -> Option<String> {
        let shifted: Vec<PiecewiseMeasure> = (0..self.k())
            .map(|k| self.gk_measures[k].shifted(self.mus[k]))
            .collect();
        let max_diam = shifted
            .iter()
            .map(PiecewiseMeasure::support_diameter)
            .fold(0.0, f64::max);
        for j in 0..shifted.len() {
            for k in j + 1..shifted.len() {
                let d = shifted[j].support_distance(&shifted[k]);
                if d <= max_diam {
                    return Some(format!(
                        "components {j} and {k} are {d} apart, not more than the largest support diameter {max_diam}"
                    ));
                }
            }
        }
        None
    }
}
