//! Box-kernel density estimators: univariate and conditional (ratio of
//! joint to marginal).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{GridDensity, GridSpec};
use crate::synth::Dataset;

/// Bandwidth as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandwidthSchedule {
    /// `h(n) = c·n^exponent`.
    PowerLaw {
        c: f64,
        exponent: f64,
    },
    Fixed {
        h: f64,
    },
}

impl Default for BandwidthSchedule {
    fn default() -> Self {
        BandwidthSchedule::PowerLaw {
            c: 1.0,
            exponent: -0.25,
        }
    }
}

impl BandwidthSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthSchedule::PowerLaw { c, exponent } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "bandwidth constant must be positive, got {c}"
                    )));
                }
                if !(exponent < 0.0 && exponent > -0.5) {
                    return Err(Error::Parameter(format!(
                        "bandwidth exponent must lie in (-1/2, 0), got {exponent}"
                    )));
                }
            }
            BandwidthSchedule::Fixed { h } => {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::Parameter(format!("bandwidth must be positive, got {h}")));
                }
            }
        }
        Ok(())
    }

    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Parameter("bandwidth needs n ≥ 1".into()));
        }
        Ok(match *self {
            BandwidthSchedule::PowerLaw { c, exponent } => c * (n as f64).powf(exponent),
            BandwidthSchedule::Fixed { h } => h,
        })
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("bandwidth must be positive, got {h}")))
    }
}

/// CDF of the box-kernel estimate built from `sorted` samples.
struct BoxCdf<'a> {
    sorted: &'a [f64],
    prefix: Vec<f64>,
    h: f64,
}

impl<'a> BoxCdf<'a> {
    fn new(sorted: &'a [f64], h: f64) -> Self {
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &y in sorted {
            acc += y;
            prefix.push(acc);
        }
        BoxCdf { sorted, prefix, h }
    }

    /// `(1/n) Σ clamp((x − Yᵢ + h)/(2h), 0, 1)`.
    fn eval(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        let full = self.sorted.partition_point(|&y| y < x - self.h);
        let part = self.sorted.partition_point(|&y| y <= x + self.h);
        let m = (part - full) as f64;
        let partial = m * (x + self.h) - (self.prefix[part] - self.prefix[full]);
        ((full as f64) + partial / (2.0 * self.h)) / n as f64
    }
}

/// Box-kernel estimate `(2hn)⁻¹ Σ 𝟏{|y − Yᵢ| ≤ h}` on `grid`.
///
/// Values are cell averages of the estimate over each quadrature cell, so
/// the trapezoid integral equals the estimate's mass inside the grid
/// exactly; on a grid covering every sample ± h it is 1.
pub fn univariate_kde(samples: &[f64], h: f64, grid: &GridSpec) -> Result<GridDensity> {
    check_h(h)?;
    if samples.is_empty() {
        return Err(Error::Parameter("KDE needs at least one sample".into()));
    }
    if let Some(y) = samples.iter().find(|y| !y.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample {y}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdf = BoxCdf::new(&sorted, h);
    GridDensity::from_cdf(grid, |x| cdf.eval(x))
}

/// Pointwise box-kernel value at `y`.
pub fn box_kde_value(samples: &[f64], h: f64, y: f64) -> f64 {
    let count = samples.iter().filter(|&&s| (s - y).abs() <= h).count();
    count as f64 / (2.0 * h * samples.len() as f64)
}

/// Grid of `n_points` covering `[min − h − pad, max + h + pad]`.
pub fn kde_grid(samples: &[f64], h: f64, pad: f64, n_points: usize) -> Result<GridSpec> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Parameter("no finite samples".into()));
    }
    GridSpec::new(lo - h - pad, hi + h + pad, n_points)
}

/// Conditional density estimate at one covariate value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEstimate {
    pub density: GridDensity,
    /// Covariate actually used after boundary clamping.
    pub x_used: f64,
    /// Set when the requested `x` was outside `[a + h, b − h]`.
    pub clamped: bool,
    pub n_local: usize,
}

/// Ratio of box-kernel joint and marginal estimates,
/// `p̂(y|x) = p̂(x, y) / p̂_X(x)` with a common bandwidth `h`.
#[derive(Debug, Clone)]
pub struct ConditionalKde {
    /// Pairs sorted by covariate.
    pairs: Vec<(f64, f64)>,
    h: f64,
    a: f64,
    b: f64,
}

impl ConditionalKde {
    pub fn new(data: &Dataset, h: f64, a: f64, b: f64) -> Result<Self> {
        check_h(h)?;
        if !(a < b) {
            return Err(Error::Parameter(format!("invalid covariate domain [{a}, {b}]")));
        }
        if data.is_empty() {
            return Err(Error::InsufficientData("empty dataset".into()));
        }
        let mut pairs = data.pairs().to_vec();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
        Ok(ConditionalKde { pairs, h, a, b })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// Interior range `[a + h, b − h]`, collapsed to the midpoint when the
    /// bandwidth exceeds half the domain.
    pub fn interior(&self) -> (f64, f64) {
        let (lo, hi) = (self.a + self.h, self.b - self.h);
        if lo <= hi {
            (lo, hi)
        } else {
            let mid = 0.5 * (self.a + self.b);
            (mid, mid)
        }
    }

    /// Nearest interior point and whether clamping moved `x`.
    pub fn clamp(&self, x: f64) -> (f64, bool) {
        let (lo, hi) = self.interior();
        let c = x.clamp(lo, hi);
        (c, c != x)
    }

    /// Responses with `|Xᵢ − x| ≤ h`, in covariate order.
    pub fn local_responses(&self, x: f64) -> Vec<f64> {
        let start = self.pairs.partition_point(|p| p.0 < x - self.h);
        let end = self.pairs.partition_point(|p| p.0 <= x + self.h);
        self.pairs[start..end].iter().map(|p| p.1).collect()
    }

    /// Marginal box-kernel estimate `p̂_X(x)`.
    pub fn marginal_at(&self, x: f64) -> f64 {
        self.local_responses(x).len() as f64 / (2.0 * self.h * self.n() as f64)
    }

    /// Grid that covers every local response ± h at `x` (after clamping).
    pub fn local_grid(&self, x: f64, pad: f64, n_points: usize) -> Result<GridSpec> {
        let (xc, _) = self.clamp(x);
        let ys = self.local_responses(xc);
        if ys.is_empty() {
            return Err(Error::EmptyWindow { x: xc, h: self.h });
        }
        kde_grid(&ys, self.h, pad, n_points)
    }

    pub fn conditional_density_at(&self, x: f64, grid: &GridSpec) -> Result<ConditionalEstimate> {
        let (x_used, clamped) = self.clamp(x);
        let ys = self.local_responses(x_used);
        if ys.is_empty() {
            return Err(Error::EmptyWindow { x: x_used, h: self.h });
        }
        Ok(ConditionalEstimate {
            density: univariate_kde(&ys, self.h, grid)?,
            x_used,
            clamped,
            n_local: ys.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{l1_distance, normal_pdf};
    use crate::synth::{sample_mixed_regression, MarginalSpec, MixedRegressionModel, MixingSpec, RegressionFn};
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn default_schedule() {
        let s = BandwidthSchedule::default();
        assert!((s.bandwidth(10_000).unwrap() - 0.1).abs() < 1e-15);
        assert!(BandwidthSchedule::Fixed { h: 0.0 }.bandwidth(3).is_err());
        assert!(BandwidthSchedule::PowerLaw { c: 1.0, exponent: -0.6 }
            .validate()
            .is_err());
    }

    #[test]
    fn single_sample_box() {
        let grid = GridSpec::new(-2.0, 2.0, 401).unwrap();
        let d = univariate_kde(&[0.0], 1.0, &grid).unwrap();
        for (x, v) in grid.points().into_iter().zip(d.values()) {
            if x.abs() < 0.995 {
                assert!((v - 0.5).abs() < 1e-12, "{x} {v}");
            } else if x.abs() > 1.005 {
                assert_eq!(*v, 0.0);
            }
        }
        assert!((d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_sample_equals_translated_box() {
        let grid = GridSpec::new(0.0, 6.0, 601).unwrap();
        let many = univariate_kde(&[3.0; 17], 0.5, &grid).unwrap();
        let one = univariate_kde(&[3.0], 0.5, &grid).unwrap();
        for (a, b) in many.values().iter().zip(one.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_averages_match_pointwise_away_from_jumps() {
        let ys = [-1.3, -0.2, 0.1, 0.15, 2.0];
        let h = 0.4;
        let grid = GridSpec::new(-3.0, 3.0, 6001).unwrap();
        let d = univariate_kde(&ys, h, &grid).unwrap();
        for (i, y) in grid.points().into_iter().enumerate() {
            let near_jump = ys.iter().any(|s| ((s - y).abs() - h).abs() < 2.0 * grid.spacing());
            if !near_jump {
                assert!((d.values()[i] - box_kde_value(&ys, h, y)).abs() < 1e-9);
            }
        }
        assert!((d.integral() - 1.0).abs() < 1e-9);
    }

    fn flat_model() -> MixedRegressionModel {
        MixedRegressionModel::new(
            0.0,
            1.0,
            MarginalSpec::Uniform,
            vec![1.0],
            vec![RegressionFn::constant(0.0)],
            1.0,
            MixingSpec::default(),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn conditional_two_local_points() {
        let data = Dataset::new(vec![(0.5, -1.0), (0.5, 1.0), (0.95, 7.0)], 0, None);
        let kde = ConditionalKde::new(&data, 0.25, 0.0, 1.0).unwrap();
        let grid = GridSpec::new(-2.0, 2.0, 801).unwrap();
        let est = kde.conditional_density_at(0.5, &grid).unwrap();
        assert_eq!(est.n_local, 2);
        assert!(!est.clamped);
        assert!((est.density.value_at(-1.0) - 1.0).abs() < 1e-12);
        assert!((est.density.value_at(0.0)).abs() < 1e-12);

        let data = Dataset::new(vec![(0.5, -1.0), (0.5, 1.0)], 0, None);
        let kde = ConditionalKde::new(&data, 0.5, 0.0, 1.0).unwrap();
        let est = kde.conditional_density_at(0.5, &grid).unwrap();
        assert!((est.density.value_at(-1.0) - 0.5).abs() < 1e-12);
        assert!((est.density.value_at(1.0) - 0.5).abs() < 1e-12);
        assert!((est.density.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_clamp_and_empty_window() {
        let data = Dataset::new(vec![(0.1, 0.0), (0.9, 0.0)], 0, None);
        let kde = ConditionalKde::new(&data, 0.05, 0.0, 1.0).unwrap();
        assert_eq!(kde.clamp(1.0), (0.95, true));
        assert_eq!(kde.clamp(0.3), (0.3, false));
        let grid = GridSpec::new(-1.0, 1.0, 11).unwrap();
        assert!(matches!(
            kde.conditional_density_at(0.5, &grid),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn conditional_calibration() {
        let model = flat_model();
        let n = 10_000;
        let h = BandwidthSchedule::default().bandwidth(n).unwrap();
        let grid = GridSpec::new(-6.0, 6.0, 2401).unwrap();
        let truth = model.true_conditional_density(0.5, &grid).unwrap();
        let mut ok = 0;
        for seed in 0..10 {
            let data = sample_mixed_regression(&model, n, seed).unwrap();
            let kde = ConditionalKde::new(&data, h, 0.0, 1.0).unwrap();
            let est = kde.conditional_density_at(0.5, &grid).unwrap();
            if l1_distance(&est.density, &truth).unwrap() <= 0.2 {
                ok += 1;
            }
        }
        assert!(ok >= 9, "{ok}/10");
    }

    #[test]
    fn univariate_calibration() {
        let n = 10_000;
        let h = BandwidthSchedule::default().bandwidth(n).unwrap();
        let grid = GridSpec::new(-7.0, 7.0, 2801).unwrap();
        let truth = GridDensity::from_fn(&grid, |y| normal_pdf(y, 1.0)).unwrap();
        let mut ok = 0;
        for seed in 0..10 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let d = univariate_kde(&ys, h, &grid).unwrap();
            if l1_distance(&d, &truth).unwrap() <= 0.15 {
                ok += 1;
            }
        }
        assert!(ok >= 9, "{ok}/10");
    }
}
