use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::GridSpec;
use crate::synth::Dataset;

/// Points of the covariate grid scanned for separation.
pub const SEPARATION_GRID: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationPoint {
    pub x: f64,
    /// `+∞` (serialized as `null`) when there is nothing to separate.
    #[serde(with = "crate::measures::unbounded::upper")]
    pub sep: f64,
    pub n_local: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationProfile {
    pub x_star: f64,
    pub window: f64,
    /// Grid points whose window held enough data.
    pub profile: Vec<SeparationPoint>,
}

/// Groups sorted values into `k` clusters by cutting the `k − 1` widest
/// gaps (ties to the leftmost), returning `(center, half_range)` per
/// cluster in increasing order.
pub fn gap_clusters(sorted: &[f64], k: usize) -> Vec<(f64, f64)> {
    let mut gaps: Vec<(f64, usize)> = sorted.windows(2).enumerate().map(|(i, w)| (w[1] - w[0], i)).collect();
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut cuts: Vec<usize> = gaps.iter().take(k.saturating_sub(1)).map(|g| g.1 + 1).collect();
    cuts.sort_unstable();
    cuts.push(sorted.len());
    let mut start = 0;
    cuts.into_iter()
        .map(|end| {
            let c = &sorted[start..end];
            start = end;
            let center = c.iter().sum::<f64>() / c.len() as f64;
            (center, 0.5 * (c[c.len() - 1] - c[0]))
        })
        .collect()
}

/// `Sep(x)`: smallest distance between cluster centers minus twice the
/// largest cluster half-range.
fn separation(ys: &mut [f64], k: usize) -> f64 {
    if k <= 1 {
        return f64::INFINITY;
    }
    ys.sort_by(f64::total_cmp);
    let clusters = gap_clusters(ys, k);
    let min_dist = clusters
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(f64::INFINITY, f64::min);
    let max_half = clusters.iter().map(|c| c.1).fold(0.0, f64::max);
    min_dist - 2.0 * max_half
}

/// Scans the covariate range for the point where the `k` response
/// clusters are best separated. Ties go to the smallest `x`.
pub fn find_separation_point(data: &Dataset, k: usize, window: f64) -> Result<SeparationProfile> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Parameter(format!("window must be positive, got {window}")));
    }
    if k == 0 {
        return Err(Error::Parameter("need at least one component".into()));
    }
    if data.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    let mut pairs = data.pairs().to_vec();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (a, b) = (pairs[0].0, pairs[pairs.len() - 1].0);
    if k == 1 {
        let mid = 0.5 * (a + b);
        return Ok(SeparationProfile {
            x_star: mid,
            window,
            profile: vec![SeparationPoint {
                x: mid,
                sep: f64::INFINITY,
                n_local: pairs.len(),
            }],
        });
    }
    let xs = if a < b {
        GridSpec::new(a, b, SEPARATION_GRID)?.points()
    } else {
        vec![a]
    };
    let min_points = 5 * k;
    let mut profile = Vec::new();
    for x in xs {
        let lo = pairs.partition_point(|p| p.0 < x - window);
        let hi = pairs.partition_point(|p| p.0 <= x + window);
        if hi - lo < min_points {
            continue;
        }
        let mut ys: Vec<f64> = pairs[lo..hi].iter().map(|p| p.1).collect();
        profile.push(SeparationPoint {
            x,
            sep: separation(&mut ys, k),
            n_local: hi - lo,
        });
    }
    let Some(first) = profile.first() else {
        return Err(Error::InsufficientData(format!(
            "no window of half-width {window} holds {min_points} points"
        )));
    };
    let mut best = *first;
    for p in &profile[1..] {
        let tol = 1e-9 * best.sep.abs().max(1.0);
        if p.sep > best.sep + tol {
            best = *p;
        }
    }
    Ok(SeparationProfile {
        x_star: best.x,
        window,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{sample_mixed_regression, MarginalSpec, MixedRegressionModel, MixingSpec, RegressionFn};

    fn model(m: Vec<RegressionFn>, sigma: f64, x0: f64) -> MixedRegressionModel {
        MixedRegressionModel::new(
            -1.0,
            1.0,
            MarginalSpec::Uniform,
            vec![0.35, 0.65],
            m,
            sigma,
            MixingSpec::default(),
            x0,
        )
        .unwrap()
    }

    #[test]
    fn clusters_by_widest_gap() {
        let c = gap_clusters(&[0.0, 0.1, 0.2, 5.0, 5.2], 2);
        assert!((c[0].0 - 0.1).abs() < 1e-12 && (c[0].1 - 0.1).abs() < 1e-12);
        assert!((c[1].0 - 5.1).abs() < 1e-12);
    }

    #[test]
    fn constant_curves_tie_to_leftmost() {
        let m = model(
            vec![RegressionFn::constant(-2.0), RegressionFn::constant(2.0)],
            1e-12,
            0.0,
        );
        let data = sample_mixed_regression(&m, 2000, 4).unwrap();
        let s = find_separation_point(&data, 2, 0.1).unwrap();
        assert_eq!(s.x_star, s.profile[0].x);
        for p in &s.profile {
            assert!((p.sep - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn crossing_lines_separate_at_boundary() {
        let m = model(
            vec![RegressionFn::linear(0.0, 1.0), RegressionFn::linear(0.0, -1.0)],
            0.1,
            1.0,
        );
        for seed in 0..3 {
            let data = sample_mixed_regression(&m, 5000, seed).unwrap();
            let s = find_separation_point(&data, 2, 0.1).unwrap();
            assert!(s.x_star.abs() >= 0.8, "seed {seed}: {}", s.x_star);
        }
    }

    #[test]
    fn single_component_is_midpoint() {
        let m = model(
            vec![RegressionFn::constant(-2.0), RegressionFn::constant(2.0)],
            0.1,
            0.0,
        );
        let data = sample_mixed_regression(&m, 200, 1).unwrap();
        let s = find_separation_point(&data, 1, 0.1).unwrap();
        assert!(s.profile[0].sep.is_infinite());
        let (lo, hi) = data
            .covariates()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        assert!((s.x_star - 0.5 * (lo + hi)).abs() < 1e-12);
        let json = serde_json::to_string(&s).unwrap();
        let back: SeparationProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn underpopulated_windows() {
        let data = Dataset::new(vec![(0.0, 1.0), (1.0, 2.0)], 0, None);
        assert!(matches!(
            find_separation_point(&data, 2, 0.1),
            Err(Error::InsufficientData(_))
        ));
    }
}
