use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use super::{DiscreteMeasure, GridDensity, GridSpec, PiecewiseMeasure};
use crate::error::{Error, Result};

/// Density of `N(0, sigma²)`.
#[inline]
pub fn normal_pdf(x: f64, sigma: f64) -> f64 {
    let z = x / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// CDF of `N(0, sigma²)`.
#[inline]
pub fn normal_cdf(x: f64, sigma: f64) -> f64 {
    0.5 * erfc(-x / (sigma * SQRT_2))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("sigma must be positive, got {sigma}")))
    }
}

/// Grid spanning the support of `g` padded by `6σ` on both sides.
pub fn covering_grid(lo: f64, hi: f64, sigma: f64, n_points: usize) -> Result<GridSpec> {
    GridSpec::new(lo - 6.0 * sigma, hi + 6.0 * sigma, n_points)
}

/// Point evaluation of `φ_σ ∗ g` on `grid`.
pub fn convolve_gaussian(g: &DiscreteMeasure, sigma: f64, grid: &GridSpec) -> Result<GridDensity> {
    check_sigma(sigma)?;
    let atoms: Vec<(f64, f64)> = g.atoms().iter().copied().filter(|a| a.1 > 0.0).collect();
    GridDensity::from_fn(grid, |y| atoms.iter().map(|&(a, w)| w * normal_pdf(y - a, sigma)).sum())
}

/// Point evaluation of `φ_σ ∗ g` where uniform pieces integrate in closed
/// form through Gaussian CDF differences.
pub fn convolve_gaussian_piecewise(g: &PiecewiseMeasure, sigma: f64, grid: &GridSpec) -> Result<GridDensity> {
    check_sigma(sigma)?;
    GridDensity::from_fn(grid, |y| gaussian_mixture_value(g, sigma, y))
}

pub(crate) fn gaussian_mixture_value(g: &PiecewiseMeasure, sigma: f64, y: f64) -> f64 {
    let atoms: f64 = g.atoms.iter().map(|&(a, w)| w * normal_pdf(y - a, sigma)).sum();
    let pieces: f64 = g
        .pieces
        .iter()
        .map(|p| {
            let mass = normal_cdf(y - p.lo, sigma) - normal_cdf(y - p.hi, sigma);
            p.weight * mass / (p.hi - p.lo)
        })
        .sum();
    atoms + pieces
}

/// CDF of `φ_σ ∗ g` at `y`.
pub(crate) fn gaussian_mixture_cdf(g: &PiecewiseMeasure, sigma: f64, y: f64) -> f64 {
    let atoms: f64 = g.atoms.iter().map(|&(a, w)| w * normal_cdf(y - a, sigma)).sum();
    // ∫ Φ((y−θ)/σ) dθ / (hi−lo) over the piece, via the antiderivative of Φ.
    let big_psi = |u: f64| u * normal_cdf(u, sigma) + sigma * sigma * normal_pdf(u, sigma);
    let pieces: f64 = g
        .pieces
        .iter()
        .map(|p| p.weight * (big_psi(y - p.lo) - big_psi(y - p.hi)) / (p.hi - p.lo))
        .sum();
    atoms + pieces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{density_mean, UniformPiece};

    #[test]
    fn point_mass_gives_standard_normal() {
        let g = DiscreteMeasure::point_mass(0.0).unwrap();
        let grid = covering_grid(0.0, 0.0, 1.0, 1201).unwrap();
        let d = convolve_gaussian(&g, 1.0, &grid).unwrap();
        for (y, v) in grid.points().iter().zip(d.values()) {
            assert!((v - normal_pdf(*y, 1.0)).abs() < 1e-15);
        }
        assert!(d.is_normalized(1e-4));
    }

    #[test]
    fn bimodal_value_at_zero() {
        let g = DiscreteMeasure::normalized(vec![(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let grid = GridSpec::new(-5.0, 5.0, 1001).unwrap();
        let d = convolve_gaussian(&g, 0.5, &grid).unwrap();
        // φ_{0.5}(2) = exp(−8)/(0.5√(2π))
        let expected = (-8.0_f64).exp() / (0.5 * (2.0 * PI).sqrt());
        assert!((d.value_at(0.0) - expected).abs() < 1e-15);
        assert!((expected - 2.68e-4).abs() < 1e-6);
        let vals = d.values();
        for i in 0..vals.len() {
            assert!((vals[i] - vals[vals.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn convolution_preserves_mean() {
        let g = DiscreteMeasure::normalized(vec![(-1.0, 0.2), (0.5, 0.3), (3.0, 0.5)]).unwrap();
        let grid = covering_grid(-1.0, 3.0, 0.7, 4001).unwrap();
        let d = convolve_gaussian(&g, 0.7, &grid).unwrap();
        assert!((density_mean(&d).unwrap() - g.mean()).abs() < 1e-6);
    }

    #[test]
    fn bad_sigma() {
        let g = DiscreteMeasure::point_mass(0.0).unwrap();
        let grid = GridSpec::new(-1.0, 1.0, 11).unwrap();
        assert!(matches!(convolve_gaussian(&g, 0.0, &grid), Err(Error::Parameter(_))));
    }

    #[test]
    fn uniform_piece_matches_fine_atom_discretization() {
        let piece = PiecewiseMeasure::new(
            vec![],
            vec![UniformPiece {
                lo: -1.0,
                hi: 2.0,
                weight: 1.0,
            }],
        )
        .unwrap();
        let m = 30_000;
        let atoms = (0..m)
            .map(|i| (-1.0 + 3.0 * (i as f64 + 0.5) / m as f64, 1.0))
            .collect();
        let fine = PiecewiseMeasure::from(&DiscreteMeasure::normalized(atoms).unwrap());
        for y in [-3.0, -1.0, 0.3, 2.0, 4.0] {
            let a = gaussian_mixture_value(&piece, 0.4, y);
            let b = gaussian_mixture_value(&fine, 0.4, y);
            assert!((a - b).abs() < 1e-8, "{y}: {a} vs {b}");
            let ca = gaussian_mixture_cdf(&piece, 0.4, y);
            let cb = gaussian_mixture_cdf(&fine, 0.4, y);
            assert!((ca - cb).abs() < 1e-8, "{y}: {ca} vs {cb}");
        }
    }
}
