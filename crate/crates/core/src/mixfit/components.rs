use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{
    convolve_gaussian, covering_grid, density_mean, Cell, DiscreteMeasure, GridDensity, IntervalSet,
};

/// Mass below which a cell counts as empty.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Diagnostics of the pipeline that produced a [`MixtureFit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FitDiagnostics {
    pub projection_objective: f64,
    pub projection_converged: bool,
    pub projection_pivots: usize,
    pub n_atoms: usize,
    pub support_bound: f64,
    /// Plug-in `d` behind the automatic schedule, if used.
    pub plug_in_d: Option<f64>,
    pub delta: f64,
    /// Threshold finally used, after any retries.
    pub threshold: f64,
    pub retries: usize,
    pub bandwidth: Option<f64>,
    pub n_eff: usize,
    /// The smoothed estimate `ĝ` the level sets were read from.
    pub g_smooth: Option<GridDensity>,
}

/// Estimated components of a `K`-component mixture, sorted by weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub k: usize,
    pub lambdas_hat: Vec<f64>,
    /// Component densities re-centered to mean zero.
    pub f_hats: Vec<GridDensity>,
    pub mus_hat: Vec<f64>,
    pub e_hats: Vec<IntervalSet>,
    pub cells: Vec<Cell>,
    pub g_hat: DiscreteMeasure,
    /// Position of each component among the left-to-right cells.
    pub cell_index: Vec<usize>,
    #[serde(default)]
    pub diagnostics: FitDiagnostics,
}

impl MixtureFit {
    /// `Σₖ λ̂ₖ f̂ₖ` on `grid`, with each `f̂ₖ` linearly interpolated.
    pub fn pooled_density(&self, grid: &crate::measures::GridSpec) -> Result<GridDensity> {
        let resampled: Vec<GridDensity> = self.f_hats.iter().map(|f| f.resampled(grid)).collect();
        let parts: Vec<(f64, &GridDensity)> = self.lambdas_hat.iter().copied().zip(resampled.iter()).collect();
        GridDensity::weighted_sum(&parts)
    }

    /// Smallest interval containing every `f̂ₖ` grid.
    pub fn component_range(&self) -> (f64, f64) {
        self.f_hats
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
                (lo.min(f.lo()), hi.max(f.hi()))
            })
    }
}

/// Component estimates from a mixing measure and a partition of the line.
///
/// `λ̂ₖ = Ĝ(Eₖ)`, `F̂ₖ = φ_σ ∗ (Ĝ|Eₖ)` on an `n_points` grid covering the
/// restricted atoms ± 6σ, `μ̂ₖ` the mean of `F̂ₖ` and `f̂ₖ = F̂ₖ(· + μ̂ₖ)`.
/// The output is sorted by `λ̂` ascending (stable in cell order).
pub fn estimate_components(
    g: &DiscreteMeasure,
    cells: &[Cell],
    e_hats: &[IntervalSet],
    sigma: f64,
    n_points: usize,
) -> Result<MixtureFit> {
    if !crate::measures::is_partition_of_line(cells) {
        return Err(Error::InvalidInput("cells do not partition the real line".into()));
    }
    if e_hats.len() != cells.len() {
        return Err(Error::InvalidInput(format!(
            "{} level sets for {} cells",
            e_hats.len(),
            cells.len()
        )));
    }
    let mut parts = Vec::with_capacity(cells.len());
    for (idx, cell) in cells.iter().enumerate() {
        let restricted = g.restricted(|x| cell.contains(x));
        let lambda = restricted.total_mass();
        if lambda <= DEGENERATE_MASS {
            return Err(Error::DegenerateComponent { index: idx });
        }
        let conditional = DiscreteMeasure::normalized(restricted.atoms().to_vec())?;
        let (lo, hi) = conditional.support_bounds().expect("nonempty measure");
        let grid = covering_grid(lo, hi, sigma, n_points)?;
        let big_f = convolve_gaussian(&conditional, sigma, &grid)?;
        let mu = density_mean(&big_f)?;
        parts.push((lambda, big_f.shifted(-mu), mu, idx));
    }
    let total: f64 = parts.iter().map(|p| p.0).sum();
    for p in &mut parts {
        p.0 /= total;
    }
    parts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(MixtureFit {
        k: cells.len(),
        lambdas_hat: parts.iter().map(|p| p.0).collect(),
        f_hats: parts.iter().map(|p| p.1.clone()).collect(),
        mus_hat: parts.iter().map(|p| p.2).collect(),
        e_hats: parts.iter().map(|p| e_hats[p.3].clone()).collect(),
        cells: parts.iter().map(|p| cells[p.3]).collect(),
        g_hat: g.clone(),
        cell_index: parts.iter().map(|p| p.3).collect(),
        diagnostics: FitDiagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{l1_distance, normal_pdf, GridSpec};

    fn split_at_zero() -> (Vec<Cell>, Vec<IntervalSet>) {
        (
            vec![
                Cell {
                    lo: f64::NEG_INFINITY,
                    hi: 0.0,
                },
                Cell {
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
            ],
            vec![
                IntervalSet::single(-3.0, -2.0).unwrap(),
                IntervalSet::single(2.0, 3.0).unwrap(),
            ],
        )
    }

    #[test]
    fn point_mass_components() {
        let g = DiscreteMeasure::normalized(vec![(-2.5, 0.6), (2.5, 0.4)]).unwrap();
        let (cells, e) = split_at_zero();
        let fit = estimate_components(&g, &cells, &e, 0.3, 1024).unwrap();
        assert_eq!(fit.lambdas_hat, vec![0.4, 0.6]);
        assert_eq!(fit.lambdas_hat.iter().sum::<f64>(), 1.0);
        assert!((fit.mus_hat[0] - 2.5).abs() < 1e-6);
        assert!((fit.mus_hat[1] + 2.5).abs() < 1e-6);
        assert_eq!(fit.cell_index, vec![1, 0]);
        for f in &fit.f_hats {
            let truth = GridDensity::from_fn(&f.spec(), |y| normal_pdf(y, 0.3)).unwrap();
            assert!(l1_distance(f, &truth).unwrap() < 1e-6);
            assert!(density_mean(f).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn two_atom_component_is_centered_blend() {
        let g = DiscreteMeasure::normalized(vec![(-3.0, 0.1), (-2.0, 0.3), (2.0, 0.3), (2.6, 0.3)]).unwrap();
        let (cells, e) = split_at_zero();
        let sigma = 0.4;
        let fit = estimate_components(&g, &cells, &e, sigma, 2048).unwrap();
        // Right cell: atoms 2.0 and 2.6 with equal mass, mean 2.3.
        let k = fit.cell_index.iter().position(|&c| c == 1).unwrap();
        let f = &fit.f_hats[k];
        let blend = |y: f64| 0.5 * normal_pdf(y + 0.3, sigma) + 0.5 * normal_pdf(y - 0.3, sigma);
        let grid = GridSpec::new(-2.5, 2.5, 1001).unwrap();
        for y in grid.points() {
            assert!((f.value_at(y) - blend(y)).abs() < 1e-4);
        }
        assert!(density_mean(f).unwrap().abs() < 1e-6);
        assert!((fit.mus_hat[k] - 2.3).abs() < 1e-6);
    }

    #[test]
    fn empty_cell_is_degenerate() {
        let g = DiscreteMeasure::point_mass(1.0).unwrap();
        let (cells, e) = split_at_zero();
        assert!(matches!(
            estimate_components(&g, &cells, &e, 0.3, 256),
            Err(Error::DegenerateComponent { index: 0 })
        ));
    }
}
