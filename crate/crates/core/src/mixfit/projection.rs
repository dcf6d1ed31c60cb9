use serde::{Deserialize, Serialize};

use super::l1lp;
use crate::error::{Error, Result};
use crate::measures::{normal_cdf, DiscreteMeasure, GridDensity, DENSITY_TOL};

/// Atom count used when neither the config nor the caller fixes one.
pub const DEFAULT_ATOMS: usize = 100;

/// Settings for the L¹ projection onto finite Gaussian location mixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    /// Number of atoms `L`; `None` means `⌈√n⌉` in the pipelines.
    pub n_atoms: Option<usize>,
    /// Atoms live on `[−M, M]`; `None` means 1.1 × the largest |y| in the data.
    pub support_bound: Option<f64>,
    /// Points of the response grid the objective is evaluated on.
    pub grid_points: usize,
    pub solver_tol: f64,
    pub max_iters: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            n_atoms: None,
            support_bound: None,
            grid_points: 2048,
            solver_tol: 1e-8,
            max_iters: 5000,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == Some(0) {
            return Err(Error::Parameter("projection needs at least one atom".into()));
        }
        if let Some(m) = self.support_bound {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Parameter(format!("support bound must be positive, got {m}")));
            }
        }
        if self.grid_points < 2 {
            return Err(Error::Parameter("projection grid needs at least 2 points".into()));
        }
        if !(self.solver_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::Parameter(
                "solver tolerance and iteration budget must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Atom count for sample size `n`.
    pub fn atoms_for(&self, n: usize) -> usize {
        self.n_atoms
            .unwrap_or_else(|| ((n as f64).sqrt().ceil() as usize).max(1))
    }
}

/// Result of [`project_to_gaussian_mixture`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub measure: DiscreteMeasure,
    /// Achieved `‖φ_σ ∗ Ĝ − p̂‖₁` on the grid.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_atoms: usize,
    pub support_bound: f64,
}

/// Cell averages of `φ_σ(· − a)` over the quadrature cells of the target
/// grid, one vector per atom.
fn design_columns(p_hat: &GridDensity, atoms: &[f64], sigma: f64) -> Vec<Vec<f64>> {
    let spec = p_hat.spec();
    let edges = spec.cell_edges();
    let weights = spec.weights();
    atoms
        .iter()
        .map(|&a| {
            let cdf: Vec<f64> = edges.iter().map(|&e| normal_cdf(e - a, sigma)).collect();
            (0..weights.len()).map(|j| (cdf[j + 1] - cdf[j]) / weights[j]).collect()
        })
        .collect()
}

fn weighted_l1(columns: &[Vec<f64>], w: &[f64], p_hat: &GridDensity) -> f64 {
    let omega = p_hat.spec().weights();
    p_hat
        .values()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let fit: f64 = columns.iter().zip(w).map(|(c, wl)| wl * c[j]).sum();
            omega[j] * (fit - p).abs()
        })
        .sum()
}

/// Weights on a fixed uniform atom grid of `[−M, M]` minimizing the
/// discretized `‖φ_σ ∗ Ĝ − p̂‖₁` over the simplex.
///
/// The problem is a linear program; it is solved exactly by a simplex
/// method on its dual; `solver_tol` is the reduced-cost optimality
/// tolerance and `max_iters` caps the number of pivots.
pub fn project_to_gaussian_mixture(p_hat: &GridDensity, sigma: f64, cfg: &ProjectionConfig) -> Result<Projection> {
    cfg.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    if !p_hat.is_normalized(DENSITY_TOL) {
        return Err(Error::InvalidMeasure(format!(
            "target density integrates to {}",
            p_hat.integral()
        )));
    }
    let support_bound = match cfg.support_bound {
        Some(m) => m,
        None => {
            let (lo, hi) = p_hat
                .positive_range()
                .ok_or_else(|| Error::InvalidMeasure("target density is identically zero".into()))?;
            (1.1 * lo.abs().max(hi.abs())).max(f64::MIN_POSITIVE)
        }
    };
    let n_atoms = cfg.n_atoms.unwrap_or(DEFAULT_ATOMS);
    let atoms: Vec<f64> = if n_atoms == 1 {
        vec![0.0]
    } else {
        (0..n_atoms)
            .map(|l| -support_bound + 2.0 * support_bound * l as f64 / (n_atoms - 1) as f64)
            .collect()
    };
    let columns = design_columns(p_hat, &atoms, sigma);
    let omega = p_hat.spec().weights();
    let scaled: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| c.iter().zip(&omega).map(|(v, o)| v * o).collect())
        .collect();
    let cost: Vec<f64> = p_hat.values().iter().zip(&omega).map(|(v, o)| v * o).collect();
    let sol = l1lp::solve(&scaled, &cost, cfg.solver_tol, cfg.max_iters)?;
    let objective = weighted_l1(&columns, &sol.weights, p_hat);
    let w = sol.weights;
    let (converged, iterations) = (sol.optimal, sol.pivots);
    let measure = DiscreteMeasure::normalized(atoms.into_iter().zip(w).filter(|&(_, wl)| wl > 0.0).collect())?;
    Ok(Projection {
        measure,
        objective,
        converged,
        iterations,
        n_atoms,
        support_bound,
    })
}
