use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{PiecewiseMeasure, UniformPiece};

/// Base density `q` tilted by the triangular truncation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothBase {
    Gaussian { mean: f64, sd: f64 },
    Laplace { mean: f64, scale: f64 },
}

impl SmoothBase {
    fn density(&self, x: f64) -> f64 {
        match *self {
            SmoothBase::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp()
            }
            SmoothBase::Laplace { mean, scale } => (-(x - mean).abs() / scale).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SmoothBase::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0,
            SmoothBase::Laplace { mean, scale } => mean.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Model(format!("invalid smooth base density {self:?}")))
        }
    }
}

fn default_atoms() -> usize {
    201
}

/// Specification of a compactly supported mixing measure `G₀`.
///
/// Every variant is centered to mean zero when turned into a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingSpec {
    PointMass {
        #[serde(default)]
        location: f64,
    },
    /// Finite mixture of uniform distributions on intervals.
    UniformMixture { pieces: Vec<UniformPiece> },
    /// Density `∝ (φ∗φ)(x/scale)·q(x)` with `φ = ½·1[−1,1]`, supported on
    /// `[−2·scale, 2·scale]`, discretized to `atoms` midpoint atoms.
    TruncatedSmooth {
        scale: f64,
        base: SmoothBase,
        #[serde(default = "default_atoms")]
        atoms: usize,
    },
    /// Explicit finite atom list.
    Discrete { atoms: Vec<(f64, f64)> },
}

impl Default for MixingSpec {
    fn default() -> Self {
        MixingSpec::PointMass { location: 0.0 }
    }
}

impl MixingSpec {
    /// The centered, normalized measure.
    pub fn measure(&self) -> Result<PiecewiseMeasure> {
        let raw = match self {
            MixingSpec::PointMass { location } => {
                if !location.is_finite() {
                    return Err(Error::Model("point mass location must be finite".into()));
                }
                PiecewiseMeasure::new(vec![(*location, 1.0)], vec![])?
            }
            MixingSpec::UniformMixture { pieces } => {
                if pieces.is_empty() {
                    return Err(Error::Model("uniform mixture needs at least one piece".into()));
                }
                PiecewiseMeasure::new(vec![], pieces.clone())?
            }
            MixingSpec::TruncatedSmooth { scale, base, atoms } => {
                base.validate()?;
                if !(*scale > 0.0 && scale.is_finite()) || *atoms < 2 {
                    return Err(Error::Model(format!(
                        "truncated smooth family needs scale > 0 and ≥ 2 atoms (got {scale}, {atoms})"
                    )));
                }
                let half = 2.0 * scale;
                let step = 2.0 * half / *atoms as f64;
                let pts = (0..*atoms)
                    .map(|i| {
                        let x = -half + (i as f64 + 0.5) * step;
                        let tri = (2.0 - (x / scale).abs()) / 4.0;
                        (x, tri * base.density(x))
                    })
                    .collect();
                PiecewiseMeasure::new(pts, vec![])?
            }
            MixingSpec::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Model("discrete mixing measure needs atoms".into()));
                }
                PiecewiseMeasure::new(atoms.clone(), vec![])?
            }
        };
        let normalized = raw.normalize();
        let mean = normalized.mean();
        Ok(normalized.shifted(-mean))
    }
}
