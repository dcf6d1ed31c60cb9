use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight-sum tolerance for a measure to count as a probability measure.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A finite weighted list of atoms `(location, weight)`.
///
/// Construction validates the atoms but does not rescale them; use
/// [`DiscreteMeasure::normalized`] for the canonical probability form
/// (sorted locations, duplicates merged, weights summing to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.atoms)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure { atoms: m.atoms }
    }
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(loc, w) in &atoms {
            if !loc.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom location {loc}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("invalid atom weight {w}")));
            }
        }
        Ok(DiscreteMeasure { atoms })
    }

    /// Canonical probability measure: sorted, duplicate locations merged,
    /// weights rescaled to sum to one.
    pub fn normalized(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut m = DiscreteMeasure::new(atoms)?;
        m.atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(m.atoms.len());
        for (loc, w) in m.atoms {
            match merged.last_mut() {
                Some(last) if last.0 == loc => last.1 += w,
                _ => merged.push((loc, w)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("measure has zero total mass".into()));
        }
        for a in &mut merged {
            a.1 /= total;
        }
        Ok(DiscreteMeasure { atoms: merged })
    }

    pub fn point_mass(loc: f64) -> Result<Self> {
        DiscreteMeasure::normalized(vec![(loc, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn is_normalized(&self) -> bool {
        !self.atoms.is_empty() && (self.total_mass() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(a, w)| a * w).sum::<f64>() / self.total_mass()
    }

    /// Smallest and largest location carrying positive weight.
    pub fn support_bounds(&self) -> Option<(f64, f64)> {
        let mut it = self.atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }

    pub fn shifted(&self, s: f64) -> Self {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(|&(a, w)| (a + s, w)).collect(),
        }
    }

    /// Atoms whose location satisfies `keep`, weights untouched.
    pub fn restricted(&self, keep: impl Fn(f64) -> bool) -> Self {
        DiscreteMeasure {
            atoms: self.atoms.iter().copied().filter(|a| keep(a.0)).collect(),
        }
    }

    pub(crate) fn require_normalized(&self, what: &str) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!(
                "{what} has total mass {} (expected 1)",
                self.total_mass()
            )))
        }
    }
}

/// A uniform distribution on `[lo, hi]` carrying mass `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPiece {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

/// Probability measure made of point masses and uniform pieces.
///
/// Its CDF is piecewise linear with jumps, which is what the exact
/// Wasserstein and Gaussian-convolution routines need. Ground-truth
/// mixing measures are represented this way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub pieces: Vec<UniformPiece>,
}

impl PiecewiseMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, pieces: Vec<UniformPiece>) -> Result<Self> {
        for &(loc, w) in &atoms {
            if !loc.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("invalid atom ({loc}, {w})")));
            }
        }
        for p in &pieces {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.lo < p.hi) {
                return Err(Error::InvalidMeasure(format!(
                    "invalid uniform piece [{}, {}]",
                    p.lo, p.hi
                )));
            }
            if !p.weight.is_finite() || p.weight < 0.0 {
                return Err(Error::InvalidMeasure(format!("invalid piece weight {}", p.weight)));
            }
        }
        let m = PiecewiseMeasure { atoms, pieces };
        if m.total_mass() <= 0.0 {
            return Err(Error::InvalidMeasure("measure has zero total mass".into()));
        }
        Ok(m)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.pieces.iter().map(|p| p.weight).sum::<f64>()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn normalize(mut self) -> Self {
        let total = self.total_mass();
        for a in &mut self.atoms {
            a.1 /= total;
        }
        for p in &mut self.pieces {
            p.weight /= total;
        }
        self
    }

    pub fn mean(&self) -> f64 {
        let m: f64 = self.atoms.iter().map(|&(a, w)| a * w).sum::<f64>()
            + self.pieces.iter().map(|p| 0.5 * (p.lo + p.hi) * p.weight).sum::<f64>();
        m / self.total_mass()
    }

    pub fn shifted(&self, s: f64) -> Self {
        PiecewiseMeasure {
            atoms: self.atoms.iter().map(|&(a, w)| (a + s, w)).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| UniformPiece {
                    lo: p.lo + s,
                    hi: p.hi + s,
                    weight: p.weight,
                })
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PiecewiseMeasure {
            atoms: self.atoms.iter().map(|&(a, w)| (a, w * factor)).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| UniformPiece {
                    weight: p.weight * factor,
                    ..*p
                })
                .collect(),
        }
    }

    /// Weighted sum of measures; weights are applied as given.
    pub fn mixture(parts: &[(f64, PiecewiseMeasure)]) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        for (w, m) in parts {
            let s = m.scaled(*w);
            atoms.extend(s.atoms);
            pieces.extend(s.pieces);
        }
        PiecewiseMeasure::new(atoms, pieces)
    }

    pub fn support_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(a, w) in &self.atoms {
            if w > 0.0 {
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
        for p in &self.pieces {
            if p.weight > 0.0 {
                lo = lo.min(p.lo);
                hi = hi.max(p.hi);
            }
        }
        (lo, hi)
    }

    pub fn support_diameter(&self) -> f64 {
        let (lo, hi) = self.support_bounds();
        hi - lo
    }

    /// Distance from `x` to the closed support.
    pub fn distance_to_support(&self, x: f64) -> f64 {
        let atom_d = self.atoms.iter().filter(|a| a.1 > 0.0).map(|a| (x - a.0).abs());
        let piece_d = self.pieces.iter().filter(|p| p.weight > 0.0).map(|p| {
            if x < p.lo {
                p.lo - x
            } else if x > p.hi {
                x - p.hi
            } else {
                0.0
            }
        });
        atom_d.chain(piece_d).fold(f64::INFINITY, f64::min)
    }

    /// Distance between the supports of two measures.
    pub fn support_distance(&self, other: &PiecewiseMeasure) -> f64 {
        let endpoints = |m: &PiecewiseMeasure| -> Vec<(f64, f64)> {
            m.atoms
                .iter()
                .filter(|a| a.1 > 0.0)
                .map(|a| (a.0, a.0))
                .chain(m.pieces.iter().filter(|p| p.weight > 0.0).map(|p| (p.lo, p.hi)))
                .collect()
        };
        let a = endpoints(self);
        let b = endpoints(other);
        let mut best = f64::INFINITY;
        for &(alo, ahi) in &a {
            for &(blo, bhi) in &b {
                let d = if ahi < blo {
                    blo - ahi
                } else if bhi < alo {
                    alo - bhi
                } else {
                    0.0
                };
                best = best.min(d);
            }
        }
        best
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        let pieces: f64 = self
            .pieces
            .iter()
            .map(|p| p.weight * ((x - p.lo) / (p.hi - p.lo)).clamp(0.0, 1.0))
            .sum();
        atoms + pieces
    }

    /// Density slope of the CDF on the open interval `(x, x + dx)` for small
    /// `dx`, i.e. total uniform density covering that interval.
    pub(crate) fn density_on(&self, lo: f64, hi: f64) -> f64 {
        let mid = 0.5 * (lo + hi);
        self.pieces
            .iter()
            .filter(|p| p.lo <= mid && mid < p.hi)
            .map(|p| p.weight / (p.hi - p.lo))
            .sum()
    }

    pub(crate) fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms
            .iter()
            .map(|a| a.0)
            .chain(self.pieces.iter().flat_map(|p| [p.lo, p.hi]))
    }
}

impl From<&DiscreteMeasure> for PiecewiseMeasure {
    fn from(m: &DiscreteMeasure) -> Self {
        PiecewiseMeasure {
            atoms: m.atoms().to_vec(),
            pieces: Vec::new(),
        }
    }
}
