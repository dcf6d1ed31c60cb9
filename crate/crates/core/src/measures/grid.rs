use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on `|∫d − 1|` for a grid density to count as normalized.
pub const DENSITY_TOL: f64 = 1e-3;

/// A uniform grid of `n_points` nodes spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Grid(format!("invalid grid range [{lo}, {hi}]")));
        }
        if n_points < 2 {
            return Err(Error::Grid(format!("grid needs at least 2 points, got {n_points}")));
        }
        Ok(GridSpec { lo, hi, n_points })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64 / (self.n_points - 1) as f64)
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = 0.5 * h;
        w[self.n_points - 1] = 0.5 * h;
        w
    }

    /// Edges of the quadrature cells: the trapezoid weight of node `i` is
    /// the length of `[edges[i], edges[i+1]]`, clipped to `[lo, hi]`.
    pub(crate) fn cell_edges(&self) -> Vec<f64> {
        let n = self.n_points;
        let mut e = Vec::with_capacity(n + 1);
        e.push(self.lo);
        for i in 0..n - 1 {
            e.push(0.5 * (self.point(i) + self.point(i + 1)));
        }
        e.push(self.hi);
        e
    }
}

/// Density values on a uniform 1-D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl TryFrom<RawGrid> for GridDensity {
    type Error = Error;

    fn try_from(r: RawGrid) -> Result<Self> {
        GridDensity::new(r.lo, r.hi, r.values)
    }
}

impl From<GridDensity> for RawGrid {
    fn from(g: GridDensity) -> Self {
        RawGrid {
            lo: g.lo,
            hi: g.hi,
            values: g.values,
        }
    }
}

impl GridDensity {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        GridSpec::new(lo, hi, values.len())?;
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Grid(format!("density value {v} is not finite and nonnegative")));
        }
        Ok(GridDensity { lo, hi, values })
    }

    /// Point evaluation of `f` at every node.
    pub fn from_fn(spec: &GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..spec.n_points).map(|i| f(spec.point(i)).max(0.0)).collect();
        GridDensity::new(spec.lo, spec.hi, values)
    }

    /// Cell-mass discretization of a distribution with CDF `cdf`: each node
    /// value is the mass of its quadrature cell divided by the cell length,
    /// so the trapezoid integral equals `cdf(hi) − cdf(lo)` exactly.
    pub fn from_cdf(spec: &GridSpec, cdf: impl Fn(f64) -> f64) -> Result<Self> {
        let edges = spec.cell_edges();
        let fe: Vec<f64> = edges.iter().map(|&e| cdf(e)).collect();
        let w = spec.weights();
        let values = (0..spec.n_points)
            .map(|i| ((fe[i + 1] - fe[i]) / w[i]).max(0.0))
            .collect();
        GridDensity::new(spec.lo, spec.hi, values)
    }

    pub fn zeros(spec: &GridSpec) -> Self {
        GridDensity {
            lo: spec.lo,
            hi: spec.hi,
            values: vec![0.0; spec.n_points],
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            lo: self.lo,
            hi: self.hi,
            n_points: self.values.len(),
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spec().spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        self.spec().points()
    }

    pub fn integral(&self) -> f64 {
        let w = self.spec().weights();
        self.values.iter().zip(&w).map(|(v, w)| v * w).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.integral() - 1.0).abs() <= tol
    }

    /// Linear interpolation between nodes, zero outside `[lo, hi]`.
    pub fn value_at(&self, y: f64) -> f64 {
        if !(y >= self.lo && y <= self.hi) {
            return 0.0;
        }
        let h = self.spacing();
        let u = (y - self.lo) / h;
        let i = (u.floor() as usize).min(self.values.len() - 2);
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Same values on a grid translated by `s`, i.e. the density of `Y + s`.
    pub fn shifted(&self, s: f64) -> Self {
        GridDensity {
            lo: self.lo + s,
            hi: self.hi + s,
            values: self.values.clone(),
        }
    }

    /// Linear-interpolation resampling onto another grid.
    pub fn resampled(&self, spec: &GridSpec) -> Self {
        GridDensity {
            lo: spec.lo,
            hi: spec.hi,
            values: spec.points().into_iter().map(|y| self.value_at(y)).collect(),
        }
    }

    pub fn same_grid(&self, other: &GridDensity) -> bool {
        let scale = 1.0_f64.max(self.lo.abs()).max(self.hi.abs());
        self.values.len() == other.values.len()
            && (self.lo - other.lo).abs() <= 1e-12 * scale
            && (self.hi - other.hi).abs() <= 1e-12 * scale
    }

    /// Nodes where the density is positive, as `(first, last)` node value.
    pub fn positive_range(&self) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|&v| v > 0.0)?;
        let last = self.values.iter().rposition(|&v| v > 0.0)?;
        let spec = self.spec();
        Some((spec.point(first), spec.point(last)))
    }

    /// Pointwise weighted sum of densities already on one grid.
    pub fn weighted_sum(parts: &[(f64, &GridDensity)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("empty density sum".into()))?
            .1;
        let mut values = vec![0.0; first.n_points()];
        for (w, d) in parts {
            if !d.same_grid(first) {
                return Err(Error::Grid("densities live on different grids".into()));
            }
            for (acc, v) in values.iter_mut().zip(&d.values) {
                *acc += w * v;
            }
        }
        GridDensity::new(first.lo, first.hi, values)
    }
}

/// Trapezoid approximation of `∫|a − b|` over a shared grid.
pub fn l1_distance(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::Grid(format!(
            "mismatched grids [{}, {}; {}] vs [{}, {}; {}]",
            a.lo,
            a.hi,
            a.n_points(),
            b.lo,
            b.hi,
            b.n_points()
        )));
    }
    let w = a.spec().weights();
    Ok(a.values
        .iter()
        .zip(&b.values)
        .zip(&w)
        .map(|((x, y), w)| (x - y).abs() * w)
        .sum())
}

/// Trapezoid `∫ y d(y) dy`; the density must be normalized within [`DENSITY_TOL`].
pub fn density_mean(d: &GridDensity) -> Result<f64> {
    density_mean_with_tol(d, DENSITY_TOL)
}

pub fn density_mean_with_tol(d: &GridDensity, tol: f64) -> Result<f64> {
    let mass = d.integral();
    if (mass - 1.0).abs() > tol {
        return Err(Error::InvalidMeasure(format!(
            "grid density integrates to {mass}, expected 1 ± {tol}"
        )));
    }
    let spec = d.spec();
    let w = spec.weights();
    Ok((0..spec.n_points).map(|i| spec.point(i) * d.values[i] * w[i]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(lo: f64, hi: f64, a: f64, b: f64, n: usize) -> GridDensity {
        let spec = GridSpec::new(lo, hi, n).unwrap();
        GridDensity::from_cdf(&spec, |x| ((x - a) / (b - a)).clamp(0.0, 1.0)).unwrap()
    }

    #[test]
    fn cell_mass_discretization_is_exact() {
        let d = unit_box(0.0, 5.0, 2.0, 3.0, 501);
        assert!((d.integral() - 1.0).abs() < 1e-12);
        assert!((density_mean(&d).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn disjoint_boxes_are_two_apart() {
        let a = unit_box(-3.0, 3.0, -2.0, -1.0, 601);
        let b = unit_box(-3.0, 3.0, 1.0, 2.0, 601);
        assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = unit_box(-3.0, 3.0, -2.0, -1.0, 601);
        let b = unit_box(-3.0, 3.0, -2.0, -1.0, 600);
        assert!(matches!(l1_distance(&a, &b), Err(Error::Grid(_))));
    }

    #[test]
    fn mean_requires_normalization() {
        let spec = GridSpec::new(0.0, 1.0, 11).unwrap();
        let d = GridDensity::from_fn(&spec, |_| 3.0).unwrap();
        assert!(matches!(density_mean(&d), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn interpolation_and_shift() {
        let spec = GridSpec::new(0.0, 2.0, 3).unwrap();
        let d = GridDensity::new(spec.lo, spec.hi, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.value_at(0.5), 0.5);
        assert_eq!(d.value_at(-0.1), 0.0);
        assert_eq!(d.value_at(2.0), 0.0);
        assert_eq!(d.shifted(1.0).value_at(2.0), 1.0);
    }

    #[test]
    fn json_shape() {
        let d = GridDensity::new(0.0, 1.0, vec![1.0, 1.0]).unwrap();
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"lo":0.0,"hi":1.0,"values":[1.0,1.0]}"#
        );
        assert!(serde_json::from_str::<GridDensity>(r#"{"lo":0.0,"hi":1.0,"values":[1.0]}"#).is_err());
    }
}
