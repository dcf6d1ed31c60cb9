use crate::error::{Error, Result};
use crate::measures::{Cell, DiscreteMeasure, GridDensity, GridSpec, Interval, IntervalSet};

/// `ĝ = Ĝ ∗ I_δ` with `I_δ = (2δ)⁻¹𝟏[−δ, δ]`.
///
/// Node values are averages of the piecewise-constant `ĝ` over the
/// quadrature cells, so they equal `ĝ` away from its jumps and the
/// trapezoid integral is exact. The grid spacing must not exceed `δ/4`.
pub fn smooth(g: &DiscreteMeasure, delta: f64, grid: &GridSpec) -> Result<GridDensity> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!(
            "smoothing width must be positive, got {delta}"
        )));
    }
    if grid.spacing() > delta / 4.0 {
        return Err(Error::Grid(format!(
            "grid spacing {} does not resolve smoothing width {delta} (need ≤ δ/4)",
            grid.spacing()
        )));
    }
    let atoms = g.atoms();
    GridDensity::from_cdf(grid, |x| {
        atoms
            .iter()
            .map(|&(a, w)| w * ((x - a + delta) / (2.0 * delta)).clamp(0.0, 1.0))
            .sum()
    })
}

/// Grid on `[lo − δ, hi + δ]` fine enough for [`smooth`].
pub fn smoothing_grid(lo: f64, hi: f64, delta: f64, min_points: usize) -> Result<GridSpec> {
    let (lo, hi) = (lo - delta, hi + delta);
    let needed = ((hi - lo) / (delta / 5.0)).ceil() as usize + 1;
    GridSpec::new(lo, hi, needed.max(min_points))
}

/// Splits the super-level set `{ĝ > t}` into `K` groups.
///
/// Each maximal run of nodes above `t` becomes the interval between its
/// first and last node (a single node is widened by half a spacing on
/// each side). The `K − 1` widest gaps between consecutive intervals are
/// cut, ties going to the leftmost gap.
pub fn threshold_partition(g_smooth: &GridDensity, t: f64, k: usize) -> Result<Vec<IntervalSet>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Parameter(format!("threshold must be positive, got {t}")));
    }
    if k == 0 {
        return Err(Error::Parameter("need at least one component".into()));
    }
    let xs = g_smooth.points();
    let vals = g_smooth.values();
    let half = 0.5 * g_smooth.spacing();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < vals.len() {
        if vals[i] > t {
            let start = i;
            while i + 1 < vals.len() && vals[i + 1] > t {
                i += 1;
            }
            runs.push(if start == i {
                Interval {
                    lo: xs[start] - half,
                    hi: xs[start] + half,
                }
            } else {
                Interval {
                    lo: xs[start],
                    hi: xs[i],
                }
            });
        }
        i += 1;
    }
    if runs.is_empty() {
        return Err(Error::ThresholdTooHigh { t });
    }
    if runs.len() < k {
        return Err(Error::UnderResolution {
            found: runs.len(),
            needed: k,
        });
    }
    let mut gaps: Vec<(f64, usize)> = runs
        .windows(2)
        .enumerate()
        .map(|(j, w)| (w[1].lo - w[0].hi, j))
        .collect();
    // Widest first; equal widths keep left-to-right order.
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut cuts: Vec<usize> = gaps.iter().take(k - 1).map(|g| g.1).collect();
    cuts.sort_unstable();
    let mut groups = Vec::with_capacity(k);
    let mut start = 0;
    for c in cuts.into_iter().chain(std::iter::once(runs.len() - 1)) {
        groups.push(IntervalSet::new(runs[start..=c].to_vec())?);
        start = c + 1;
    }
    Ok(groups)
}

/// Completes ordered, disjoint `Ê₁, …, Ê_K` to a partition of the line,
/// cutting at midpoints between consecutive sets.
pub fn voronoi_extend(e_hats: &[IntervalSet]) -> Result<Vec<Cell>> {
    if e_hats.is_empty() {
        return Err(Error::InvalidInput("no level sets to extend".into()));
    }
    let mut bounds = Vec::with_capacity(e_hats.len());
    for (k, e) in e_hats.iter().enumerate() {
        match (e.inf(), e.sup()) {
            (Some(lo), Some(hi)) => bounds.push((lo, hi)),
            _ => return Err(Error::InvalidInput(format!("level set {k} is empty"))),
        }
    }
    for (k, pair) in bounds.windows(2).enumerate() {
        if pair[0].1 >= pair[1].0 {
            return Err(Error::InvalidInput(format!(
                "level sets {k} and {} overlap or are out of order",
                k + 1
            )));
        }
    }
    let mut cells = Vec::with_capacity(bounds.len());
    let mut lo = f64::NEG_INFINITY;
    for pair in bounds.windows(2) {
        let cut = 0.5 * (pair[0].1 + pair[1].0);
        cells.push(Cell { lo, hi: cut });
        lo = cut;
    }
    cells.push(Cell { lo, hi: f64::INFINITY });
    Ok(cells)
}
