use super::lp::simplex_min;
use super::{DiscreteMeasure, PiecewiseMeasure};
use crate::error::{Error, Result};

/// Largest atom count accepted by [`wasserstein1_lp_oracle`].
pub const LP_ORACLE_MAX_ATOMS: usize = 12;

/// Exact `W₁` between two discrete probability measures on the line,
/// computed as `∫|F_a − F_b|` by a sweep over the sorted atoms.
pub fn wasserstein1(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    a.require_normalized("first measure")?;
    b.require_normalized("second measure")?;
    let mut events: Vec<(f64, f64)> = a
        .atoms()
        .iter()
        .copied()
        .chain(b.atoms().iter().map(|&(x, w)| (x, -w)))
        .collect();
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        diff += pair[0].1;
        total += diff.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(total)
}

/// Exact `W₁` between measures with piecewise-linear CDFs (atoms plus
/// uniform pieces). Between consecutive breakpoints the CDF difference is
/// affine, so each segment integrates in closed form.
pub fn wasserstein1_piecewise(a: &PiecewiseMeasure, b: &PiecewiseMeasure) -> Result<f64> {
    for (m, name) in [(a, "first measure"), (b, "second measure")] {
        if !m.is_normalized() {
            return Err(Error::InvalidMeasure(format!(
                "{name} has total mass {} (expected 1)",
                m.total_mass()
            )));
        }
    }
    let mut xs: Vec<f64> = a.breakpoints().chain(b.breakpoints()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut total = 0.0;
    for pair in xs.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let d0 = a.cdf(lo) - b.cdf(lo);
        let slope = a.density_on(lo, hi) - b.density_on(lo, hi);
        let d1 = d0 + slope * len;
        total += if d0 * d1 >= 0.0 {
            0.5 * len * (d0.abs() + d1.abs())
        } else {
            0.5 * len * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
        };
    }
    Ok(total)
}

/// `W₁` by solving the transport linear program over all couplings of the
/// atoms. Independent of the CDF route; limited to small measures.
pub fn wasserstein1_lp_oracle(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    for (m, name) in [(a, "first"), (b, "second")] {
        if m.len() > LP_ORACLE_MAX_ATOMS {
            return Err(Error::Size(format!(
                "{name} measure has {} atoms (limit {LP_ORACLE_MAX_ATOMS})",
                m.len()
            )));
        }
    }
    a.require_normalized("first measure")?;
    b.require_normalized("second measure")?;
    let (na, nb) = (a.len(), b.len());
    let n = na * nb;
    let mut rows = Vec::with_capacity(na + nb);
    let mut rhs = Vec::with_capacity(na + nb);
    for i in 0..na {
        let mut row = vec![0.0; n];
        for j in 0..nb {
            row[i * nb + j] = 1.0;
        }
        rows.push(row);
        rhs.push(a.atoms()[i].1);
    }
    for j in 0..nb {
        let mut row = vec![0.0; n];
        for i in 0..na {
            row[i * nb + j] = 1.0;
        }
        rows.push(row);
        rhs.push(b.atoms()[j].1);
    }
    let cost: Vec<f64> = (0..n)
        .map(|k| (a.atoms()[k / nb].0 - b.atoms()[k % nb].0).abs())
        .collect();
    let (obj, _) = simplex_min(&rows, &rhs, &cost)?;
    Ok(obj.max(0.0))
}
