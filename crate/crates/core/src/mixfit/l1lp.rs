//! Exact minimization of `Σⱼ ωⱼ |(A w)ⱼ − pⱼ|` over the probability
//! simplex, through its dual
//!
//! ```text
//! max  t − Σⱼ ωⱼ pⱼ uⱼ   s.t.  t ≤ Σⱼ ωⱼ Aⱼₗ uⱼ  for every atom ℓ,  −1 ≤ uⱼ ≤ 1.
//! ```
//!
//! The dual has one row per atom, so a dense bounded-variable simplex
//! tableau stays small. The primal weights are the row multipliers.

use crate::error::{Error, Result};

pub(crate) struct L1Solution {
    pub weights: Vec<f64>,
    pub pivots: usize,
    pub optimal: bool,
}

/// `columns[ℓ][j] = ωⱼ Aⱼₗ`, `cost[j] = ωⱼ pⱼ`.
pub(crate) fn solve(columns: &[Vec<f64>], cost: &[f64], opt_tol: f64, max_pivots: usize) -> Result<L1Solution> {
    let l = columns.len();
    let g = cost.len();
    if l == 0 || columns.iter().any(|c| c.len() != g) {
        return Err(Error::Parameter("inconsistent L1 design".into()));
    }
    if l == 1 {
        return Ok(L1Solution {
            weights: vec![1.0],
            pivots: 0,
            optimal: true,
        });
    }
    let t_col = g;
    let s0 = g + 1;
    let n = g + 1 + l;
    let scale = columns
        .iter()
        .flat_map(|c| c.iter())
        .chain(cost.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::InvalidMeasure("L1 design is identically zero".into()));
    }
    let piv_tol = 1e-11;

    let mut tab = vec![0.0; l * n];
    for (row, col) in columns.iter().enumerate() {
        let r = &mut tab[row * n..(row + 1) * n];
        for j in 0..g {
            r[j] = -col[j] / scale;
        }
        r[t_col] = 1.0;
        r[s0 + row] = 1.0;
    }
    // Distinct tiny bound perturbations keep the starting vertex and later
    // ones from being degenerate; they move the optimum by O(1e-7).
    let pert = |j: usize| 1e-7 * (1.0 + (j as f64 * 0.618_033_988_749_894_9).fract());
    let mut lb: Vec<f64> = (0..n).map(|j| -1.0 - pert(j)).collect();
    let mut ub: Vec<f64> = (0..n).map(|j| 1.0 + pert(n + j)).collect();
    lb[t_col] = f64::NEG_INFINITY;
    ub[t_col] = f64::INFINITY;
    for k in 0..l {
        lb[s0 + k] = -pert(s0 + k);
        ub[s0 + k] = f64::INFINITY;
    }
    let mut x = lb.clone();
    let bu: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().zip(&x[..g]).map(|(v, u)| v * u).sum::<f64>() / scale)
        .collect();
    x[t_col] = bu.iter().copied().fold(f64::INFINITY, f64::min);
    for k in 0..l {
        x[s0 + k] = bu[k] - x[t_col];
    }
    let mut basis: Vec<usize> = (s0..n).collect();
    let mut is_basic = vec![false; n];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut d = vec![0.0; n];
    for j in 0..g {
        d[j] = -cost[j] / scale;
    }
    d[t_col] = 1.0;

    // Steepest-edge reference norms `1 + ‖column‖²` of the current tableau.
    let mut gamma = vec![1.0; n];
    for row in tab.chunks_exact(n) {
        for (gj, v) in gamma.iter_mut().zip(row) {
            *gj += v * v;
        }
    }

    let mut pivots = 0;
    let mut degenerate_run = 0;
    let mut optimal = false;
    while pivots < max_pivots {
        let bland = degenerate_run > 50;
        let mut enter = None;
        let mut best = 0.0;
        for q in 0..n {
            if is_basic[q] {
                continue;
            }
            let can_up = d[q] > opt_tol && x[q] < ub[q];
            let can_down = d[q] < -opt_tol && x[q] > lb[q];
            if can_up || can_down {
                if bland {
                    enter = Some(q);
                    break;
                }
                let score = d[q] * d[q] / gamma[q];
                if score > best {
                    best = score;
                    enter = Some(q);
                }
            }
        }
        let Some(q) = enter else {
            optimal = true;
            break;
        };
        let dir = d[q].signum();
        let mut theta = ub[q] - lb[q];
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..l {
            let a = tab[i * n + q];
            if a.abs() <= piv_tol {
                continue;
            }
            let b = basis[i];
            let delta = -dir * a;
            let room = if delta < 0.0 { x[b] - lb[b] } else { ub[b] - x[b] };
            let limit = room.max(0.0) / delta.abs();
            let better = match leave {
                None => limit < theta,
                Some((r, _)) => {
                    limit < theta
                        || (limit == theta
                            && if bland {
                                b < basis[r]
                            } else {
                                a.abs() > tab[r * n + q].abs()
                            })
                }
            };
            if better && limit <= theta {
                theta = limit;
                leave = Some((i, if delta < 0.0 { lb[b] } else { ub[b] }));
            }
        }
        if !theta.is_finite() {
            return Err(Error::Parameter("L1 dual is unbounded".into()));
        }
        x[q] += dir * theta;
        for i in 0..l {
            let a = tab[i * n + q];
            if a != 0.0 {
                x[basis[i]] -= dir * theta * a;
            }
        }
        degenerate_run = if theta <= 1e-14 { degenerate_run + 1 } else { 0 };
        let Some((r, bound)) = leave else {
            // Entering variable moved to its opposite bound.
            x[q] = if dir > 0.0 { ub[q] } else { lb[q] };
            continue;
        };
        pivots += 1;
        let old = basis[r];
        x[old] = bound;
        let (head, rest) = tab.split_at_mut(r * n);
        let (prow, tail) = rest.split_at_mut(n);
        let p = prow[q];
        gamma.fill(1.0);
        for (v, gj) in prow.iter_mut().zip(gamma.iter_mut()) {
            *v /= p;
            *gj += *v * *v;
        }
        for row in head.chunks_exact_mut(n).chain(tail.chunks_exact_mut(n)) {
            let f = row[q];
            if f != 0.0 {
                for ((v, pv), gj) in row.iter_mut().zip(prow.iter()).zip(gamma.iter_mut()) {
                    *v -= f * pv;
                    *gj += *v * *v;
                }
            } else {
                for (v, gj) in row.iter().zip(gamma.iter_mut()) {
                    *gj += v * v;
                }
            }
        }
        let f = d[q];
        for (v, pv) in d.iter_mut().zip(prow.iter()) {
            *v -= f * pv;
        }
        d[q] = 0.0;
        is_basic[old] = false;
        is_basic[q] = true;
        basis[r] = q;
    }

    let mut weights: Vec<f64> = (0..l).map(|k| (-d[s0 + k]).max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        weights = vec![1.0 / l as f64; l];
    } else {
        for w in &mut weights {
            *w /= total;
        }
    }
    Ok(L1Solution {
        weights,
        pivots,
        optimal,
    })
}
