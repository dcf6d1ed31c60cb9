//! Dense two-phase tableau simplex for small equality-form linear programs.

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// Solves `min cᵀx` subject to `A x = b`, `x ≥ 0`, with `b ≥ 0`.
///
/// Bland's rule is used for pivoting, so the method terminates on
/// degenerate problems (transport problems are always degenerate).
pub fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("inconsistent LP dimensions".into()));
    }
    if b.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("LP right-hand side must be nonnegative".into()));
    }
    // Columns: n originals, m artificials, then the rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the artificial sum.
    let mut phase1 = vec![0.0; n + m];
    for v in &mut phase1[n..] {
        *v = 1.0;
    }
    run(&mut t, &mut basis, &phase1, n + m)?;
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    if infeas > 1e-9 {
        return Err(Error::Infeasible);
    }
    // Drive artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            match (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                Some(j) => pivot(&mut t, &mut basis, i, j),
                None => {
                    t.remove(i);
                    basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    // Phase 2 over original columns only.
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(0.0, m));
    run(&mut t, &mut basis, &cost, n)?;
    let mut x = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][width - 1];
        }
    }
    let obj = x.iter().zip(c).map(|(x, c)| x * c).sum();
    Ok((obj, x))
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], n_enter: usize) -> Result<()> {
    let width = t.first().map_or(0, |r| r.len());
    let max_pivots = 50_000;
    for _ in 0..max_pivots {
        // Reduced costs: c_j − c_Bᵀ B⁻¹ A_j.
        let entering = (0..n_enter).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let z: f64 = basis.iter().enumerate().map(|(i, &bj)| cost[bj] * t[i][j]).sum();
            cost[j] - z < -EPS
        });
        let Some(j) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[j] > EPS {
                let ratio = row[width - 1] / row[j];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - EPS || (ratio <= br + EPS && basis[i] < basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let Some((i, _)) = leave else {
            return Err(Error::InvalidInput("LP is unbounded".into()));
        };
        pivot(t, basis, i, j);
    }
    Err(Error::InvalidInput("simplex pivot limit reached".into()))
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = c;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min x + 2y s.t. x + y = 1 → x = 1.
        let (obj, x) = simplex_min(&[vec![1.0, 1.0]], &[1.0], &[1.0, 2.0]).unwrap();
        assert!((obj - 1.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_lp() {
        let r = simplex_min(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 2.0], &[1.0, 1.0]);
        assert!(matches!(r, Err(Error::Infeasible)));
    }
}
