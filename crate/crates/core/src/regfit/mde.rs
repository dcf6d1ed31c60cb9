use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{GridDensity, GridSpec};

/// Largest `K` searched on the full product grid.
pub const MAX_GRID_COMPONENTS: usize = 3;

/// Search strategy for the minimum-distance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MdeMode {
    /// Product grid over `[−B, B]^K`; each level refines around the best
    /// few distinct local minima of the previous one.
    #[default]
    Grid,
    /// Greedy placement, then cyclic one-coordinate grid searches until a
    /// sweep changes nothing.
    CoordinateDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdeConfig {
    /// Box bound `B`; `None` takes `1.1·max|Y|`.
    pub bound: Option<f64>,
    /// Points per axis of every search grid.
    pub coarse_grid: usize,
    pub refine_levels: usize,
    /// Factor by which each refinement shrinks the box.
    pub shrink: f64,
    /// Local minima of each level carried into the next one.
    pub starts: usize,
    pub mode: MdeMode,
    /// Sweep limit in coordinate-descent mode.
    pub max_sweeps: usize,
    /// Objectives closer than this count as tied; ties go to the
    /// lexicographically smallest `θ`.
    pub tie_tol: f64,
}

impl Default for MdeConfig {
    fn default() -> Self {
        MdeConfig {
            bound: None,
            coarse_grid: 61,
            refine_levels: 3,
            shrink: 0.2,
            starts: 3,
            mode: MdeMode::Grid,
            max_sweeps: 50,
            tie_tol: 1e-12,
        }
    }
}

impl MdeConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Parameter(format!("parameter bound must be positive, got {b}")));
            }
        }
        if self.coarse_grid < 3 {
            return Err(Error::Parameter("search grid needs at least 3 points per axis".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Parameter(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.tie_tol >= 0.0) {
            return Err(Error::Parameter("tie tolerance must be non-negative".into()));
        }
        Ok(())
    }

    /// Spacing of the finest search grid for bound `b`.
    pub fn resolution(&self, b: f64) -> f64 {
        2.0 * b * self.shrink.powi(self.refine_levels as i32) / (self.coarse_grid - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdeResult {
    /// `θ̂ₖ`, positionally bound to the input weights.
    pub theta: Vec<f64>,
    pub objective: f64,
    /// Best objective among the coarse-grid candidates (after the greedy
    /// sweep in coordinate-descent mode).
    pub coarse_objective: f64,
    pub bound: f64,
    pub resolution: f64,
}

/// Discretized `‖Σₖ λₖ fₖ(· − θₖ) − p‖₁` on the grid of `p`.
pub fn mde_objective(p: &GridDensity, lambdas: &[f64], f_hats: &[&GridDensity], theta: &[f64]) -> f64 {
    let spec = p.spec();
    let ys = spec.points();
    let w = spec.weights();
    ys.iter()
        .zip(&w)
        .zip(p.values())
        .map(|((&y, wi), pv)| {
            let fit: f64 = lambdas
                .iter()
                .zip(f_hats)
                .zip(theta)
                .map(|((l, f), t)| l * f.value_at(y - t))
                .sum();
            wi * (fit - pv).abs()
        })
        .sum()
}

/// Minimum-distance estimate of the locations under one shared error
/// density `f̂`.
pub fn mde_at_x(p_hat: &GridDensity, lambdas: &[f64], f_hat: &GridDensity, cfg: &MdeConfig) -> Result<MdeResult> {
    let fs = vec![f_hat; lambdas.len()];
    solve(p_hat, lambdas, &fs, cfg)
}

/// Minimum-distance estimate with a separate density `f̂ₖ` per component.
pub fn mde_general_at_x(
    p_hat: &GridDensity,
    lambdas: &[f64],
    f_hats: &[GridDensity],
    cfg: &MdeConfig,
) -> Result<MdeResult> {
    if f_hats.len() != lambdas.len() {
        return Err(Error::InvalidInput(format!(
            "{} densities for {} weights",
            f_hats.len(),
            lambdas.len()
        )));
    }
    let fs: Vec<&GridDensity> = f_hats.iter().collect();
    solve(p_hat, lambdas, &fs, cfg)
}

struct Problem {
    ys: Vec<f64>,
    w: Vec<f64>,
    /// `−p` on the evaluation grid.
    neg_p: Vec<f64>,
}

impl Problem {
    /// `λ f(y − θ)` for each candidate `θ`.
    fn profiles(&self, lambda: f64, f: &GridDensity, thetas: &[f64]) -> Vec<Vec<f64>> {
        thetas
            .iter()
            .map(|&t| self.ys.iter().map(|&y| lambda * f.value_at(y - t)).collect())
            .collect()
    }

    /// `Σ w |base + extra|`, abandoned once it exceeds `cap`.
    fn residual(&self, base: &[f64], extra: &[f64], cap: f64) -> f64 {
        let mut acc = 0.0;
        for (chunk, ((b, e), w)) in base.iter().zip(extra).zip(&self.w).enumerate() {
            acc += w * (b + e).abs();
            if chunk % 64 == 63 && acc > cap {
                return acc;
            }
        }
        acc
    }
}

fn check_inputs(p_hat: &GridDensity, lambdas: &[f64], fs: &[&GridDensity]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Parameter("need at least one component".into()));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) || (lambdas.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "weights {lambdas:?} are not on the simplex"
        )));
    }
    for (k, f) in fs.iter().enumerate() {
        if !f.is_normalized(1e-3) {
            return Err(Error::InvalidInput(format!(
                "error density {k} integrates to {}",
                f.integral()
            )));
        }
    }
    if p_hat.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("density estimate has non-finite values".into()));
    }
    Ok(())
}

fn default_bound(p_hat: &GridDensity) -> f64 {
    match p_hat.positive_range() {
        Some((lo, hi)) => (1.1 * lo.abs().max(hi.abs())).max(f64::MIN_POSITIVE),
        None => 1.0,
    }
}

/// Evaluation grid with the spacing of `p` wide enough that every
/// `f(· − θ)`, `|θ| ≤ B`, stays inside.
fn evaluation_problem(p_hat: &GridDensity, fs: &[&GridDensity], b: f64) -> Result<Problem> {
    let f_lo = fs.iter().map(|f| f.lo()).fold(f64::INFINITY, f64::min);
    let f_hi = fs.iter().map(|f| f.hi()).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (f_lo - b, f_hi + b);
    let p_spec = p_hat.spec();
    let spec = if p_hat.lo() <= lo && p_hat.hi() >= hi {
        p_spec
    } else {
        let (lo, hi) = (lo.min(p_hat.lo()), hi.max(p_hat.hi()));
        let n = ((hi - lo) / p_spec.spacing()).ceil() as usize + 1;
        GridSpec::new(lo, hi, n.clamp(p_hat.n_points(), 1 << 16))?
    };
    let p = if spec == p_spec {
        p_hat.values().to_vec()
    } else {
        p_hat.resampled(&spec).values().to_vec()
    };
    Ok(Problem {
        ys: spec.points(),
        w: spec.weights(),
        neg_p: p.into_iter().map(|v| -v).collect(),
    })
}

fn axis(center: f64, radius: f64, b: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = ((center - radius).max(-b), (center + radius).min(b));
    if n == 1 || hi <= lo {
        return vec![center.clamp(-b, b)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

/// Whether `(a, fa)` beats `(b, fb)`: a smaller objective beyond `tol`,
/// else the lexicographically smaller point.
fn beats(a: &[f64], fa: f64, b: &[f64], fb: f64, tol: f64) -> bool {
    fa < fb - tol || ((fa - fb).abs() <= tol && a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y))
}

#[derive(Clone)]
struct Incumbent {
    theta: Vec<f64>,
    objective: f64,
}

impl Incumbent {
    fn offer(&mut self, theta: &[f64], objective: f64, tol: f64) {
        if beats(theta, objective, &self.theta, self.objective, tol) {
            self.theta.copy_from_slice(theta);
            self.objective = objective;
        }
    }
}

/// Size of the coarse-grid candidate pool local minima are drawn from.
const POOL: usize = 64;

/// The `POOL` best coarse-grid points, with their lattice indices.
struct Pool {
    entries: Vec<(Vec<usize>, Vec<f64>, f64)>,
}

impl Pool {
    /// Anything above this cannot enter.
    fn cap(&self) -> f64 {
        if self.entries.len() < POOL {
            f64::INFINITY
        } else {
            self.entries.iter().map(|e| e.2).fold(f64::NEG_INFINITY, f64::max)
        }
    }

    fn offer(&mut self, idx: &[usize], theta: &[f64], objective: f64, tol: f64) {
        if self.entries.len() < POOL {
            self.entries.push((idx.to_vec(), theta.to_vec(), objective));
            return;
        }
        let worst = (0..self.entries.len())
            .reduce(|w, i| {
                let (a, b) = (&self.entries[i], &self.entries[w]);
                if beats(&b.1, b.2, &a.1, a.2, tol) {
                    i
                } else {
                    w
                }
            })
            .expect("pool is full");
        let w = &self.entries[worst];
        if beats(theta, objective, &w.1, w.2, tol) {
            self.entries[worst] = (idx.to_vec(), theta.to_vec(), objective);
        }
    }

    /// Entries no lattice neighbour beats, best first.
    fn local_minima(mut self, tol: f64) -> Vec<Incumbent> {
        self.entries.sort_by(|a, b| {
            if beats(&a.1, a.2, &b.1, b.2, tol) {
                std::cmp::Ordering::Less
            } else if beats(&b.1, b.2, &a.1, a.2, tol) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let neighbours = |a: &[usize], b: &[usize]| a != b && a.iter().zip(b).all(|(x, y)| x.abs_diff(*y) <= 1);
        let mut out = Vec::new();
        for (i, (idx, theta, obj)) in self.entries.iter().enumerate() {
            if !self.entries[..i].iter().any(|e| neighbours(&e.0, idx)) {
                out.push(Incumbent {
                    theta: theta.clone(),
                    objective: *obj,
                });
            }
        }
        out
    }
}

fn order(a: &Incumbent, b: &Incumbent, tol: f64) -> std::cmp::Ordering {
    if beats(&a.theta, a.objective, &b.theta, b.objective, tol) {
        std::cmp::Ordering::Less
    } else if beats(&b.theta, b.objective, &a.theta, a.objective, tol) {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    }
}

enum Sink<'a> {
    Best(&'a mut Incumbent),
    Pool(&'a mut Pool),
}

impl Sink<'_> {
    fn cap(&self) -> f64 {
        match self {
            Sink::Best(inc) => inc.objective,
            Sink::Pool(pool) => pool.cap(),
        }
    }

    fn offer(&mut self, idx: &[usize], theta: &[f64], objective: f64, tol: f64) {
        match self {
            Sink::Best(inc) => inc.offer(theta, objective, tol),
            Sink::Pool(pool) => pool.offer(idx, theta, objective, tol),
        }
    }
}

fn solve(p_hat: &GridDensity, lambdas: &[f64], fs: &[&GridDensity], cfg: &MdeConfig) -> Result<MdeResult> {
    cfg.validate()?;
    check_inputs(p_hat, lambdas, fs)?;
    let k = lambdas.len();
    if cfg.mode == MdeMode::Grid && k > MAX_GRID_COMPONENTS {
        return Err(Error::CombinatorialBudget { k });
    }
    let b = cfg.bound.unwrap_or_else(|| default_bound(p_hat));
    let prob = evaluation_problem(p_hat, fs, b)?;
    let mut inc = Incumbent {
        theta: vec![0.0; k],
        objective: f64::INFINITY,
    };
    let coarse_objective = match cfg.mode {
        MdeMode::Grid => grid_search(&prob, lambdas, fs, cfg, b, &mut inc),
        MdeMode::CoordinateDescent => coordinate_descent(&prob, lambdas, fs, cfg, b, &mut inc),
    };
    Ok(MdeResult {
        theta: inc.theta,
        objective: inc.objective,
        coarse_objective,
        bound: b,
        resolution: cfg.resolution(b),
    })
}

fn grid_search(
    prob: &Problem,
    lambdas: &[f64],
    fs: &[&GridDensity],
    cfg: &MdeConfig,
    b: f64,
    inc: &mut Incumbent,
) -> f64 {
    let k = lambdas.len();
    let run = |centers: &[f64], radius: f64, sink: &mut Sink| {
        let axes: Vec<Vec<f64>> = centers.iter().map(|&c| axis(c, radius, b, cfg.coarse_grid)).collect();
        let profiles: Vec<Vec<Vec<f64>>> = (0..k).map(|j| prob.profiles(lambdas[j], fs[j], &axes[j])).collect();
        let mut partial = vec![prob.neg_p.clone(); k];
        let mut idx = vec![0usize; k];
        let mut theta = vec![0.0; k];
        search_level(
            prob,
            &axes,
            &profiles,
            cfg.tie_tol,
            0,
            &mut idx,
            &mut theta,
            &mut partial,
            sink,
        );
    };
    let mut beam = vec![Incumbent {
        theta: vec![0.0; k],
        objective: f64::INFINITY,
    }];
    let mut coarse = f64::INFINITY;
    for level in 0..=cfg.refine_levels {
        let radius = b * cfg.shrink.powi(level as i32);
        if level == cfg.refine_levels {
            for start in beam {
                let mut local = start;
                let centers = local.theta.clone();
                run(&centers, radius, &mut Sink::Best(&mut local));
                inc.offer(&local.theta, local.objective, cfg.tie_tol);
            }
            break;
        }
        let mut next: Vec<Incumbent> = Vec::new();
        for center in &beam {
            let mut pool = Pool { entries: Vec::new() };
            run(&center.theta, radius, &mut Sink::Pool(&mut pool));
            next.extend(pool.local_minima(cfg.tie_tol));
            if center.objective.is_finite() {
                next.push(center.clone());
            }
        }
        next.sort_by(|a, b| order(a, b, cfg.tie_tol));
        // Candidates within two grid steps of a better one count as the same.
        let near = 4.0 * radius / (cfg.coarse_grid - 1) as f64;
        let mut kept: Vec<Incumbent> = Vec::new();
        for c in next {
            let far = |d: &Incumbent| d.theta.iter().zip(&c.theta).any(|(x, y)| (x - y).abs() > near);
            if kept.len() < cfg.starts.max(1) && kept.iter().all(far) {
                kept.push(c);
            }
        }
        let next = kept;
        if level == 0 {
            coarse = next[0].objective;
        }
        beam = next;
    }
    if cfg.refine_levels == 0 {
        coarse = inc.objective;
    }
    coarse
}

/// Lexicographic enumeration of the product grid; `partial[d]` holds
/// `−p + Σ_{j<d}` profiles chosen so far.
#[allow(clippy::too_many_arguments)]
fn search_level(
    prob: &Problem,
    axes: &[Vec<f64>],
    profiles: &[Vec<Vec<f64>>],
    tol: f64,
    depth: usize,
    idx: &mut Vec<usize>,
    theta: &mut Vec<f64>,
    partial: &mut Vec<Vec<f64>>,
    sink: &mut Sink,
) {
    let k = axes.len();
    for (i, &t) in axes[depth].iter().enumerate() {
        idx[depth] = i;
        theta[depth] = t;
        if depth + 1 == k {
            let obj = prob.residual(&partial[depth], &profiles[depth][i], sink.cap() + tol);
            sink.offer(idx, theta, obj, tol);
        } else {
            let (head, tail) = partial.split_at_mut(depth + 1);
            for ((nx, base), add) in tail[0].iter_mut().zip(&head[depth]).zip(&profiles[depth][i]) {
                *nx = base + add;
            }
            search_level(prob, axes, profiles, tol, depth + 1, idx, theta, partial, sink);
        }
    }
}

/// Greedy first sweep placing components heaviest first against the
/// residual of those already placed, then cyclic sweeps over all
/// coordinates until one changes nothing.
fn coordinate_descent(
    prob: &Problem,
    lambdas: &[f64],
    fs: &[&GridDensity],
    cfg: &MdeConfig,
    b: f64,
    inc: &mut Incumbent,
) -> f64 {
    let k = lambdas.len();
    let g = prob.ys.len();
    let mut current = vec![vec![0.0; g]; k];
    let base_without = |cur: &[Vec<f64>], skip: usize| -> Vec<f64> {
        let mut base = prob.neg_p.clone();
        for (_, c) in cur.iter().enumerate().filter(|(j, _)| *j != skip) {
            for (v, a) in base.iter_mut().zip(c) {
                *v += a;
            }
        }
        base
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| lambdas[j].total_cmp(&lambdas[i]).then(i.cmp(&j)));
    let search = |j: usize, base: &[f64], inc: &mut Incumbent| {
        for level in 0..=cfg.refine_levels {
            let radius = b * cfg.shrink.powi(level as i32);
            let center = if level == 0 { 0.0 } else { inc.theta[j] };
            let ax = axis(center, radius, b, cfg.coarse_grid);
            let mut theta = inc.theta.clone();
            for (t, prof) in ax.iter().zip(prob.profiles(lambdas[j], fs[j], &ax)) {
                theta[j] = *t;
                let obj = prob.residual(base, &prof, inc.objective + cfg.tie_tol);
                inc.offer(&theta, obj, cfg.tie_tol);
            }
        }
    };
    for &j in &order {
        let base = base_without(&current, j);
        inc.objective = f64::INFINITY;
        search(j, &base, inc);
        current[j] = prob.profiles(lambdas[j], fs[j], &[inc.theta[j]]).remove(0);
    }
    let zeros = vec![0.0; g];
    inc.objective = prob.residual(&base_without(&current, usize::MAX), &zeros, f64::INFINITY);
    let first = inc.objective;
    for _ in 0..cfg.max_sweeps {
        let before = inc.theta.clone();
        for &j in &order {
            let base = base_without(&current, j);
            search(j, &base, inc);
            current[j] = prob.profiles(lambdas[j], fs[j], &[inc.theta[j]]).remove(0);
        }
        if inc.theta == before {
            break;
        }
    }
    first
}
