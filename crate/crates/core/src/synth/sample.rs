use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, MarginalSpec, MixedRegressionModel, VanillaMixtureModel};
use crate::error::{Error, Result};
use crate::measures::PiecewiseMeasure;

/// The generator behind every sampler: ChaCha8 seeded from a `u64`.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse-CDF sampler for a finite categorical distribution.
#[derive(Debug, Clone)]
struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    fn new(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        for c in &mut cumulative {
            *c /= acc;
        }
        Categorical { cumulative }
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }
}

/// Draws from a measure made of atoms and uniform pieces.
#[derive(Debug, Clone)]
struct MeasureSampler<'a> {
    measure: &'a PiecewiseMeasure,
    pick: Categorical,
}

impl<'a> MeasureSampler<'a> {
    fn new(measure: &'a PiecewiseMeasure) -> Self {
        let pick = Categorical::new(
            measure
                .atoms
                .iter()
                .map(|a| a.1)
                .chain(measure.pieces.iter().map(|p| p.weight)),
        );
        MeasureSampler { measure, pick }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        let i = self.pick.draw(rng);
        let n_atoms = self.measure.atoms.len();
        if i < n_atoms {
            self.measure.atoms[i].0
        } else {
            let p = &self.measure.pieces[i - n_atoms];
            p.lo + (p.hi - p.lo) * rng.random::<f64>()
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Parameter("sample size must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `n` i.i.d. pairs from the joint law of `(X, Y)`.
///
/// Per sample the generator is consumed in the order `X`, label, `θ ~ G₀`,
/// Gaussian noise.
pub fn sample_mixed_regression(model: &MixedRegressionModel, n: usize, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut rng = rng_from_seed(seed);
    let (a, b) = model.domain();
    let bins = match model.marginal() {
        MarginalSpec::Uniform => None,
        MarginalSpec::PiecewiseConstant { weights } => Some((Categorical::new(weights.iter().copied()), weights.len())),
    };
    let labels = Categorical::new(model.lambdas().iter().copied());
    let theta = MeasureSampler::new(model.g0());
    let fns = model.regression_fns();
    let sigma = model.sigma();
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let x = match &bins {
            None => a + (b - a) * rng.random::<f64>(),
            Some((cat, m)) => {
                let j = cat.draw(&mut rng);
                let width = (b - a) / *m as f64;
                (a + width * (j as f64 + rng.random::<f64>())).min(b)
            }
        };
        let k = labels.draw(&mut rng);
        let t = theta.draw(&mut rng);
        let z: f64 = rng.sample(StandardNormal);
        pairs.push((x, fns[k].eval(x) + t + sigma * z));
    }
    Ok(Dataset::new(pairs, seed, None))
}

/// `n` i.i.d. draws from `Σ λₖ fₖ(· − μₖ)`.
pub fn sample_vanilla_mixture(model: &VanillaMixtureModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_n(n)?;
    let mut rng = rng_from_seed(seed);
    let labels = Categorical::new(model.lambdas().iter().copied());
    let samplers: Vec<MeasureSampler> = (0..model.k())
        .map(|k| MeasureSampler::new(model.component_mixing(k)))
        .collect();
    let sigma = model.sigma();
    Ok((0..n)
        .map(|_| {
            let k = labels.draw(&mut rng);
            let t = samplers[k].draw(&mut rng);
            let z: f64 = rng.sample(StandardNormal);
            model.mus()[k] + t + sigma * z
        })
        .collect())
}
