use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixfit::MixtureConfig;
use crate::regfit::RegressionConfig;
use crate::synth::{MixedRegressionModel, VanillaMixtureModel};

/// Ground-truth model of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    MixedRegression(MixedRegressionModel),
    VanillaMixture(VanillaMixtureModel),
}

impl ModelSpec {
    pub fn k(&self) -> usize {
        match self {
            ModelSpec::MixedRegression(m) => m.k(),
            ModelSpec::VanillaMixture(m) => m.k(),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            ModelSpec::MixedRegression(m) => m.sigma(),
            ModelSpec::VanillaMixture(m) => m.sigma(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::MixedRegression(_) => "mixed_regression",
            ModelSpec::VanillaMixture(_) => "vanilla_mixture",
        }
    }
}

/// A model written inline or kept in its own JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Inline(ModelSpec),
    File { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSizes {
    One(usize),
    Many(Vec<usize>),
}

impl SampleSizes {
    pub fn values(&self) -> Vec<usize> {
        match self {
            SampleSizes::One(n) => vec![*n],
            SampleSizes::Many(v) => v.clone(),
        }
    }
}

/// Thresholds checked by `eval --acceptance` on the medians at the largest
/// sample size. With `decreasing`, each thresholded median must also
/// fall strictly as `n` grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    #[serde(default)]
    pub max_lambda_error: Option<f64>,
    #[serde(default)]
    pub max_f_error: Option<f64>,
    /// Largest mean absolute regression error.
    #[serde(default)]
    pub max_m_error: Option<f64>,
    #[serde(default = "yes")]
    pub decreasing: bool,
}

fn yes() -> bool {
    true
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub model: ModelRef,
    pub n: SampleSizes,
    pub seeds: Vec<u64>,
    /// Components to fit; defaults to the model's.
    #[serde(default, rename = "K", alias = "k")]
    pub k: Option<usize>,
    /// Gaussian scale assumed by the fit; defaults to the model's.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Separation point; defaults to the model's, `null` in JSON searches.
    #[serde(default)]
    pub x0: Option<f64>,
    #[serde(default)]
    pub search_x0: bool,
    #[serde(default)]
    pub mixture: MixtureConfig,
    #[serde(default)]
    pub regression: RegressionConfig,
    #[serde(default)]
    pub acceptance: Option<Acceptance>,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
}

/// A loaded experiment with its model resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub model: ModelSpec,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let spec: ExperimentSpec = crate::io::read_json(path)?;
        let model = match &spec.model {
            ModelRef::Inline(m) => m.clone(),
            ModelRef::File { file } => {
                let full = path.parent().map(|d| d.join(file)).unwrap_or_else(|| file.clone());
                if !full.exists() {
                    return Err(Error::io(
                        &full,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "model file not found"),
                    ));
                }
                crate::io::read_json(&full)?
            }
        };
        let exp = Experiment { spec, model };
        exp.validate()?;
        Ok(exp)
    }

    pub fn from_parts(spec: ExperimentSpec, model: ModelSpec) -> Result<Self> {
        let exp = Experiment { spec, model };
        exp.validate()?;
        Ok(exp)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.spec;
        if s.seeds.is_empty() {
            return Err(Error::Parameter("seeds must be nonempty".into()));
        }
        let ns = s.n.values();
        if ns.is_empty() || ns.contains(&0) {
            return Err(Error::Parameter("sample sizes must be positive".into()));
        }
        if self.k() == 0 {
            return Err(Error::Parameter("need at least one component".into()));
        }
        let sigma = self.sigma();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        s.mixture.validate()?;
        s.regression.validate()
    }

    pub fn k(&self) -> usize {
        self.spec.k.unwrap_or_else(|| self.model.k())
    }

    pub fn sigma(&self) -> f64 {
        self.spec.sigma.unwrap_or_else(|| self.model.sigma())
    }

    /// Separation point for regression fits, `None` to search.
    pub fn x0(&self) -> Option<f64> {
        if self.spec.search_x0 {
            return None;
        }
        match (&self.model, self.spec.x0) {
            (_, Some(x)) => Some(x),
            (ModelSpec::MixedRegression(m), None) => Some(m.x0()),
            _ => None,
        }
    }

    pub fn sample_sizes(&self) -> Vec<usize> {
        let mut ns = self.spec.n.values();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    /// `(n, seed)` jobs in a fixed order.
    pub fn jobs(&self) -> Vec<(usize, u64)> {
        self.sample_sizes()
            .into_iter()
            .flat_map(|n| self.spec.seeds.iter().map(move |&s| (n, s)))
            .collect()
    }
}

/// File stem shared by every artifact of one `(n, seed)` job.
pub fn job_stem(n: usize, seed: u64) -> String {
    format!("n{n}_seed{seed}")
}

/// Parses `3`, `0-9` or `1,4,7-9`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Parameter(format!("cannot parse seed list {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0-3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("5, 1,7-8").unwrap(), vec![5, 1, 7, 8]);
        assert!(parse_seeds("3-1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"{
            "model": {"family": "vanilla_mixture", "lambdas": [0.3, 0.7], "mus": [-2.5, 2.5], "sigma": 0.25,
                      "gks": [{"kind": "point_mass"}, {"kind": "point_mass"}]},
            "n": [2000, 200],
            "seeds": [0, 1]
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(text).unwrap();
        let ModelRef::Inline(model) = spec.model.clone() else {
            panic!("inline model expected")
        };
        let exp = Experiment::from_parts(spec, model).unwrap();
        assert_eq!(exp.k(), 2);
        assert_eq!(exp.sample_sizes(), vec![200, 2000]);
        assert_eq!(exp.jobs().len(), 4);
        assert_eq!(exp.x0(), None);
        let back: ExperimentSpec = serde_json::from_str(&serde_json::to_string(&exp.spec).unwrap()).unwrap();
        assert_eq!(back, exp.spec);
    }
}
