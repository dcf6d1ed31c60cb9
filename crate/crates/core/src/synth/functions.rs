use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form regression function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressionFn {
    /// `Σ coeffs[i]·xⁱ`.
    Polynomial { coeffs: Vec<f64> },
    /// `offset + amplitude·sin(frequency·x + phase)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Linear interpolation through `knots` (sorted by x), constant beyond.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// `(1 − s(x))·from + s(x)·to` with a C^∞ step `s` rising from 0 at
    /// `start` to 1 at `end`.
    Blend {
        from: Box<RegressionFn>,
        to: Box<RegressionFn>,
        start: f64,
        end: f64,
    },
}

impl RegressionFn {
    pub fn constant(c: f64) -> Self {
        RegressionFn::Polynomial { coeffs: vec![c] }
    }

    pub fn linear(intercept: f64, slope: f64) -> Self {
        RegressionFn::Polynomial {
            coeffs: vec![intercept, slope],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            RegressionFn::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            RegressionFn::Sinusoid {
                amplitude,
                frequency,
                phase,
                offset,
            } => offset + amplitude * (frequency * x + phase).sin(),
            RegressionFn::PiecewiseLinear { knots } => {
                if x <= knots[0].0 {
                    return knots[0].1;
                }
                for w in knots.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if x <= x1 {
                        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                    }
                }
                knots[knots.len() - 1].1
            }
            RegressionFn::Blend { from, to, start, end } => {
                let s = smooth_step((x - start) / (end - start));
                (1.0 - s) * from.eval(x) + s * to.eval(x)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegressionFn::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Model("polynomial needs finite coefficients".into()));
                }
            }
            RegressionFn::Sinusoid {
                amplitude,
                frequency,
                phase,
                offset,
            } => {
                if ![amplitude, frequency, phase, offset].iter().all(|v| v.is_finite()) {
                    return Err(Error::Model("sinusoid parameters must be finite".into()));
                }
            }
            RegressionFn::PiecewiseLinear { knots } => {
                if knots.is_empty() || knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::Model(
                        "piecewise-linear knots must be strictly increasing".into(),
                    ));
                }
            }
            RegressionFn::Blend { from, to, start, end } => {
                if !(start < end) {
                    return Err(Error::Model("blend needs start < end".into()));
                }
                from.validate()?;
                to.validate()?;
            }
        }
        Ok(())
    }
}

/// C^∞ transition: 0 for `u ≤ 0`, 1 for `u ≥ 1`.
pub fn smooth_step(u: f64) -> f64 {
    let bump = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = bump(u);
    let b = bump(1.0 - u);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}
