//! The radial problem instance: dimension `n`, parameter `λ`, and the radial
//! source term `f` together with its C¹ norm `M = sup|f| + sup|f′|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::numerics::golden_section_max;

/// Radial source term `f(t)`, `t ∈ [0, 1]`, with closed-form derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "coefficients", rename_all = "kebab-case")]
pub enum SourceTerm {
    #[default]
    Zero,
    /// `f(t) = Σ c_k t^k`.
    Polynomial(Vec<f64>),
    /// `f(t) = Σ c_k cos(kπt)`.
    Cosine(Vec<f64>),
}

impl SourceTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck),
            SourceTerm::Cosine(c) => c
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck * (k as f64 * PI * t).cos())
                .sum(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * t + k as f64 * ck),
            SourceTerm::Cosine(c) => c
                .iter()
                .enumerate()
                .map(|(k, &ck)| {
                    let w = k as f64 * PI;
                    -ck * w * (w * t).sin()
                })
                .sum(),
        }
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * t + (k * (k - 1)) as f64 * ck),
            SourceTerm::Cosine(c) => c
                .iter()
                .enumerate()
                .map(|(k, &ck)| {
                    let w = k as f64 * PI;
                    -ck * w * w * (w * t).cos()
                })
                .sum(),
        }
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> SourceTerm {
        match self {
            SourceTerm::Zero => SourceTerm::Zero,
            SourceTerm::Polynomial(v) => SourceTerm::Polynomial(v.iter().map(|x| c * x).collect()),
            SourceTerm::Cosine(v) => SourceTerm::Cosine(v.iter().map(|x| c * x).collect()),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            SourceTerm::Zero => true,
            SourceTerm::Polynomial(c) | SourceTerm::Cosine(c) => c.iter().all(|&x| x == 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SourceTerm::Zero => Ok(()),
            SourceTerm::Polynomial(c) | SourceTerm::Cosine(c) => {
                if c.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::invalid("source coefficients must be finite"))
                }
            }
        }
    }
}

const NORM_GRID: usize = 2048;

fn sup_abs(h: impl Fn(f64) -> f64) -> f64 {
    let step = 1.0 / NORM_GRID as f64;
    let values: Vec<f64> = (0..=NORM_GRID).map(|i| h(i as f64 * step).abs()).collect();
    let mut best = values.iter().copied().fold(0.0, f64::max);
    for i in 1..NORM_GRID {
        if values[i] >= values[i - 1] && values[i] >= values[i + 1] && values[i] > 0.0 {
            let lo = (i - 1) as f64 * step;
            let hi = (i + 1) as f64 * step;
            let (_, v) = golden_section_max(|t| h(t).abs(), lo, hi, 1e-12);
            best = best.max(v);
        }
    }
    best
}

/// `‖f‖_{C¹} = sup|f| + sup|f′|` over `[0, 1]`.
///
/// Sampled on a 2048-interval grid; every interior local maximum is refined
/// by golden-section search.
pub fn c1_norm(f: &SourceTerm) -> f64 {
    if f.is_identically_zero() {
        return 0.0;
    }
    sup_abs(|t| f.eval(t)) + sup_abs(|t| f.derivative(t))
}

/// Radial form of the Dirichlet problem on the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemFields", into = "ProblemFields")]
pub struct RadialProblem {
    dimension: u32,
    lambda: f64,
    source: SourceTerm,
    nonlinearity: Nonlinearity,
    m: f64,
}

#[derive(Serialize, Deserialize)]
struct ProblemFields {
    n: u32,
    lambda: f64,
    source: SourceTerm,
    nonlinearity: Nonlinearity,
    #[serde(rename = "M", default)]
    m: Option<f64>,
}

impl TryFrom<ProblemFields> for RadialProblem {
    type Error = Error;

    fn try_from(f: ProblemFields) -> Result<Self> {
        RadialProblem::new(f.n, f.lambda, f.source, f.nonlinearity)
    }
}

impl From<RadialProblem> for ProblemFields {
    fn from(p: RadialProblem) -> Self {
        ProblemFields {
            n: p.dimension,
            lambda: p.lambda,
            source: p.source,
            nonlinearity: p.nonlinearity,
            m: Some(p.m),
        }
    }
}

impl RadialProblem {
    pub fn new(n: u32, lambda: f64, source: SourceTerm, nonlinearity: Nonlinearity) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("dimension n must be at least 1"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        source.validate()?;
        let m = c1_norm(&source);
        Ok(Self {
            dimension: n,
            lambda,
            source,
            nonlinearity,
            m,
        })
    }

    /// Same instance at a different `λ`; `M` is reused.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            lambda,
            ..self.clone()
        })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn source(&self) -> &SourceTerm {
        &self.source
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// Cached C¹ norm of the source term.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Right-hand side `g(u) − λ − f(t)`.
    pub fn forcing(&self, t: f64, u: f64) -> f64 {
        self.nonlinearity.eval(u) - self.lambda - self.source.eval(t)
    }

    /// `g₊⁻¹(λ + f(t))`, the level that defines the Z_k classes.
    pub fn plus_level(&self, t: f64) -> Result<f64> {
        self.nonlinearity.inverse_plus(self.lambda + self.source.eval(t))
    }

    /// `[g₊⁻¹(λ + f)]′(t) = f′(t) / g′(g₊⁻¹(λ + f(t)))`.
    pub fn plus_level_derivative(&self, t: f64) -> Result<f64> {
        let level = self.plus_level(t)?;
        let df = self.source.derivative(t);
        if df == 0.0 {
            return Ok(0.0);
        }
        Ok(df / self.nonlinearity.eval_prime(level))
    }
}

/// Free-function form of [`RadialProblem::plus_level_derivative`].
pub fn inverse_envelope_derivative(t: f64, problem: &RadialProblem) -> Result<f64> {
    problem.plus_level_derivative(t)
}
