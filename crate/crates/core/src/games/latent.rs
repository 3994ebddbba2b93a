//! Distributions of the latent shocks.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as NormalCdf};

use crate::error::{Error, Result};

/// One coordinate of a product distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Marginal {
    /// Uniform on `[a, b]`.
    Uniform([f64; 2]),
    /// Normal with `[mean, sd]`.
    Normal([f64; 2]),
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Uniform([a, b]) => a.is_finite() && b.is_finite() && a < b,
            Marginal::Normal([m, s]) => m.is_finite() && s.is_finite() && s > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGame(format!("invalid latent marginal {self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform([a, b]) => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Marginal::Normal([m, s]) => {
                if x == f64::INFINITY {
                    1.0
                } else if x == f64::NEG_INFINITY {
                    0.0
                } else {
                    NormalCdf::new(m, s).expect("validated").cdf(x)
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Marginal::Uniform([a, b]) => a + u * (b - a),
            Marginal::Normal([m, s]) => NormalCdf::new(m, s).expect("validated").inverse_cdf(u),
        }
    }

    /// `P(a < ε ≤ b)`.
    pub fn interval_prob(&self, a: f64, b: f64) -> f64 {
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }

    /// `E[ε 1{a < ε ≤ b}]`.
    pub fn partial_mean(&self, a: f64, b: f64) -> f64 {
        match *self {
            Marginal::Uniform([lo, hi]) => {
                let (u, v) = (a.max(lo), b.min(hi));
                if v <= u {
                    0.0
                } else {
                    (v * v - u * u) / (2.0 * (hi - lo))
                }
            }
            Marginal::Normal([m, s]) => {
                if b <= a {
                    return 0.0;
                }
                let std = NormalCdf::new(0.0, 1.0).expect("unit normal");
                let z = |x: f64| (x - m) / s;
                let pdf = |x: f64| if x.is_finite() { std.pdf(z(x)) } else { 0.0 };
                m * self.interval_prob(a, b) - s * (pdf(b) - pdf(a))
            }
        }
    }

    /// Smallest interval carrying all the mass.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform([a, b]) => (a, b),
            Marginal::Normal(_) => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn scaled(&self, k: f64) -> Self {
        match *self {
            Marginal::Uniform([a, b]) => Marginal::Uniform([a * k, b * k]),
            Marginal::Normal([m, s]) => Marginal::Normal([m * k, s * k]),
        }
    }
}

/// The law `ν` of the latent vector `ε`; every kind is a product of
/// one-dimensional marginals, so rectangle probabilities are exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatentDistribution {
    UniformBox { bounds: Vec<[f64; 2]> },
    IidNormal { mean: f64, sd: f64, dim: usize },
    Product { marginals: Vec<Marginal> },
}

impl LatentDistribution {
    pub fn uniform_box(bounds: Vec<[f64; 2]>) -> Result<Self> {
        let d = LatentDistribution::UniformBox { bounds };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidGame("latent dimension must be positive".into()));
        }
        (0..self.dim()).try_for_each(|i| self.marginal(i).validate())
    }

    pub fn dim(&self) -> usize {
        match self {
            LatentDistribution::UniformBox { bounds } => bounds.len(),
            LatentDistribution::IidNormal { dim, .. } => *dim,
            LatentDistribution::Product { marginals } => marginals.len(),
        }
    }

    pub fn marginal(&self, i: usize) -> Marginal {
        match self {
            LatentDistribution::UniformBox { bounds } => Marginal::Uniform(bounds[i]),
            LatentDistribution::IidNormal { mean, sd, .. } => Marginal::Normal([*mean, *sd]),
            LatentDistribution::Product { marginals } => marginals[i],
        }
    }

    pub fn marginals(&self) -> Vec<Marginal> {
        (0..self.dim()).map(|i| self.marginal(i)).collect()
    }

    /// Probability of the rectangle `Π (lo_i, hi_i]`.
    pub fn box_prob(&self, lo: &[f64], hi: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| self.marginal(i).interval_prob(lo[i], hi[i]))
            .product()
    }

    /// The same law with every coordinate multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Self {
        LatentDistribution::Product {
            marginals: self.marginals().iter().map(|m| m.scaled(k)).collect(),
        }
    }

    pub fn sampler(&self) -> Sampler {
        Sampler {
            parts: self
                .marginals()
                .into_iter()
                .map(|m| match m {
                    Marginal::Uniform([a, b]) => Part::Uniform(Uniform::new(a, b).expect("validated")),
                    Marginal::Normal([m, s]) => Part::Normal(Normal::new(m, s).expect("validated")),
                })
                .collect(),
        }
    }
}

enum Part {
    Uniform(Uniform<f64>),
    Normal(Normal<f64>),
}

/// Draws latent vectors; build once and reuse across draws.
pub struct Sampler {
    parts: Vec<Part>,
}

impl Sampler {
    pub fn dim(&self) -> usize {
        self.parts.len()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, part) in out.iter_mut().zip(&self.parts) {
            *o = match part {
                Part::Uniform(u) => u.sample(rng),
                Part::Normal(n) => n.sample(rng),
            };
        }
    }
}
