//! Integer-parameter Beta densities over a coin's head probability.

use std::cmp::Ordering;
use std::fmt;

use statrs::function::beta::ln_beta;

use crate::bernstein::Bernstein;
use crate::error::{Error, Result};

/// Outcome of a single flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Heads,
    Tails,
}

/// `B(alpha_heads, alpha_tails)` with both parameters positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BetaParams {
    alpha_heads: u32,
    alpha_tails: u32,
}

impl BetaParams {
    pub fn new(alpha_heads: u32, alpha_tails: u32) -> Result<Self> {
        if alpha_heads == 0 || alpha_tails == 0 {
            return Err(Error::InvalidBeta {
                alpha_heads,
                alpha_tails,
            });
        }
        Ok(BetaParams {
            alpha_heads,
            alpha_tails,
        })
    }

    /// The uniform prior `B(1, 1)`.
    pub const fn uniform() -> Self {
        BetaParams {
            alpha_heads: 1,
            alpha_tails: 1,
        }
    }

    pub fn alpha_heads(self) -> u32 {
        self.alpha_heads
    }

    pub fn alpha_tails(self) -> u32 {
        self.alpha_tails
    }

    /// `α1 + α2`.
    pub fn total(self) -> u32 {
        self.alpha_heads + self.alpha_tails
    }

    /// Mean as the exact fraction `(α1, α1 + α2)`.
    pub fn mean_ratio(self) -> (u64, u64) {
        (self.alpha_heads as u64, self.total() as u64)
    }

    /// `α1 / (α1 + α2)`; also the predictive probability of heads on the next flip.
    pub fn mean(self) -> f64 {
        self.alpha_heads as f64 / self.total() as f64
    }

    /// Standard deviation `sqrt(μ(1-μ)/(α1+α2+1))`.
    pub fn std(self) -> f64 {
        let mu = self.mean();
        (mu * (1.0 - mu) / (self.total() as f64 + 1.0)).sqrt()
    }

    /// Exact comparison of posterior means by cross-multiplication.
    pub fn cmp_mean(self, other: BetaParams) -> Ordering {
        let (a, b) = self.mean_ratio();
        let (c, d) = other.mean_ratio();
        (a * d).cmp(&(c * b))
    }

    pub fn updated(self, outcome: Outcome) -> Self {
        match outcome {
            Outcome::Heads => BetaParams {
                alpha_heads: self.alpha_heads + 1,
                ..self
            },
            Outcome::Tails => BetaParams {
                alpha_tails: self.alpha_tails + 1,
                ..self
            },
        }
    }

    /// The CDF as a Bernstein polynomial of degree `α1 + α2 - 1`.
    pub fn cdf_polynomial(self) -> Bernstein {
        Bernstein::beta_cdf(self)
    }

    pub fn density(self, theta: f64) -> f64 {
        if !(0.0..=1.0).contains(&theta) {
            return 0.0;
        }
        let a = self.alpha_heads as f64;
        let b = self.alpha_tails as f64;
        let ln_norm = ln_beta(a, b);
        let head_term = if self.alpha_heads == 1 {
            0.0
        } else {
            (a - 1.0) * theta.ln()
        };
        let tail_term = if self.alpha_tails == 1 {
            0.0
        } else {
            (b - 1.0) * (1.0 - theta).ln()
        };
        (head_term + tail_term - ln_norm).exp()
    }
}

impl fmt::Display for BetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {})", self.alpha_heads, self.alpha_tails)
    }
}

pub fn beta_mean(p: BetaParams) -> f64 {
    p.mean()
}

pub fn beta_std(p: BetaParams) -> f64 {
    p.std()
}

/// `P(Θ <= theta)`; `theta` is clamped to [0, 1].
pub fn beta_cdf(theta: f64, p: BetaParams) -> f64 {
    let theta = theta.clamp(0.0, 1.0);
    p.cdf_polynomial().eval(theta)
}
