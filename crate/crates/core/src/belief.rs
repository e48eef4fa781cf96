//! Belief states over a set of coins and the exact Bayes-regret quantities
//! `E(Θ_max)`, `μ_max` and their difference.

use std::cmp::Ordering;

use statrs::function::beta::beta_reg;

use crate::bernstein::Bernstein;
use crate::beta::{BetaParams, Outcome};
use crate::error::{Error, Result};

/// Largest `Σ(α1+α2)` handled by the exact polynomial route.
pub const DEFAULT_DEGREE_CAP: usize = 4096;

/// Absolute tolerance of the quadrature fallback for `E(Θ_max)`.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Independent per-coin posteriors plus the budget still available.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BeliefState {
    posteriors: Vec<BetaParams>,
    remaining_budget: u32,
}

impl BeliefState {
    pub fn new(posteriors: Vec<BetaParams>, remaining_budget: u32) -> Result<Self> {
        if posteriors.is_empty() {
            return Err(Error::Domain("belief state needs at least one coin".into()));
        }
        Ok(BeliefState {
            posteriors,
            remaining_budget,
        })
    }

    /// `n` coins with the same prior.
    pub fn identical(n: usize, prior: BetaParams, remaining_budget: u32) -> Result<Self> {
        Self::new(vec![prior; n], remaining_budget)
    }

    pub fn posteriors(&self) -> &[BetaParams] {
        &self.posteriors
    }

    pub fn coin(&self, index: usize) -> BetaParams {
        self.posteriors[index]
    }

    pub fn len(&self) -> usize {
        self.posteriors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posteriors.is_empty()
    }

    pub fn remaining_budget(&self) -> u32 {
        self.remaining_budget
    }

    pub fn with_budget(&self, remaining_budget: u32) -> Self {
        BeliefState {
            posteriors: self.posteriors.clone(),
            remaining_budget,
        }
    }

    /// Conjugate update after flipping `coin` at the given cost.
    pub fn update(&self, coin: usize, outcome: Outcome, cost: u32) -> Result<Self> {
        let mut next = self.clone();
        next.apply(coin, outcome, cost)?;
        Ok(next)
    }

    /// In-place form of [`BeliefState::update`].
    pub fn apply(&mut self, coin: usize, outcome: Outcome, cost: u32) -> Result<()> {
        let n = self.posteriors.len();
        if coin >= n {
            return Err(Error::InvalidCoin { index: coin, n });
        }
        if cost > self.remaining_budget {
            return Err(Error::BudgetExceeded {
                cost,
                remaining: self.remaining_budget,
            });
        }
        self.posteriors[coin] = self.posteriors[coin].updated(outcome);
        self.remaining_budget -= cost;
        Ok(())
    }

    /// Lowest index among the coins with the highest posterior mean.
    pub fn winner(&self) -> usize {
        winner_of(&self.posteriors)
    }

    pub fn mu_max(&self) -> f64 {
        self.posteriors[self.winner()].mean()
    }
}

/// Lowest index among maximal means, compared exactly.
pub fn winner_of(posteriors: &[BetaParams]) -> usize {
    let mut best = 0;
    for (i, p) in posteriors.iter().enumerate().skip(1) {
        if p.cmp_mean(posteriors[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Coin priors, per-coin flip costs and the total budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    priors: Vec<BetaParams>,
    costs: Vec<u32>,
    budget: u32,
}

impl ProblemInstance {
    pub fn new(priors: Vec<BetaParams>, costs: Vec<u32>, budget: u32) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::Domain("instance needs at least one coin".into()));
        }
        if priors.len() != costs.len() {
            return Err(Error::LengthMismatch {
                expected: priors.len(),
                got: costs.len(),
            });
        }
        if costs.contains(&0) {
            return Err(Error::Domain("flip costs must be positive".into()));
        }
        Ok(ProblemInstance {
            priors,
            costs,
            budget,
        })
    }

    /// Unit-cost instance.
    pub fn unit_costs(priors: Vec<BetaParams>, budget: u32) -> Result<Self> {
        let n = priors.len();
        Self::new(priors, vec![1; n], budget)
    }

    pub fn priors(&self) -> &[BetaParams] {
        &self.priors
    }

    pub fn costs(&self) -> &[u32] {
        &self.costs
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }

    pub fn initial_state(&self) -> BeliefState {
        BeliefState {
            posteriors: self.priors.clone(),
            remaining_budget: self.budget,
        }
    }
}

/// `E(max_i Θ_i) = 1 - ∫ Π_i F_i(θ) dθ`, evaluated exactly on the product of the
/// Bernstein-form CDFs. Fails with [`Error::DegreeOverflow`] when `Σ(α1+α2)`
/// exceeds [`DEFAULT_DEGREE_CAP`].
pub fn expected_theta_max(state: &BeliefState) -> Result<f64> {
    expected_theta_max_with_cap(state.posteriors(), DEFAULT_DEGREE_CAP)
}

pub fn expected_theta_max_with_cap(posteriors: &[BetaParams], cap: usize) -> Result<f64> {
    let total: usize = posteriors.iter().map(|p| p.total() as usize).sum();
    if total > cap {
        return Err(Error::DegreeOverflow { degree: total, cap });
    }
    // Multiply low-degree factors first.
    let mut sorted: Vec<BetaParams> = posteriors.to_vec();
    sorted.sort_by_key(|p| p.total());
    let mut product = Bernstein::constant(1.0);
    for p in sorted {
        product = product.mul(&p.cdf_polynomial());
    }
    Ok(1.0 - product.integral())
}

/// Adaptive-Simpson evaluation of `1 - ∫ Π F_i`, for states past the degree cap.
pub fn expected_theta_max_quadrature(posteriors: &[BetaParams], tolerance: f64) -> f64 {
    let f = |x: f64| -> f64 {
        posteriors
            .iter()
            .map(|p| beta_reg(p.alpha_heads() as f64, p.alpha_tails() as f64, x))
            .product()
    };
    1.0 - adaptive_simpson(&f, 0.0, 1.0, tolerance)
}

/// Exact route when possible, quadrature otherwise.
pub fn expected_theta_max_auto(state: &BeliefState) -> f64 {
    match expected_theta_max(state) {
        Ok(v) => v,
        Err(_) => expected_theta_max_quadrature(state.posteriors(), QUADRATURE_TOLERANCE),
    }
}

/// `E(Θ_max) - μ_max`, the regret of stopping now.
pub fn min_regret(state: &BeliefState) -> f64 {
    (expected_theta_max_auto(state) - state.mu_max()).max(0.0)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
