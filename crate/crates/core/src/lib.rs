//! Budgeted active model selection ("the coins problem"): pick the coin with the
//! highest head probability after a limited number of paid flips.
//!
//! Beliefs are independent integer-parameter Beta densities. The crate computes
//! the exact Bayes regret `E(Θ_max) - E(μ_max | s)` of stopping, of fixed
//! allocations and of contingent strategy trees, solves small instances
//! optimally, and runs seeded Monte Carlo comparisons of seven flip-selection
//! policies.
//!
//! Coin indices are zero-based in the API and one-based in every text format.

pub mod allocation;
pub mod belief;
pub mod bernstein;
pub mod beta;
pub mod config;
pub mod error;
pub mod gittins;
pub mod policies;
pub mod report;
pub mod sim;
pub mod solver;

pub use allocation::{
    beta_binomial_pmf, beta_binomial_pmf_all, evaluate_allocation, uniform_equal_allocation_regret,
    Allocation,
};
pub use belief::{
    expected_theta_max, expected_theta_max_auto, expected_theta_max_quadrature, min_regret,
    BeliefState, ProblemInstance,
};
pub use beta::{beta_cdf, beta_mean, beta_std, BetaParams, Outcome};
pub use error::{Error, Result};
pub use gittins::{discount_for_budget, gittins_index, GittinsCache, GittinsQuery};
pub use policies::{FlipRecord, PolicyKind, PolicyState};
pub use sim::{
    run_experiment, run_trial, sample_instance, ExperimentConfig, ExperimentResult, TrialRecord,
};
pub use solver::{first_action, solve_optimal, strategy_regret, SolveResult, StrategyTree};
