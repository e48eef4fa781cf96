//! Flip-selection policies.
//!
//! | policy              | uses data | uses budget |
//! |---------------------|-----------|-------------|
//! | round-robin         | no        | no          |
//! | random              | no        | no          |
//! | greedy:<k>          | yes       | no          |
//! | biased-robin        | yes       | no          |
//! | scla                | yes       | yes         |
//! | interval:<gamma>    | yes       | no          |
//! | gittins             | yes       | yes         |
//!
//! Coin indices are zero-based. Every argmax breaks ties toward the lowest index.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::allocation::{evaluate_allocation, Allocation};
use crate::belief::BeliefState;
use crate::beta::Outcome;
use crate::error::{Error, Result};
use crate::gittins::GittinsCache;
use crate::solver::{argmax_lowest, Solver};

pub const DEFAULT_GAMMA: f64 = 1.96;
/// Largest look-ahead budget accepted for `greedy:<k>`.
pub const MAX_GREEDY_K: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    RoundRobin,
    Random,
    Greedy { k: u32 },
    BiasedRobin,
    Scla,
    IntervalEstimation { gamma: f64 },
    Gittins,
}

impl PolicyKind {
    /// All seven policies with their default parameters.
    pub fn all() -> Vec<PolicyKind> {
        vec![
            PolicyKind::RoundRobin,
            PolicyKind::Random,
            PolicyKind::Greedy { k: 1 },
            PolicyKind::BiasedRobin,
            PolicyKind::Scla,
            PolicyKind::IntervalEstimation {
                gamma: DEFAULT_GAMMA,
            },
            PolicyKind::Gittins,
        ]
    }

    pub fn uses_data(&self) -> bool {
        !matches!(self, PolicyKind::RoundRobin | PolicyKind::Random)
    }

    pub fn uses_budget(&self) -> bool {
        matches!(self, PolicyKind::Scla | PolicyKind::Gittins)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::RoundRobin => f.write_str("round-robin"),
            PolicyKind::Random => f.write_str("random"),
            PolicyKind::Greedy { k } => write!(f, "greedy:{k}"),
            PolicyKind::BiasedRobin => f.write_str("biased-robin"),
            PolicyKind::Scla => f.write_str("scla"),
            PolicyKind::IntervalEstimation { gamma } => write!(f, "interval:{gamma}"),
            PolicyKind::Gittins => f.write_str("gittins"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPolicy(s.to_string());
        match s {
            "round-robin" => return Ok(PolicyKind::RoundRobin),
            "random" => return Ok(PolicyKind::Random),
            "biased-robin" => return Ok(PolicyKind::BiasedRobin),
            "scla" => return Ok(PolicyKind::Scla),
            "gittins" => return Ok(PolicyKind::Gittins),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("greedy:") {
            let k: u32 = k.parse().map_err(|_| bad())?;
            if k == 0 || k > MAX_GREEDY_K {
                return Err(bad());
            }
            return Ok(PolicyKind::Greedy { k });
        }
        if let Some(g) = s.strip_prefix("interval:") {
            let gamma: f64 = g.parse().map_err(|_| bad())?;
            if !gamma.is_finite() || gamma < 0.0 {
                return Err(bad());
            }
            return Ok(PolicyKind::IntervalEstimation { gamma });
        }
        Err(bad())
    }
}

/// One flip of a trial; `time` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipRecord {
    pub time: u32,
    pub coin: usize,
    pub outcome: Outcome,
}

fn affordable(state: &BeliefState, costs: &[u32]) -> Vec<bool> {
    costs
        .iter()
        .map(|&c| c <= state.remaining_budget())
        .collect()
}

fn no_affordable(state: &BeliefState) -> Error {
    Error::NoAffordableCoin {
        remaining: state.remaining_budget(),
    }
}

/// First affordable coin at or after `start`, cycling.
fn next_affordable(start: usize, mask: &[bool]) -> Option<usize> {
    let n = mask.len();
    (0..n).map(|d| (start + d) % n).find(|&i| mask[i])
}

/// Coin `(t - 1) mod n` at time `t >= 1`.
pub fn choose_round_robin(t: u32, n: usize) -> usize {
    assert!(t >= 1 && n >= 1);
    (t as usize - 1) % n
}

/// Uniform over the affordable coins.
pub fn choose_random(
    state: &BeliefState,
    costs: &[u32],
    rng: &mut (impl RngCore + ?Sized),
) -> Result<usize> {
    let options: Vec<usize> = affordable(state, costs)
        .iter()
        .enumerate()
        .filter_map(|(i, &ok)| ok.then_some(i))
        .collect();
    if options.is_empty() {
        return Err(no_affordable(state));
    }
    Ok(options[rng.random_range(0..options.len())])
}

/// Root action of the optimal strategy for a look-ahead budget of `k` cheapest flips.
/// When no flip changes the expected highest mean, all coins tie and the first
/// affordable one is returned.
pub fn choose_greedy_k(state: &BeliefState, k: u32, costs: &[u32]) -> Result<usize> {
    let unit = *costs.iter().min().ok_or_else(|| no_affordable(state))?;
    let budget = (k.saturating_mul(unit)).min(state.remaining_budget());
    let mut solver = Solver::new(costs.to_vec());
    let values = solver.action_values(state.posteriors(), budget);
    argmax_lowest(&values)
        .map(|(i, _)| i)
        .ok_or_else(|| no_affordable(state))
}

/// Stay on heads, advance cyclically on tails, start at the first coin.
pub fn choose_biased_robin(cursor: Option<(usize, Outcome)>, n: usize) -> usize {
    match cursor {
        None => 0,
        Some((coin, Outcome::Heads)) => coin,
        Some((coin, Outcome::Tails)) => (coin + 1) % n,
    }
}

/// Single-coin look-ahead: for each coin, allocate all `floor(remaining / cost)` flips
/// to it and keep the coin with the largest expected highest mean.
pub fn choose_scla(state: &BeliefState, costs: &[u32]) -> Result<usize> {
    let n = state.len();
    let remaining = state.remaining_budget();
    let mut values = Vec::with_capacity(n);
    for (i, &cost) in costs.iter().enumerate() {
        if cost > remaining {
            values.push(None);
            continue;
        }
        let alloc = Allocation::single(n, i, remaining / cost);
        values.push(Some(evaluate_allocation(state, &alloc)?));
    }
    argmax_lowest(&values)
        .map(|(i, _)| i)
        .ok_or_else(|| no_affordable(state))
}

/// Upper-confidence score `mean + γ·std`, restricted to affordable coins.
pub fn choose_interval_estimation(state: &BeliefState, costs: &[u32], gamma: f64) -> Result<usize> {
    let values: Vec<Option<f64>> = state
        .posteriors()
        .iter()
        .zip(affordable(state, costs))
        .map(|(p, ok)| ok.then(|| p.mean() + gamma * p.std()))
        .collect();
    argmax_lowest(&values)
        .map(|(i, _)| i)
        .ok_or_else(|| no_affordable(state))
}

/// Largest Gittins index at discount `1 - 1/s`, `s` the remaining budget.
pub fn choose_gittins(
    state: &BeliefState,
    costs: &[u32],
    cache: &GittinsCache,
    tolerance: f64,
) -> Result<usize> {
    let s = state.remaining_budget();
    if s == 0 {
        return Err(no_affordable(state));
    }
    let mut values = Vec::with_capacity(state.len());
    for (p, ok) in state.posteriors().iter().zip(affordable(state, costs)) {
        values.push(if ok {
            Some(cache.index(*p, s, tolerance)?)
        } else {
            None
        });
    }
    argmax_lowest(&values)
        .map(|(i, _)| i)
        .ok_or_else(|| no_affordable(state))
}

/// Shared read-mostly inputs a policy may consult.
pub struct PolicyEnv<'a> {
    pub costs: &'a [u32],
    pub gittins: &'a GittinsCache,
    pub gittins_tolerance: f64,
}

/// A policy plus the per-trial memory it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    kind: PolicyKind,
    cursor: Option<(usize, Outcome)>,
    flips: u32,
}

impl PolicyState {
    pub fn new(kind: PolicyKind) -> Self {
        PolicyState {
            kind,
            cursor: None,
            flips: 0,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn cursor(&self) -> Option<(usize, Outcome)> {
        self.cursor
    }

    /// Next coin to flip. `rng` is consumed only by the random policy.
    pub fn choose(
        &self,
        state: &BeliefState,
        env: &PolicyEnv<'_>,
        rng: &mut (impl RngCore + ?Sized),
    ) -> Result<usize> {
        let n = state.len();
        if env.costs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: env.costs.len(),
            });
        }
        let mask = affordable(state, env.costs);
        match self.kind {
            PolicyKind::RoundRobin => {
                let start = match self.cursor {
                    None => 0,
                    Some((coin, _)) => (coin + 1) % n,
                };
                next_affordable(start, &mask).ok_or_else(|| no_affordable(state))
            }
            PolicyKind::BiasedRobin => {
                let start = choose_biased_robin(self.cursor, n);
                next_affordable(start, &mask).ok_or_else(|| no_affordable(state))
            }
            PolicyKind::Random => choose_random(state, env.costs, rng),
            PolicyKind::Greedy { k } => choose_greedy_k(state, k, env.costs),
            PolicyKind::Scla => choose_scla(state, env.costs),
            PolicyKind::IntervalEstimation { gamma } => {
                choose_interval_estimation(state, env.costs, gamma)
            }
            PolicyKind::Gittins => {
                choose_gittins(state, env.costs, env.gittins, env.gittins_tolerance)
            }
        }
    }

    pub fn observe(&mut self, coin: usize, outcome: Outcome) -> FlipRecord {
        self.cursor = Some((coin, outcome));
        self.flips += 1;
        FlipRecord {
            time: self.flips,
            coin,
            outcome,
        }
    }
}
