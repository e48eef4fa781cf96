//! Exact optimal strategies for small instances, strategy trees, and the
//! regret of an arbitrary tree.
//!
//! The optimal value obeys
//! `V(state, b) = max(μ_max, max_i [p_i V(state+H_i, b-c_i) + (1-p_i) V(state+T_i, b-c_i)])`
//! over coins with `c_i <= b`, where `p_i` is coin `i`'s posterior mean.

use std::collections::HashMap;
use std::fmt;

use crate::belief::{expected_theta_max_auto, winner_of, BeliefState};
use crate::beta::{BetaParams, Outcome};
use crate::error::{Error, Result};

/// Relative tolerance used when comparing DP values for ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverLimits {
    pub max_coins: usize,
    pub max_budget: u32,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits {
            max_coins: 10,
            max_budget: 12,
        }
    }
}

/// A contingent flipping plan. Coin indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StrategyTree {
    Stop {
        winner: usize,
    },
    Flip {
        coin: usize,
        on_heads: Box<StrategyTree>,
        on_tails: Box<StrategyTree>,
    },
}

impl StrategyTree {
    pub fn stop(winner: usize) -> Self {
        StrategyTree::Stop { winner }
    }

    pub fn flip(coin: usize, on_heads: StrategyTree, on_tails: StrategyTree) -> Self {
        StrategyTree::Flip {
            coin,
            on_heads: Box::new(on_heads),
            on_tails: Box::new(on_tails),
        }
    }

    /// The coin flipped at the root, or `None` for a bare stop.
    pub fn root_coin(&self) -> Option<usize> {
        match self {
            StrategyTree::Stop { .. } => None,
            StrategyTree::Flip { coin, .. } => Some(*coin),
        }
    }

    pub fn child(&self, outcome: Outcome) -> Option<&StrategyTree> {
        match (self, outcome) {
            (StrategyTree::Stop { .. }, _) => None,
            (StrategyTree::Flip { on_heads, .. }, Outcome::Heads) => Some(on_heads),
            (StrategyTree::Flip { on_tails, .. }, Outcome::Tails) => Some(on_tails),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            StrategyTree::Stop { .. } => 0,
            StrategyTree::Flip {
                on_heads, on_tails, ..
            } => 1 + on_heads.height().max(on_tails.height()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            StrategyTree::Stop { .. } => 1,
            StrategyTree::Flip {
                on_heads, on_tails, ..
            } => on_heads.leaf_count() + on_tails.leaf_count(),
        }
    }

    /// Line-indented text form with one-based coin numbers:
    ///
    /// ```text
    /// flip 1
    ///   H: stop 1
    ///   T: stop 2
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_lines(&mut out, 0, "");
        out
    }

    fn write_lines(&self, out: &mut String, depth: usize, prefix: &str) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(prefix);
        match self {
            StrategyTree::Stop { winner } => {
                out.push_str(&format!("stop {}\n", winner + 1));
            }
            StrategyTree::Flip {
                coin,
                on_heads,
                on_tails,
            } => {
                out.push_str(&format!("flip {}\n", coin + 1));
                on_heads.write_lines(out, depth + 1, "H: ");
                on_tails.write_lines(out, depth + 1, "T: ");
            }
        }
    }

    /// Inverse of [`StrategyTree::to_text`].
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let mut pos = 0;
        let tree = parse_node(&lines, &mut pos, 0, "")?;
        if let Some(extra) = lines[pos..].iter().position(|l| !l.trim().is_empty()) {
            return Err(Error::Parse {
                line: pos + extra + 1,
                message: "unexpected trailing content".into(),
            });
        }
        Ok(tree)
    }
}

impl fmt::Display for StrategyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_node(lines: &[&str], pos: &mut usize, depth: usize, prefix: &str) -> Result<StrategyTree> {
    let lineno = *pos + 1;
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let line = lines
        .get(*pos)
        .ok_or_else(|| err("unexpected end of tree".into()))?;
    let indent = "  ".repeat(depth);
    let body = line
        .strip_prefix(indent.as_str())
        .and_then(|rest| rest.strip_prefix(prefix))
        .ok_or_else(|| err(format!("expected `{indent}{prefix}` before node")))?;
    *pos += 1;
    let (kind, number) = body
        .split_once(' ')
        .ok_or_else(|| err(format!("malformed node `{body}`")))?;
    let coin: usize = number
        .parse()
        .ok()
        .filter(|&c: &usize| c >= 1)
        .ok_or_else(|| err(format!("bad coin number `{number}`")))?;
    match kind {
        "stop" => Ok(StrategyTree::stop(coin - 1)),
        "flip" => {
            let on_heads = parse_node(lines, pos, depth + 1, "H: ")?;
            let on_tails = parse_node(lines, pos, depth + 1, "T: ")?;
            Ok(StrategyTree::flip(coin - 1, on_heads, on_tails))
        }
        other => Err(err(format!("unknown node kind `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub tree: StrategyTree,
    /// `E(μ_max | s*)`.
    pub value: f64,
    /// `E(Θ_max) - value`.
    pub regret: f64,
    pub states_expanded: usize,
}

/// Memo key: the multiset of `(posterior, cost)` pairs and the remaining budget.
/// The value function is invariant under permuting coins together with their costs.
type MemoKey = (Vec<(u32, u32, u32)>, u32);

/// Memoized DP over belief states for one cost vector.
#[derive(Debug)]
pub struct Solver {
    costs: Vec<u32>,
    memo: HashMap<MemoKey, f64>,
}

impl Solver {
    pub fn new(costs: Vec<u32>) -> Self {
        Solver {
            costs,
            memo: HashMap::new(),
        }
    }

    pub fn states_expanded(&self) -> usize {
        self.memo.len()
    }

    fn key(&self, posteriors: &[BetaParams], budget: u32) -> MemoKey {
        let mut k: Vec<(u32, u32, u32)> = posteriors
            .iter()
            .zip(&self.costs)
            .map(|(p, &c)| (p.alpha_heads(), p.alpha_tails(), c))
            .collect();
        k.sort_unstable();
        (k, budget)
    }

    /// Optimal expected highest mean from `posteriors` with `budget` left.
    pub fn value(&mut self, posteriors: &[BetaParams], budget: u32) -> f64 {
        let mut scratch = posteriors.to_vec();
        self.value_in_place(&mut scratch, budget)
    }

    fn value_in_place(&mut self, posteriors: &mut [BetaParams], budget: u32) -> f64 {
        let stop = posteriors[winner_of(posteriors)].mean();
        if self.costs.iter().all(|&c| c > budget) {
            return stop;
        }
        let key = self.key(posteriors, budget);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let mut best = stop;
        let mut seen: Vec<(BetaParams, u32)> = Vec::new();
        for i in 0..posteriors.len() {
            let cost = self.costs[i];
            if cost > budget || seen.contains(&(posteriors[i], cost)) {
                continue;
            }
            seen.push((posteriors[i], cost));
            let q = self.flip_value(posteriors, i, budget);
            if q > best {
                best = q;
            }
        }
        self.memo.insert(key, best);
        best
    }

    fn flip_value(&mut self, posteriors: &mut [BetaParams], coin: usize, budget: u32) -> f64 {
        let before = posteriors[coin];
        let p = before.mean();
        let rest = budget - self.costs[coin];
        posteriors[coin] = before.updated(Outcome::Heads);
        let vh = self.value_in_place(posteriors, rest);
        posteriors[coin] = before.updated(Outcome::Tails);
        let vt = self.value_in_place(posteriors, rest);
        posteriors[coin] = before;
        p * vh + (1.0 - p) * vt
    }

    /// Value of flipping each coin first and acting optimally afterwards; `None`
    /// for coins whose cost exceeds `budget`.
    pub fn action_values(&mut self, posteriors: &[BetaParams], budget: u32) -> Vec<Option<f64>> {
        let mut scratch = posteriors.to_vec();
        (0..posteriors.len())
            .map(|i| (self.costs[i] <= budget).then(|| self.flip_value(&mut scratch, i, budget)))
            .collect()
    }

    /// Optimal tree with lowest-index tie-breaking; stops as soon as no flip
    /// improves on the current highest mean.
    pub fn tree(&mut self, posteriors: &[BetaParams], budget: u32) -> StrategyTree {
        let stop_value = posteriors[winner_of(posteriors)].mean();
        let values = self.action_values(posteriors, budget);
        let Some((coin, q)) = argmax_lowest(&values) else {
            return StrategyTree::stop(winner_of(posteriors));
        };
        if !exceeds(q, stop_value) {
            return StrategyTree::stop(winner_of(posteriors));
        }
        let rest = budget - self.costs[coin];
        let mut next = posteriors.to_vec();
        next[coin] = posteriors[coin].updated(Outcome::Heads);
        let on_heads = self.tree(&next, rest);
        next[coin] = posteriors[coin].updated(Outcome::Tails);
        let on_tails = self.tree(&next, rest);
        StrategyTree::flip(coin, on_heads, on_tails)
    }
}

fn exceeds(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_TOLERANCE * incumbent.abs().max(f64::MIN_POSITIVE)
}

/// Index of the largest value, preferring lower indices within [`TIE_TOLERANCE`].
pub(crate) fn argmax_lowest(values: &[Option<f64>]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        let Some(v) = *v else { continue };
        match best {
            Some((_, b)) if !exceeds(v, b) => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

fn check_limits(
    root: &BeliefState,
    costs: &[u32],
    budget: u32,
    limits: SolverLimits,
) -> Result<()> {
    if costs.len() != root.len() {
        return Err(Error::LengthMismatch {
            expected: root.len(),
            got: costs.len(),
        });
    }
    if costs.contains(&0) {
        return Err(Error::Domain("flip costs must be positive".into()));
    }
    if root.len() > limits.max_coins {
        return Err(Error::InstanceTooLarge(format!(
            "{} coins exceeds cap {}",
            root.len(),
            limits.max_coins
        )));
    }
    if budget > limits.max_budget {
        return Err(Error::InstanceTooLarge(format!(
            "budget {budget} exceeds cap {}",
            limits.max_budget
        )));
    }
    Ok(())
}

pub fn solve_optimal(root: &BeliefState, costs: &[u32], budget: u32) -> Result<SolveResult> {
    solve_optimal_with_limits(root, costs, budget, SolverLimits::default())
}

pub fn solve_optimal_with_limits(
    root: &BeliefState,
    costs: &[u32],
    budget: u32,
    limits: SolverLimits,
) -> Result<SolveResult> {
    check_limits(root, costs, budget, limits)?;
    let mut solver = Solver::new(costs.to_vec());
    let value = solver.value(root.posteriors(), budget);
    let tree = solver.tree(root.posteriors(), budget);
    let regret = (expected_theta_max_auto(root) - value).max(0.0);
    Ok(SolveResult {
        tree,
        value,
        regret,
        states_expanded: solver.states_expanded(),
    })
}

/// Root coin of an optimal strategy, or `None` when stopping is optimal.
pub fn first_action(root: &BeliefState, costs: &[u32], budget: u32) -> Result<Option<usize>> {
    Ok(solve_optimal(root, costs, budget)?.tree.root_coin())
}

/// `E(Θ_max)` at the root and `Σ_j p_j (E(Θ_max at j), μ_j)` over leaves, where `μ_j` is the
/// mean of the coin the leaf names.
struct LeafSums {
    theta_max: f64,
    named_mean: f64,
    leaf_regret: f64,
}

fn walk(
    tree: &StrategyTree,
    posteriors: &mut [BetaParams],
    remaining: u32,
    costs: &[u32],
    prob: f64,
    sums: &mut LeafSums,
) -> Result<()> {
    let n = posteriors.len();
    match tree {
        StrategyTree::Stop { winner } => {
            if *winner >= n {
                return Err(Error::MalformedTree(format!(
                    "stop names coin {} of {n}",
                    winner + 1
                )));
            }
            let leaf = BeliefState::new(posteriors.to_vec(), remaining)?;
            let etm = expected_theta_max_auto(&leaf);
            let mu = posteriors[*winner].mean();
            sums.theta_max += prob * etm;
            sums.named_mean += prob * mu;
            sums.leaf_regret += prob * (etm - mu);
            Ok(())
        }
        StrategyTree::Flip {
            coin,
            on_heads,
            on_tails,
        } => {
            if *coin >= n {
                return Err(Error::MalformedTree(format!(
                    "flip names coin {} of {n}",
                    coin + 1
                )));
            }
            let cost = costs[*coin];
            if cost > remaining {
                return Err(Error::MalformedTree(format!(
                    "flipping coin {} costs {cost} with {remaining} budget left",
                    coin + 1
                )));
            }
            let before = posteriors[*coin];
            let p = before.mean();
            posteriors[*coin] = before.updated(Outcome::Heads);
            walk(
                on_heads,
                posteriors,
                remaining - cost,
                costs,
                prob * p,
                sums,
            )?;
            posteriors[*coin] = before.updated(Outcome::Tails);
            walk(
                on_tails,
                posteriors,
                remaining - cost,
                costs,
                prob * (1.0 - p),
                sums,
            )?;
            posteriors[*coin] = before;
            Ok(())
        }
    }
}

fn leaf_sums(tree: &StrategyTree, root: &BeliefState, costs: &[u32]) -> Result<LeafSums> {
    if costs.len() != root.len() {
        return Err(Error::LengthMismatch {
            expected: root.len(),
            got: costs.len(),
        });
    }
    let mut sums = LeafSums {
        theta_max: 0.0,
        named_mean: 0.0,
        leaf_regret: 0.0,
    };
    let mut posteriors = root.posteriors().to_vec();
    walk(
        tree,
        &mut posteriors,
        root.remaining_budget(),
        costs,
        1.0,
        &mut sums,
    )?;
    Ok(sums)
}

/// `E(μ | s)`: the expected mean of the coin each leaf declares.
pub fn strategy_value(tree: &StrategyTree, root: &BeliefState, costs: &[u32]) -> Result<f64> {
    Ok(leaf_sums(tree, root, costs)?.named_mean)
}

/// `Regret(s) = E(Θ_max) - E(μ | s)`, using the root's `E(Θ_max)`.
///
/// The budget checked along each branch is `root.remaining_budget()`.
pub fn strategy_regret(tree: &StrategyTree, root: &BeliefState, costs: &[u32]) -> Result<f64> {
    let sums = leaf_sums(tree, root, costs)?;
    Ok((expected_theta_max_auto(root) - sums.named_mean).max(0.0))
}

/// `Σ_j p_j r_j` with each leaf's regret computed from its own belief state.
pub fn strategy_regret_by_leaves(
    tree: &StrategyTree,
    root: &BeliefState,
    costs: &[u32],
) -> Result<f64> {
    Ok(leaf_sums(tree, root, costs)?.leaf_regret)
}

/// `Σ_j p_j E(Θ_max at leaf j)`; equals the root's `E(Θ_max)` for any legal tree.
pub fn leaf_expected_theta_max(
    tree: &StrategyTree,
    root: &BeliefState,
    costs: &[u32],
) -> Result<f64> {
    Ok(leaf_sums(tree, root, costs)?.theta_max)
}
