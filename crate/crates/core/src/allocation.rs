//! Non-contingent ("allocational") strategies: a fixed number of flips per
//! coin, evaluated by the expected highest posterior mean they lead to.

use std::cmp::Ordering;

use crate::belief::BeliefState;
use crate::beta::BetaParams;
use crate::error::{Error, Result};

/// Flips assigned to each coin, in coin order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    flips_per_coin: Vec<u32>,
}

impl Allocation {
    pub fn new(flips_per_coin: Vec<u32>) -> Self {
        Allocation { flips_per_coin }
    }

    /// `a` flips on every one of `n` coins.
    pub fn equal(n: usize, a: u32) -> Self {
        Allocation::new(vec![a; n])
    }

    /// All `flips` on `coin`, nothing elsewhere.
    pub fn single(n: usize, coin: usize, flips: u32) -> Self {
        let mut v = vec![0; n];
        v[coin] = flips;
        Allocation::new(v)
    }

    pub fn flips_per_coin(&self) -> &[u32] {
        &self.flips_per_coin
    }

    pub fn len(&self) -> usize {
        self.flips_per_coin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flips_per_coin.is_empty()
    }

    pub fn total_flips(&self) -> u64 {
        self.flips_per_coin.iter().map(|&a| a as u64).sum()
    }

    pub fn cost(&self, costs: &[u32]) -> u64 {
        self.flips_per_coin
            .iter()
            .zip(costs)
            .map(|(&a, &c)| a as u64 * c as u64)
            .sum()
    }

    /// Fails with [`Error::BudgetExceeded`] when `Σ a_i·cost_i > budget`.
    pub fn check_budget(&self, costs: &[u32], budget: u32) -> Result<()> {
        if costs.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: costs.len(),
                got: self.len(),
            });
        }
        let total = self.cost(costs);
        if total > budget as u64 {
            return Err(Error::BudgetExceeded {
                cost: total.min(u32::MAX as u64) as u32,
                remaining: budget,
            });
        }
        Ok(())
    }
}

/// Beta-Binomial predictive probabilities of `h = 0..=m` heads in `m` flips.
///
/// Built from the ratio recursion
/// `P(h+1)/P(h) = (m-h)/(h+1) · (α1+h)/(α2+m-h-1)` in log space and then
/// normalized, so the vector sums to one to rounding.
pub fn beta_binomial_pmf_all(p: BetaParams, m: u32) -> Vec<f64> {
    let a = p.alpha_heads() as f64;
    let b = p.alpha_tails() as f64;
    let mf = m as f64;
    let mut logs = Vec::with_capacity(m as usize + 1);
    let mut current = 0.0f64;
    logs.push(current);
    for h in 0..m {
        let hf = h as f64;
        current += ((mf - hf) / (hf + 1.0)).ln() + ((a + hf) / (b + mf - hf - 1.0)).ln();
        logs.push(current);
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `P(exactly h heads in m flips)` under the Beta predictive.
pub fn beta_binomial_pmf(p: BetaParams, m: u32, h: i64) -> Result<f64> {
    if h < 0 || h > m as i64 {
        return Err(Error::Domain(format!("heads count {h} outside 0..={m}")));
    }
    Ok(beta_binomial_pmf_all(p, m)[h as usize])
}

/// Exact rational `num/den` used to merge equal posterior means across coins.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    fn cmp(self, other: Ratio) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `E[max_i M_i]` where `M_i` is coin `i`'s posterior mean after its allotted flips.
///
/// Each coin contributes its attainable means with their predictive
/// probabilities. Coins with no flips collapse into a single constant.
/// Sweeping the sorted union of attainable values while maintaining each
/// coin's CDF gives `P(max <= v)`, and the expectation is `Σ v·ΔP(max <= v)`.
pub fn evaluate_allocation(state: &BeliefState, alloc: &Allocation) -> Result<f64> {
    if alloc.len() != state.len() {
        return Err(Error::LengthMismatch {
            expected: state.len(),
            got: alloc.len(),
        });
    }

    // (value, factor index, probability)
    let mut events: Vec<(Ratio, usize, f64)> = Vec::new();
    let mut constant: Option<Ratio> = None;
    let mut factors = 0usize;
    for (p, &m) in state.posteriors().iter().zip(alloc.flips_per_coin()) {
        if m == 0 {
            let r = Ratio {
                num: p.alpha_heads() as u64,
                den: p.total() as u64,
            };
            constant = match constant {
                Some(c) if c.cmp(r) != Ordering::Less => Some(c),
                _ => Some(r),
            };
            continue;
        }
        let den = p.total() as u64 + m as u64;
        for (h, prob) in beta_binomial_pmf_all(*p, m).into_iter().enumerate() {
            let value = Ratio {
                num: p.alpha_heads() as u64 + h as u64,
                den,
            };
            events.push((value, factors, prob));
        }
        factors += 1;
    }
    if let Some(c) = constant {
        events.push((c, factors, 1.0));
        factors += 1;
    }

    events.sort_by(|x, y| x.0.cmp(y.0));
    let mut cdf = vec![0.0f64; factors];
    let mut previous = 0.0f64;
    let mut expectation = 0.0f64;
    let mut i = 0;
    while i < events.len() {
        let value = events[i].0;
        while i < events.len() && events[i].0.cmp(value) == Ordering::Equal {
            cdf[events[i].1] += events[i].2;
            i += 1;
        }
        let joint: f64 = cdf.iter().product();
        expectation += value.value() * (joint - previous);
        previous = joint;
    }
    Ok(expectation)
}

/// Regret of `a` flips on each of `n` uniform-prior coins:
/// `n/(n+1) - Σ_{h=0}^{a} ((h+1)^n - h^n)/(a+1)^n · (h+1)/(a+2)`.
pub fn uniform_equal_allocation_regret(n: u32, a: u32) -> f64 {
    assert!(n >= 1, "need at least one coin");
    if n == 1 {
        return 0.0;
    }
    let nf = n as f64;
    let width = a as f64 + 1.0;
    let expected_mu_max: f64 = (0..=a)
        .map(|h| {
            let hf = h as f64;
            let mass = ((hf + 1.0) / width).powi(n as i32) - (hf / width).powi(n as i32);
            mass * (hf + 1.0) / (a as f64 + 2.0)
        })
        .sum();
    (nf / (nf + 1.0) - expected_mu_max).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::expected_theta_max;
    use proptest::prelude::*;

    fn b(a: u32, t: u32) -> BetaParams {
        BetaParams::new(a, t).unwrap()
    }

    /// Sequential enumeration of every outcome sequence, flipping coins in index order.
    fn brute_force(posteriors: &[BetaParams], alloc: &[u32]) -> f64 {
        fn go(post: &mut Vec<BetaParams>, left: &mut Vec<u32>) -> f64 {
            let Some(coin) = left.iter().position(|&x| x > 0) else {
                let best = post
                    .iter()
                    .map(|p| p.alpha_heads() as f64 / p.total() as f64)
                    .fold(f64::MIN, f64::max);
                return best;
            };
            left[coin] -= 1;
            let p = post[coin];
            let ph = p.alpha_heads() as f64 / p.total() as f64;
            post[coin] = BetaParams::new(p.alpha_heads() + 1, p.alpha_tails()).unwrap();
            let vh = go(post, left);
            post[coin] = BetaParams::new(p.alpha_heads(), p.alpha_tails() + 1).unwrap();
            let vt = go(post, left);
            post[coin] = p;
            left[coin] += 1;
            ph * vh + (1.0 - ph) * vt
        }
        go(&mut posteriors.to_vec(), &mut alloc.to_vec())
    }

    #[test]
    fn pmf_basics() {
        let p = b(3, 5);
        assert!((beta_binomial_pmf(p, 1, 1).unwrap() - 3.0 / 8.0).abs() < 1e-15);
        for h in 0..=2 {
            assert!((beta_binomial_pmf(b(1, 1), 2, h).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(beta_binomial_pmf(p, 0, 0).unwrap(), 1.0);
        assert!(beta_binomial_pmf(p, 3, 4).is_err());
        assert!(beta_binomial_pmf(p, 3, -1).is_err());
    }

    #[test]
    fn pmf_sums_to_one_for_large_counts() {
        for (p, m) in [(b(1000, 1), 1000), (b(2, 700), 350), (b(13, 29), 60)] {
            let s: f64 = beta_binomial_pmf_all(p, m).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_allocation_is_current_mu_max() {
        let s = BeliefState::new(vec![b(1, 2), b(4, 3), b(2, 9)], 0).unwrap();
        let v = evaluate_allocation(&s, &Allocation::equal(3, 0)).unwrap();
        assert!((v - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn one_flip_on_the_wider_coin() {
        let s = BeliefState::new(vec![b(1, 2), b(1, 3)], 1).unwrap();
        let v = evaluate_allocation(&s, &Allocation::new(vec![0, 1])).unwrap();
        assert!((v - (0.25 * 0.4 + 0.75 / 3.0)).abs() < 1e-12);
        assert!((v - 0.35).abs() < 1e-12);
        let v1 = evaluate_allocation(&s, &Allocation::new(vec![1, 0])).unwrap();
        assert!((v1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn length_and_budget_checks() {
        let s = BeliefState::new(vec![b(1, 2), b(1, 3)], 1).unwrap();
        assert!(evaluate_allocation(&s, &Allocation::new(vec![1])).is_err());
        let alloc = Allocation::new(vec![2, 1]);
        assert!(alloc.check_budget(&[1, 1], 3).is_ok());
        assert!(matches!(
            alloc.check_budget(&[1, 2], 3),
            Err(Error::BudgetExceeded {
                cost: 4,
                remaining: 3
            })
        ));
    }

    #[test]
    fn closed_form_edge_cases() {
        for a in 0..8 {
            assert_eq!(uniform_equal_allocation_regret(1, a), 0.0);
        }
        for n in 1..12u32 {
            let want = if n == 1 {
                0.0
            } else {
                n as f64 / (n as f64 + 1.0) - 0.5
            };
            assert!((uniform_equal_allocation_regret(n, 0) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_exact_evaluation() {
        for n in 1..=6usize {
            let s = BeliefState::identical(n, BetaParams::uniform(), 0).unwrap();
            let etm = expected_theta_max(&s).unwrap();
            for a in 0..=4u32 {
                let v = evaluate_allocation(&s, &Allocation::equal(n, a)).unwrap();
                let closed = uniform_equal_allocation_regret(n as u32, a);
                assert!((etm - v - closed).abs() < 1e-9, "n={n} a={a}");
            }
        }
    }

    #[test]
    fn ten_coins_four_flips_each() {
        let s = BeliefState::identical(10, BetaParams::uniform(), 40).unwrap();
        let v = evaluate_allocation(&s, &Allocation::equal(10, 4)).unwrap();
        let closed = uniform_equal_allocation_regret(10, 4);
        assert!((10.0 / 11.0 - v - closed).abs() < 1e-12);
    }

    fn small_state() -> impl Strategy<Value = (Vec<BetaParams>, Vec<u32>)> {
        (1usize..=3).prop_flat_map(|n| {
            (
                prop::collection::vec((1u32..6, 1u32..6), n),
                prop::collection::vec(0u32..=2, n),
            )
                .prop_filter("at most five flips", |(_, a)| a.iter().sum::<u32>() <= 5)
                .prop_map(|(ps, a)| {
                    (
                        ps.into_iter()
                            .map(|(x, y)| BetaParams::new(x, y).unwrap())
                            .collect(),
                        a,
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((post, alloc) in small_state()) {
            let s = BeliefState::new(post.clone(), 0).unwrap();
            let fast = evaluate_allocation(&s, &Allocation::new(alloc.clone())).unwrap();
            let slow = brute_force(&post, &alloc);
            prop_assert!((fast - slow).abs() < 1e-9, "{} vs {}", fast, slow);
        }

        #[test]
        fn never_below_current_mu_max(
            post in prop::collection::vec((1u32..8, 1u32..8), 1..=4),
            alloc in prop::collection::vec(0u32..=3, 4),
        ) {
            let n = post.len();
            let alloc: Vec<u32> = alloc[..n].to_vec();
            prop_assume!(alloc.iter().sum::<u32>() <= 6);
            let post: Vec<BetaParams> =
                post.into_iter().map(|(x, y)| BetaParams::new(x, y).unwrap()).collect();
            let s = BeliefState::new(post, 0).unwrap();
            let v = evaluate_allocation(&s, &Allocation::new(alloc)).unwrap();
            prop_assert!(v >= s.mu_max() - 1e-12);
        }

        #[test]
        fn permutation_invariant((post, alloc) in small_state(), rot in 0usize..3) {
            let n = post.len();
            let r = rot % n;
            let mut p2 = post.clone();
            let mut a2 = alloc.clone();
            p2.rotate_left(r);
            a2.rotate_left(r);
            let v1 = evaluate_allocation(&BeliefState::new(post, 0).unwrap(), &Allocation::new(alloc)).unwrap();
            let v2 = evaluate_allocation(&BeliefState::new(p2, 0).unwrap(), &Allocation::new(a2)).unwrap();
            prop_assert!((v1 - v2).abs() < 1e-12);
        }
    }
}
