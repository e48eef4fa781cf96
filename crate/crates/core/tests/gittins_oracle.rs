//! Gittins indices against a brute-force retirement calibration.

use coins_core::policies::choose_gittins;
use coins_core::*;

fn b(a: u32, t: u32) -> BetaParams {
    BetaParams::new(a, t).unwrap()
}

/// Value of continuing once at the root, then playing optimally against a retirement
/// reward of `lambda` per step, by value iteration over the reachable lattice.
fn continue_value(p: BetaParams, beta: f64, lambda: f64, horizon: usize) -> f64 {
    let retire = lambda / (1.0 - beta);
    let (a0, b0) = (p.alpha_heads() as f64, p.alpha_tails() as f64);
    let mean = |h: usize, t: usize| (a0 + h as f64) / (a0 + b0 + (h + t) as f64);
    // values[h] holds the value at depth d with h heads among d flips.
    let mut values: Vec<f64> = (0..=horizon)
        .map(|h| mean(h, horizon - h).max(lambda) / (1.0 - beta))
        .collect();
    for d in (0..horizon).rev() {
        values = (0..=d)
            .map(|h| {
                let m = mean(h, d - h);
                let cont = m + beta * (m * values[h + 1] + (1.0 - m) * values[h]);
                if d == 0 {
                    cont
                } else {
                    cont.max(retire)
                }
            })
            .collect();
    }
    values[0]
}

fn grid_index(p: BetaParams, beta: f64, horizon: usize) -> f64 {
    let step = 1e-4;
    let mut lambda = p.mean();
    while lambda < 1.0 {
        if continue_value(p, beta, lambda, horizon) <= lambda / (1.0 - beta) {
            return lambda;
        }
        lambda += step;
    }
    1.0
}

#[test]
fn uniform_index_matches_grid_calibration() {
    let oracle = grid_index(b(1, 1), 0.5, 64);
    let g = gittins_index(GittinsQuery::new(b(1, 1), 0.5)).unwrap();
    assert!((g - oracle).abs() < 1e-3, "{g} vs {oracle}");
    assert!(g > 0.5);
}

#[test]
fn other_states_match_grid_calibration() {
    for (p, beta) in [
        (b(2, 1), 0.5),
        (b(1, 3), 0.7),
        (b(4, 2), 0.7),
        (b(1, 1), 0.8),
    ] {
        let horizon = if beta > 0.75 { 160 } else { 80 };
        let oracle = grid_index(p, beta, horizon);
        let g = gittins_index(GittinsQuery::new(p, beta)).unwrap();
        assert!((g - oracle).abs() < 1e-3, "{p} at {beta}: {g} vs {oracle}");
    }
}

#[test]
fn more_heads_wins_at_point_nine() {
    let hi = gittins_index(GittinsQuery::new(b(2, 1), 0.9)).unwrap();
    let lo = gittins_index(GittinsQuery::new(b(1, 1), 0.9)).unwrap();
    assert!(hi > lo);
    assert!((hi - grid_index(b(2, 1), 0.9, 240)).abs() < 1e-3);

    // Remaining budget 10 gives discount 0.9.
    assert!((discount_for_budget(10) - 0.9).abs() < 1e-15);
    let state = BeliefState::new(vec![b(2, 1), b(1, 1)], 10).unwrap();
    let cache = GittinsCache::new();
    let coin = choose_gittins(&state, &[1, 1], &cache, 1e-6).unwrap();
    assert_eq!(coin, 0);
}

#[test]
fn one_flip_left_is_the_mean() {
    let cache = GittinsCache::new();
    for a in 1..6 {
        for t in 1..6 {
            let p = b(a, t);
            assert!((cache.index(p, 1, 1e-6).unwrap() - p.mean()).abs() < 1e-15);
        }
    }
}
