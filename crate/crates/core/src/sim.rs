//! Monte Carlo evaluation of policies on instances drawn from the priors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::belief::{BeliefState, ProblemInstance};
use crate::beta::{BetaParams, Outcome};
use crate::error::{Error, Result};
use crate::gittins::{GittinsCache, DEFAULT_TOLERANCE};
use crate::policies::{FlipRecord, PolicyEnv, PolicyKind, PolicyState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Instance,
    Flips,
    Policy,
}

/// Deterministic stream for `(seed, policy, trial, purpose)`. Instance draws ignore the
/// policy so every policy faces the same sampled coins in a given trial.
fn derive_stream(seed: u64, policy: &str, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"coins/stream/v1");
    h.update(seed.to_le_bytes());
    let policy = if purpose == Purpose::Instance {
        ""
    } else {
        policy
    };
    h.update((policy.len() as u64).to_le_bytes());
    h.update(policy.as_bytes());
    h.update(trial.to_le_bytes());
    h.update([purpose as u8]);
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// The three independent random streams one trial consumes.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub instance: ChaCha8Rng,
    pub flips: ChaCha8Rng,
    pub policy: ChaCha8Rng,
}

impl TrialStreams {
    pub fn derive(seed: u64, policy: &str, trial: u64) -> Self {
        TrialStreams {
            instance: derive_stream(seed, policy, trial, Purpose::Instance),
            flips: derive_stream(seed, policy, trial, Purpose::Flips),
            policy: derive_stream(seed, policy, trial, Purpose::Policy),
        }
    }
}

/// One head probability per coin, each drawn from its prior.
pub fn sample_instance(priors: &[BetaParams], rng: &mut impl Rng) -> Vec<f64> {
    priors
        .iter()
        .map(|p| {
            Beta::new(p.alpha_heads() as f64, p.alpha_tails() as f64)
                .expect("Beta parameters are positive")
                .sample(rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub true_thetas: Vec<f64>,
    pub history: Vec<FlipRecord>,
    /// Declared winner after `t` flips, `t = 0..=history.len()`.
    pub winner_at_step: Vec<usize>,
    /// `max θ - θ_winner` after `t` flips.
    pub regret_at_step: Vec<f64>,
}

impl TrialRecord {
    pub fn total_heads(&self) -> usize {
        self.history
            .iter()
            .filter(|f| f.outcome == Outcome::Heads)
            .count()
    }

    pub fn final_regret(&self) -> f64 {
        *self
            .regret_at_step
            .last()
            .expect("step 0 is always recorded")
    }
}

fn true_regret(thetas: &[f64], winner: usize) -> f64 {
    let best = thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    best - thetas[winner]
}

/// Runs `policy` on `instance` until no coin is affordable.
pub fn run_trial(
    policy: &mut PolicyState,
    instance: &ProblemInstance,
    streams: &mut TrialStreams,
    gittins: &GittinsCache,
) -> Result<TrialRecord> {
    let thetas = sample_instance(instance.priors(), &mut streams.instance);
    run_trial_on(policy, instance, thetas, streams, gittins)
}

/// [`run_trial`] with the true head probabilities supplied by the caller.
pub fn run_trial_on(
    policy: &mut PolicyState,
    instance: &ProblemInstance,
    thetas: Vec<f64>,
    streams: &mut TrialStreams,
    gittins: &GittinsCache,
) -> Result<TrialRecord> {
    if thetas.len() != instance.len() {
        return Err(Error::LengthMismatch {
            expected: instance.len(),
            got: thetas.len(),
        });
    }
    let env = PolicyEnv {
        costs: instance.costs(),
        gittins,
        gittins_tolerance: DEFAULT_TOLERANCE,
    };
    let mut state = instance.initial_state();
    let mut history = Vec::new();
    let mut winners = vec![state.winner()];
    let mut regrets = vec![true_regret(&thetas, state.winner())];

    while instance
        .costs()
        .iter()
        .any(|&c| c <= state.remaining_budget())
    {
        let coin = policy.choose(&state, &env, &mut streams.policy)?;
        let outcome = if streams.flips.random::<f64>() < thetas[coin] {
            Outcome::Heads
        } else {
            Outcome::Tails
        };
        state.apply(coin, outcome, instance.costs()[coin])?;
        history.push(policy.observe(coin, outcome));
        let w = state.winner();
        winners.push(w);
        regrets.push(true_regret(&thetas, w));
    }

    Ok(TrialRecord {
        true_thetas: thetas,
        history,
        winner_at_step: winners,
        regret_at_step: regrets,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: ProblemInstance,
    pub policies: Vec<PolicyKind>,
    pub trials: u32,
    pub seed: u64,
    pub record_every_step: bool,
    pub report_reward: bool,
}

impl ExperimentConfig {
    pub fn new(
        instance: ProblemInstance,
        policies: Vec<PolicyKind>,
        trials: u32,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            instance,
            policies,
            trials,
            seed,
            record_every_step: true,
            report_reward: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::config("policies", "at least one policy is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub t: u32,
    pub trials: u32,
    pub mean_regret: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    pub policy: String,
    pub steps: Vec<StepStats>,
    /// Mean number of heads observed per trial.
    pub mean_reward: Option<f64>,
}

impl PolicyResult {
    pub fn final_step(&self) -> &StepStats {
        self.steps.last().expect("at least one step")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub policies: Vec<PolicyResult>,
}

impl ExperimentResult {
    pub fn policy(&self, id: &str) -> Option<&PolicyResult> {
        self.policies.iter().find(|p| p.policy == id)
    }
}

/// Mean and standard error (sample stddev over `sqrt(n)`), summed in input order.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0);
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n as f64 - 1.0)).sqrt();
    (mean, sd / (n as f64).sqrt())
}

/// Runs every `(policy, trial)` pair on its own substreams. Trials run in parallel on
/// the current rayon pool; aggregation follows trial order, so results do not depend on
/// scheduling.
pub fn run_experiment(
    config: &ExperimentConfig,
    gittins: &GittinsCache,
) -> Result<ExperimentResult> {
    config.validate()?;
    let steps = config.instance.budget() as usize + 1;
    let mut policies = Vec::with_capacity(config.policies.len());
    for kind in &config.policies {
        let id = kind.to_string();
        let records: Vec<(Vec<f64>, usize)> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut streams = TrialStreams::derive(config.seed, &id, trial as u64);
                let mut policy = PolicyState::new(*kind);
                let rec = run_trial(&mut policy, &config.instance, &mut streams, gittins)?;
                let heads = rec.total_heads();
                let mut regrets = rec.regret_at_step;
                // Non-unit costs can end a trial early; its decision stands afterwards.
                let last = *regrets.last().unwrap();
                regrets.resize(steps.max(regrets.len()), last);
                Ok((regrets, heads))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut column = Vec::with_capacity(records.len());
        let stats = (0..steps)
            .map(|t| {
                column.clear();
                column.extend(records.iter().map(|(r, _)| r[t]));
                let (mean_regret, stderr) = mean_and_stderr(&column);
                StepStats {
                    t: t as u32,
                    trials: config.trials,
                    mean_regret,
                    stderr,
                }
            })
            .collect();
        let mean_reward = config
            .report_reward
            .then(|| records.iter().map(|(_, h)| *h as f64).sum::<f64>() / records.len() as f64);
        policies.push(PolicyResult {
            policy: id,
            steps: stats,
            mean_reward,
        });
    }
    Ok(ExperimentResult { policies })
}

/// Convenience for a fresh uniform-prior, unit-cost instance.
pub fn uniform_instance(n: usize, budget: u32) -> ProblemInstance {
    ProblemInstance::unit_costs(vec![BetaParams::uniform(); n], budget).expect("n >= 1")
}

/// The belief state a trial ends in, replayed from its history.
pub fn replay(instance: &ProblemInstance, history: &[FlipRecord]) -> Result<BeliefState> {
    let mut state = instance.initial_state();
    for f in history {
        state.apply(f.coin, f.outcome, instance.costs()[f.coin])?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(a: u32, t: u32) -> BetaParams {
        BetaParams::new(a, t).unwrap()
    }

    #[test]
    fn sampling_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, want) in [(b(1, 1), 0.5), (b(5, 1), 5.0 / 6.0)] {
            let draws = 100_000;
            let mean: f64 = (0..draws)
                .map(|_| sample_instance(&[p], &mut rng)[0])
                .sum::<f64>()
                / draws as f64;
            assert!((mean - want).abs() < 0.005, "{p}: {mean}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let priors = vec![b(1, 1), b(3, 2), b(2, 7)];
        let a = sample_instance(&priors, &mut TrialStreams::derive(9, "x", 4).instance);
        let c = sample_instance(&priors, &mut TrialStreams::derive(9, "y", 4).instance);
        assert_eq!(a, c);
        let d = sample_instance(&priors, &mut TrialStreams::derive(9, "x", 5).instance);
        assert_ne!(a, d);
    }

    #[test]
    fn zero_budget_trial() {
        let inst = ProblemInstance::unit_costs(vec![b(1, 3), b(2, 1)], 0).unwrap();
        let mut p = PolicyState::new(PolicyKind::Scla);
        let rec = run_trial(
            &mut p,
            &inst,
            &mut TrialStreams::derive(1, "scla", 0),
            &GittinsCache::new(),
        )
        .unwrap();
        assert!(rec.history.is_empty());
        assert_eq!(rec.winner_at_step, vec![1]);
        let t = &rec.true_thetas;
        assert_eq!(rec.regret_at_step, vec![t[0].max(t[1]) - t[1]]);
    }

    #[test]
    fn budget_respected_with_mixed_costs() {
        let inst = ProblemInstance::new(vec![b(1, 1); 3], vec![1, 2, 3], 10).unwrap();
        let cache = GittinsCache::new();
        for kind in PolicyKind::all() {
            for trial in 0..20 {
                let mut p = PolicyState::new(kind);
                let rec = run_trial(
                    &mut p,
                    &inst,
                    &mut TrialStreams::derive(2, &kind.to_string(), trial),
                    &cache,
                )
                .unwrap();
                let spent: u32 = rec.history.iter().map(|f| inst.costs()[f.coin]).sum();
                // the unit-cost coin stays affordable until the budget is gone
                assert_eq!(spent, 10, "{kind}");
                let times: Vec<u32> = rec.history.iter().map(|f| f.time).collect();
                assert_eq!(times, (1..=rec.history.len() as u32).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn winners_and_regrets_follow_history() {
        let inst = uniform_instance(4, 12);
        let cache = GittinsCache::new();
        let mut p = PolicyState::new(PolicyKind::BiasedRobin);
        let rec = run_trial(
            &mut p,
            &inst,
            &mut TrialStreams::derive(5, "biased-robin", 0),
            &cache,
        )
        .unwrap();
        assert_eq!(rec.history.len(), 12);
        for t in 0..=12 {
            let s = replay(&inst, &rec.history[..t]).unwrap();
            assert_eq!(rec.winner_at_step[t], s.winner());
            assert!(rec.regret_at_step[t] >= 0.0);
        }
    }

    #[test]
    fn stderr_definition() {
        assert_eq!(mean_and_stderr(&[0.3]), (0.3, 0.0));
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let inst = uniform_instance(2, 2);
        let cfg = ExperimentConfig::new(inst.clone(), vec![], 10, 0);
        assert!(
            matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "policies")
        );
        let cfg = ExperimentConfig::new(inst, vec![PolicyKind::Random], 0, 0);
        assert!(
            matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "trials")
        );
    }
}
