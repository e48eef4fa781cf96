//! Line-oriented experiment configuration.
//!
//! ```text
//! # ten uniform coins, one skewed
//! [instance]
//! n = 10
//! prior = 1 1
//! prior.3 = 5 1
//! cost = 1
//! budget = 40
//!
//! [experiment]
//! policies = round-robin, biased-robin, scla, interval:1.96, gittins
//! trials = 1000
//! seed = 7
//! record_every_step = true
//! report_reward = false
//! ```
//!
//! Per-coin overrides use one-based coin numbers.

use std::collections::BTreeMap;

use crate::belief::ProblemInstance;
use crate::beta::BetaParams;
use crate::error::{Error, Result};
use crate::policies::PolicyKind;
use crate::sim::ExperimentConfig;

pub const DEFAULT_TRIALS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Instance,
    Experiment,
}

fn parse_prior(field: &str, value: &str) -> Result<BetaParams> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let bad = || {
        Error::config(
            field,
            format!("expected `<alpha1> <alpha2>` with positive integers, got `{value}`"),
        )
    };
    if parts.len() != 2 {
        return Err(bad());
    }
    let a: u32 = parts[0].parse().map_err(|_| bad())?;
    let b: u32 = parts[1].parse().map_err(|_| bad())?;
    BetaParams::new(a, b).map_err(|_| bad())
}

fn parse_positive(field: &str, value: &str) -> Result<u32> {
    match value.parse::<u32>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::config(
            field,
            format!("expected a positive integer, got `{value}`"),
        )),
    }
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(
            field,
            format!("expected true or false, got `{value}`"),
        )),
    }
}

fn coin_number(field: &str, suffix: &str) -> Result<usize> {
    match suffix.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(Error::config(field, "coin numbers start at 1")),
    }
}

/// Parses a configuration file. The `[experiment]` section is optional; callers
/// that simulate should run [`ExperimentConfig::validate`] afterwards.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut section = Section::None;
    let mut n: Option<usize> = None;
    let mut budget: Option<u32> = None;
    let mut prior = BetaParams::uniform();
    let mut cost = 1u32;
    let mut prior_overrides: BTreeMap<usize, (String, BetaParams)> = BTreeMap::new();
    let mut cost_overrides: BTreeMap<usize, (String, u32)> = BTreeMap::new();
    let mut policies = Vec::new();
    let mut trials = DEFAULT_TRIALS;
    let mut seed = 0u64;
    let mut record_every_step = true;
    let mut report_reward = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[instance]" => Section::Instance,
                "[experiment]" => Section::Experiment,
                _ => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("unknown section `{line}`"),
                    })
                }
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match (section, key) {
            (Section::Instance, "n") => {
                n = Some(parse_positive(key, value)? as usize);
            }
            (Section::Instance, "budget") => {
                budget = Some(value.parse().map_err(|_| {
                    Error::config(
                        key,
                        format!("expected a nonnegative integer, got `{value}`"),
                    )
                })?);
            }
            (Section::Instance, "prior") => prior = parse_prior(key, value)?,
            (Section::Instance, "cost") => cost = parse_positive(key, value)?,
            (Section::Instance, k) if k.starts_with("prior.") => {
                let i = coin_number(k, &k["prior.".len()..])?;
                prior_overrides.insert(i, (k.to_string(), parse_prior(k, value)?));
            }
            (Section::Instance, k) if k.starts_with("cost.") => {
                let i = coin_number(k, &k["cost.".len()..])?;
                cost_overrides.insert(i, (k.to_string(), parse_positive(k, value)?));
            }
            (Section::Experiment, "policies") => {
                policies = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<PolicyKind>()
                            .map_err(|_| Error::config(key, format!("unknown policy `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            (Section::Experiment, "trials") => trials = parse_positive(key, value)?,
            (Section::Experiment, "seed") => {
                seed = value
                    .parse()
                    .map_err(|_| Error::config(key, format!("expected a u64, got `{value}`")))?;
            }
            (Section::Experiment, "record_every_step") => {
                record_every_step = parse_bool(key, value)?
            }
            (Section::Experiment, "report_reward") => report_reward = parse_bool(key, value)?,
            (Section::None, _) => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("`{key}` appears outside a section"),
                })
            }
            _ => return Err(Error::config(key, "unknown key")),
        }
    }

    let n = n.ok_or_else(|| Error::config("n", "missing"))?;
    let budget = budget.ok_or_else(|| Error::config("budget", "missing"))?;
    let mut priors = vec![prior; n];
    let mut costs = vec![cost; n];
    for (i, (field, p)) in prior_overrides {
        if i > n {
            return Err(Error::config(
                field,
                format!("coin {i} out of range for n = {n}"),
            ));
        }
        priors[i - 1] = p;
    }
    for (i, (field, c)) in cost_overrides {
        if i > n {
            return Err(Error::config(
                field,
                format!("coin {i} out of range for n = {n}"),
            ));
        }
        costs[i - 1] = c;
    }
    let instance = ProblemInstance::new(priors, costs, budget)?;
    Ok(ExperimentConfig {
        instance,
        policies,
        trials,
        seed,
        record_every_step,
        report_reward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# comment
[instance]
n = 3
prior = 2 1
prior.3 = 5 1   # skewed
cost = 1
cost.2 = 2
budget = 8

[experiment]
policies = round-robin, greedy:2, interval:1.5
trials = 50
seed = 99
record_every_step = false
report_reward = true
";

    #[test]
    fn parses_everything() {
        let c = parse_config(FULL).unwrap();
        let b = |a, t| BetaParams::new(a, t).unwrap();
        assert_eq!(c.instance.priors(), &[b(2, 1), b(2, 1), b(5, 1)]);
        assert_eq!(c.instance.costs(), &[1, 2, 1]);
        assert_eq!(c.instance.budget(), 8);
        assert_eq!(
            c.policies,
            vec![
                PolicyKind::RoundRobin,
                PolicyKind::Greedy { k: 2 },
                PolicyKind::IntervalEstimation { gamma: 1.5 }
            ]
        );
        assert_eq!(c.trials, 50);
        assert_eq!(c.seed, 99);
        assert!(!c.record_every_step);
        assert!(c.report_reward);
    }

    #[test]
    fn experiment_section_optional() {
        let c = parse_config("[instance]\nn = 2\nbudget = 0\n").unwrap();
        assert!(c.policies.is_empty());
        assert_eq!(c.trials, DEFAULT_TRIALS);
    }

    fn field_of(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            field_of("[instance]\nn = 2\nbudget = 3\nprior.3 = 5 1\n"),
            "prior.3"
        );
        assert_eq!(
            field_of("[instance]\nn = 2\nbudget = 3\ncost.0 = 1\n"),
            "cost.0"
        );
        assert_eq!(
            field_of("[instance]\nn = 2\nbudget = 3\nprior = 0 1\n"),
            "prior"
        );
        assert_eq!(field_of("[instance]\nbudget = 3\n"), "n");
        assert_eq!(field_of("[instance]\nn = 2\n"), "budget");
        assert_eq!(
            field_of("[instance]\nn = 2\nbudget = 1\n[experiment]\npolicies = ucb\n"),
            "policies"
        );
        assert_eq!(field_of("[instance]\nn = 2\nbudget = 1\nfoo = 3\n"), "foo");
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_config("n = 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("[bogus]\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_config("[instance]\nn 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
