//! CSV output for experiment results and the shared number format.

use crate::error::{Error, Result};
use crate::sim::{ExperimentResult, PolicyResult, StepStats};

/// C-style `%.9g`: nine significant digits, trailing zeros trimmed, lowercase
/// scientific notation below `1e-4` (or at `1e9` and above).
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_fraction(&format!("{x:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_header(report_reward: bool) -> &'static str {
    if report_reward {
        "policy,t,trials,mean_regret,stderr,mean_reward"
    } else {
        "policy,t,trials,mean_regret,stderr"
    }
}

/// One row per `(policy, step)`, or only each policy's final step when
/// `every_step` is false. The reward column appears when any policy carries one.
pub fn to_csv(result: &ExperimentResult, every_step: bool) -> String {
    let with_reward = result.policies.iter().any(|p| p.mean_reward.is_some());
    let mut out = String::new();
    out.push_str(csv_header(with_reward));
    out.push('\n');
    for p in &result.policies {
        let rows: &[StepStats] = if every_step {
            &p.steps
        } else {
            std::slice::from_ref(p.final_step())
        };
        for s in rows {
            out.push_str(&format!(
                "{},{},{},{},{}",
                p.policy,
                s.t,
                s.trials,
                format_sig9(s.mean_regret),
                format_sig9(s.stderr)
            ));
            if with_reward {
                out.push(',');
                out.push_str(&p.mean_reward.map(format_sig9).unwrap_or_default());
            }
            out.push('\n');
        }
    }
    out
}

/// Reads [`to_csv`] output back; policies keep their order of first appearance.
pub fn from_csv(text: &str) -> Result<ExperimentResult> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let with_reward = match header.trim() {
        h if h == csv_header(true) => true,
        h if h == csv_header(false) => false,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected header `{other}`"),
            })
        }
    };
    let mut policies: Vec<PolicyResult> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: &str| Error::Parse {
            line: i + 1,
            message: message.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if with_reward { 6 } else { 5 };
        if fields.len() != expected {
            return Err(bad("wrong number of fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let step = StepStats {
            t: fields[1].parse().map_err(|_| bad("bad step"))?,
            trials: fields[2].parse().map_err(|_| bad("bad trial count"))?,
            mean_regret: num(fields[3])?,
            stderr: num(fields[4])?,
        };
        let reward = if with_reward && !fields[5].is_empty() {
            Some(num(fields[5])?)
        } else {
            None
        };
        match policies.iter_mut().find(|p| p.policy == fields[0]) {
            Some(p) => p.steps.push(step),
            None => policies.push(PolicyResult {
                policy: fields[0].to_string(),
                steps: vec![step],
                mean_reward: reward,
            }),
        }
    }
    Ok(ExperimentResult { policies })
}
