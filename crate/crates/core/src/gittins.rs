//! Gittins indices for Beta-Bernoulli arms, calibrated against a retirement
//! option, with the discount tied to the remaining budget.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::RwLock;

use crate::beta::BetaParams;
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Upper bound on the truncated DP horizon.
pub const MAX_HORIZON: usize = 200;
const MAX_BISECTIONS: usize = 1000;

/// `β_s = 1 - 1/s`.
pub fn discount_for_budget(s: u32) -> f64 {
    assert!(s >= 1, "remaining budget must be positive");
    1.0 - 1.0 / s as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GittinsQuery {
    pub params: BetaParams,
    pub discount: f64,
    pub tolerance: f64,
}

impl GittinsQuery {
    pub fn new(params: BetaParams, discount: f64) -> Self {
        GittinsQuery {
            params,
            discount,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Domain(format!(
                "discount {} outside [0, 1)",
                self.discount
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Domain(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// `ceil(ln(tol)/ln(β))`, capped at [`MAX_HORIZON`].
    pub fn horizon(&self) -> usize {
        if self.discount == 0.0 {
            return 0;
        }
        let h = (self.tolerance.ln() / self.discount.ln()).ceil();
        (h.max(1.0) as usize).min(MAX_HORIZON)
    }
}

/// Value of continuing at the root minus the value of retiring, for retirement payoff `lambda`
/// per step. Values are in per-step units accumulated with discount `β`.
fn continuation_advantage(
    params: BetaParams,
    discount: f64,
    horizon: usize,
    lambda: f64,
    values: &mut Vec<f64>,
) -> f64 {
    let a0 = params.alpha_heads() as f64;
    let b0 = params.alpha_tails() as f64;
    let retire = lambda / (1.0 - discount);
    let mu0 = a0 / (a0 + b0);
    if horizon == 0 {
        return mu0 / (1.0 - discount) - retire;
    }

    // Frontier at depth `horizon`: retire, or keep the arm forever at its current mean.
    // `values[i]` holds the lattice state with `i` extra heads.
    values.clear();
    let frontier_total = a0 + b0 + horizon as f64;
    for i in 0..=horizon {
        let mu = (a0 + i as f64) / frontier_total;
        values.push(retire.max(mu / (1.0 - discount)));
    }
    for depth in (1..horizon).rev() {
        let total = a0 + b0 + depth as f64;
        for i in 0..=depth {
            let mu = (a0 + i as f64) / total;
            let cont = mu + discount * (mu * values[i + 1] + (1.0 - mu) * values[i]);
            values[i] = retire.max(cont);
        }
        values.truncate(depth + 1);
    }
    let cont = mu0 + discount * (mu0 * values[1] + (1.0 - mu0) * values[0]);
    cont - retire
}

/// Retirement-calibrated Gittins index: the per-step payoff `λ` at which flipping the
/// arm and retiring are equally good at its current state.
pub fn gittins_index(q: GittinsQuery) -> Result<f64> {
    q.validate()?;
    let mean = q.params.mean();
    if q.discount == 0.0 {
        return Ok(mean);
    }
    let horizon = q.horizon();
    let mut lo = mean;
    let mut hi = 1.0;
    let mut scratch = Vec::with_capacity(horizon + 1);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= q.tolerance {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if continuation_advantage(q.params, q.discount, horizon, mid, &mut scratch) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Nonconvergence {
        iterations: MAX_BISECTIONS,
    })
}

/// Index for an arm with `s` flips of budget left, discount `1 - 1/s`.
pub fn gittins_index_for_budget(params: BetaParams, s: u32, tolerance: f64) -> Result<f64> {
    gittins_index(GittinsQuery::new(params, discount_for_budget(s)).with_tolerance(tolerance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct CacheKey {
    alpha_heads: u32,
    alpha_tails: u32,
    s: u32,
    tolerance_bits: u64,
}

/// Shared memo of indices keyed by `(α1, α2, s, tolerance)`.
///
/// Lookups take a read lock; a miss computes outside any lock and inserts
/// idempotently, so concurrent trials may race on the same key harmlessly.
#[derive(Debug, Default)]
pub struct GittinsCache {
    table: RwLock<HashMap<CacheKey, f64>>,
}

impl GittinsCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.table.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, params: BetaParams, s: u32, tolerance: f64) -> Option<f64> {
        let key = CacheKey {
            alpha_heads: params.alpha_heads(),
            alpha_tails: params.alpha_tails(),
            s,
            tolerance_bits: tolerance.to_bits(),
        };
        self.table.read().unwrap().get(&key).copied()
    }

    pub fn index(&self, params: BetaParams, s: u32, tolerance: f64) -> Result<f64> {
        if let Some(v) = self.get(params, s, tolerance) {
            return Ok(v);
        }
        let value = gittins_index_for_budget(params, s, tolerance)?;
        let key = CacheKey {
            alpha_heads: params.alpha_heads(),
            alpha_tails: params.alpha_tails(),
            s,
            tolerance_bits: tolerance.to_bits(),
        };
        self.table.write().unwrap().entry(key).or_insert(value);
        Ok(value)
    }

    /// Reads `alpha1,alpha2,s,tolerance,index` rows; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        let cache = GittinsCache::new();
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("{}: {e}", path.display()),
                })
            }
        };
        {
            let mut table = cache.table.write().unwrap();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || (lineno == 0 && line.starts_with("alpha1")) {
                    continue;
                }
                let bad = |message: &str| Error::Parse {
                    line: lineno + 1,
                    message: message.to_string(),
                };
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 5 {
                    return Err(bad("expected 5 comma-separated fields"));
                }
                let int = |s: &str| s.trim().parse::<u32>().map_err(|_| bad("bad integer"));
                let float = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
                let key = CacheKey {
                    alpha_heads: int(fields[0])?,
                    alpha_tails: int(fields[1])?,
                    s: int(fields[2])?,
                    tolerance_bits: float(fields[3])?.to_bits(),
                };
                if key.alpha_heads == 0 || key.alpha_tails == 0 || key.s == 0 {
                    return Err(bad("parameters must be positive"));
                }
                table.insert(key, float(fields[4])?);
            }
        }
        Ok(cache)
    }

    /// Writes every entry, sorted by key.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        let table = self.table.read().unwrap();
        let mut rows: Vec<(&CacheKey, &f64)> = table.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "alpha1,alpha2,s,tolerance,index")?;
        for (k, v) in rows {
            writeln!(
                out,
                "{},{},{},{:?},{:?}",
                k.alpha_heads,
                k.alpha_tails,
                k.s,
                f64::from_bits(k.tolerance_bits),
                v
            )?;
        }
        out.flush()
    }
}
