//! `coins`: simulate flip-selection policies, solve small instances exactly, and
//! print closed-form regrets and Gittins index tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coins_core::config::parse_config;
use coins_core::gittins::DEFAULT_TOLERANCE;
use coins_core::report::{format_sig9, to_csv};
use coins_core::sim::ExperimentConfig;
use coins_core::solver::solve_optimal_with_limits;
use coins_core::{
    evaluate_allocation, expected_theta_max_auto, uniform_equal_allocation_regret, Allocation,
    BetaParams, Error, GittinsCache,
};

#[derive(Debug, Parser)]
#[command(name = "coins", version, about = "Budgeted selection of the best coin")]
struct Cli {
    /// Master seed; overrides the config file's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// CSV file of precomputed Gittins indices, created or extended on exit.
    #[arg(long, global = true, value_name = "PATH")]
    gittins_cache: Option<PathBuf>,

    /// Worker threads for trial simulation. Output does not depend on it.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured policies and print per-step regret statistics as CSV.
    Simulate { config: PathBuf },
    /// Print an optimal strategy tree with its value and regret.
    Optimal { config: PathBuf },
    /// Regret of flipping each of `n` uniform coins `a` times.
    ClosedForm {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        a: u32,
    },
    /// Gittins indices for every `α1 + α2 <= max-sum` with `s` flips remaining.
    GittinsTable {
        #[arg(long)]
        max_sum: u32,
        #[arg(long)]
        s: u32,
    },
    /// Value and regret of a fixed per-coin flip allocation.
    EvalAlloc {
        config: PathBuf,
        /// Comma-separated flip counts, one per coin.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        alloc: Vec<u32>,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad arguments or configuration.
    Usage(String),
    /// The instance is beyond the exact solver's limits.
    TooLarge(String),
    Other(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::TooLarge(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::TooLarge(m) | Failure::Other(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InstanceTooLarge(_) => Failure::TooLarge(message),
            Error::Config { .. }
            | Error::Parse { .. }
            | Error::InvalidBeta { .. }
            | Error::InvalidPolicy(_)
            | Error::InvalidCoin { .. }
            | Error::LengthMismatch { .. }
            | Error::BudgetExceeded { .. }
            | Error::Domain(_) => Failure::Usage(message),
            _ => Failure::Other(message),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_config(path: &Path, seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut config =
        parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn load_cache(path: Option<&Path>) -> CliResult<GittinsCache> {
    match path {
        Some(p) => Ok(GittinsCache::load(p)?),
        None => Ok(GittinsCache::new()),
    }
}

fn save_cache(cache: &GittinsCache, path: Option<&Path>) -> CliResult<()> {
    if let Some(p) = path {
        cache
            .save(p)
            .map_err(|e| Failure::Other(format!("writing {}: {e}", p.display())))?;
    }
    Ok(())
}

fn simulate(cli: &Cli, path: &Path) -> CliResult<String> {
    let config = read_config(path, cli.seed)?;
    config.validate()?;
    let cache_path = cli.gittins_cache.as_deref();
    let cache = load_cache(cache_path)?;
    let result = coins_core::run_experiment(&config, &cache)?;
    save_cache(&cache, cache_path)?;
    Ok(to_csv(&result, config.record_every_step))
}

fn optimal(cli: &Cli, path: &Path) -> CliResult<String> {
    let config = read_config(path, cli.seed)?;
    let instance = &config.instance;
    let root = instance.initial_state();
    let solved = solve_optimal_with_limits(
        &root,
        instance.costs(),
        instance.budget(),
        Default::default(),
    )?;
    let first = match solved.tree.root_coin() {
        Some(i) => format!("coin {}", i + 1),
        None => "stop".to_string(),
    };
    Ok(format!(
        "{}first action: {first}\nvalue={} regret={}\n",
        solved.tree.to_text(),
        format_sig9(solved.value),
        format_sig9(solved.regret)
    ))
}

fn gittins_table(cli: &Cli, max_sum: u32, s: u32) -> CliResult<String> {
    if s == 0 {
        return Err(Failure::Usage("--s: must be at least 1".into()));
    }
    if max_sum < 2 {
        return Err(Failure::Usage("--max-sum: must be at least 2".into()));
    }
    let cache_path = cli.gittins_cache.as_deref();
    let cache = load_cache(cache_path)?;
    let mut out = String::from("alpha1,alpha2,index\n");
    for a1 in 1..max_sum {
        for a2 in 1..=max_sum - a1 {
            let params = BetaParams::new(a1, a2)?;
            let g = cache.index(params, s, DEFAULT_TOLERANCE)?;
            out.push_str(&format!("{a1},{a2},{}\n", format_sig9(g)));
        }
    }
    save_cache(&cache, cache_path)?;
    Ok(out)
}

fn eval_alloc(cli: &Cli, path: &Path, alloc: &[u32]) -> CliResult<String> {
    let config = read_config(path, cli.seed)?;
    let instance = &config.instance;
    if alloc.len() != instance.len() {
        return Err(Failure::Usage(format!(
            "--alloc: expected {} flip counts, got {}",
            instance.len(),
            alloc.len()
        )));
    }
    let alloc = Allocation::new(alloc.to_vec());
    alloc
        .check_budget(instance.costs(), instance.budget())
        .map_err(|e| Failure::Usage(format!("--alloc: {e}")))?;
    let root = instance.initial_state();
    let value = evaluate_allocation(&root, &alloc)?;
    let regret = (expected_theta_max_auto(&root) - value).max(0.0);
    Ok(format!(
        "value={} regret={}\n",
        format_sig9(value),
        format_sig9(regret)
    ))
}

fn run(cli: &Cli) -> CliResult<String> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Usage("--threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate { config } => simulate(cli, config),
        Command::Optimal { config } => optimal(cli, config),
        Command::ClosedForm { n, a } => {
            if *n == 0 {
                return Err(Failure::Usage("--n: must be at least 1".into()));
            }
            Ok(format!(
                "{}\n",
                format_sig9(uniform_equal_allocation_regret(*n, *a))
            ))
        }
        Command::GittinsTable { max_sum, s } => gittins_table(cli, *max_sum, *s),
        Command::EvalAlloc { config, alloc } => eval_alloc(cli, config, alloc),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
