use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mclds::config::SweepSpec;
use mclds::report::{write_run, write_sweep};
use mclds::sim::Metric;
use mclds::sweep::{run_sweep_with, worker_count, WORKERS_ENV};
use mclds::{run_simulation, Rule, ScenarioConfig};

/// Multi-cell WRAN sensing-fusion simulator.
#[derive(Debug, Parser)]
#[command(name = "mclds", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write its CSV artifacts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the `[sweep]` section of the config and write one CSV per (metric, rule).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated rules to evaluate, e.g. MC-LDS,AND,OR,VOTING.
    #[arg(long, value_delimiter = ',')]
    rules: Option<Vec<Rule>>,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&common.config).map_err(|e| Failure::Validation(e.to_string()))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(rules) = &common.rules {
        cfg.fusion.rules = rules.clone();
        if let Some(sweep) = &mut cfg.sweep {
            sweep.rules = rules.clone();
        }
    }
    cfg.resolve();
    cfg.validate().map_err(|e| Failure::Validation(e.to_string()))?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

fn run(common: &Common, out: &Path) -> Result<(), Failure> {
    let cfg = load(common)?;
    let bundle = run_simulation(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
    let files = write_run(&bundle, &cfg, out).map_err(|e| Failure::Runtime(e.to_string()))?;
    for s in &bundle.summary {
        let cols: Vec<String> = Metric::ALL
            .iter()
            .map(|&m| format!("{m}={}", fmt_opt(s.perf.metric(m))))
            .collect();
        println!("{:<16} {}", s.rule.name(), cols.join(" "));
    }
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn sweep(common: &Common, out: &Path, workers: Option<usize>) -> Result<(), Failure> {
    let cfg = load(common)?;
    let spec: SweepSpec = cfg
        .sweep
        .clone()
        .ok_or_else(|| Failure::Validation(format!("{}: no [sweep] section", common.config.display())))?;
    let workers = workers.filter(|&n| n > 0).unwrap_or_else(worker_count);
    let result = run_sweep_with(&cfg, &spec, workers);
    let files = write_sweep(&result, &cfg, out).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!(
        "{} values x {} seeds, {} failed; wrote {} files to {}",
        spec.values.len(),
        spec.seeds_per_point,
        result.failures.len(),
        files.len(),
        out.display()
    );
    if result.failures.is_empty() {
        Ok(())
    } else {
        for f in &result.failures {
            eprintln!("{} = {} replicate {}: {}", spec.variable, f.value, f.replicate, f.message);
        }
        Err(Failure::Runtime(format!("{} replicates failed", result.failures.len())))
    }
}

fn validate(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let text = mclds::report::metadata(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { common, out } => run(common, out),
        Command::Sweep { common, out, workers } => sweep(common, out, *workers),
        Command::Validate { common } => validate(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
