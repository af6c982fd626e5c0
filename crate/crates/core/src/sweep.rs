//! Seeded parameter sweeps over a worker pool.
//!
//! Each replicate's seed is derived from the master seed, the bits of the
//! swept value and the replicate index, so adding or removing sweep values
//! never changes the results of the others.

use rayon::prelude::*;

use crate::config::{ScenarioConfig, SweepSpec, SweepVariable};
use crate::fusion::Rule;
use crate::model::mix_seed;
use crate::sim::{run_simulation, Metric, RuleSummary};

/// Environment variable holding the worker count; unset or 0 means one
/// worker per available core.
pub const WORKERS_ENV: &str = "MCLDS_WORKERS";

/// Kept within 63 bits so the seed stays representable in a config file.
pub fn replicate_seed(master: u64, value: f64, replicate: usize) -> u64 {
    mix_seed(&[master, value.to_bits(), replicate as u64]) >> 1
}

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub replicate: usize,
    pub seed: u64,
    pub summary: Vec<RuleSummary>,
}

impl Replicate {
    pub fn metric(&self, rule: Rule, m: Metric) -> Option<f64> {
        self.summary.iter().find(|s| s.rule == rule).and_then(|s| s.perf.metric(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` below two values.
    pub std: Option<f64>,
    pub n: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Self {
            mean: Some(mean),
            std,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub replicates: Vec<Replicate>,
}

impl SweepPoint {
    /// Mean and spread of one metric over the replicates that produced it.
    pub fn stats(&self, rule: Rule, m: Metric) -> Stats {
        let v: Vec<f64> = self.replicates.iter().filter_map(|r| r.metric(rule, m)).collect();
        Stats::of(&v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub value: f64,
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rules: Vec<Rule>,
    pub points: Vec<SweepPoint>,
    /// Replicates that failed; the others are kept.
    pub failures: Vec<SweepFailure>,
}

/// Configuration of one replicate: the swept value applied, the derived seed,
/// the sweep's rules and no per-QP trace.
pub fn replicate_config(base: &ScenarioConfig, spec: &SweepSpec, value: f64, replicate: usize) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.sweep = None;
    cfg.apply_sweep_value(spec.variable, value);
    cfg.seed = replicate_seed(base.seed, value, replicate);
    cfg.fusion.rules = spec.rules.clone();
    cfg.output.trace = false;
    cfg.output.z_trace = false;
    cfg.resolve();
    cfg
}

/// Runs every (value, replicate) pair on `workers` threads.
pub fn run_sweep_with(base: &ScenarioConfig, spec: &SweepSpec, workers: usize) -> SweepResult {
    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|p| (0..spec.seeds_per_point).map(move |r| (p, r)))
        .collect();
    let run = || {
        jobs.par_iter()
            .map(|&(p, r)| {
                let cfg = replicate_config(base, spec, spec.values[p], r);
                let out = cfg
                    .validate()
                    .map_err(|e| e.to_string())
                    .and_then(|_| run_simulation(&cfg).map_err(|e| e.to_string()));
                (p, r, cfg.seed, out.map(|b| b.summary))
            })
            .collect::<Vec<_>>()
    };
    let outcomes = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };

    let mut points: Vec<SweepPoint> = spec
        .values
        .iter()
        .map(|&value| SweepPoint {
            value,
            replicates: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for (p, r, seed, out) in outcomes {
        match out {
            Ok(summary) => points[p].replicates.push(Replicate {
                replicate: r,
                seed,
                summary,
            }),
            Err(message) => failures.push(SweepFailure {
                value: spec.values[p],
                replicate: r,
                message,
            }),
        }
    }
    let mut rules = spec.rules.clone();
    if !rules.contains(&base.fusion.driving_rule) {
        rules.push(base.fusion.driving_rule);
    }
    SweepResult {
        variable: spec.variable,
        rules,
        points,
        failures,
    }
}

/// As [`run_sweep_with`] using [`worker_count`] threads.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> SweepResult {
    run_sweep_with(base, spec, worker_count())
}
