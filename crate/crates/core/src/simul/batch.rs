//! Batch execution over a horizon grid with replicated seeds.
//!
//! Every run's seeds are derived from (master seed, horizon, replicate), so
//! the result is a pure function of the inputs no matter how many threads
//! execute the jobs or in which order they finish.

use serde::Serialize;

use crate::games::Game;
use crate::policies::{DeltaSpec, PolicySpec};

use super::runner::run_prepared;
use super::{derive_seed, generate_outcomes, EnvTemplate, RunRecord, SimError};

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub master_seed: u64,
    /// Keep the full trajectory of every run; costs memory proportional to
    /// the total number of steps.
    pub keep_records: bool,
    /// Thread cap for parallel execution; `None` uses the rayon default.
    pub threads: Option<usize>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            master_seed: 0,
            keep_records: false,
            threads: None,
        }
    }
}

/// Outcome of one batch job.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPoint {
    pub t_horizon: u64,
    pub replicate: u64,
    pub final_regret: f64,
    pub reset_count: u64,
    pub env_seed: u64,
    pub policy_seed: u64,
    /// Present only when the batch was asked to keep trajectories.
    pub record: Option<RunRecord>,
}

/// Per-horizon summary of the final regrets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub t_horizon: u64,
    pub runs: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
    pub mean_resets: f64,
}

fn check_grids(t_grid: &[u64], replicates: u64) -> Result<(), SimError> {
    if t_grid.is_empty() {
        return Err(SimError::EmptyGrid("horizon grid"));
    }
    if replicates == 0 {
        return Err(SimError::EmptyGrid("replicate count"));
    }
    Ok(())
}

fn job_list(t_grid: &[u64], replicates: u64) -> Vec<(u64, u64)> {
    t_grid
        .iter()
        .flat_map(|&t| (0..replicates).map(move |rep| (t, rep)))
        .collect()
}

fn run_job(
    game: &Game,
    policy: &PolicySpec,
    delta: DeltaSpec,
    env: &EnvTemplate,
    t_horizon: u64,
    replicate: u64,
    cfg: &BatchConfig,
) -> Result<BatchPoint, SimError> {
    let env_seed = derive_seed(cfg.master_seed, t_horizon, replicate, 0);
    let policy_seed = derive_seed(cfg.master_seed, t_horizon, replicate, 1);
    let resolved = env.resolve(game, t_horizon, env_seed)?;
    let outcomes = generate_outcomes(&resolved, t_horizon)?;
    let mut built = policy.build(game, t_horizon, delta.resolve(t_horizon))?;
    let record = run_prepared(game, built.as_mut(), &outcomes, policy_seed);
    Ok(BatchPoint {
        t_horizon,
        replicate,
        final_regret: record.final_regret,
        reset_count: record.reset_count,
        env_seed,
        policy_seed,
        record: cfg.keep_records.then_some(record),
    })
}

/// Runs the full grid on the current thread.
pub fn batch_sequential(
    game: &Game,
    policy: &PolicySpec,
    delta: DeltaSpec,
    env: &EnvTemplate,
    t_grid: &[u64],
    replicates: u64,
    cfg: &BatchConfig,
) -> Result<Vec<BatchPoint>, SimError> {
    check_grids(t_grid, replicates)?;
    job_list(t_grid, replicates)
        .into_iter()
        .map(|(t, rep)| run_job(game, policy, delta, env, t, rep, cfg))
        .collect()
}

/// Runs the full grid, spreading jobs across threads.
#[cfg(feature = "parallel")]
pub fn batch(
    game: &Game,
    policy: &PolicySpec,
    delta: DeltaSpec,
    env: &EnvTemplate,
    t_grid: &[u64],
    replicates: u64,
    cfg: &BatchConfig,
) -> Result<Vec<BatchPoint>, SimError> {
    use rayon::prelude::*;

    check_grids(t_grid, replicates)?;
    let jobs = job_list(t_grid, replicates);
    let work = || {
        jobs.par_iter()
            .map(|&(t, rep)| run_job(game, policy, delta, env, t, rep, cfg))
            .collect::<Result<Vec<_>, _>>()
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::ThreadPool(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Without the parallel feature the batch entry point runs sequentially.
#[cfg(not(feature = "parallel"))]
pub fn batch(
    game: &Game,
    policy: &PolicySpec,
    delta: DeltaSpec,
    env: &EnvTemplate,
    t_grid: &[u64],
    replicates: u64,
    cfg: &BatchConfig,
) -> Result<Vec<BatchPoint>, SimError> {
    batch_sequential(game, policy, delta, env, t_grid, replicates, cfg)
}

/// Linear-interpolation quantile of an already sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Collapses batch points into one row per horizon, in grid order.
pub fn summarize(points: &[BatchPoint]) -> Vec<SummaryRow> {
    let mut order: Vec<u64> = Vec::new();
    for p in points {
        if !order.contains(&p.t_horizon) {
            order.push(p.t_horizon);
        }
    }
    order
        .into_iter()
        .map(|t| {
            let mut regrets: Vec<f64> = points
                .iter()
                .filter(|p| p.t_horizon == t)
                .map(|p| p.final_regret)
                .collect();
            regrets.sort_by(f64::total_cmp);
            let resets: u64 = points
                .iter()
                .filter(|p| p.t_horizon == t)
                .map(|p| p.reset_count)
                .sum();
            let n = regrets.len();
            SummaryRow {
                t_horizon: t,
                runs: n,
                median: quantile(&regrets, 0.5),
                q1: quantile(&regrets, 0.25),
                q3: quantile(&regrets, 0.75),
                mean: regrets.iter().sum::<f64>() / n as f64,
                mean_resets: resets as f64 / n as f64,
            }
        })
        .collect()
}
