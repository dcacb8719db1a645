//! Command-line front end: classify game files, play single runs, sweep
//! horizon grids, and replay the statistical checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pm_core::analysis::{
    asymmetric_test_distributions, concentration_check, khinchine_check, kl_check_default,
    reset_growth_check, TheoryCheckReport,
};
use pm_core::games::{classify, load_game, Game, GameClass};
use pm_core::policies::{DeltaSpec, PolicySpec};
use pm_core::simul::{derive_seed, run, EnvTemplate};
use pm_core::sweep::{sweep, SweepConfig};

#[derive(Parser)]
#[command(
    name = "pm-games",
    version,
    about = "Workbench for finite two-outcome partial-monitoring games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a game by its minimax regret growth rate.
    Classify {
        /// JSON game document.
        game: PathBuf,
    },
    /// Play one policy against one environment and print the trajectory CSV.
    Run {
        /// JSON game document.
        game: PathBuf,
        /// appletree | forced[:c=..] | constant:i | uniform | ewa
        #[arg(long)]
        policy: String,
        /// iid:rho | fixed:0110.. | fixed:@file | epspair:hard|easy[:k=..][:scale=..] | resetforcer[:switch=..]
        #[arg(long)]
        env: String,
        /// Horizon.
        #[arg(long = "T")]
        t: u64,
        /// Master seed; the environment and policy streams derive from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Confidence parameter: "auto" means 1/sqrt(T).
        #[arg(long, default_value = "auto")]
        delta: String,
        /// Also write the trajectory to <out-dir>/run.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sweep a horizon grid, fit the regret exponent, and write artifacts.
    Sweep {
        /// JSON game document.
        game: PathBuf,
        /// appletree | forced[:c=..] | constant:i | uniform | ewa
        #[arg(long)]
        policy: String,
        /// iid:rho | fixed:0110.. | fixed:@file | epspair:hard|easy[:k=..][:scale=..] | resetforcer[:switch=..]
        #[arg(long)]
        env: String,
        /// Comma-separated horizons; 2^k tokens are accepted.
        #[arg(long = "Ts")]
        ts: String,
        /// Replicates per horizon.
        #[arg(long, default_value_t = 30)]
        seeds: u64,
        /// Master seed for the whole sweep.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Confidence parameter: "auto" means 1/sqrt(T).
        #[arg(long, default_value = "auto")]
        delta: String,
        /// Directory for summary.csv, runs.csv, fit.json and plot.gp.
        #[arg(long)]
        out_dir: PathBuf,
        /// Keep every trajectory under <out-dir>/runs/.
        #[arg(long)]
        save_runs: bool,
    },
    /// Re-run one of the statistical checks behind the regret analysis.
    Check {
        /// kl | khinchine | concentration | reset-growth
        name: String,
        /// Game file; concentration and reset-growth need one.
        game: Option<PathBuf>,
        /// Horizon for concentration.
        #[arg(long = "T", default_value_t = 4096)]
        t: u64,
        /// Horizon grid for khinchine (default 100,10000) and reset-growth
        /// (default 2^10..2^17).
        #[arg(long = "Ts")]
        ts: Option<String>,
        /// Replicates: Monte Carlo reps for khinchine (default 100000),
        /// seeds for concentration (default 1000), runs per horizon for
        /// reset-growth (default 10).
        #[arg(long)]
        seeds: Option<u64>,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Confidence parameter for concentration.
        #[arg(long, default_value = "0.1")]
        delta: String,
        /// Outcome-2 probability for concentration.
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Reset-forcer switch time as a fraction of the horizon.
        #[arg(long, default_value_t = 0.5)]
        switch: f64,
    },
}

fn main() -> ExitCode {
    // Die like a normal unix tool when the reader closes the pipe early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Classify { game } => classify_cmd(&game),
        Command::Run {
            game,
            policy,
            env,
            t,
            seed,
            delta,
            out_dir,
        } => run_cmd(&game, &policy, &env, t, seed, &delta, out_dir.as_deref()),
        Command::Sweep {
            game,
            policy,
            env,
            ts,
            seeds,
            seed,
            delta,
            out_dir,
            save_runs,
        } => sweep_cmd(&game, &policy, &env, &ts, seeds, seed, &delta, &out_dir, save_runs),
        Command::Check {
            name,
            game,
            t,
            ts,
            seeds,
            seed,
            delta,
            rho,
            switch,
        } => check_cmd(&name, game.as_deref(), t, ts.as_deref(), seeds, seed, &delta, rho, switch),
    }
}

fn classify_cmd(path: &Path) -> Result<ExitCode, String> {
    let game = load_game(path).map_err(|e| e.to_string())?;
    println!("{}", describe(&classify(&game)));
    Ok(ExitCode::SUCCESS)
}

fn describe(class: &GameClass) -> String {
    let rate = class.regret_rate();
    match class {
        GameClass::Trivial { optimal_action } => {
            format!("Trivial; optimal action {}; minimax regret {rate}", optimal_action + 1)
        }
        GameClass::Easy => format!("Easy; minimax regret {rate}"),
        GameClass::Hard { pair: (i, j) } => format!(
            "Hard; certificate: consecutive non-revealing pair ({},{}); minimax regret {rate}",
            i + 1,
            j + 1
        ),
        GameClass::Hopeless => format!("Hopeless; minimax regret {rate}"),
        GameClass::Degenerate { action } => format!(
            "Degenerate; revealing degenerate action {}; minimax regret {rate}",
            action + 1
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_cmd(
    game_path: &Path,
    policy: &str,
    env: &str,
    t: u64,
    seed: u64,
    delta: &str,
    out_dir: Option<&Path>,
) -> Result<ExitCode, String> {
    let game = load_game(game_path).map_err(|e| e.to_string())?;
    let policy = PolicySpec::parse(policy).map_err(|e| e.to_string())?;
    let template = EnvTemplate::parse(env).map_err(|e| e.to_string())?;
    let delta: DeltaSpec = delta.parse()?;
    let environment = template
        .resolve(&game, t, derive_seed(seed, t, 0, 0))
        .map_err(|e| e.to_string())?;
    let record = run(&game, &policy, delta, &environment, t, derive_seed(seed, t, 0, 1))
        .map_err(|e| e.to_string())?;
    let csv = record.csv_string();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let path = dir.join("run.csv");
        fs::write(&path, &csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    game_path: &Path,
    policy: &str,
    env: &str,
    ts: &str,
    seeds: u64,
    seed: u64,
    delta: &str,
    out_dir: &Path,
    save_runs: bool,
) -> Result<ExitCode, String> {
    let game = load_game(game_path).map_err(|e| e.to_string())?;
    let cfg = SweepConfig {
        policy: PolicySpec::parse(policy).map_err(|e| e.to_string())?,
        delta: delta.parse()?,
        env: EnvTemplate::parse(env).map_err(|e| e.to_string())?,
        t_grid: parse_horizons(ts)?,
        replicates: seeds,
        master_seed: seed,
        threads: thread_cap()?,
        save_runs,
    };
    let output = sweep(&game, &cfg, out_dir).map_err(|e| e.to_string())?;
    for row in &output.summary {
        println!(
            "T={} runs={} median_regret={} mean_resets={}",
            row.t_horizon, row.runs, row.median, row.mean_resets
        );
    }
    match &output.fit {
        Some(fit) => println!(
            "fit: alpha_hat={:.4} r_squared={:.4} over {} horizons",
            fit.alpha_hat,
            fit.r_squared,
            fit.t_grid.len()
        ),
        None => println!("fit: skipped (fewer than four horizons with positive median regret)"),
    }
    println!("wrote {} files under {}", output.files.len(), out_dir.display());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn check_cmd(
    name: &str,
    game: Option<&Path>,
    t: u64,
    ts: Option<&str>,
    seeds: Option<u64>,
    seed: u64,
    delta: &str,
    rho: f64,
    switch: f64,
) -> Result<ExitCode, String> {
    let reports = match name {
        "kl" => vec![kl_check_default().map_err(|e| e.to_string())?],
        "khinchine" => {
            let t_grid = match ts {
                Some(text) => parse_horizons(text)?,
                None => vec![100, 10_000],
            };
            let reps = seeds.unwrap_or(100_000);
            let mut reports = Vec::new();
            for (idx, (label, values, probs)) in
                asymmetric_test_distributions().into_iter().enumerate()
            {
                let mut report =
                    khinchine_check(&values, &probs, &t_grid, reps, derive_seed(seed, 0, idx as u64, 2))
                        .map_err(|e| format!("{label}: {e}"))?;
                report.check = format!("{} [{label}]", report.check);
                reports.push(report);
            }
            reports
        }
        "concentration" => {
            let game = load_required_game(game, name)?;
            let delta: DeltaSpec = delta.parse()?;
            let report = concentration_check(
                &game,
                t,
                delta.resolve(t),
                rho,
                seeds.unwrap_or(1000),
                seed,
                None,
            )
            .map_err(|e| e.to_string())?;
            vec![report]
        }
        "reset-growth" => {
            let game = load_required_game(game, name)?;
            let t_grid = match ts {
                Some(text) => parse_horizons(text)?,
                None => (10..=17).map(|k| 1u64 << k).collect(),
            };
            let report = reset_growth_check(
                &game,
                &t_grid,
                seeds.unwrap_or(10),
                switch,
                seed,
                thread_cap()?,
            )
            .map_err(|e| e.to_string())?;
            vec![report]
        }
        other => {
            return Err(format!(
                "unknown check {other:?}; expected kl, khinchine, concentration or reset-growth"
            ))
        }
    };
    let mut all_pass = true;
    for report in &reports {
        print_report(report);
        all_pass &= report.pass;
    }
    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn load_required_game(game: Option<&Path>, check: &str) -> Result<Game, String> {
    let path = game.ok_or_else(|| format!("the {check} check needs a game file argument"))?;
    load_game(path).map_err(|e| e.to_string())
}

fn print_report(report: &TheoryCheckReport) {
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    println!(
        "{}: {verdict} (measured {:.6}, bound {:.6})",
        report.check, report.measured, report.bound
    );
    for (key, value) in &report.parameters {
        println!("  {key} = {value}");
    }
    for line in &report.details {
        println!("  {line}");
    }
}

fn parse_horizons(text: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        let bad = || format!("bad horizon {token:?} in {text:?}");
        let value = if let Some((base, exp)) = token.split_once('^') {
            let base: u64 = base.trim().parse().map_err(|_| bad())?;
            let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
            base.checked_pow(exp).ok_or_else(bad)?
        } else {
            token.parse().map_err(|_| bad())?
        };
        if value == 0 {
            return Err(format!("horizon must be positive, got {token:?}"));
        }
        out.push(value);
    }
    if out.is_empty() {
        return Err("the horizon list is empty".into());
    }
    Ok(out)
}

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var("PM_GAMES_THREADS") {
        Ok(text) => {
            let n: usize = text
                .trim()
                .parse()
                .map_err(|_| format!("PM_GAMES_THREADS must be a positive integer, got {text:?}"))?;
            if n == 0 {
                return Err("PM_GAMES_THREADS must be at least 1".into());
            }
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("PM_GAMES_THREADS: {e}")),
    }
}
