//! Sweep orchestration: batch runs over a horizon grid plus the artifact
//! files a sweep leaves behind (summary.csv, runs.csv, fit.json, plot.gp,
//! and optional per-run trajectories).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{fit_exponent, AnalysisError, ExponentFit};
use crate::games::Game;
use crate::policies::{DeltaSpec, PolicySpec};
use crate::simul::{batch, summarize, BatchConfig, BatchPoint, EnvTemplate, SimError, SummaryRow};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path:?}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub policy: PolicySpec,
    pub delta: DeltaSpec,
    pub env: EnvTemplate,
    pub t_grid: Vec<u64>,
    pub replicates: u64,
    pub master_seed: u64,
    pub threads: Option<usize>,
    /// Also write every run's full trajectory under runs/; costly for large
    /// grids, off by default.
    pub save_runs: bool,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub summary: Vec<SummaryRow>,
    pub points: Vec<BatchPoint>,
    /// Absent when fewer than four horizons produced positive median
    /// regret, as happens for policies with exactly zero regret.
    pub fit: Option<ExponentFit>,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
}

/// What fit.json records: the fit when one exists, otherwise the reason.
#[derive(Debug, Serialize)]
struct FitFile<'a> {
    policy: String,
    env: String,
    master_seed: u64,
    fit: Option<&'a ExponentFit>,
    note: Option<String>,
}

fn write_file(dir: &Path, name: &Path, content: &str) -> Result<(), SweepError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| SweepError::Io {
            path: parent.to_owned(),
            source,
        })?;
    }
    fs::write(&path, content).map_err(|source| SweepError::Io { path, source })
}

/// Runs the batch and writes all artifacts into `out_dir`, creating it if
/// needed. All file output happens on this thread after the batch joins.
pub fn sweep(game: &Game, cfg: &SweepConfig, out_dir: &Path) -> Result<SweepOutput, SweepError> {
    let batch_cfg = BatchConfig {
        master_seed: cfg.master_seed,
        keep_records: cfg.save_runs,
        threads: cfg.threads,
    };
    let points = batch(
        game,
        &cfg.policy,
        cfg.delta,
        &cfg.env,
        &cfg.t_grid,
        cfg.replicates,
        &batch_cfg,
    )?;
    let summary = summarize(&points);
    let fit = match fit_exponent(&summary) {
        Ok(fit) => Some(fit),
        Err(AnalysisError::TooFewPoints(_)) => None,
        Err(other) => unreachable!("fit on summary rows cannot fail otherwise: {other}"),
    };
    let mut files = Vec::new();

    let mut summary_csv = String::from("T,runs,median,q1,q3,mean,mean_resets\n");
    for row in &summary {
        summary_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.t_horizon, row.runs, row.median, row.q1, row.q3, row.mean, row.mean_resets
        ));
    }
    write_file(out_dir, Path::new("summary.csv"), &summary_csv)?;
    files.push(PathBuf::from("summary.csv"));

    let mut runs_csv = String::from("T,replicate,final_regret,reset_count,env_seed,policy_seed\n");
    for p in &points {
        runs_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.t_horizon, p.replicate, p.final_regret, p.reset_count, p.env_seed, p.policy_seed
        ));
    }
    write_file(out_dir, Path::new("runs.csv"), &runs_csv)?;
    files.push(PathBuf::from("runs.csv"));

    let fit_file = FitFile {
        policy: cfg.policy.label(),
        env: cfg.env.label(),
        master_seed: cfg.master_seed,
        fit: fit.as_ref(),
        note: fit.is_none().then(|| {
            "fewer than four horizons with positive median regret; no exponent fitted".to_owned()
        }),
    };
    let fit_json =
        serde_json::to_string_pretty(&fit_file).expect("fit serialization cannot fail");
    write_file(out_dir, Path::new("fit.json"), &fit_json)?;
    files.push(PathBuf::from("fit.json"));

    let plot = plot_script(fit.as_ref());
    write_file(out_dir, Path::new("plot.gp"), &plot)?;
    files.push(PathBuf::from("plot.gp"));

    if cfg.save_runs {
        for p in &points {
            let record = p
                .record
                .as_ref()
                .expect("batch kept records because save_runs is set");
            let name = PathBuf::from("runs").join(format!(
                "T{}_rep{}.csv",
                p.t_horizon, p.replicate
            ));
            write_file(out_dir, &name, &record.csv_string())?;
            files.push(name);
        }
    }

    Ok(SweepOutput {
        summary,
        points,
        fit,
        files,
    })
}

/// Gnuplot script rendering median regret against T on log-log axes, with
/// quartile error bars and the fitted power law when one exists.
fn plot_script(fit: Option<&ExponentFit>) -> String {
    let mut s = String::from(
        "set datafile separator \",\"\n\
         set logscale xy\n\
         set xlabel \"T\"\n\
         set ylabel \"regret\"\n\
         set grid\n\
         set key left top\n",
    );
    match fit {
        Some(f) => {
            s.push_str(&format!(
                "plot \"summary.csv\" skip 1 using 1:3:4:5 with yerrorbars title \"median regret [q1, q3]\", \\\n     exp({}) * x**{} title \"fit T^{{{:.3}}}\"\n",
                f.intercept, f.alpha_hat, f.alpha_hat
            ));
        }
        None => {
            s.push_str(
                "plot \"summary.csv\" skip 1 using 1:3:4:5 with yerrorbars title \"median regret [q1, q3]\"\n",
            );
        }
    }
    s
}
