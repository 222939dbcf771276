use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use diffdist::envs::{rpbp_as_finite_mdp, FiniteMdp};
use diffdist::harness::{
    oracle_report, quantile_mean_csv, rolling_band_csv, run_experiment, run_sweep,
    ExperimentConfig, RunRecord, SweepSpec,
};
use diffdist::oracle::{relative_value_iteration, PolicyTable};

/// Only the output directory can be set from the environment.
const OUTPUT_ENV: &str = "DIFFDIST_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "diffdist", version, about = "Differential distributional RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config over one or many seeds, writing one record per seed.
    Run {
        config: PathBuf,
        /// Extra `key=value` overrides applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, env = OUTPUT_ENV)]
        output: Option<PathBuf>,
    },
    /// Run every cell of the `sweep.<key> = a,b,...` grid in a config.
    Sweep {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, env = OUTPUT_ENV)]
        output: Option<PathBuf>,
    },
    /// Exact oracle quantities for an MDP file or the red-pill blue-pill MDP.
    Oracle {
        /// MDP file; the red-pill blue-pill MDP when absent.
        #[arg(long)]
        mdp: Option<PathBuf>,
        /// Config supplying `rpbp.*` reward parameters.
        #[arg(long, conflicts_with = "mdp")]
        config: Option<PathBuf>,
        /// Comma-separated action per state. Greedy w.r.t. q* when absent.
        #[arg(long, value_delimiter = ',')]
        actions: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce records of one algorithm to a rolling-reward band and quantile means.
    Plotdata {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, env = OUTPUT_ENV)]
        output: Option<PathBuf>,
    },
}

/// Drops any existing line for `key` (a repeat would be a duplicate-key
/// error) and appends `key = value`.
fn set_key(text: &str, key: &str, value: &str) -> String {
    let mut out: String = text
        .lines()
        .filter(|l| l.split_once('=').map(|(k, _)| k.trim()) != Some(key))
        .map(|l| format!("{l}\n"))
        .collect();
    out.push_str(&format!("{key} = {value}\n"));
    out
}

fn load_config(path: &Path, overrides: &[String], output: Option<PathBuf>) -> Result<String> {
    let mut text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for o in overrides {
        let Some((k, v)) = o.split_once('=') else {
            bail!("--set expects KEY=VALUE, got '{o}'");
        };
        text = set_key(&text, k.trim(), v.trim());
    }
    if let Some(dir) = output {
        text = set_key(&text, "output", &dir.display().to_string());
    }
    Ok(text)
}

fn cmd_run(config: &Path, overrides: &[String], output: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::from_text(&load_config(config, overrides, output)?)?;
    let records: Vec<RunRecord> = cfg
        .seeds()
        .par_iter()
        .map(|&s| run_experiment(&cfg, s))
        .collect::<diffdist::Result<_>>()?;
    fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    fs::write(cfg.output.join("config.txt"), cfg.to_text())?;
    for rec in &records {
        let path = rec.save_in(&cfg.output)?;
        let last = rec.last();
        println!(
            "seed {} mean_reward {:.6} rolling {:.6} rbar {:.6} -> {}",
            rec.seed,
            last.mean_reward,
            last.rolling_reward,
            last.rbar,
            path.display()
        );
    }
    Ok(())
}

fn cmd_sweep(config: &Path, overrides: &[String], output: Option<PathBuf>) -> Result<()> {
    let (spec, base) = SweepSpec::split_text(&load_config(config, overrides, output)?)?;
    let table = run_sweep(&spec, &base, &base.seeds())?;
    fs::create_dir_all(&base.output)?;
    let path = base.output.join(format!("sweep_{}.csv", base.algorithm));
    fs::write(&path, table.to_csv())?;
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} cells, {failed} failed -> {}", table.rows.len(), path.display());
    if let Some(best) = table.best() {
        let settings: Vec<String> = best.settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("best {} mean_reward {:.6}", settings.join(" "), best.mean_reward);
    }
    Ok(())
}

fn cmd_oracle(
    mdp: Option<PathBuf>,
    config: Option<PathBuf>,
    actions: Option<Vec<usize>>,
    epsilon: f64,
    m: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let mdp = match (mdp, config) {
        (Some(p), _) => FiniteMdp::load(p)?,
        (None, Some(c)) => rpbp_as_finite_mdp(&ExperimentConfig::load(c)?.rpbp)?,
        (None, None) => rpbp_as_finite_mdp(&Default::default())?,
    };
    let policy = match actions {
        Some(a) => {
            if a.len() != mdp.n_states() {
                bail!("--actions has {} entries for {} states", a.len(), mdp.n_states());
            }
            PolicyTable::epsilon_greedy(&a, mdp.n_actions(), epsilon)?
        }
        None => PolicyTable::from_q(&relative_value_iteration(&mdp)?.q_star, epsilon)?,
    };
    let csv = oracle_report(&mdp, &policy, m)?.to_csv();
    match out {
        Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_plotdata(paths: &[PathBuf], output: Option<PathBuf>) -> Result<()> {
    let records: Vec<RunRecord> = paths
        .iter()
        .map(|p| RunRecord::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<_>>()?;
    let dir = output.unwrap_or_else(|| paths[0].parent().unwrap_or(Path::new(".")).to_path_buf());
    fs::create_dir_all(&dir)?;
    let alg = &records[0].algorithm;
    let band = dir.join(format!("{alg}_rolling_band.csv"));
    fs::write(&band, rolling_band_csv(&records)?)?;
    println!("{}", band.display());
    if records[0].n_thetas > 0 {
        let q = dir.join(format!("{alg}_quantile_means.csv"));
        fs::write(&q, quantile_mean_csv(&records)?)?;
        println!("{}", q.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides, output } => cmd_run(&config, &overrides, output),
        Command::Sweep { config, overrides, output } => cmd_sweep(&config, &overrides, output),
        Command::Oracle { mdp, config, actions, epsilon, m, out } => {
            cmd_oracle(mdp, config, actions, epsilon, m, out)
        }
        Command::Plotdata { records, output } => cmd_plotdata(&records, output),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
