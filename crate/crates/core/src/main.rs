use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use uav_fedrl::federation::FederationMode;
use uav_fedrl::harness::{
    alpha_sweep, emit_outputs, gain_from_curves, gain_table, load_config, mode_curve, read_metrics, run_checks,
    run_experiment, write_curves, write_gains, ExperimentConfig, GainTable, PRESETS,
};

#[derive(Parser)]
#[command(version, about = "Federated multi-agent UAV trajectory training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML config, or a run.json manifest from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = PRESETS.iter().map(|p| p.0).collect::<Vec<_>>())]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => Ok(load_config(path)?),
            (None, Some(name)) => Ok(ExperimentConfig::preset(name)?),
            (None, None) => bail!("either --config or --preset is required"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write metrics, rounds, checkpoints and run.json.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = ["maddpg", "f-maddpg", "pf-maddpg"])]
        algo: Option<String>,
        /// Local-model weight of the personalized mix.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Personalized runs over several mixing weights and seeds, plus a plain
    /// baseline; writes one curve file per weight and gains.csv.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.7, 0.9])]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2])]
        seeds: Vec<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two run directories.
    Gains {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Also write the comparison to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant and gradient checks.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_mode(s: &str) -> FederationMode {
    match s {
        "maddpg" => FederationMode::Maddpg,
        "f-maddpg" => FederationMode::FMaddpg,
        _ => FederationMode::PfMaddpg,
    }
}

fn print_gain(g: &GainTable) {
    println!(
        "{} vs {}: tail return {:.4} -> {:.4} ({:+.2}%), convergence block {} -> {} ({:+.2}%)",
        g.candidate,
        g.baseline,
        g.baseline_tail_return,
        g.candidate_tail_return,
        g.return_gain_pct,
        g.baseline_convergence_block,
        g.candidate_convergence_block,
        g.convergence_gain_pct,
    );
}

fn run(source: &Source, algo: Option<&str>, alpha: Option<f64>, seed: Option<u64>, episodes: Option<usize>, out: Option<&Path>) -> Result<()> {
    let mut cfg = source.load()?;
    if let Some(a) = algo {
        cfg.federation.mode = parse_mode(a);
    }
    if let Some(a) = alpha {
        cfg.federation.mix_weight = a;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(e) = episodes {
        cfg.episodes = e;
    }
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", cfg.federation.mode, cfg.seed)));
    cfg.output_dir = Some(dir.clone());
    cfg.validate()?;
    let result = run_experiment(&cfg).context("training failed")?;
    emit_outputs(&dir, &cfg, &result, &[])?;
    let last = result.metrics.rows.last().map(|r| r.team_return).unwrap_or_default();
    println!(
        "{} episodes, {} learning steps, {} rounds, final team return {last:.4}; wrote {}",
        result.metrics.len(),
        result.learning_steps,
        result.rounds.len(),
        dir.display()
    );
    Ok(())
}

fn sweep(source: &Source, alphas: &[f64], seeds: &[u64], episodes: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg = source.load()?;
    if let Some(e) = episodes {
        cfg.episodes = e;
    }
    cfg.validate()?;
    let mut curves = alpha_sweep(&cfg, alphas, seeds)?;
    let baseline = mode_curve(&cfg, FederationMode::Maddpg, seeds)?;
    let gains = curves
        .iter()
        .map(|c| gain_from_curves(&baseline.label, &baseline.mean, &c.label, &c.mean, &cfg.report))
        .collect::<uav_fedrl::Result<Vec<_>>>()?;
    curves.push(baseline);
    for p in write_curves(out, &curves)? {
        println!("wrote {}", p.display());
    }
    write_gains(&out.join("gains.csv"), &gains)?;
    gains.iter().for_each(print_gain);
    Ok(())
}

fn gains(baseline: &Path, candidate: &Path, out: Option<&Path>) -> Result<()> {
    let base_cfg = load_config(&baseline.join("run.json"))?;
    let cand_cfg = load_config(&candidate.join("run.json"))?;
    if base_cfg.report != cand_cfg.report {
        eprintln!("warning: report settings differ; using the candidate's");
    }
    let name = |c: &ExperimentConfig| format!("{}-seed{}", c.federation.mode, c.seed);
    let g = gain_table(
        &name(&base_cfg),
        &read_metrics(&baseline.join("metrics.csv"))?,
        &name(&cand_cfg),
        &read_metrics(&candidate.join("metrics.csv"))?,
        &cand_cfg.report,
    )?;
    print_gain(&g);
    if let Some(path) = out {
        write_gains(path, std::slice::from_ref(&g))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { source, algo, alpha, seed, episodes, out } => {
            run(source, algo.as_deref(), *alpha, *seed, *episodes, out.as_deref())
        }
        Command::Sweep { source, alphas, seeds, episodes, out } => sweep(source, alphas, seeds, *episodes, out),
        Command::Gains { baseline, candidate, out } => gains(baseline, candidate, out.as_deref()),
        Command::Check { seed } => {
            let results = run_checks(*seed);
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(anyhow::anyhow!("some checks failed"))
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
