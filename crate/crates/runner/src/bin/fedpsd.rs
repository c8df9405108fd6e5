use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fedpsd::engine::{run_experiment_with, Federation};
use fedpsd::ExperimentConfig;
use fedpsd_runner::{
    format_config, parse_config, read_metrics, rounds_to_target, run_ablation, Metric,
    MetricsWriter,
};

#[derive(Parser)]
#[command(name = "fedpsd", about = "Federated learning experiments with FedPSD and baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics.csv and config.txt.
    Run {
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the four component combinations and print their final accuracies.
    Ablate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report the first round at which a metrics CSV reaches a target accuracy.
    Summarize {
        csv: PathBuf,
        #[arg(long)]
        target: f64,
        #[arg(long, value_enum, default_value = "client")]
        metric: Metric,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    print!("{}", format_config(&cfg));
    println!();
    Ok(cfg)
}

fn run(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = load_config(config, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.txt"), format_config(&cfg))?;
    let federation = Federation::<f64>::build(&cfg)?;
    let mut writer = MetricsWriter::create(&out.join("metrics.csv"))?;
    let mut failure = None;
    let series = run_experiment_with(&cfg, federation, |_, record| {
        if failure.is_none() {
            failure = writer.append(record).err();
        }
        println!(
            "round {:>4}  client {:.4}  server {:.4}  loss {:.4}",
            record.round, record.avg_client_top1, record.server_top1, record.mean_local_loss
        );
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let mut sweeps = String::from("round,all_client_top1\n");
    for s in &series.sweeps {
        sweeps.push_str(&format!("{},{:.6}\n", s.round, s.all_client_top1));
    }
    fs::write(out.join("sweeps.csv"), sweeps)?;
    println!(
        "final (mean of last rounds): client {:.4}  server {:.4}",
        series.final_client_top1().unwrap_or(0.0),
        series.final_server_top1().unwrap_or(0.0)
    );
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, seed, out } => run(&config, seed, &out),
        Command::Ablate { config, seed } => {
            let cfg = load_config(&config, seed)?;
            println!("{:<14} {:>10} {:>8}", "components", "client", "delta");
            for row in run_ablation(&cfg)? {
                println!(
                    "{:<14} {:>10.4} {:>+8.4}",
                    row.label, row.final_client_top1, row.delta
                );
            }
            Ok(())
        }
        Command::Summarize {
            csv,
            target,
            metric,
        } => {
            anyhow::ensure!((0.0..=1.0).contains(&target), "target must lie in [0, 1]");
            let series = read_metrics(&csv)?;
            match rounds_to_target(&series, target, metric) {
                Some(round) => println!("{round}"),
                None => println!("N/A"),
            }
            Ok(())
        }
    }
}
