use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finenet::io::{parse_override, read_config, RunConfig};
use finenet::pipeline::PipelineMode;
use finenet_cli::{bench, commands, CliError, CliResult};

/// Fine-grained point association for multi-object tracking.
#[derive(Parser)]
#[command(name = "finenet", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set assoc.max_lost=20`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Base seed of the scenario suite.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded suite of synthetic sequences.
    Simulate {
        /// Number of sequences (suite.seeds).
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Track detections of one sequence directory or a suite of them.
    Track {
        /// A sequence directory, or a directory of them (as written by `simulate`).
        #[arg(long)]
        input: PathBuf,
        /// finenet, coarse-iou or coarse-byte (pipeline.mode).
        #[arg(long)]
        mode: Option<PipelineMode>,
        /// Stride length in frames (pipeline.stride).
        #[arg(long)]
        stride: Option<usize>,
        /// Directory of `<sequence>.csv` point-trajectory files, used instead of the pose oracle.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Score tracking results against ground truth.
    Eval {
        /// Sequence directories holding gt.txt.
        #[arg(long)]
        gt: PathBuf,
        /// Directory of `<sequence>.txt` tracking results.
        #[arg(long)]
        results: PathBuf,
    },
    /// Histograms of ground-truth dynamicity attributes.
    Attrs {
        /// Sequence directories holding gt.txt.
        #[arg(long)]
        gt: PathBuf,
    },
    /// Compare tracking modes across frame rates and POI counts.
    Bench {
        /// Number of sequences (suite.seeds).
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn resolve(common: &Common, extra: Vec<(String, String)>) -> CliResult<RunConfig> {
    let mut overrides = Vec::new();
    for s in &common.set {
        overrides.push(parse_override(s)?);
    }
    if let Some(seed) = common.seed {
        overrides.push(("suite.base_seed".into(), seed.to_string()));
    }
    overrides.extend(extra);
    Ok(read_config(common.config.as_deref(), &overrides)?)
}

fn run(cli: Cli) -> CliResult<()> {
    let c = &cli.common;
    let seeds_override = |n: Option<usize>| n.map(|n| ("suite.seeds".to_string(), n.to_string())).into_iter().collect();
    match cli.command {
        Command::Simulate { seeds } => {
            let cfg = resolve(c, seeds_override(seeds))?;
            commands::simulate(&cfg, &c.out, c.jobs)?;
        }
        Command::Track {
            input,
            mode,
            stride,
            points,
        } => {
            let mut extra = Vec::new();
            if let Some(m) = mode {
                extra.push(("pipeline.mode".to_string(), format!("\"{m}\"")));
            }
            if let Some(s) = stride {
                extra.push(("pipeline.stride".to_string(), s.to_string()));
            }
            let cfg = resolve(c, extra)?;
            commands::track(&cfg, &input, cfg.pipeline.mode, points.as_deref(), &c.out, c.jobs)?;
        }
        Command::Eval { gt, results } => {
            let cfg = resolve(c, Vec::new())?;
            let rows = commands::eval(&cfg, &gt, &results, &c.out, c.jobs)?;
            print!("{}", finenet::metrics::metrics_markdown(&rows));
        }
        Command::Attrs { gt } => {
            let cfg = resolve(c, Vec::new())?;
            let report = commands::attrs(&cfg, &gt, &c.out)?;
            for (name, s) in report.attributes() {
                println!(
                    "{name}: mean {} median {} over {} pairs",
                    s.mean.map_or("NA".into(), |v| format!("{v:.3}")),
                    s.median.map_or("NA".into(), |v| format!("{v:.3}")),
                    report.pairs
                );
            }
        }
        Command::Bench { seeds } => {
            let cfg = resolve(c, seeds_override(seeds))?;
            let results = bench::bench(&cfg, &c.out, c.jobs)?;
            print!("{}", bench::bench_markdown(&results));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(CliError::Internal(String::new()).exit_code() as u8),
    }
}
