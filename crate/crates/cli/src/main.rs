use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ttmr_cli::experiment::{compare_csv, summary_table};
use ttmr_cli::{compare, run, CliError, ExperimentConfig, Result, RunOptions};
use ttmr_core::datasets::{mackey_glass, teacher_mlp_data, write_series_csv, SeriesSpec, TeacherSpec};
use ttmr_core::mlp::Activation;

#[derive(Parser)]
#[command(name = "ttmr", version, about = "Tensor-train multilinear regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Monte-Carlo trials (overrides the config).
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, or output file for gen-data.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Full-scale trial counts for the experiment kind.
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured model and write summary tables.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run all models on the same trials and flag the winners.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic dataset as CSV.
    GenData {
        dataset: Dataset,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = Act::Tanh)]
        activation: Act,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    MackeyGlass,
    Teacher,
}

#[derive(Clone, Copy, ValueEnum)]
enum Act {
    Relu,
    Tanh,
}

fn load(config: &Path, common: &Common) -> Result<(ExperimentConfig, RunOptions)> {
    let mut cfg = ExperimentConfig::load(config)?;
    if common.full {
        cfg.trials = cfg.kind.full_trials();
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok((cfg, RunOptions { threads: common.threads, out: common.out.clone() }))
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io { path: p.clone(), source: e })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, common } => {
            let (cfg, opts) = load(&config, &common)?;
            let result = run(&cfg, &opts)?;
            for m in &result.models {
                println!("{}", summary_table(m));
            }
            if let Some(dir) = &result.out {
                println!("results written to {}", dir.display());
            }
        }
        Command::Compare { config, common } => {
            let (cfg, opts) = load(&config, &common)?;
            let (result, rows) = compare(&cfg, &opts)?;
            for m in &result.models {
                println!("{}", summary_table(m));
            }
            print!("{}", compare_csv(&result, &rows));
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::GenData { dataset, noise, activation, common } => {
            let seed = common.seed.unwrap_or(0);
            let out = output(common.out.as_ref())?;
            match dataset {
                Dataset::MackeyGlass => {
                    let spec = SeriesSpec { noise_sd: noise, ..SeriesSpec::default() };
                    write_series_csv(out, None, &mackey_glass(&spec, seed)?)?;
                }
                Dataset::Teacher => {
                    let act = match activation {
                        Act::Relu => Activation::Relu,
                        Act::Tanh => Activation::Tanh,
                    };
                    teacher_mlp_data(&TeacherSpec::new(act), seed)?.0.write_csv(out)?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
