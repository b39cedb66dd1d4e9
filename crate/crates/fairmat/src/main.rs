use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fairmat::config::{AlgorithmId, ExperimentConfig, ReplayMode};
use fairmat::experiment::run_experiment;
use fairmat::gen::{write_files, GenParams, SyntheticKind};
use fairmat::ingest::{build_instance, read_dataset};
use fairmat::report::write_csv;

/// Fair submodular maximization over matroids: experiments, validation, and
/// synthetic instance generation.
#[derive(Parser)]
#[command(name = "fairmat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, k) cell of an experiment config and emit a CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's algorithm list with a single algorithm.
        #[arg(long)]
        algorithm: Option<String>,
        /// Override the modular weights file.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Override the accuracy parameter of the exponential search.
        #[arg(long)]
        eta: Option<f64>,
        /// Override the replay mode (memory|file).
        #[arg(long)]
        replay: Option<String>,
        /// Override the run seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse a config, build the constraints for every k, and report issues.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic dataset plus a ready config into a directory.
    Gen {
        /// random-coverage | modular | adversarial-c3 | matching-gadget | bank-synthetic
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        size: usize,
        #[arg(long, default_value_t = 3)]
        colors: usize,
        #[arg(long, default_value_t = 4)]
        rank: usize,
        #[arg(long, default_value_t = 3)]
        left: usize,
        #[arg(long, default_value_t = 3)]
        right: usize,
        #[arg(long, default_value_t = true)]
        matchable: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fairmat: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), fairmat::HarnessError> {
    match cli.command {
        Command::Run {
            config,
            out,
            algorithm,
            weights,
            eta,
            replay,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(name) = algorithm {
                let id = AlgorithmId::parse(&name).ok_or_else(|| {
                    fairmat::HarnessError::Config(format!("unknown algorithm '{name}'"))
                })?;
                cfg.algorithms = vec![id];
            }
            if let Some(w) = weights {
                cfg.weights = Some(w);
            }
            if let Some(e) = eta {
                cfg.eta = e;
            }
            if let Some(r) = replay {
                cfg.replay = match r.as_str() {
                    "memory" => ReplayMode::Memory,
                    "file" => ReplayMode::File,
                    other => {
                        return Err(fairmat::HarnessError::Config(format!(
                            "unknown replay mode '{other}'"
                        )))
                    }
                };
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let records = run_experiment(&cfg)?;
            let mut file = std::fs::File::create(&out).map_err(|e| {
                fairmat::HarnessError::Io(format!("cannot create {}: {e}", out.display()))
            })?;
            write_csv(&records, &mut file)?;
            let failures = records.iter().filter(|r| r.error.is_some()).count();
            eprintln!(
                "wrote {} rows to {} ({failures} failed cells recorded in-row)",
                records.len(),
                out.display()
            );
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dataset = read_dataset(&cfg.dataset)?;
            eprintln!(
                "dataset: {} elements, {} colors ({})",
                dataset.len(),
                dataset.color_count,
                dataset.color_labels.join(", ")
            );
            for &k in &cfg.ks {
                let instance = build_instance(&dataset, &cfg, k)?;
                eprintln!(
                    "k={k}: rank bound {}, lower bounds {:?}, upper bounds {:?}",
                    instance.constraints.matroid.rank_bound(),
                    instance.constraints.bounds.lowers(),
                    instance.constraints.bounds.uppers(),
                );
            }
            eprintln!("config ok");
            Ok(())
        }
        Command::Gen {
            kind,
            out,
            seed,
            size,
            colors,
            rank,
            left,
            right,
            matchable,
        } => {
            let kind = SyntheticKind::parse(&kind).ok_or_else(|| {
                fairmat::HarnessError::Config(format!("unknown generator kind '{kind}'"))
            })?;
            let params = GenParams {
                size,
                colors,
                rank,
                left,
                right,
                matchable,
            };
            let written = write_files(kind, params, seed, &out)?;
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
