use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use emlab::config::{ExperimentConfig, EXPERIMENTS};
use emlab::output;

#[derive(Parser)]
#[command(
    name = "emlab",
    version,
    about = "Run EM / proximal-point experiments and write traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write trace.csv and summary.json.
    Run {
        /// One of the names printed by `emlab list`.
        experiment: String,
        /// JSON config; defaults are used for omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print the default config of an experiment.
    PrintConfig { experiment: String },
    /// List the experiments.
    List,
    /// Re-read the outputs of a run and check that they reproduce its verdict.
    Verify { dir: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            out_dir,
        } => {
            let out = emlab::run_to_dir(&experiment, config.as_deref(), &out_dir)?;
            let s = &out.summary;
            println!(
                "{}: {}{} after {} iterations ({:.0} ms); outputs in {}",
                s.experiment,
                s.verdict,
                if s.ambiguous { " (ambiguous)" } else { "" },
                s.iterations,
                s.wall_time_ms,
                out_dir.display()
            );
        }
        Command::PrintConfig { experiment } => {
            println!(
                "{}",
                ExperimentConfig::default_for(&experiment)?.to_json_pretty()
            );
        }
        Command::List => {
            for name in EXPERIMENTS {
                println!("{name}");
            }
        }
        Command::Verify { dir } => {
            let c = output::verify_round_trip(&dir)?;
            println!("verdict {} reproduced", c.verdict.label());
        }
    }
    Ok(())
}
