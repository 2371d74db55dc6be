use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vi_probe_cli::{cmd_gen, cmd_probe, cmd_report, cmd_score, cmd_study, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "vi-probe",
    version,
    about = "Visual-illusion probing for vision-language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and validate the stimulus dataset.
    Gen(Common),
    /// Query every configured model on every item and prompt variant.
    Probe(Common),
    /// Pair responses and compute metrics.
    Score(Common),
    /// Emit tables and plots from the scores.
    Report(Common),
    /// Serve the human-baseline study.
    Study(Common),
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Transport(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Gen(c) | Command::Probe(c) | Command::Score(c) | Command::Report(c) | Command::Study(c)) =
        &cli.command;
    let config = RunConfig::load(&c.config, c.out.as_deref())?;
    match cli.command {
        Command::Gen(_) => {
            let path = cmd_gen(&config)?;
            println!("manifest: {}", path.display());
        }
        Command::Probe(_) => {
            for run in runtime()?.block_on(cmd_probe(&config))? {
                let s = &run.summary;
                println!(
                    "{}: {} planned, {} cached, {} requested, {} failed -> {}",
                    run.model,
                    s.planned,
                    s.cached,
                    s.requested,
                    s.failed,
                    run.log.display()
                );
            }
        }
        Command::Score(_) => {
            for score in cmd_score(&config)? {
                for w in &score.warnings {
                    eprintln!("warning: {}: {w}", score.model_id);
                }
                match &score.report {
                    Some(r) => println!(
                        "{}: {} pairs, PFC {:.2}%, O {:.2}%, P {:.2}%, R {:.2}, {} warnings",
                        score.model_id,
                        r.pairs,
                        r.pfc * 100.0,
                        r.acc_o * 100.0,
                        r.acc_p * 100.0,
                        r.r,
                        score.warnings.len()
                    ),
                    None => println!(
                        "{}: {} pairs, {} warnings",
                        score.model_id,
                        score.counts.n,
                        score.warnings.len()
                    ),
                }
            }
            println!("scores: {}", config.scores_dir().display());
        }
        Command::Report(_) => {
            for path in cmd_report(&config)? {
                println!("{}", path.display());
            }
        }
        Command::Study(_) => runtime()?.block_on(cmd_study(&config))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
