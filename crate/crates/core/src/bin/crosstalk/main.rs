//! `crosstalk`: train, decode, tune and evaluate the response generator.

mod args;
mod commands;
mod io;
mod repl;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crosstalk::config::{PipelineConfig, CONFIG_ENV};
use crosstalk::Error;

#[derive(Debug, Parser)]
#[command(
    name = "crosstalk",
    version,
    about = "Humor-aware response generation for comedic dialogue"
)]
struct Cli {
    /// Settings file of `key = value` lines; flags override it
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn a dialogue corpus into filtered utterance/response pairs
    Segment(commands::SegmentArgs),
    /// Partition pairs into train, dev and test files
    Split(commands::SplitArgs),
    /// Align pairs and estimate the translation table
    TrainTm(commands::TrainTmArgs),
    /// Count n-grams of responses (plus extra text) for the language model
    TrainLm(commands::TrainLmArgs),
    /// Train the humor forest on labeled pairs
    TrainHumor(commands::TrainHumorArgs),
    /// Decode utterances into scored n-best lists
    Decode(commands::DecodeCmdArgs),
    /// Tune the log-linear weights on dev n-best lists
    Tune(commands::TuneArgs),
    /// BLEU of system outputs and human rating ratios
    Evaluate(commands::EvaluateArgs),
    /// Retrieval and random baselines
    Baseline(commands::BaselineArgs),
    /// Pick the most humorous of the top n-best candidates
    Rerank(commands::RerankArgs),
    /// Interactive session: type an utterance, get a response
    Repl(repl::ReplArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Parse { .. } => 4,
        Error::Structure(_) | Error::Config(_) | Error::Data(_) => 5,
    }
}

fn run(cli: Cli) -> crosstalk::Result<()> {
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    config.validate()?;
    match cli.command {
        Command::Segment(a) => commands::segment(a, &config),
        Command::Split(a) => commands::split(a, &config),
        Command::TrainTm(a) => commands::train_tm(a, &config),
        Command::TrainLm(a) => commands::train_lm(a, &config),
        Command::TrainHumor(a) => commands::train_humor(a, &config),
        Command::Decode(a) => commands::decode(a, &config),
        Command::Tune(a) => commands::tune(a, &config),
        Command::Evaluate(a) => commands::evaluate(a, &config),
        Command::Baseline(a) => commands::baseline(a, &config),
        Command::Rerank(a) => commands::rerank(a, &config),
        Command::Repl(a) => repl::run(a, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
