use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use textmut::dataset::SplitRatios;
use textmut::mutation::OccurrencePolicy;
use textmut::scorer::SCORER_ENV;
use textmut::LabelFilter;

mod commands;
mod error;
mod manifest;

use error::{Exit, Failure};

/// Adversarial caption mutation and detector evaluation.
#[derive(Debug, Parser)]
#[command(name = "textmut", version, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert COCO caption files into a labeled JSONL dataset.
    ImportCoco(ImportCocoArgs),
    /// Split a dataset into train/val/test by group.
    Split(SplitArgs),
    /// Apply mutation presets to a dataset.
    Mutate(MutateArgs),
    /// Random-removing augmentation of a training set.
    Augment(AugmentArgs),
    /// Score a dataset with an external detector or the mock scorer.
    Score(ScoreArgs),
    /// Compute AUC/ACC/F1 per task from score files.
    Evaluate(EvaluateArgs),
    /// Serve the mock scorer over stdin/stdout.
    ServeMock,
    /// Re-run a recorded command and check its outputs are byte-identical.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct ImportCocoArgs {
    /// Human-written captions (COCO annotation JSON).
    #[arg(long, required_unless_present = "machine")]
    pub human: Option<PathBuf>,
    /// Machine-generated captions in the same format.
    #[arg(long)]
    pub machine: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// train,val,test as fractions (0.7,0.15,0.15) or weights (70:15:15).
    #[arg(long, default_value = "0.7,0.15,0.15")]
    pub ratios: SplitRatios,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct MutateArgs {
    pub input: PathBuf,
    /// Preset id; repeat to chain presets in order.
    #[arg(long = "op", required = true)]
    pub ops: Vec<String>,
    /// Which samples to mutate: human, machine or all.
    #[arg(long, default_value = "machine")]
    pub filter: LabelFilter,
    /// Replace all matches in a word, or only the first (character presets).
    #[arg(long, default_value = "all")]
    pub policy: OccurrencePolicy,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args, Default)]
pub struct LexiconArgs {
    /// Word list overriding the builtin articles.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    #[arg(long)]
    pub adjectives: Option<PathBuf>,
    #[arg(long)]
    pub adverbs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Largest fraction of a text's words that may be removed.
    #[arg(long, default_value = "1/3")]
    pub cap: Ratio<u32>,
    /// Probability that a sample is touched at all.
    #[arg(long, default_value = "1/2")]
    pub prob: Ratio<u32>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub input: PathBuf,
    /// `mock`, `http://host:port` or `cmd:<program> [args..]`.
    #[arg(long, env = SCORER_ENV)]
    pub scorer: String,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    pub batch_size: u32,
    /// Per-batch timeout in seconds.
    #[arg(long, default_value_t = 300)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Scores of the human samples shared by every task.
    #[arg(long)]
    pub human: PathBuf,
    /// TASK=PATH with TASK one of base, mwr, mwj, mwd, mcr, mcj, mcd or a preset
    /// id; character variants of the same class are pooled.
    #[arg(long = "machine", required = true)]
    pub machine: Vec<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Print a metric-by-task table.
    #[arg(long)]
    pub table: bool,
    #[arg(long, default_value_t = textmut::metrics::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Config as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::run(cli.command, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { exit, error }) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {error:#}");
            ExitCode::from(exit as u8)
        }
    }
}
