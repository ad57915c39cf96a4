//! `constprobe` command-line front end.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// An error caused by how the tool was invoked rather than by the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "constprobe", version, about = "Probe token representations for constituency structure")]
pub struct Cli {
    /// Read `key = value` defaults for the subcommand's flags from this file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (1 runs sequentially; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Overlap of constituency and dependency bracketings.
    StatsBracketing(StatsArgs),
    /// Replace a fraction of tokens by context-compatible forms.
    Nonce(NonceArgs),
    /// Build probing datasets from a treebank.
    Build(BuildArgs),
    /// Train a linear probe.
    Train(TrainArgs),
    /// Evaluate a probe, optionally against a control probe.
    Eval(EvalArgs),
    /// Rank input features by probe weight saliency.
    RankNeurons(RankArgs),
    /// Pick a top, bottom or random share of ranked features.
    SelectNeurons(SelectArgs),
    /// Rebuild trees from the three sequence-label probes.
    Reconstruct(ReconstructArgs),
    /// Labeled bracket scores of predicted trees.
    Score(ScoreArgs),
    /// Compare several predicted corpora against each other.
    Compare(CompareArgs),
    /// Write a synthetic activation container.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct StatsArgs {
    /// Constituency treebank (bracketed).
    #[arg(long = "const")]
    pub constituency: PathBuf,
    /// Dependency treebank (CoNLL-X), sentence-aligned.
    #[arg(long)]
    pub dep: PathBuf,
    /// Keep punctuation tokens.
    #[arg(long)]
    pub keep_punct: bool,
    /// Write counts and shares as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingArg {
    Occurrences,
    Types,
}

#[derive(Args, Debug, Serialize)]
pub struct NonceArgs {
    #[arg(long = "const")]
    pub constituency: PathBuf,
    #[arg(long)]
    pub dep: PathBuf,
    /// Share of tokens to replace, in [0, 1].
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dependency treebank the replacement pool is built from (default: --dep).
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SamplingArg::Occurrences)]
    pub sampling: SamplingArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum BuildTask {
    Lca,
    LcaEval,
    ChunkSimple,
    ChunkDetailed,
    Seq,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildArgs {
    #[arg(long, value_enum)]
    pub task: BuildTask,
    #[arg(long)]
    pub treebank: PathBuf,
    /// Dataset file, or directory for `seq`.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of pairs to sample (lca).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave out pairs with i = j (lca).
    #[arg(long)]
    pub exclude_identity: bool,
    /// Keep at most this many instances (chunking).
    #[arg(long)]
    pub limit: Option<usize>,
    /// Sentences used for lca-eval.
    #[arg(long, default_value_t = 200)]
    pub max_sentences: usize,
    /// Maximum sentence length for lca-eval.
    #[arg(long, default_value_t = 20)]
    pub max_len: usize,
    /// Keep punctuation (chunking labels it PCT).
    #[arg(long)]
    pub keep_punct: bool,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct FeatureArgs {
    /// `all`, `reconstruction`, one index, or a comma-separated list.
    #[arg(long, default_value = "all")]
    pub layers: String,
    /// Feature subset: a file with one index per line, or a comma-separated list.
    #[arg(long)]
    pub neurons: Option<String>,
    /// Pair combination: concat, avg, max-s, left, right.
    #[arg(long, default_value = "concat")]
    pub combine: String,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Activation container directory.
    #[arg(long)]
    pub activations: PathBuf,
    /// Treebank the dataset was built from (needed for --control).
    #[arg(long)]
    pub treebank: Option<PathBuf>,
    /// Model output (JSON; weight blobs are written beside it).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub l1: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train on control labels (random per word type or type pair).
    #[arg(long)]
    pub control: bool,
    #[arg(long, default_value_t = 0)]
    pub control_seed: u64,
    /// Train/test variant tag, e.g. orig/.67.
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub activations: PathBuf,
    /// Needed with --control-model.
    #[arg(long)]
    pub treebank: Option<PathBuf>,
    /// Probe trained with --control; enables selectivity.
    #[arg(long)]
    pub control_model: Option<PathBuf>,
    /// Report prefix (writes .json, .txt, .confusion.csv, .distance.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output prefix.
    #[arg(long)]
    pub out: PathBuf,
    /// Container whose layout is used for the layer spread.
    #[arg(long)]
    pub activations: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub top_fraction: f64,
    /// Restrict the layer spread to one class's ranking.
    #[arg(long)]
    pub class: Option<String>,
    /// Second model for ranking overlap.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Comma-separated fractions for the overlap curve.
    #[arg(long, default_value = "0.01,0.05,0.1,0.2,0.5,1.0")]
    pub overlap_fractions: String,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Top,
    Bottom,
    Random,
}

#[derive(Args, Debug, Serialize)]
pub struct SelectArgs {
    /// Ranking JSON written by rank-neurons.
    #[arg(long)]
    pub ranking: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Top)]
    pub mode: ModeArg,
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Index list output, usable as `train --neurons FILE`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub treebank: PathBuf,
    #[arg(long)]
    pub activations: Option<PathBuf>,
    #[arg(long)]
    pub lca_model: Option<PathBuf>,
    #[arg(long)]
    pub depth_model: Option<PathBuf>,
    #[arg(long)]
    pub unary_model: Option<PathBuf>,
    /// Use the gold labels instead of model predictions.
    #[arg(long)]
    pub oracle: bool,
    /// Predicted treebank output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub predicted: PathBuf,
    /// Collapse unary chains in the gold trees as the encoder does.
    #[arg(long)]
    pub canonicalize_gold: bool,
    /// Output prefix (writes .json and .sentences.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub gold: PathBuf,
    /// NAME=PATH, repeatable.
    #[arg(long = "predicted", required = true)]
    pub predicted: Vec<String>,
    #[arg(long)]
    pub canonicalize_gold: bool,
    /// Output prefix (writes .json, .f1.csv, .pearson.csv).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthModeArg {
    Gaussian,
    TypeStatic,
    Structured,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalArg {
    ChunkSimple,
    ChunkDetailed,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub treebank: PathBuf,
    #[arg(long, value_enum, default_value_t = SynthModeArg::Gaussian)]
    pub mode: SynthModeArg,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    /// Layers including the embedding layer.
    #[arg(long, default_value_t = 13)]
    pub layer_count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SignalArg::ChunkSimple)]
    pub signal_task: SignalArg,
    #[arg(long, default_value_t = 8.0)]
    pub strength: f32,
    /// Confine the planted signal to one layer.
    #[arg(long)]
    pub signal_layer: Option<usize>,
    #[arg(long)]
    pub keep_punct: bool,
    /// Container directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn configure_threads(threads: Option<usize>) -> Result<(), UsageError> {
    match threads {
        Some(0) => Err(UsageError("--threads must be at least 1".into())),
        Some(1) => {
            constprobe::exec::set_parallel(false);
            Ok(())
        }
        #[cfg(feature = "parallel")]
        Some(n) => {
            // Fails only if a pool already exists, which cannot happen here.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            constprobe::exec::set_parallel(false);
            Ok(())
        }
        None => Ok(()),
    }
}

fn run() -> anyhow::Result<()> {
    let args = config::merge_config(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return Err(if e.use_stderr() {
                UsageError(String::new()).into()
            } else {
                // --help / --version
                anyhow::Error::new(Quiet)
            });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    configure_threads(cli.threads)?;
    commands::dispatch(cli.command)
}

/// Help or version output was printed; exit successfully.
#[derive(Debug)]
struct Quiet;

impl std::fmt::Display for Quiet {
    fn fmt(&self, _: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        Ok(())
    }
}

impl std::error::Error for Quiet {}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Quiet>() => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<UsageError>() {
            Some(u) => {
                if !u.0.is_empty() {
                    eprintln!("error: {}", u.0);
                }
                ExitCode::from(2)
            }
            None => {
                eprintln!("error: {:#}", e);
                ExitCode::from(1)
            }
        },
    }
}
