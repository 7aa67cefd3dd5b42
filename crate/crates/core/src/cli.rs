//! Command-line front end. Every subcommand is also exposed as a
//! `cmd_*` function returning the data it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::annotate::{annotate_corpus, read_abstracts, read_gazetteer, AnnotatorConfig};
use crate::correction::{
    build_correction_dataset, read_correction_pairs, read_gold_inventory, split_curriculum, write_correction_pairs,
    CorrectionPair,
};
use crate::corpus::{read_conll, write_conll, Document};
use crate::error::{Error, Result};
use crate::metrics::{dataset_stats, span_f1, token_metrics, DatasetStats, SpanF1Report, TokenReport};
use crate::tagger::{train_correction_model, train_tagger, Architecture, Model, ModelConfig, ModelKind, TrainTrace};
use crate::tasks::TaskConfig;

#[derive(Debug, Parser)]
#[command(name = "weakner", version, about = "Distantly supervised NER: annotate, correct, train, evaluate")]
pub struct Cli {
    /// Seed for parameter initialization and shuffling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML settings file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Progress and summaries on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label anchored abstracts against a gazetteer.
    Annotate {
        #[arg(long)]
        abstracts: PathBuf,
        #[arg(long)]
        gazetteer: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pair noisy sentences with gold labels from a per-document inventory.
    BuildCorrection {
        #[arg(long)]
        noisy: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the label-correction model.
    TrainCorrection {
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Loss trace path (default: checkpoint path with a .trace.tsv extension).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Train on the whole dataset as one stage.
        #[arg(long)]
        no_curriculum: bool,
        /// Ignore the noisy labels; the model sees tokens only.
        #[arg(long)]
        no_noisy_input: bool,
        /// Width of the noisy-label one-hot input.
        #[arg(long)]
        label_dim: Option<usize>,
        #[command(flatten)]
        training: TrainingFlags,
    },
    /// Correct the labels of a CoNLL file with a correction checkpoint.
    Correct {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a tagger on one or more corpora, in the order given.
    Train {
        #[arg(long = "data", required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Binary context-task window (repeatable).
        #[arg(long = "binary-window")]
        binary_windows: Vec<usize>,
        /// Positional context-task window (repeatable).
        #[arg(long = "positional-window")]
        positional_windows: Vec<usize>,
        /// Drop any auxiliary tasks from the settings file.
        #[arg(long, conflicts_with_all = ["binary_windows", "positional_windows"])]
        single_task: bool,
        #[command(flatten)]
        training: TrainingFlags,
    },
    /// Score predictions (or a checkpoint's output on --input) against a reference.
    Evaluate {
        #[arg(long, conflicts_with_all = ["model", "input"])]
        predicted: Option<PathBuf>,
        #[arg(long, requires = "input")]
        model: Option<PathBuf>,
        #[arg(long, requires = "model")]
        input: Option<PathBuf>,
        #[arg(long)]
        reference: PathBuf,
        /// Print JSON instead of key = value lines.
        #[arg(long)]
        json: bool,
    },
    /// Corpus statistics, including the ratio of annotated tokens.
    Stats {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainingFlags {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Epochs per curriculum stage or corpus.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub context_radius: Option<usize>,
}

/// Settings file contents. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub learning_rate: Option<f64>,
    pub epochs_per_stage: Option<usize>,
    pub batch_size: Option<usize>,
    pub embedding_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub context_radius: Option<usize>,
    pub label_dim: Option<usize>,
    pub noisy_input: Option<bool>,
    pub curriculum: Option<bool>,
    pub terminators: Option<Vec<String>>,
    pub binary_windows: Option<Vec<usize>>,
    pub positional_windows: Option<Vec<usize>>,
    pub task_weights: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Training settings with `flags` and `seed` layered over the file.
    pub fn model_config(&self, flags: &TrainingFlags, seed: Option<u64>) -> ModelConfig {
        let mut config = ModelConfig::default();
        let arch = &mut config.architecture;
        let defaults = Architecture::default();
        arch.embedding_dim = flags.embedding_dim.or(self.embedding_dim).unwrap_or(defaults.embedding_dim);
        arch.hidden_dim = flags.hidden_dim.or(self.hidden_dim).unwrap_or(defaults.hidden_dim);
        arch.context_radius = flags.context_radius.or(self.context_radius).unwrap_or(defaults.context_radius);
        let train = &mut config.train;
        train.learning_rate = flags.learning_rate.or(self.learning_rate).unwrap_or(train.learning_rate);
        train.epochs_per_stage = flags.epochs.or(self.epochs_per_stage).unwrap_or(train.epochs_per_stage);
        train.batch_size = flags.batch_size.or(self.batch_size).unwrap_or(train.batch_size);
        train.seed = seed.or(self.seed).unwrap_or(train.seed);
        train.task_weights = self.task_weights.clone();
        config.label_dim = self.label_dim.unwrap_or(config.label_dim);
        config.noisy_input = self.noisy_input.unwrap_or(config.noisy_input);
        config
    }

    pub fn annotator_config(&self) -> AnnotatorConfig {
        match &self.terminators {
            Some(t) => AnnotatorConfig { terminators: t.clone() },
            None => AnnotatorConfig::default(),
        }
    }

    pub fn task_config(&self) -> Result<TaskConfig> {
        TaskConfig::new(
            self.binary_windows.clone().unwrap_or_default(),
            self.positional_windows.clone().unwrap_or_default(),
        )
    }
}

pub fn cmd_annotate(abstracts: &Path, gazetteer: &Path, out: &Path, config: &AnnotatorConfig) -> Result<Vec<Document>> {
    let gazetteer = read_gazetteer(gazetteer)?;
    let abstracts = read_abstracts(abstracts)?;
    let documents = annotate_corpus(&abstracts, &gazetteer, config)?;
    write_conll(&documents, out)?;
    Ok(documents)
}

pub fn cmd_build_correction(noisy: &Path, gold: &Path, out: &Path) -> Result<Vec<CorrectionPair>> {
    let noisy = read_conll(noisy)?;
    let gold = read_gold_inventory(gold)?;
    let pairs = build_correction_dataset(&noisy, &gold)?;
    write_correction_pairs(&pairs, out)?;
    Ok(pairs)
}

fn default_trace_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("trace.tsv")
}

fn write_outputs(model: &Model, trace: &TrainTrace, out: &Path, trace_path: &Path) -> Result<()> {
    model.save(out)?;
    fs::write(trace_path, trace.to_tsv()).map_err(|e| Error::io(trace_path, e))
}

/// Trains on the curriculum stages (or one stage) and writes the checkpoint and trace.
pub fn cmd_train_correction(
    data: &Path,
    out: &Path,
    trace: Option<&Path>,
    config: &ModelConfig,
    curriculum: bool,
) -> Result<(Model, TrainTrace)> {
    let pairs = read_correction_pairs(data)?;
    if pairs.is_empty() {
        return Err(Error::Undefined("training on an empty correction dataset"));
    }
    let stages = if curriculum { split_curriculum(pairs)?.into_stages() } else { vec![pairs] };
    let (model, history) = train_correction_model(&stages, config)?;
    write_outputs(&model, &history, out, &trace.map_or_else(|| default_trace_path(out), Path::to_path_buf))?;
    Ok((model, history))
}

pub fn cmd_correct(input: &Path, checkpoint: &Path, out: &Path) -> Result<Vec<Document>> {
    let model = Model::load(checkpoint)?;
    let corrected = model.correct_labels(&read_conll(input)?)?;
    write_conll(&corrected, out)?;
    Ok(corrected)
}

pub fn cmd_train_tagger(
    data: &[PathBuf],
    tasks: &TaskConfig,
    config: &ModelConfig,
    out: &Path,
    trace: Option<&Path>,
) -> Result<(Model, TrainTrace)> {
    let corpora = data.iter().map(read_conll).collect::<Result<Vec<_>>>()?;
    let (model, history) = train_tagger(&corpora, tasks, config)?;
    write_outputs(&model, &history, out, &trace.map_or_else(|| default_trace_path(out), Path::to_path_buf))?;
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub span: SpanF1Report,
    pub token: TokenReport,
}

impl EvaluationReport {
    pub fn to_key_values(&self) -> String {
        self.span.to_key_values() + &self.token.to_key_values()
    }
}

pub enum Predictions<'a> {
    File(&'a Path),
    /// A correction checkpoint corrects the input labels; a tagger ignores them.
    Model { checkpoint: &'a Path, input: &'a Path },
}

pub fn cmd_evaluate(predictions: Predictions<'_>, reference: &Path) -> Result<EvaluationReport> {
    let predicted = match predictions {
        Predictions::File(path) => read_conll(path)?,
        Predictions::Model { checkpoint, input } => {
            let model = Model::load(checkpoint)?;
            let input = read_conll(input)?;
            match model.kind {
                ModelKind::Correction { .. } => model.correct_labels(&input)?,
                ModelKind::Tagger { .. } => model.tag_documents(&input)?,
            }
        }
    };
    let reference = read_conll(reference)?;
    Ok(EvaluationReport { span: span_f1(&predicted, &reference)?, token: token_metrics(&predicted, &reference)? })
}

pub fn cmd_stats(input: &Path) -> Result<DatasetStats> {
    dataset_stats(&read_conll(input)?)
}

fn print_report<T: Serialize>(report: &T, key_values: String, json: bool) -> anyhow::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(report)?);
    } else {
        print!("{key_values}");
    }
    Ok(())
}

fn log_trace(verbose: bool, trace: &TrainTrace) {
    if verbose {
        for e in &trace.epochs {
            eprintln!("stage {} epoch {}: loss {:.6}", e.stage, e.epoch, e.loss);
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.threads.or(file.threads) {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring worker threads")?;
    }
    let verbose = cli.verbose;
    match cli.command {
        Command::Annotate { abstracts, gazetteer, out } => {
            let docs = cmd_annotate(&abstracts, &gazetteer, &out, &file.annotator_config())?;
            if verbose {
                eprintln!("annotated {} documents into {}", docs.len(), out.display());
            }
        }
        Command::BuildCorrection { noisy, gold, out } => {
            let pairs = cmd_build_correction(&noisy, &gold, &out)?;
            if pairs.is_empty() {
                eprintln!("warning: no gold entity matched any sentence; {} is empty", out.display());
            } else if verbose {
                eprintln!("wrote {} correction pairs to {}", pairs.len(), out.display());
            }
        }
        Command::TrainCorrection { data, out, trace, no_curriculum, no_noisy_input, label_dim, training } => {
            let mut config = file.model_config(&training, cli.seed);
            if no_noisy_input {
                config.noisy_input = false;
            }
            if let Some(dim) = label_dim {
                config.label_dim = dim;
            }
            let curriculum = !no_curriculum && file.curriculum.unwrap_or(true);
            let (_, history) = cmd_train_correction(&data, &out, trace.as_deref(), &config, curriculum)?;
            log_trace(verbose, &history);
        }
        Command::Correct { input, model, out } => {
            let docs = cmd_correct(&input, &model, &out)?;
            if verbose {
                eprintln!("corrected {} documents into {}", docs.len(), out.display());
            }
        }
        Command::Train { data, out, trace, binary_windows, positional_windows, single_task, training } => {
            let tasks = if single_task {
                TaskConfig::single_task()
            } else if binary_windows.is_empty() && positional_windows.is_empty() {
                file.task_config()?
            } else {
                TaskConfig::new(binary_windows, positional_windows)?
            };
            let config = file.model_config(&training, cli.seed);
            let (model, history) = cmd_train_tagger(&data, &tasks, &config, &out, trace.as_deref())?;
            if verbose {
                eprintln!("trained {} heads", model.params.heads.len());
            }
            log_trace(verbose, &history);
        }
        Command::Evaluate { predicted, model, input, reference, json } => {
            let predictions = match (&predicted, &model, &input) {
                (Some(p), None, None) => Predictions::File(p),
                (None, Some(checkpoint), Some(input)) => Predictions::Model { checkpoint, input },
                _ => bail!("evaluate needs either --predicted or both --model and --input"),
            };
            let report = cmd_evaluate(predictions, &reference)?;
            print_report(&report, report.to_key_values(), json)?;
        }
        Command::Stats { input, json } => {
            let stats = cmd_stats(&input)?;
            print_report(&stats, stats.to_key_values(), json)?;
        }
    }
    Ok(())
}
